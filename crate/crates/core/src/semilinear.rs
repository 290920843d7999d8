//! Radial simulation of `u_t = Δu + f(u)` with Dirichlet data on a ball,
//! and the cap-ladder experiment that tracks early-time L¹ mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{interval_kernel, ImageExpansion, Interval, SeriesBudget, T_MIN};
use crate::linear::{evolve_point, log_log_slope, sphere_area, RadialDomain, SingularData};
use crate::quad::{integrate, QuadOptions};
use crate::source::SourceFunction;

/// Graded mesh `r_i = a (i/J)^g` on `[0, a]` with a finite-volume radial
/// Laplacian. Node `J` carries the Dirichlet condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub dim: usize,
    pub radius: f64,
    pub r: Vec<f64>,
    /// Flux coefficient `r_{i+1/2}^{n-1} / (r_{i+1} - r_i)` for `i < J`.
    face: Vec<f64>,
    /// Control volume of node `i < J` (without the sphere area).
    vol: Vec<f64>,
}

impl RadialMesh {
    pub fn new(dim: usize, radius: f64, cells: usize, grading: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(radius > 0.0) {
            return Err(invalid("domain radius must be positive"));
        }
        if cells < 2 {
            return Err(invalid("mesh needs at least two cells"));
        }
        if !(grading >= 1.0) {
            return Err(invalid(format!("grading {grading} must be >= 1")));
        }
        let j = cells as f64;
        let r: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { radius } else { radius * (i as f64 / j).powf(grading) })
            .collect();
        let nf = dim as f64;
        let mid: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let face: Vec<f64> = (0..cells).map(|i| mid[i].powi(dim as i32 - 1) / (r[i + 1] - r[i])).collect();
        let vol: Vec<f64> = (0..cells)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { mid[i - 1] };
                (mid[i].powf(nf) - lo.powf(nf)) / nf
            })
            .collect();
        Ok(RadialMesh {
            dim,
            radius,
            r,
            face,
            vol,
        })
    }

    pub fn cells(&self) -> usize {
        self.r.len() - 1
    }

    pub fn h_min(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    /// Discrete Laplacian at interior node `i` (with `u_J = 0`).
    pub fn laplacian_at(&self, u: &[f64], i: usize) -> f64 {
        let right = self.face[i] * (u.get(i + 1).copied().unwrap_or(0.0) - u[i]);
        let left = if i == 0 { 0.0 } else { self.face[i - 1] * (u[i] - u[i - 1]) };
        (right - left) / self.vol[i]
    }

    /// Solve `(I - dt L) v = rhs` for the interior nodes.
    fn implicit_solve(&self, dt: f64, rhs: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let m = self.cells();
        scratch.clear();
        scratch.resize(m, 0.0);
        // Thomas algorithm; the matrix is a diagonally dominant M-matrix.
        let lower = |i: usize| if i == 0 { 0.0 } else { -dt * self.face[i - 1] / self.vol[i] };
        let upper = |i: usize| if i + 1 < m { -dt * self.face[i] / self.vol[i] } else { 0.0 };
        let diag = |i: usize| {
            let l = if i == 0 { 0.0 } else { self.face[i - 1] };
            1.0 + dt * (self.face[i] + l) / self.vol[i]
        };
        let mut denom = diag(0);
        scratch[0] = upper(0) / denom;
        out[0] = rhs[0] / denom;
        for i in 1..m {
            denom = diag(i) - lower(i) * scratch[i - 1];
            scratch[i] = upper(i) / denom;
            out[i] = (rhs[i] - lower(i) * out[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            out[i] -= scratch[i] * out[i + 1];
        }
    }

    /// Trapezoidal `int_{B(R)} u dx` for nodal values `u` (length `J` or
    /// `J + 1`), with the radial weight and sphere area.
    pub fn l1_mass(&self, u: &[f64], region: f64) -> f64 {
        let val = |i: usize| u.get(i).copied().unwrap_or(0.0);
        let w = |r: f64| r.powi(self.dim as i32 - 1);
        let region = region.min(self.radius);
        let mut acc = 0.0;
        for i in 0..self.cells() {
            let (r0, r1) = (self.r[i], self.r[i + 1]);
            if r0 >= region {
                break;
            }
            let (u0, u1) = (val(i), val(i + 1));
            let (re, ue) = if r1 > region {
                (region, u0 + (u1 - u0) * (region - r0) / (r1 - r0))
            } else {
                (r1, u1)
            };
            acc += 0.5 * (re - r0) * (w(r0) * u0 + w(re) * ue);
        }
        sphere_area(self.dim) * acc
    }
}

/// Convenience wrapper for [`RadialMesh::l1_mass`].
pub fn l1_mass(mesh: &RadialMesh, u: &[f64], region: f64) -> f64 {
    mesh.l1_mass(u, region)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// The singular datum; the cap is supplied per run.
    Singular(SingularData),
    /// `height (1 - (r/R)^2)^2` on `r < R`.
    Bump { height: f64, radius: f64 },
    Zero,
}

impl InitialData {
    pub fn eval(&self, r: f64, cap: f64) -> f64 {
        match self {
            InitialData::Singular(d) => {
                let r = r.abs();
                if r > d.radius {
                    0.0
                } else if r == 0.0 {
                    cap
                } else {
                    r.powf(-d.alpha).min(cap)
                }
            }
            InitialData::Bump { height, radius } => {
                let s = r / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - s * s).powi(2)
                }
            }
            InitialData::Zero => 0.0,
        }
    }

    pub fn support(&self) -> f64 {
        match self {
            InitialData::Singular(d) => d.radius,
            InitialData::Bump { radius, .. } => *radius,
            InitialData::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub domain_radius: f64,
    pub initial: InitialData,
    pub source: SourceFunction,
    /// Largest time step.
    pub dt_init: f64,
    /// First step; defaults to `clamp(h_min^2, 1e-14, dt_init)`.
    pub dt_start: Option<f64>,
    pub t_end: f64,
    pub cells: usize,
    pub grading: f64,
    pub u_max: f64,
    pub dt_floor: f64,
    /// Times the stepper lands on exactly and records.
    pub record_times: Vec<f64>,
    /// Keep the profile after every accepted step.
    pub store_steps: bool,
}

impl SimConfig {
    pub fn new(dim: usize, domain_radius: f64, initial: InitialData, source: SourceFunction) -> Self {
        SimConfig {
            dim,
            domain_radius,
            initial,
            source,
            dt_init: 1e-6,
            dt_start: None,
            t_end: 1e-3,
            cells: 512,
            grading: 3.0,
            u_max: 1e12,
            dt_floor: 1e-15,
            record_times: Vec::new(),
            store_steps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0) || !(self.t_end > 0.0) {
            return Err(invalid("dt_init and t_end must be positive"));
        }
        if self.cells < 128 {
            return Err(invalid(format!("grid size {} is below 128", self.cells)));
        }
        if self.initial.support() >= self.domain_radius {
            return Err(invalid("initial support must lie inside the domain"));
        }
        if !(self.u_max > 0.0) || !(self.dt_floor > 0.0) {
            return Err(invalid("u_max and dt_floor must be positive"));
        }
        if let InitialData::Singular(d) = self.initial {
            if d.alpha >= self.dim as f64 {
                return Err(invalid("alpha must be below the dimension"));
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<RadialMesh> {
        RadialMesh::new(self.dim, self.domain_radius, self.cells, self.grading)
    }

    fn first_dt(&self, mesh: &RadialMesh) -> f64 {
        self.dt_start
            .unwrap_or_else(|| (mesh.h_min() * mesh.h_min()).clamp(1e-14, self.dt_init))
            .min(self.dt_init)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// Interior nodal values (`u_J = 0` omitted).
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mesh: RadialMesh,
    pub cap: f64,
    pub snapshots: Vec<Snapshot>,
    pub last: Snapshot,
    pub blowup_time: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .chain(std::iter::once(&self.last))
            .find(|s| (s.t - t).abs() <= 1e-12 * t.max(1e-300))
    }
}

fn max_of(u: &[f64]) -> (usize, f64) {
    u.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
}

impl RadialMesh {
    /// Control-volume edges `(r_{i-1/2}, r_{i+1/2})` of interior node `i`.
    fn cell(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { 0.5 * (self.r[i - 1] + self.r[i]) };
        (lo, 0.5 * (self.r[i] + self.r[i + 1]))
    }
}

/// `int_lo^hi r^{n-1} min(cap, r^-alpha) 1_{r <= R} dr` in closed form.
fn singular_moment(d: &SingularData, n: usize, cap: f64, lo: f64, hi: f64) -> f64 {
    let nf = n as f64;
    let hi = hi.min(d.radius);
    if hi <= lo {
        return 0.0;
    }
    let rc = if cap.is_finite() { cap.powf(-1.0 / d.alpha).min(d.radius) } else { 0.0 };
    let mut acc = 0.0;
    let (a, b) = (lo.min(rc), hi.min(rc));
    if b > a {
        acc += cap * (b.powf(nf) - a.powf(nf)) / nf;
    }
    let (a, b) = (lo.max(rc), hi.max(rc));
    if b > a {
        let p = nf - d.alpha;
        acc += (b.powf(p) - a.powf(p)) / p;
    }
    acc
}

/// Cell averages of the datum over the finite-volume cells.
fn initial_profile(cfg: &SimConfig, mesh: &RadialMesh, cap: f64) -> Result<Vec<f64>> {
    (0..mesh.cells())
        .map(|i| {
            let (lo, hi) = mesh.cell(i);
            let moment = match cfg.initial {
                InitialData::Singular(d) => singular_moment(&d, mesh.dim, cap, lo, hi),
                InitialData::Zero => 0.0,
                InitialData::Bump { radius, .. } => {
                    let hi = hi.min(radius);
                    if hi <= lo {
                        0.0
                    } else {
                        let f = |r: f64| r.powi(mesh.dim as i32 - 1) * cfg.initial.eval(r, cap);
                        integrate(f, lo, hi, &[], &QuadOptions::default())?.value
                    }
                }
            };
            Ok(moment / mesh.vol[i])
        })
        .collect()
}

/// Integrate with IMEX Euler: implicit diffusion, explicit reaction. The step
/// is halved whenever the maximum grows by more than 10%.
pub fn simulate_radial(cfg: &SimConfig, cap: f64) -> Result<Trajectory> {
    cfg.validate()?;
    let mesh = cfg.mesh()?;
    let mut u = initial_profile(cfg, &mesh, cap)?;
    let m = u.len();
    let mut records: Vec<f64> = cfg.record_times.iter().copied().filter(|&t| t > 0.0 && t <= cfg.t_end).collect();
    records.sort_by(f64::total_cmp);
    records.dedup();
    let mut next_record = 0;

    let mut traj = Trajectory {
        mesh: mesh.clone(),
        cap,
        snapshots: Vec::new(),
        last: Snapshot { t: 0.0, u: Vec::new() },
        blowup_time: None,
        steps: 0,
        rejected: 0,
    };
    if cfg.store_steps {
        traj.snapshots.push(Snapshot { t: 0.0, u: u.clone() });
    }
    let mut t = 0.0;
    let mut dt = cfg.first_dt(&mesh);
    let mut rhs = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut scratch = Vec::with_capacity(m);
    while t < cfg.t_end {
        let mut target = cfg.t_end;
        if next_record < records.len() {
            target = target.min(records[next_record]);
        }
        let dt_eff = dt.min(target - t);
        for i in 0..m {
            rhs[i] = u[i] + dt_eff * cfg.source.eval(u[i]);
        }
        mesh.implicit_solve(dt_eff, &rhs, &mut v, &mut scratch);
        let (_, before) = max_of(&u);
        let (_, after) = max_of(&v);
        let growth = if before > 0.0 {
            after / before
        } else if after > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        if !(growth <= 1.1) {
            if 0.5 * dt_eff < cfg.dt_floor {
                let (i, ui) = max_of(&u);
                let reaction = cfg.source.eval(ui);
                let diffusion = mesh.laplacian_at(&u, i).abs();
                if reaction > diffusion {
                    traj.blowup_time = Some(t + cfg.source.lifetime_between(ui, cfg.u_max));
                    break;
                }
                return Err(Error::Stiffness { t, dt: dt_eff });
            }
            dt = 0.5 * dt_eff;
            traj.rejected += 1;
            continue;
        }
        if let Some(bad) = v.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::Degenerate(format!(
                "negative or non-finite value {} at node {bad}, t = {t:e}",
                v[bad]
            )));
        }
        t = if dt_eff == target - t { target } else { t + dt_eff };
        std::mem::swap(&mut u, &mut v);
        traj.steps += 1;
        if next_record < records.len() && t == records[next_record] {
            next_record += 1;
            if !cfg.store_steps {
                traj.snapshots.push(Snapshot { t, u: u.clone() });
            }
        }
        if cfg.store_steps {
            traj.snapshots.push(Snapshot { t, u: u.clone() });
        }
        if after > cfg.u_max {
            traj.blowup_time = Some(t);
            break;
        }
        if growth < 1.05 {
            dt = (dt * 1.1).min(cfg.dt_init);
        }
    }
    traj.last = Snapshot { t, u };
    Ok(traj)
}

/// Masses at `t_end` of the linear evolution `w` and of the first Picard
/// iterate `z = w + int S(t-s) f(w(s)) ds`. For nonnegative nondecreasing
/// `f` the iterate lies below the nonlinear solution, so its mass is a
/// lower bound.
pub fn duhamel_lower_mass(cfg: &SimConfig, cap: f64, region: f64) -> Result<(f64, f64)> {
    cfg.validate()?;
    let mesh = cfg.mesh()?;
    let mut w = initial_profile(cfg, &mesh, cap)?;
    let mut z = w.clone();
    let m = w.len();
    let mut fw: Vec<f64> = w.iter().map(|&x| cfg.source.eval(x)).collect();
    let mut t = 0.0;
    let mut dt = cfg.first_dt(&mesh);
    let mut w_next = vec![0.0; m];
    let mut z_next = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut scratch = Vec::with_capacity(m);
    while t < cfg.t_end {
        let dt_eff = dt.min(cfg.t_end - t);
        mesh.implicit_solve(dt_eff, &w, &mut w_next, &mut scratch);
        for i in 0..m {
            let f_next = cfg.source.eval(w_next[i]);
            rhs[i] = z[i] + 0.5 * dt_eff * (fw[i] + f_next);
            fw[i] = f_next;
        }
        mesh.implicit_solve(dt_eff, &rhs, &mut z_next, &mut scratch);
        std::mem::swap(&mut w, &mut w_next);
        std::mem::swap(&mut z, &mut z_next);
        t = if dt_eff == cfg.t_end - t { cfg.t_end } else { t + dt_eff };
        dt = (dt * 1.1).min(cfg.dt_init);
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("lower-bound iterate overflowed".into()));
    }
    Ok((mesh.l1_mass(&w, region), mesh.l1_mass(&z, region)))
}

/// Where a power source sits relative to the existence thresholds for
/// `L^q` data in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Above `q(1 + 2/n)`: no local solution for some data.
    NonExistence,
    /// Below `1 + 2q/n`: local existence.
    Existence,
    /// Strictly between the two thresholds.
    Unknown,
    /// On a threshold; reported, not classified.
    Borderline,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NonExistence => "non-existence",
            Regime::Existence => "existence",
            Regime::Unknown => "unknown",
            Regime::Borderline => "borderline",
        }
    }
}

pub fn classify_regime(source: &SourceFunction, n: usize, q: f64) -> Regime {
    let nf = n as f64;
    match source {
        SourceFunction::FujitaPower { p } => {
            let upper = q * (1.0 + 2.0 / nf);
            let lower = 1.0 + 2.0 * q / nf;
            let tol = 1e-12 * upper;
            if (p - upper).abs() <= tol || (p - lower).abs() <= tol {
                Regime::Borderline
            } else if *p > upper {
                Regime::NonExistence
            } else if *p < lower {
                Regime::Existence
            } else {
                Regime::Unknown
            }
        }
        // Outgrows every power.
        SourceFunction::BadOsgood => Regime::NonExistence,
        // Bounded sources.
        SourceFunction::Table { .. } => Regime::Existence,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    #[serde(rename = "M")]
    pub cap: f64,
    /// Nonlinear mass on `B(R)` at the probe time; `inf` after blow-up.
    #[serde(rename = "I")]
    pub mass: f64,
    pub blew_up: bool,
    pub t_blowup: Option<f64>,
    pub steps: usize,
    /// Mass of the first Picard iterate at the probe time.
    #[serde(rename = "I_lower")]
    pub lower_mass: f64,
    /// Mass of the linear evolution at the probe time.
    #[serde(rename = "I_linear")]
    pub linear_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub n: usize,
    pub q: f64,
    pub alpha: f64,
    pub source: SourceFunction,
    pub t_probe: f64,
    pub regime: Regime,
    pub records: Vec<BlowupRecord>,
    /// Slope of `log I_lower` against `log M`.
    pub fitted_slope: Option<f64>,
    /// `p - (n + 2)/alpha` for power sources.
    pub theoretical_slope: Option<f64>,
    /// Relative change of the nonlinear mass over the last rung, when finite.
    pub final_increment: Option<f64>,
}

impl BlowupReport {
    pub fn lower_strictly_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].lower_mass > w[0].lower_mass)
    }

    /// Smallest ratio `I_lower(k+1)/I_lower(k)` normalised to one decade of cap.
    pub fn min_growth_per_decade(&self) -> Option<f64> {
        self.records
            .windows(2)
            .map(|w| {
                let decades = (w[1].cap / w[0].cap).log10();
                (w[1].lower_mass / w[0].lower_mass).powf(1.0 / decades)
            })
            .reduce(f64::min)
    }
}

/// Default probe time `1e-3 eps^2 / n`.
pub fn default_probe_time(cfg: &SimConfig) -> f64 {
    let eps = cfg.domain_radius - cfg.initial.support();
    1e-3 * eps * eps / cfg.dim as f64
}

/// Run the cap ladder; each rung is independent and runs in parallel.
pub fn blowup_experiment(cfg: &SimConfig, caps: &[f64], t_probe: f64, q: f64) -> Result<BlowupReport> {
    let InitialData::Singular(d) = cfg.initial else {
        return Err(invalid("the cap ladder needs singular initial data"));
    };
    if caps.is_empty() || caps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("caps must be nonempty and strictly increasing"));
    }
    if caps[0] <= d.radius.powf(-d.alpha) {
        return Err(invalid("every cap must exceed R^-alpha"));
    }
    let eps = cfg.domain_radius - d.radius;
    let t_limit = (eps * eps / cfg.dim as f64).min(1.0);
    if !(t_probe > 0.0 && t_probe <= t_limit) {
        return Err(invalid(format!("probe time must lie in (0, {t_limit}]")));
    }
    if !(q >= 1.0) || d.alpha * q >= cfg.dim as f64 {
        return Err(invalid("need q >= 1 and alpha q < n for L^q data"));
    }
    let run_cfg = SimConfig {
        t_end: t_probe,
        store_steps: false,
        record_times: Vec::new(),
        ..cfg.clone()
    };
    run_cfg.validate()?;
    let records = caps
        .par_iter()
        .map(|&cap| -> Result<BlowupRecord> {
            let traj = simulate_radial(&run_cfg, cap)?;
            let (linear_mass, lower_mass) = duhamel_lower_mass(&run_cfg, cap, d.radius)?;
            let (mass, blew_up) = match traj.blowup_time {
                Some(_) => (f64::INFINITY, true),
                None => (traj.mesh.l1_mass(&traj.last.u, d.radius), false),
            };
            Ok(BlowupRecord {
                cap,
                mass,
                blew_up,
                t_blowup: traj.blowup_time,
                steps: traj.steps,
                lower_mass,
                linear_mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_slope = if records.len() >= 2 {
        let ms: Vec<f64> = records.iter().map(|r| r.cap).collect();
        let is: Vec<f64> = records.iter().map(|r| r.lower_mass).collect();
        log_log_slope(&ms, &is).ok()
    } else {
        None
    };
    let theoretical_slope = match cfg.source {
        SourceFunction::FujitaPower { p } => Some(p - (cfg.dim as f64 + 2.0) / d.alpha),
        _ => None,
    };
    let final_increment = match records.as_slice() {
        [.., a, b] if !a.blew_up && !b.blew_up && a.mass > 0.0 => Some((b.mass - a.mass).abs() / a.mass),
        _ => None,
    };
    Ok(BlowupReport {
        n: cfg.dim,
        q,
        alpha: d.alpha,
        source: cfg.source.clone(),
        t_probe,
        regime: classify_regime(&cfg.source, cfg.dim, q),
        records,
        fitted_slope,
        theoretical_slope,
        final_increment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MildResidual {
    /// Sup-norm discrepancy over probe points and probe times.
    pub residual: f64,
    /// The same, divided by the sup of the computed solution.
    pub relative: f64,
    pub probe_points: usize,
}

/// `S(t) u0` at `x` on the interval, by adaptive quadrature.
fn semigroup_initial(dom: &Interval, cfg: &SimConfig, cap: f64, x: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
    match cfg.initial {
        InitialData::Singular(d) => {
            let rd = RadialDomain::interval(dom.half_width())?;
            evolve_point(&rd, &d.with_cap(cap)?, x, t, b)
        }
        InitialData::Zero => Ok(0.0),
        InitialData::Bump { radius, .. } => {
            let failure = std::cell::Cell::new(None);
            let f = |y: f64| match interval_kernel(dom, x, y, t, b) {
                Ok(k) => k * cfg.initial.eval(y, cap),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            };
            let sw = 8.0 * t.sqrt();
            let opts = QuadOptions {
                abs_tol: 1e-300,
                rel_tol: 1e-12,
                max_intervals: 20_000,
            };
            let v = integrate(f, -radius, radius, &[x - sw, x, x + sw], &opts)?.value;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            Ok(v)
        }
    }
}

/// Discrepancy of the integral equation `u(t) = S(t)u0 + int_0^t S(t-s) f(u(s)) ds`
/// on the stored trajectory. The time integral uses the left-endpoint rule on
/// the stepper's own time levels; spatial integrals are exact for the
/// piecewise-linear interpolant of `f(u)`. One-dimensional runs only.
pub fn mild_residual(traj: &Trajectory, cfg: &SimConfig, probe_times: &[f64], b: &SeriesBudget) -> Result<MildResidual> {
    if cfg.dim != 1 {
        return Err(invalid("the mild residual is implemented for n = 1"));
    }
    if !traj.cap.is_finite() && matches!(cfg.initial, InitialData::Singular(_)) {
        return Err(invalid("the mild residual needs a finite cap"));
    }
    if traj.snapshots.len() < 2 || traj.snapshots[0].t != 0.0 {
        return Err(invalid("trajectory must store every step"));
    }
    if let Some(tb) = traj.blowup_time {
        if probe_times.iter().any(|&t| t >= tb) {
            return Err(invalid("probe time lies after numerical blow-up"));
        }
    }
    let mesh = &traj.mesh;
    let dom = Interval::new(mesh.radius)?;
    let cells = mesh.cells();
    // At most ~32 interior probe nodes.
    let stride = (cells / 32).max(1);
    let probes: Vec<usize> = (0..cells).step_by(stride).collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &tp in probe_times {
        let k_end = traj
            .snapshots
            .iter()
            .position(|s| (s.t - tp).abs() <= 1e-12 * tp)
            .ok_or_else(|| invalid(format!("no stored profile at t = {tp}")))?;
        if k_end == 0 {
            return Err(invalid("probe time must be positive"));
        }
        let target = &traj.snapshots[k_end].u;
        let sources: Vec<Vec<f64>> = traj.snapshots[..k_end]
            .iter()
            .map(|s| s.u.iter().map(|&v| cfg.source.eval(v)).chain([cfg.source.eval(0.0)]).collect())
            .collect();
        let errs = probes
            .par_iter()
            .map(|&i| -> Result<(f64, f64)> {
                let x = mesh.r[i];
                let mut rhs = semigroup_initial(&dom, cfg, traj.cap, x, tp, b)?;
                if !cfg.source.is_zero() {
                    #[allow(clippy::needless_range_loop)]
                    for k in 0..k_end {
                        let (tk, tk1) = (traj.snapshots[k].t, traj.snapshots[k + 1].t);
                        let tau = tp - tk;
                        if tau < T_MIN {
                            continue;
                        }
                        let ex = ImageExpansion::new(&dom, x, tau, b)?;
                        let g = &sources[k];
                        let mut acc = 0.0;
                        for c in 0..cells {
                            let (r0, r1) = (mesh.r[c], mesh.r[c + 1]);
                            acc += ex.integrate_linear(r0, r1, g[c], g[c + 1]);
                            acc += ex.integrate_linear(-r1, -r0, g[c + 1], g[c]);
                        }
                        rhs += (tk1 - tk) * acc;
                    }
                }
                Ok(((target[i] - rhs).abs(), target[i].abs()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (e, s) in errs {
            worst = worst.max(e);
            scale = scale.max(s);
        }
    }
    Ok(MildResidual {
        residual: worst,
        relative: if scale > 0.0 { worst / scale } else { worst },
        probe_points: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn singular_cfg(source: SourceFunction) -> SimConfig {
        let d = SingularData::new(0.9, 0.5, f64::INFINITY).unwrap();
        SimConfig::new(1, 1.0, InitialData::Singular(d), source)
    }

    #[test]
    fn uniform_mesh_origin_stencil() {
        for n in 1..=3 {
            let mesh = RadialMesh::new(n, 1.0, 10, 1.0).unwrap();
            let h = 0.1;
            let u: Vec<f64> = (0..10).map(|i| (i as f64 * h).powi(2)).collect();
            let expect = 2.0 * n as f64 * (u[1] - u[0]) / (h * h);
            assert_relative_eq!(mesh.laplacian_at(&u, 0), expect, max_relative = 1e-12);
            // Interior nodes reproduce the Laplacian of r^2, which is 2n.
            assert_relative_eq!(mesh.laplacian_at(&u, 5), 2.0 * n as f64, max_relative = 2e-2);
        }
    }

    #[test]
    fn mass_of_constants() {
        let m1 = RadialMesh::new(1, 1.0, 256, 2.0).unwrap();
        assert_relative_eq!(m1.l1_mass(&vec![1.0; 257], 0.5), 1.0, max_relative = 1e-14);
        let m2 = RadialMesh::new(2, 1.0, 256, 2.0).unwrap();
        assert_relative_eq!(m2.l1_mass(&vec![1.0; 257], 1.0), PI, max_relative = 1e-4);
    }

    #[test]
    fn mass_converges_for_smooth_profiles() {
        let coarse = RadialMesh::new(1, 1.0, 2048, 3.0).unwrap();
        let fine = RadialMesh::new(1, 1.0, 4096, 3.0).unwrap();
        let prof = |m: &RadialMesh| m.r.iter().map(|r| (0.5 * PI * r).cos()).collect::<Vec<_>>();
        let (a, b) = (coarse.l1_mass(&prof(&coarse), 0.5), fine.l1_mass(&prof(&fine), 0.5));
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn implicit_solve_inverts_operator() {
        let mesh = RadialMesh::new(3, 1.0, 200, 2.5).unwrap();
        let u: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin().abs() + 0.1).collect();
        let dt = 1e-3;
        let rhs: Vec<f64> = (0..200).map(|i| u[i] - dt * mesh.laplacian_at(&u, i)).collect();
        let mut out = vec![0.0; 200];
        mesh.implicit_solve(dt, &rhs, &mut out, &mut Vec::new());
        for i in 0..200 {
            assert_relative_eq!(out[i], u[i], max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut cfg = SimConfig::new(1, 1.0, InitialData::Zero, SourceFunction::fujita(3.0).unwrap());
        cfg.t_end = 1e-3;
        cfg.cells = 128;
        let tr = simulate_radial(&cfg, 1.0).unwrap();
        assert!(tr.last.u.iter().all(|&v| v == 0.0));
        assert!(tr.blowup_time.is_none());
    }

    #[test]
    fn regimes() {
        let p = |p| SourceFunction::fujita(p).unwrap();
        assert_eq!(classify_regime(&p(6.0), 1, 1.0), Regime::NonExistence);
        assert_eq!(classify_regime(&p(2.0), 1, 1.0), Regime::Existence);
        assert_eq!(classify_regime(&p(3.0), 1, 1.0), Regime::Borderline);
        assert_eq!(classify_regime(&p(5.5), 1, 2.0), Regime::Unknown);
        assert_eq!(classify_regime(&p(5.0), 1, 2.0), Regime::Borderline);
    }

    #[test]
    fn linear_run_matches_kernel_evolution() {
        let mut cfg = singular_cfg(SourceFunction::zero());
        cfg.t_end = 1e-3;
        cfg.cells = 1024;
        cfg.dt_init = 2e-7;
        let cap = 100.0;
        let tr = simulate_radial(&cfg, cap).unwrap();
        let InitialData::Singular(d) = cfg.initial else { unreachable!() };
        let dom = RadialDomain::interval(1.0).unwrap();
        let d = d.with_cap(cap).unwrap();
        let b = SeriesBudget::default();
        for (i, &r) in tr.mesh.r.iter().enumerate().take(1024) {
            if !(0.05..0.45).contains(&r) && r > 0.0 {
                continue;
            }
            let w = evolve_point(&dom, &d, r, 1e-3, &b).unwrap();
            assert_relative_eq!(tr.last.u[i], w, max_relative = 1e-4);
        }
    }

    #[test]
    fn comparison_with_linear_run() {
        let d = SingularData::new(0.5, 0.5, f64::INFINITY).unwrap();
        let mut lin = SimConfig::new(1, 1.0, InitialData::Singular(d), SourceFunction::zero());
        lin.t_end = 1e-3;
        lin.cells = 256;
        lin.dt_init = 1e-5;
        lin.dt_start = Some(1e-5);
        let mut non = lin.clone();
        non.source = SourceFunction::fujita(2.0).unwrap();
        let (a, b) = (simulate_radial(&lin, 20.0).unwrap(), simulate_radial(&non, 20.0).unwrap());
        assert_eq!(a.steps, b.steps);
        let norm = a.last.u.iter().fold(0.0f64, |m, &v| m.max(v));
        for (w, u) in a.last.u.iter().zip(&b.last.u) {
            assert!(*u >= w - 1e-6 * norm);
        }
    }
}
