//! Acceptance checks. Each criterion runs a fixed experiment and compares
//! measured quantities with pinned targets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    center_lower_bound, center_small_time_gap, kernel_profile, sweep_verify, BoundKind, SweepGrid, SweepReport,
    VIOLATION_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::kernel::{eigen_eval, images_eval, interval_kernel_eigen, BoxDomain, Domain, Interval, SeriesBudget};
use crate::linear::{fit_scaling_exponents, largeness_certificate, CertificateOptions, RadialDomain, SingularData};
use crate::osgood::{
    bad_f_ln, bad_osgood_flow, growth_probe, joint_limits_ln, joints, osgood_partial_sum, osgood_term, phi_seq, rk45,
    OdeOptions, LAST_FINITE,
};
use crate::semilinear::{
    blowup_experiment, default_probe_time, mild_residual, simulate_radial, BlowupReport, InitialData, Regime, SimConfig,
};
use crate::source::SourceFunction;

pub const CRITERIA: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Pinned tolerances.
pub mod tol {
    pub const CROSS_REL: f64 = 1e-10;
    /// Both series must certify this relative accuracy before the
    /// relative comparison applies.
    pub const CROSS_RESOLVED: f64 = 1e-11;
    pub const SLACK: f64 = super::VIOLATION_THRESHOLD;
    pub const SCALING_REL: f64 = 0.10;
    pub const SLOPE_REL: f64 = 0.25;
    pub const CONTROL_INCREMENT: f64 = 0.05;
    pub const TERM_ABS: f64 = 1e-4;
    pub const JOINT_REL: f64 = 1e-12;
    pub const REFINEMENT_RATIO: f64 = 1.5;
    pub const SMOOTH_RESIDUAL: f64 = 1e-2;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("<= {limit:e}"),
            passed: value <= limit,
        }
    }

    fn below(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("< {limit}"),
            passed: value < limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!(">= {limit:e}"),
            passed: value >= limit,
        }
    }

    fn near(name: &str, value: f64, target: f64, abs: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("{target} +- {abs:e}"),
            passed: (value - target).abs() <= abs,
        }
    }

    fn near_rel(name: &str, value: f64, target: f64, rel: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("{target} +- {}%", rel * 100.0),
            passed: (value - target).abs() <= rel * target.abs(),
        }
    }

    fn in_range(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: "true".into(),
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    /// Set when the experiment itself failed to run.
    pub error: Option<String>,
    /// The failure was numerical (quadrature, series budget, stiffness).
    pub numerical: bool,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub budget: SeriesBudget,
    pub grid: SweepGrid,
    /// Half-widths used by the interval-only criteria.
    pub half_widths: Vec<f64>,
    /// Samples of `s` in `(0, 1/(4 pi)]`.
    pub gap_samples: usize,
    pub profile_points: usize,
    pub phis: Vec<f64>,
    pub caps: Vec<f64>,
    pub sim_cells: usize,
    pub sim_dt: f64,
    pub mild_cells: usize,
    pub mild_dt: f64,
    pub mild_t_end: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            budget: SeriesBudget::default(),
            grid: SweepGrid::default(),
            half_widths: vec![0.25, 0.5, 1.0],
            gap_samples: 1000,
            profile_points: 201,
            phis: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            caps: vec![10.0, 100.0, 1000.0, 10000.0],
            sim_cells: 512,
            sim_dt: 1e-6,
            mild_cells: 128,
            mild_dt: 1e-4,
            mild_t_end: 0.01,
        }
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "kernel cross-validation",
        2 => "short-time bound sweep",
        3 => "all-time and centre bound sweeps",
        4 => "semigroup bound sweep",
        5 => "kernel profile on [0,1]",
        6 => "largeness scaling exponents",
        7 => "blow-up cap ladder",
        8 => "bad Osgood construction",
        9 => "mild-solution consistency",
        _ => "unknown",
    }
}

/// Run one criterion; failures to compute become a failed criterion.
pub fn run_criterion(id: u32, cfg: &VerifyConfig) -> Criterion {
    let result = match id {
        1 => cross_validation(cfg),
        2 => short_time_sweeps(cfg),
        3 => all_time_sweeps(cfg),
        4 => semigroup_sweeps(cfg),
        5 => profile(cfg),
        6 => scaling(cfg),
        7 => cap_ladder(cfg),
        8 => osgood_construction(),
        9 => mild_consistency(cfg),
        _ => Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let (checks, error, numerical) = match result {
        Ok(c) => (c, None, false),
        Err(e) => (Vec::new(), Some(e.to_string()), e.is_numerical()),
    };
    Criterion {
        id,
        title: title(id).into(),
        checks,
        error,
        numerical,
    }
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<Criterion> {
    CRITERIA.iter().map(|&id| run_criterion(id, cfg)).collect()
}

/// The configured budget with room for the eigen-series at small times.
fn wide_budget(cfg: &VerifyConfig) -> SeriesBudget {
    SeriesBudget {
        k_max_cap: cfg.budget.k_max_cap.max(1 << 16),
        ..cfg.budget
    }
}

fn cross_validation(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let b = &wide_budget(cfg);
    let mut worst_rel: f64 = 0.0;
    let mut worst_scaled: f64 = 0.0;
    let (mut resolved, mut total) = (0usize, 0usize);
    for &a in &cfg.half_widths {
        let dom = Interval::new(a)?;
        let pts = cfg.grid.axis_points(a);
        let times = cfg.grid.times(a * a);
        let per_time = times
            .par_iter()
            .map(|&t| -> Result<(f64, f64, usize, usize)> {
                let (mut rel, mut scaled, mut res, mut tot) = (0.0f64, 0.0f64, 0, 0);
                for &x in &pts {
                    for &y in &pts {
                        let im = images_eval(&dom, x, y, t, b)?;
                        let ei = eigen_eval(&dom, x, y, t, b)?;
                        let diff = (im.value - ei.value).abs();
                        scaled = scaled.max(diff * (4.0 * std::f64::consts::PI * t).sqrt());
                        tot += 1;
                        if im.is_resolved(tol::CROSS_RESOLVED) && ei.is_resolved(tol::CROSS_RESOLVED) {
                            res += 1;
                            rel = rel.max(diff / ei.value.abs());
                        }
                    }
                }
                Ok((rel, scaled, res, tot))
            })
            .collect::<Result<Vec<_>>>()?;
        for (rel, scaled, res, tot) in per_time {
            worst_rel = worst_rel.max(rel);
            worst_scaled = worst_scaled.max(scaled);
            resolved += res;
            total += tot;
        }
    }
    Ok(vec![
        Check::at_most("max relative difference, resolved pairs", worst_rel, tol::CROSS_REL),
        Check::at_most("max difference on the Gaussian scale", worst_scaled, tol::CROSS_REL),
        Check::at_least("resolved pairs", resolved as f64, 1.0),
        Check::near("evaluated pairs", total as f64, (cfg.half_widths.len() * cfg.grid.points_per_axis.pow(2) * cfg.grid.n_times) as f64, 0.0),
    ])
}

fn sweep_check(report: &SweepReport, label: &str) -> Vec<Check> {
    vec![
        Check::near(&format!("{label}: violations"), report.violations.len() as f64, 0.0, 0.0),
        Check::at_least(&format!("{label}: min slack"), report.min_slack, tol::SLACK),
    ]
}

fn domain_label(dom: &Domain) -> String {
    match dom {
        Domain::Interval(i) => format!("interval:{}", i.half_width()),
        Domain::Box(bx) => {
            let hw: Vec<String> = bx.half_widths().iter().map(|h| h.to_string()).collect();
            format!("box:{}", hw.join(","))
        }
    }
}

fn sweep_domains() -> Result<Vec<Domain>> {
    Ok(vec![
        Domain::Interval(Interval::new(0.5)?),
        Domain::Box(BoxDomain::new(vec![1.0, 1.0])?),
        Domain::Box(BoxDomain::new(vec![1.0, 1.0, 1.0])?),
    ])
}

fn run_sweeps(jobs: &[(Domain, BoundKind)], cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (dom, kind) in jobs {
        let report = sweep_verify(dom, *kind, &cfg.grid, &cfg.budget)?;
        checks.extend(sweep_check(&report, &format!("{} on {}", kind.name(), domain_label(dom))));
    }
    Ok(checks)
}

fn short_time_sweeps(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut jobs: Vec<(Domain, BoundKind)> = sweep_domains()?.into_iter().map(|d| (d, BoundKind::ShortTimeND)).collect();
    jobs.push((Domain::Interval(Interval::new(0.5)?), BoundKind::ShortTime1D));
    run_sweeps(&jobs, cfg)
}

fn all_time_sweeps(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut jobs = Vec::new();
    for &a in &cfg.half_widths {
        jobs.push((Domain::Interval(Interval::new(a)?), BoundKind::AllTime1D));
        jobs.push((Domain::Interval(Interval::new(a)?), BoundKind::Center));
    }
    for d in sweep_domains()?.into_iter().skip(1) {
        jobs.push((d, BoundKind::AllTimeND));
    }
    let mut checks = run_sweeps(&jobs, cfg)?;

    // Centre value from the eigen-series alone.
    let wide = wide_budget(cfg);
    let mut worst = f64::INFINITY;
    for &a in &cfg.half_widths {
        let dom = Interval::new(a)?;
        for t in cfg.grid.times(a * a) {
            let k = interval_kernel_eigen(&dom, 0.0, 0.0, t, &wide)?;
            worst = worst.min(k - center_lower_bound(a, t)?);
        }
    }
    checks.push(Check::at_least("eigen-series centre value minus lower bound", worst, tol::SLACK));

    let s_max = 1.0 / (4.0 * std::f64::consts::PI);
    let n = cfg.gap_samples;
    let gap = (1..=n)
        .map(|i| center_small_time_gap(s_max * i as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("min of 1 - 2e^(-1/s) - e^(-s) on (0, 1/(4 pi)]", gap, 0.0));
    Ok(checks)
}

fn semigroup_sweeps(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let jobs = cfg
        .half_widths
        .iter()
        .map(|&a| Ok((Domain::Interval(Interval::new(a)?), BoundKind::Semigroup)))
        .collect::<Result<Vec<_>>>()?;
    run_sweeps(&jobs, cfg)
}

fn profile(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let prof = kernel_profile(1.0, 0.2, 0.02, cfg.profile_points, &cfg.budget)?;
    let min_slack = prof.slack().fold(f64::INFINITY, f64::min);
    let offset = (prof.kernel_peak() - prof.y).abs();
    Ok(vec![
        Check::at_least("min of kernel - bound", min_slack, tol::SLACK),
        Check::at_most("|kernel peak - y|", offset, prof.cell() * (1.0 + 1e-9)),
    ])
}

fn scaling(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let dom = RadialDomain::interval(1.0)?;
    let d = SingularData::new(0.5, 0.5, f64::INFINITY)?;
    let cert = largeness_certificate(&dom, &d, &cfg.phis, &CertificateOptions::default(), &cfg.budget)?;
    let (pr, pt) = fit_scaling_exponents(&cert)?;
    Ok(vec![
        Check::near_rel("p_r", pr, -2.0, tol::SCALING_REL),
        Check::near_rel("p_t", pt, -4.0, tol::SCALING_REL),
        Check::near("unattained thresholds", cert.unattained.len() as f64, 0.0, 0.0),
    ])
}

/// The cap ladder for `u_t = u_xx + u^p` with `|x|^-0.9` data on `(-1, 1)`.
pub fn cap_ladder_report(cfg: &VerifyConfig, p: f64) -> Result<BlowupReport> {
    let d = SingularData::new(0.9, 0.5, f64::INFINITY)?;
    let mut sim = SimConfig::new(1, 1.0, InitialData::Singular(d), SourceFunction::fujita(p)?);
    sim.cells = cfg.sim_cells;
    sim.dt_init = cfg.sim_dt;
    let t_probe = default_probe_time(&sim);
    blowup_experiment(&sim, &cfg.caps, t_probe, 1.0)
}

fn cap_ladder(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let hot = cap_ladder_report(cfg, 6.0)?;
    let control = cap_ladder_report(cfg, 2.0)?;
    let theory = hot.theoretical_slope.unwrap_or(f64::NAN);
    Ok(vec![
        Check::holds("p = 6 classified as non-existence", hot.regime == Regime::NonExistence),
        Check::holds("p = 2 classified as existence", control.regime == Regime::Existence),
        Check::holds("p = 6: I(t*) strictly increasing in M", hot.lower_strictly_increasing()),
        Check::near_rel("p = 6: fitted slope", hot.fitted_slope.unwrap_or(f64::NAN), theory, tol::SLOPE_REL),
        Check::below(
            "p = 2: final relative increment",
            control.final_increment.unwrap_or(f64::INFINITY),
            tol::CONTROL_INCREMENT,
        ),
    ])
}

fn osgood_construction() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst_joint: f64 = 0.0;
    for s in joints() {
        let (l, r) = joint_limits_ln(s)?;
        worst_joint = worst_joint.max((l - r).abs() / l.abs().max(1.0));
    }
    checks.push(Check::at_most("relative jump of ln f at joints", worst_joint, tol::JOINT_REL));

    // ln f sampled densely on each segment up to phi_3.
    let mut nodes = vec![1e-3];
    let knots = joints();
    for w in knots.windows(2) {
        for k in 0..=64 {
            nodes.push(w[0] + (w[1] - w[0]) * k as f64 / 64.0);
        }
    }
    let vals: Vec<f64> = nodes.iter().map(|&s| bad_f_ln(s)).collect();
    checks.push(Check::holds(
        "ln f nondecreasing up to phi_3",
        vals.windows(2).all(|w| w[1] >= w[0]),
    ));

    checks.push(Check::near("term 1", osgood_term(1)?, 0.20901, tol::TERM_ABS));
    checks.push(Check::near("term 2", osgood_term(2)?, 0.39071, tol::TERM_ABS));
    checks.push(Check::in_range("partial sum, N = 50", osgood_partial_sum(50)?, 24.0, 25.0));

    let mut probes_ok = true;
    for gamma in [0.0, 1.0, 5.0, 10.0, 100.0] {
        let seq = (LAST_FINITE..LAST_FINITE + 4)
            .map(|i| growth_probe(gamma, i))
            .collect::<Result<Vec<_>>>()?;
        probes_ok &= seq.iter().all(|g| g.top > 0.0);
        probes_ok &= seq.windows(2).all(|w| w[1] > w[0]);
    }
    checks.push(Check::holds("growth probe positive and increasing, i >= 3", probes_ok));

    let quad = rk45(|x| x * x, 1.0, 1.1, &OdeOptions::default())?;
    checks.push(Check::below(
        "x' = x^2 blow-up time",
        quad.blowup_time.unwrap_or(f64::INFINITY),
        1.1,
    ));
    let (end, _) = bad_osgood_flow(phi_seq(2).value(), 10.0)?;
    checks.push(Check::holds("bad Osgood flow from phi_2 reaches T = 10", end.t == 10.0));
    Ok(checks)
}

/// Mild residual of the bump test case at one resolution.
pub fn bump_residual(cells: usize, dt: f64, t_end: f64, b: &SeriesBudget) -> Result<f64> {
    let mut sim = SimConfig::new(
        1,
        1.0,
        InitialData::Bump {
            height: 2.0,
            radius: 0.5,
        },
        SourceFunction::fujita(2.0)?,
    );
    sim.cells = cells;
    sim.grading = 1.0;
    sim.dt_init = dt;
    sim.dt_start = Some(dt);
    sim.t_end = t_end;
    sim.store_steps = true;
    let probes = [0.5 * t_end, t_end];
    sim.record_times = probes.to_vec();
    let traj = simulate_radial(&sim, f64::INFINITY)?;
    Ok(mild_residual(&traj, &sim, &probes, b)?.residual)
}

fn mild_consistency(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let coarse = bump_residual(cfg.mild_cells, cfg.mild_dt, cfg.mild_t_end, &cfg.budget)?;
    let fine = bump_residual(2 * cfg.mild_cells, 0.5 * cfg.mild_dt, cfg.mild_t_end, &cfg.budget)?;
    Ok(vec![
        Check::below("coarse residual", coarse, tol::SMOOTH_RESIDUAL),
        Check::at_least("refinement ratio", coarse / fine, tol::REFINEMENT_RATIO),
    ])
}
