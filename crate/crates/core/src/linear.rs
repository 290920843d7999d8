//! Linear heat evolution of the radially symmetric singular datum
//! `min(cap, |x|^-alpha) 1_{|x| <= R}` and the persistence-of-largeness
//! measurements built on it.
//!
//! Supported geometries are the interval / whole line (`n = 1`) and the
//! ball / whole space in `n = 3`, where the odd extension `r w(r)` reduces
//! the radial problem to a one-dimensional kernel exactly.

use std::cell::Cell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::log_space;
use crate::error::{invalid, Error, Result};
use crate::kernel::{gaussian_kernel_1d, interval_kernel, Interval, SeriesBudget, T_MIN};
use crate::quad::{integrate, QuadOptions};

/// Gaussian window half-width in units of `sqrt(t)` used for breakpoints.
const WINDOW: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    pub alpha: f64,
    pub radius: f64,
    /// Height cap; `f64::INFINITY` for the uncapped datum.
    pub cap: f64,
}

impl SingularData {
    pub fn new(alpha: f64, radius: f64, cap: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha = {alpha} must be positive")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("support radius {radius} must be positive")));
        }
        if !(cap > radius.powf(-alpha)) {
            return Err(invalid(format!(
                "cap {cap} must exceed R^-alpha = {}",
                radius.powf(-alpha)
            )));
        }
        Ok(SingularData { alpha, radius, cap })
    }

    pub fn with_cap(&self, cap: f64) -> Result<Self> {
        SingularData::new(self.alpha, self.radius, cap)
    }

    /// Value at distance `r` from the origin.
    pub fn eval_radial(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > self.radius {
            0.0
        } else if r == 0.0 {
            self.cap
        } else {
            r.powf(-self.alpha).min(self.cap)
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_radial(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Radius below which the cap is active.
    pub fn cap_radius(&self) -> f64 {
        if self.cap.is_finite() {
            self.cap.powf(-1.0 / self.alpha)
        } else {
            0.0
        }
    }

    /// `int |x|^{-alpha} ... dx` over the support in dimension `n`.
    pub fn mass(&self, n: usize) -> f64 {
        let nf = n as f64;
        let rc = self.cap_radius();
        let area = sphere_area(n);
        area * (self.cap * rc.powi(n as i32) / nf
            + (self.radius.powf(nf - self.alpha) - rc.powf(nf - self.alpha)) / (nf - self.alpha))
    }
}

/// `|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

/// Radially symmetric region: a centred ball (an interval when `dim = 1`)
/// or the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    pub dim: usize,
    /// `None` is the whole space.
    pub radius: Option<f64>,
}

impl RadialDomain {
    pub fn interval(a: f64) -> Result<Self> {
        RadialDomain::ball(1, a)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius {radius} must be positive")));
        }
        Ok(RadialDomain {
            dim,
            radius: Some(radius),
        })
    }

    pub fn whole(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(RadialDomain { dim, radius: None })
    }

    pub fn whole_space_of(&self) -> Self {
        RadialDomain {
            dim: self.dim,
            radius: None,
        }
    }

    /// Distance from `B(R)` to the boundary (`inf` for the whole space).
    pub fn clearance(&self, support: f64) -> f64 {
        self.radius.map_or(f64::INFINITY, |b| b - support)
    }

    fn check_data(&self, d: &SingularData) -> Result<()> {
        if d.alpha >= self.dim as f64 {
            return Err(invalid(format!(
                "alpha = {} must be below the dimension {}",
                d.alpha, self.dim
            )));
        }
        if let Some(b) = self.radius {
            if d.radius >= b {
                return Err(invalid(format!(
                    "support radius {} must lie inside the domain radius {b}",
                    d.radius
                )));
            }
        }
        Ok(())
    }

    /// Radial kernel `k` with `w(r) = int_0^R rho^{n-1} w0(rho) k(r, rho) d rho`.
    fn radial_kernel(&self, r: f64, rho: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
        match (self.dim, self.radius) {
            (1, None) => Ok(gaussian_kernel_1d(r, rho, t)? + gaussian_kernel_1d(r, -rho, t)?),
            (1, Some(a)) => {
                let dom = Interval::new(a)?;
                Ok(interval_kernel(&dom, r, rho, t, b)? + interval_kernel(&dom, r, -rho, t, b)?)
            }
            (3, None) => Ok(-odd_pair(r, rho, t) / rho),
            (3, Some(bb)) => ball3_kernel(bb, r, rho, t, b),
            _ => unreachable!("dimension checked at construction"),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 3 {
        Ok(())
    } else {
        Err(invalid(format!(
            "radial evolution is implemented for n = 1 and n = 3, not n = {dim}"
        )))
    }
}

fn sinhc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z * z / 6.0
    } else {
        z.sinh() / z
    }
}

/// `[G(r + e) - G(-r + e)] / r` for the one-dimensional Gaussian, stable as
/// `r -> 0`.
fn odd_pair(r: f64, e: f64, t: f64) -> f64 {
    let z = r * e / (2.0 * t);
    // Keep the exponent combined so that large `z` does not overflow.
    let expo = -(r * r + e * e) / (4.0 * t);
    let s = if z.abs() < 1e-4 {
        expo.exp() * sinhc(z)
    } else {
        0.5 * ((expo + z.abs()).exp() - (expo - z.abs()).exp()) / z.abs()
    };
    -2.0 * s * (e / (2.0 * t)) / (4.0 * PI * t).sqrt()
}

/// `[K(r, rho) - K(r, -rho)] / (r rho)` for the Dirichlet interval `(-b, b)`,
/// which is the radial kernel of the ball of radius `b` in three dimensions.
fn ball3_kernel(bb: f64, r: f64, rho: f64, t: f64, budget: &SeriesBudget) -> Result<f64> {
    if t <= bb * bb * budget.crossover {
        // Images at e = 2jb -/+ rho; terms for j and -j coincide.
        let mut sum = -odd_pair(r, rho, t) / rho;
        for j in 1..=budget.k_max_cap {
            let c = 2.0 * j as f64 * bb;
            let gap = c - rho - r;
            sum += (odd_pair(r, c - rho, t) - odd_pair(r, c + rho, t)) / rho;
            if gap > 0.0 && gap * gap / (4.0 * t) > 60.0 {
                return Ok(sum.max(0.0));
            }
        }
        Err(Error::SeriesBudget {
            method: "images",
            cap: budget.k_max_cap,
            t,
        })
    } else {
        let c = PI * PI * t / (bb * bb);
        let s = |k: f64, x: f64| {
            let w = k * PI / bb;
            if x == 0.0 {
                w
            } else {
                (w * x).sin() / x
            }
        };
        let mut sum = 0.0;
        for k in 1..=budget.k_max_cap {
            let kf = k as f64;
            let decay = (-kf * kf * c).exp();
            sum += 2.0 / bb * decay * s(kf, r) * s(kf, rho);
            let envelope = 2.0 / bb * decay * (kf * PI / bb).powi(2);
            if kf * kf * c > 1.0 && envelope < budget.tol * sum.abs() {
                return Ok(sum.max(0.0));
            }
            if decay == 0.0 {
                return Ok(sum.max(0.0));
            }
        }
        Err(Error::SeriesBudget {
            method: "eigen",
            cap: budget.k_max_cap,
            t,
        })
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-290,
        rel_tol: 1e-10,
        max_intervals: 20_000,
    }
}

/// `w(r, t)` for the evolution of `d` in `dom`.
pub fn evolve_point(dom: &RadialDomain, d: &SingularData, r: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
    dom.check_data(d)?;
    let r = r.abs();
    if let Some(bb) = dom.radius {
        if r > bb {
            return Err(Error::OutsideDomain {
                point: r,
                half_width: bb,
            });
        }
        if r == bb {
            return Ok(0.0);
        }
    }
    if t == 0.0 {
        return Ok(d.eval_radial(r));
    }
    if t < T_MIN {
        return Err(Error::TimeTooSmall { t, t_min: T_MIN });
    }
    let n = dom.dim as f64;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let kern = |rho: f64| -> f64 {
        match dom.radial_kernel(r, rho, t, b) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let sw = WINDOW * t.sqrt();
    let rho_breaks = [r - sw, r, r + sw];
    let rc = d.cap_radius().min(d.radius);
    let mut total = 0.0;
    if rc > 0.0 {
        let f = |rho: f64| d.cap * rho.powf(n - 1.0) * kern(rho);
        total += integrate(f, 0.0, rc, &rho_breaks, &quad_opts())?.value;
    }
    let p = n - d.alpha;
    let (s0, s1) = (rc.powf(p), d.radius.powf(p));
    if s1 > s0 {
        let s_breaks: Vec<f64> = rho_breaks.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(p)).collect();
        let f = |s: f64| kern(s.powf(1.0 / p)) / p;
        total += integrate(f, s0, s1, &s_breaks, &quad_opts())?.value;
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(total.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

/// Evolve `d` to time `t` and sample it at the radii `rs`.
pub fn evolve_singular(dom: &RadialDomain, d: &SingularData, rs: &[f64], t: f64, b: &SeriesBudget) -> Result<Profile> {
    let w = rs
        .par_iter()
        .map(|&r| evolve_point(dom, d, r, t, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile {
        t,
        r: rs.to_vec(),
        w,
    })
}

/// Grid over which the infimum of the whole-space evolution on `|x| = R`
/// is taken: `t = 0` plus `n_times` log-spaced times up to `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfimumGrid {
    pub n_times: usize,
    pub t_lo_frac: f64,
}

impl Default for InfimumGrid {
    fn default() -> Self {
        InfimumGrid {
            n_times: 40,
            t_lo_frac: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfimumM {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Time at which the grid minimum is attained.
    pub t_argmin: f64,
}

/// Grid minimum of the whole-space evolution on the sphere `|x| = R` over
/// `t in [0, T]` with `T = eps^2 / n`, `eps` the clearance of `B(R)` in `dom`.
pub fn infimum_m(dom: &RadialDomain, d: &SingularData, grid: &InfimumGrid, b: &SeriesBudget) -> Result<InfimumM> {
    dom.check_data(d)?;
    let eps = dom.clearance(d.radius);
    if !eps.is_finite() {
        return Err(invalid("infimum needs a bounded domain to fix T"));
    }
    let big_t = eps * eps / dom.dim as f64;
    let whole = dom.whole_space_of();
    let mut times = vec![0.0];
    times.extend(log_space(grid.t_lo_frac * big_t, big_t, grid.n_times));
    let vals = times
        .par_iter()
        .map(|&t| evolve_point(&whole, d, d.radius, t, b))
        .collect::<Result<Vec<_>>>()?;
    let (mut m, mut arg) = (f64::INFINITY, 0.0);
    for (&t, &v) in times.iter().zip(&vals) {
        if v < m {
            m = v;
            arg = t;
        }
    }
    if !(m > 0.0) {
        return Err(Error::Degenerate(format!("non-positive infimum {m}")));
    }
    Ok(InfimumM {
        m,
        t: big_t,
        t_argmin: arg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargenessSample {
    pub phi: f64,
    /// Largest radius with `w >= phi` on `|x| <= r`, `0 <= t <= tau`.
    pub r: f64,
    /// Certified persistence time.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargenessCertificate {
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub sigma: f64,
    pub phi_star: f64,
    pub samples: Vec<LargenessSample>,
    /// Thresholds for which no region was found.
    pub unattained: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    /// Log-spaced times (plus `t = 0`) on which the region minimum is taken.
    pub n_times: usize,
    /// Smallest sampled time as a fraction of `tau`.
    pub t_lo_frac: f64,
    /// Relative bisection tolerance.
    pub rel_tol: f64,
    /// Threshold below which samples are not used; `None` means `R^-alpha`.
    pub phi_star: Option<f64>,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            n_times: 24,
            t_lo_frac: 1e-6,
            rel_tol: 1e-6,
            phi_star: None,
        }
    }
}

impl CertificateOptions {
    pub fn time_grid(&self, tau: f64) -> Vec<f64> {
        let mut ts = vec![0.0];
        let lo = (self.t_lo_frac * tau).max(T_MIN);
        if lo < tau {
            ts.extend(log_space(lo, tau, self.n_times));
        } else if tau >= T_MIN {
            ts.push(tau);
        }
        ts
    }
}

fn bisect<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, rel_tol: f64, mut good: F) -> Result<f64> {
    // Invariant: good(lo), !good(hi).
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if good(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Time at which the centre value falls to `phi`; `None` if it never exceeds it.
fn centre_crossing(dom: &RadialDomain, d: &SingularData, phi: f64, b: &SeriesBudget, rel_tol: f64) -> Result<Option<f64>> {
    if d.eval_radial(0.0) <= phi {
        return Ok(None);
    }
    let mut hi = d.radius.powf(2.0) * 1e-6;
    let mut lo = 0.0;
    loop {
        if evolve_point(dom, d, 0.0, hi, b)? < phi {
            break;
        }
        lo = hi;
        hi *= 4.0;
        if hi > 1e6 {
            return Err(Error::Degenerate("centre value does not decay".into()));
        }
    }
    let lo = if lo == 0.0 {
        // Shrink until the centre is above phi.
        let mut t = hi;
        loop {
            t *= 0.25;
            if t < T_MIN {
                return Ok(None);
            }
            if evolve_point(dom, d, 0.0, t, b)? >= phi {
                break t;
            }
        }
    } else {
        lo
    };
    let tc = bisect(lo, hi.max(lo), rel_tol, |t| Ok(evolve_point(dom, d, 0.0, t, b)? >= phi))?;
    Ok(Some(tc))
}

/// Measure `(r(phi), tau(phi))` for one threshold.
pub fn largeness_sample(
    dom: &RadialDomain,
    d: &SingularData,
    phi: f64,
    opts: &CertificateOptions,
    b: &SeriesBudget,
) -> Result<Option<LargenessSample>> {
    dom.check_data(d)?;
    let Some(tc) = centre_crossing(dom, d, phi, b, opts.rel_tol)? else {
        return Ok(None);
    };
    let tau = 0.5 * tc;
    let times = opts.time_grid(tau);
    let region_ok = |r: f64| -> Result<bool> {
        for &t in &times {
            if evolve_point(dom, d, r, t, b)? < phi {
                return Ok(false);
            }
        }
        Ok(true)
    };
    // At t = 0 the datum itself caps the radius.
    let r0 = if phi < d.cap {
        phi.powf(-1.0 / d.alpha).min(d.radius)
    } else {
        return Ok(None);
    };
    let hi = r0 * (1.0 + 1e-12);
    if region_ok(hi)? {
        return Ok(Some(LargenessSample { phi, r: hi, tau }));
    }
    let r = bisect(0.0, hi, opts.rel_tol, region_ok)?;
    if r == 0.0 {
        return Ok(None);
    }
    Ok(Some(LargenessSample { phi, r, tau }))
}

/// Certificate over the thresholds `phis`, evaluated in parallel.
pub fn largeness_certificate(
    dom: &RadialDomain,
    d: &SingularData,
    phis: &[f64],
    opts: &CertificateOptions,
    b: &SeriesBudget,
) -> Result<LargenessCertificate> {
    if phis.is_empty() || phis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("thresholds must be nonempty and strictly increasing"));
    }
    let phi_star = opts.phi_star.unwrap_or(d.radius.powf(-d.alpha));
    if phis[0] <= phi_star {
        return Err(invalid(format!("thresholds must exceed phi* = {phi_star}")));
    }
    let results = phis
        .par_iter()
        .map(|&phi| largeness_sample(dom, d, phi, opts, b).map(|s| (phi, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::new();
    let mut unattained = Vec::new();
    for (phi, s) in results {
        match s {
            Some(s) => samples.push(s),
            None => unattained.push(phi),
        }
    }
    let sigma = if unattained.is_empty() {
        samples
            .iter()
            .map(|s| (s.r * s.phi.powf(1.0 / d.alpha)).min(s.tau * s.phi.powf(2.0 / d.alpha)))
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    Ok(LargenessCertificate {
        alpha: d.alpha,
        radius: d.radius,
        sigma,
        phi_star,
        samples,
        unattained,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::Degenerate("regression abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Slopes `(p_r, p_t)` of `log r` and `log tau` against `log phi`.
pub fn fit_scaling_exponents(cert: &LargenessCertificate) -> Result<(f64, f64)> {
    let s = &cert.samples;
    if s.len() < 4 {
        return Err(Error::Degenerate(format!("{} samples, need at least 4", s.len())));
    }
    let phi: Vec<f64> = s.iter().map(|v| v.phi).collect();
    let (lo, hi) = phi.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if hi < 10.0 * lo {
        return Err(Error::Degenerate("thresholds span less than a decade".into()));
    }
    let r: Vec<f64> = s.iter().map(|v| v.r).collect();
    let tau: Vec<f64> = s.iter().map(|v| v.tau).collect();
    Ok((log_log_slope(&phi, &r)?, log_log_slope(&phi, &tau)?))
}
