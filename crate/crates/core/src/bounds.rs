//! Gaussian lower bounds for Dirichlet kernels and the sweep harness that
//! checks computed kernels against them.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{
    gaussian_kernel, gaussian_kernel_1d, interval_kernel, Domain, Interval, SeriesBudget, T_MIN,
};

/// `1 - 2/e`, the short-time constant.
pub const BETA: f64 = 1.0 - 2.0 / E;

/// Slack below this is a genuine violation rather than rounding.
pub const VIOLATION_THRESHOLD: f64 = -1e-12;

/// Distance from the segment `[x, y]` to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SegmentClearance(f64);

impl SegmentClearance {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(SegmentClearance(eps))
        } else {
            Err(invalid(format!("segment clearance {eps} must be positive")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// For convex domains the segment's clearance is attained at an endpoint.
pub fn segment_clearance(dom: &Domain, x: &[f64], y: &[f64]) -> Result<SegmentClearance> {
    if x.len() != dom.dim() || y.len() != dom.dim() {
        return Err(invalid("point dimension does not match domain"));
    }
    let eps = dom.clearance(x).min(dom.clearance(y));
    if !(eps > 0.0) {
        return Err(invalid(format!(
            "segment touches or leaves the domain (clearance {eps})"
        )));
    }
    SegmentClearance::new(eps)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < T_MIN {
        Err(Error::TimeTooSmall { t, t_min: T_MIN })
    } else {
        Ok(())
    }
}

/// `beta^n G_n(x, y; t)`, asserted only for `t <= eps^2 / n`.
pub fn short_time_bound(eps: SegmentClearance, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    let n = x.len();
    let limit = eps.get() * eps.get() / n as f64;
    if t > limit {
        return Err(Error::OutOfValidity { t, limit });
    }
    Ok(BETA.powi(n as i32) * gaussian_kernel(x, y, t)?)
}

/// `G_1(x, y; t) (1 - 2 exp(-eps^2 / t))`. Negative once `t > eps^2 / ln 2`.
pub fn raw_short_time_bound_1d(eps: SegmentClearance, x: f64, y: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(gaussian_kernel_1d(x, y, t)? * raw_factor(eps, t))
}

fn raw_factor(eps: SegmentClearance, t: f64) -> f64 {
    1.0 - 2.0 * (-eps.get() * eps.get() / t).exp()
}

/// `exp(-n^2 pi^2 t / 4 eps^2) G_n(x, y; t)`, valid for every `t > 0`.
pub fn all_time_bound(eps: SegmentClearance, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let n = x.len() as f64;
    let e = eps.get();
    Ok((-n * n * PI * PI * t / (4.0 * e * e)).exp() * gaussian_kernel(x, y, t)?)
}

/// `(4 pi t)^{-1/2} exp(-pi^2 t / 4a^2)`, a lower bound for `K_a(0, 0; t)`.
pub fn center_lower_bound(a: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(a > 0.0) {
        return Err(invalid("half-width must be positive"));
    }
    Ok((4.0 * PI * t).powf(-0.5) * (-PI * PI * t / (4.0 * a * a)).exp())
}

/// `1 - 2 exp(-1/s) - exp(-s)`, nonnegative for `0 < s <= 1/(4 pi)`.
pub fn center_small_time_gap(s: f64) -> f64 {
    1.0 - 2.0 * (-1.0 / s).exp() - (-s).exp()
}

/// `exp(-|x-y|^2 / 4t) K_eps(0, 0; t)`.
pub fn semigroup_bound(
    dom: &Interval,
    eps: SegmentClearance,
    x: f64,
    y: f64,
    t: f64,
    b: &SeriesBudget,
) -> Result<f64> {
    check_time(t)?;
    if x.abs() > dom.half_width() || y.abs() > dom.half_width() {
        return Err(invalid("points must lie in the interval"));
    }
    let inner = Interval::new(eps.get())?;
    Ok((-(x - y) * (x - y) / (4.0 * t)).exp() * interval_kernel(&inner, 0.0, 0.0, t, b)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `G_1 (1 - 2 e^{-eps^2/t})` on an interval, where the factor is positive.
    ShortTime1D,
    /// `beta^n G_n` for `t <= eps^2/n`.
    ShortTimeND,
    AllTime1D,
    AllTimeND,
    /// `K_a(0,0;t)` against `(4 pi t)^{-1/2} e^{-pi^2 t / 4a^2}`.
    Center,
    /// `K_a(x,y;t)` against `e^{-|x-y|^2/4t} K_eps(0,0;t)`.
    Semigroup,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] = [
        BoundKind::ShortTime1D,
        BoundKind::ShortTimeND,
        BoundKind::AllTime1D,
        BoundKind::AllTimeND,
        BoundKind::Center,
        BoundKind::Semigroup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::ShortTime1D => "short-time-1d",
            BoundKind::ShortTimeND => "short-time-nd",
            BoundKind::AllTime1D => "all-time-1d",
            BoundKind::AllTimeND => "all-time-nd",
            BoundKind::Center => "center",
            BoundKind::Semigroup => "semigroup",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown bound kind '{s}'")))
    }

    fn interval_only(self) -> bool {
        !matches!(self, BoundKind::ShortTimeND | BoundKind::AllTimeND)
    }
}

/// Sweep grid: `points_per_axis` interior nodes at fractions `i/(m+1)` of
/// each axis, and `n_times` log-spaced times in
/// `[t_lo * h^2, t_hi * h^2]` with `h` the smallest half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub points_per_axis: usize,
    pub n_times: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Keep every evaluated node for CSV output.
    pub record_rows: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            points_per_axis: 9,
            n_times: 25,
            t_lo: 1e-4,
            t_hi: 10.0,
            record_rows: false,
        }
    }
}

impl SweepGrid {
    pub fn axis_points(&self, half_width: f64) -> Vec<f64> {
        let m = self.points_per_axis;
        (1..=m)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / (m + 1) as f64)
            .collect()
    }

    pub fn times(&self, scale2: f64) -> Vec<f64> {
        log_space(self.t_lo * scale2, self.t_hi * scale2, self.n_times)
    }
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub kernel: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `(pair index, time index)` in the sweep's node ordering.
    pub index: (usize, usize),
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: BoundKind,
    pub dim: usize,
    pub half_widths: Vec<f64>,
    pub grid: SweepGrid,
    pub nodes: usize,
    pub min_slack: f64,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Cartesian product of per-axis index ranges, last axis fastest.
fn multi_indices(dim: usize, m: usize) -> Vec<Vec<usize>> {
    let total = m.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0; dim];
            for j in (0..dim).rev() {
                idx[j] = flat % m;
                flat /= m;
            }
            idx
        })
        .collect()
}

struct Partial {
    nodes: usize,
    min_slack: f64,
    violations: Vec<Violation>,
    rows: Vec<SweepRow>,
}

/// Evaluate kernel minus bound on every valid grid node.
pub fn sweep_verify(dom: &Domain, kind: BoundKind, grid: &SweepGrid, b: &SeriesBudget) -> Result<SweepReport> {
    b.validate()?;
    if grid.points_per_axis == 0 || grid.n_times == 0 {
        return Err(invalid("sweep grid must be nonempty"));
    }
    if kind.interval_only() && !matches!(dom, Domain::Interval(_)) {
        return Err(invalid(format!("{} sweeps need an interval domain", kind.name())));
    }
    let dim = dom.dim();
    let half_widths: Vec<f64> = (0..dim).map(|j| dom.half_width(j)).collect();
    let h_min = half_widths.iter().copied().fold(f64::INFINITY, f64::min);
    let axis_pts: Vec<Vec<f64>> = half_widths.iter().map(|&h| grid.axis_points(h)).collect();

    let base_times = grid.times(h_min * h_min);
    let (points, times): (Vec<Vec<usize>>, Vec<f64>) = if kind == BoundKind::Center {
        (Vec::new(), base_times.clone())
    } else {
        let points = multi_indices(dim, grid.points_per_axis);
        let mut times = base_times.clone();
        // Validity endpoints are the tightest nodes for the short-time kinds.
        if matches!(kind, BoundKind::ShortTime1D | BoundKind::ShortTimeND) {
            let mut eps_set: Vec<f64> = Vec::new();
            for p in &points {
                let x: Vec<f64> = (0..dim).map(|j| axis_pts[j][p[j]]).collect();
                eps_set.push(dom.clearance(&x));
            }
            let t_first = base_times.first().copied().unwrap_or(f64::INFINITY);
            let t_last = base_times.last().copied().unwrap_or(0.0);
            for &e in &eps_set {
                let t_end = e * e / dim as f64;
                let in_window = t_end >= t_first.max(T_MIN) && t_end <= t_last;
                if in_window && !times.contains(&t_end) {
                    times.push(t_end);
                }
            }
            times.sort_by(f64::total_cmp);
        }
        (points, times)
    };

    let partials: Vec<Partial> = times
        .par_iter()
        .enumerate()
        .map(|(ti, &t)| -> Result<Partial> {
            if kind == BoundKind::Center {
                return center_node(dom, grid, ti, t, b);
            }
            // Per-axis one-dimensional kernel tables.
            let tables: Vec<Vec<f64>> = (0..dim)
                .map(|j| {
                    let ax = dom.axis(j);
                    let pts = &axis_pts[j];
                    let mut tab = Vec::with_capacity(pts.len() * pts.len());
                    for &xp in pts {
                        for &yp in pts {
                            tab.push(interval_kernel(&ax, xp, yp, t, b)?);
                        }
                    }
                    Ok(tab)
                })
                .collect::<Result<_>>()?;
            let mut center_cache: BTreeMap<u64, f64> = BTreeMap::new();
            let m = grid.points_per_axis;
            let mut part = Partial {
                nodes: 0,
                min_slack: f64::INFINITY,
                violations: Vec::new(),
                rows: Vec::new(),
            };
            let mut x = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            for (pi, p) in points.iter().enumerate() {
                for j in 0..dim {
                    x[j] = axis_pts[j][p[j]];
                }
                for (qi, q) in points.iter().enumerate() {
                    for j in 0..dim {
                        y[j] = axis_pts[j][q[j]];
                    }
                    let eps = SegmentClearance::new(dom.clearance(&x).min(dom.clearance(&y)))?;
                    let bound = match kind {
                        BoundKind::ShortTimeND => {
                            if t > eps.get() * eps.get() / dim as f64 {
                                continue;
                            }
                            short_time_bound(eps, &x, &y, t)?
                        }
                        BoundKind::ShortTime1D => {
                            if raw_factor(eps, t) <= 0.0 {
                                continue;
                            }
                            raw_short_time_bound_1d(eps, x[0], y[0], t)?
                        }
                        BoundKind::AllTime1D | BoundKind::AllTimeND => all_time_bound(eps, &x, &y, t)?,
                        BoundKind::Semigroup => {
                            let key = eps.get().to_bits();
                            let k0 = match center_cache.get(&key) {
                                Some(&v) => v,
                                None => {
                                    let v = interval_kernel(&Interval::new(eps.get())?, 0.0, 0.0, t, b)?;
                                    center_cache.insert(key, v);
                                    v
                                }
                            };
                            (-(x[0] - y[0]) * (x[0] - y[0]) / (4.0 * t)).exp() * k0
                        }
                        BoundKind::Center => unreachable!(),
                    };
                    let mut kernel = 1.0;
                    for j in 0..dim {
                        kernel *= tables[j][p[j] * m + q[j]];
                    }
                    let slack = kernel - bound;
                    let pair = pi * points.len() + qi;
                    part.nodes += 1;
                    part.min_slack = part.min_slack.min(slack);
                    if slack < VIOLATION_THRESHOLD {
                        part.violations.push(Violation {
                            index: (pair, ti),
                            x: x.clone(),
                            y: y.clone(),
                            t,
                            slack,
                        });
                    }
                    if grid.record_rows {
                        part.rows.push(SweepRow {
                            x: x.clone(),
                            y: y.clone(),
                            t,
                            kernel,
                            bound,
                            slack,
                        });
                    }
                }
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = SweepReport {
        kind,
        dim,
        half_widths,
        grid: grid.clone(),
        nodes: 0,
        min_slack: f64::INFINITY,
        violations: Vec::new(),
        rows: Vec::new(),
    };
    for p in partials {
        report.nodes += p.nodes;
        report.min_slack = report.min_slack.min(p.min_slack);
        report.violations.extend(p.violations);
        report.rows.extend(p.rows);
    }
    report.violations.sort_by_key(|v| v.index);
    Ok(report)
}

fn center_node(dom: &Domain, grid: &SweepGrid, ti: usize, t: f64, b: &SeriesBudget) -> Result<Partial> {
    let a = dom.half_width(0);
    let kernel = interval_kernel(&dom.axis(0), 0.0, 0.0, t, b)?;
    let bound = center_lower_bound(a, t)?;
    let slack = kernel - bound;
    let mut part = Partial {
        nodes: 1,
        min_slack: slack,
        violations: Vec::new(),
        rows: Vec::new(),
    };
    if slack < VIOLATION_THRESHOLD {
        part.violations.push(Violation {
            index: (0, ti),
            x: vec![0.0],
            y: vec![0.0],
            t,
            slack,
        });
    }
    if grid.record_rows {
        part.rows.push(SweepRow {
            x: vec![0.0],
            y: vec![0.0],
            t,
            kernel,
            bound,
            slack,
        });
    }
    Ok(part)
}

/// Kernel and short-time bound sampled along an interval written in
/// left-endpoint coordinates `[0, 2a]`, for a fixed source point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub length: f64,
    pub y: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub kernel: Vec<f64>,
    pub bound: Vec<f64>,
}

impl KernelProfile {
    pub fn slack(&self) -> impl Iterator<Item = f64> + '_ {
        self.kernel.iter().zip(&self.bound).map(|(k, b)| k - b)
    }

    /// Node at which the kernel curve peaks.
    pub fn kernel_peak(&self) -> f64 {
        argmax(&self.x, &self.kernel)
    }

    pub fn bound_peak(&self) -> f64 {
        argmax(&self.x, &self.bound)
    }

    pub fn cell(&self) -> f64 {
        self.length / (self.x.len() - 1) as f64
    }
}

fn argmax(x: &[f64], v: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    x[best]
}

/// Tabulate `K_{(0,L)}(x, y; t)` and the raw short-time bound on
/// `points` equispaced nodes covering `[0, L]` including the endpoints.
pub fn kernel_profile(length: f64, y: f64, t: f64, points: usize, b: &SeriesBudget) -> Result<KernelProfile> {
    if points < 2 {
        return Err(invalid("profile needs at least two points"));
    }
    if !(y > 0.0 && y < length) {
        return Err(invalid(format!("source {y} must lie inside (0, {length})")));
    }
    let a = 0.5 * length;
    let dom = Interval::new(a)?;
    let mut prof = KernelProfile {
        length,
        y,
        t,
        x: Vec::with_capacity(points),
        kernel: Vec::with_capacity(points),
        bound: Vec::with_capacity(points),
    };
    let yc = y - a;
    for i in 0..points {
        let x = length * i as f64 / (points - 1) as f64;
        let xc = (x - a).clamp(-a, a);
        let k = interval_kernel(&dom, xc, yc, t, b)?;
        let eps = (a - xc.abs()).min(a - yc.abs());
        let bound = gaussian_kernel_1d(xc, yc, t)? * (1.0 - 2.0 * (-eps * eps / t).exp());
        prof.x.push(x);
        prof.kernel.push(k);
        prof.bound.push(bound);
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BoxDomain;
    use approx::assert_relative_eq;

    fn eps(v: f64) -> SegmentClearance {
        SegmentClearance::new(v).unwrap()
    }

    #[test]
    fn clearance_examples() {
        let iv = Domain::Interval(Interval::new(1.0).unwrap());
        assert_relative_eq!(segment_clearance(&iv, &[-0.2], &[0.5]).unwrap().get(), 0.5);
        assert_relative_eq!(segment_clearance(&iv, &[0.0], &[0.0]).unwrap().get(), 1.0);
        let bx = Domain::Box(BoxDomain::new(vec![1.0, 1.0]).unwrap());
        assert_relative_eq!(
            segment_clearance(&bx, &[0.0, 0.0], &[0.5, 0.0]).unwrap().get(),
            0.5
        );
        assert!(segment_clearance(&iv, &[1.0], &[0.0]).is_err());
        assert!(segment_clearance(&iv, &[1.3], &[0.0]).is_err());
    }

    #[test]
    fn beta_value() {
        assert_relative_eq!(BETA, 0.264_241_117_657_115_4, epsilon = 1e-15);
        assert_relative_eq!(BETA.powi(3), 0.018_449_9, epsilon = 1e-6);
    }

    #[test]
    fn short_time_validity_is_closed() {
        let e = eps(0.3);
        let x = [0.1, 0.0, 0.0];
        let y = [0.0, 0.1, 0.0];
        let limit = 0.09 / 3.0;
        let v = short_time_bound(e, &x, &y, limit).unwrap();
        assert_relative_eq!(v, BETA.powi(3) * gaussian_kernel(&x, &y, limit).unwrap());
        assert!(matches!(
            short_time_bound(e, &x, &y, limit * 1.000_001),
            Err(Error::OutOfValidity { .. })
        ));
    }

    #[test]
    fn raw_factor_landmarks() {
        let e = eps(0.2);
        let (x, y) = (0.05, -0.1);
        let g = |t| gaussian_kernel_1d(x, y, t).unwrap();
        assert_relative_eq!(raw_short_time_bound_1d(e, x, y, 0.04).unwrap(), BETA * g(0.04), max_relative = 1e-14);
        let neg = raw_short_time_bound_1d(e, x, y, 0.08).unwrap();
        assert_relative_eq!(neg, g(0.08) * (1.0 - 2.0 * (-0.5f64).exp()), max_relative = 1e-14);
        assert!(neg < 0.0);
        assert_relative_eq!(raw_short_time_bound_1d(e, x, y, 1e-6).unwrap(), g(1e-6), max_relative = 1e-12);
    }

    #[test]
    fn all_time_landmarks() {
        let e = eps(0.4);
        let t = 4.0 * 0.16 / (PI * PI);
        let g = gaussian_kernel_1d(0.0, 0.1, t).unwrap();
        assert_relative_eq!(all_time_bound(e, &[0.0], &[0.1], t).unwrap(), g / E, max_relative = 1e-14);
        let tiny = all_time_bound(e, &[0.0], &[0.1], 1e-9).unwrap();
        assert_relative_eq!(tiny, gaussian_kernel_1d(0.0, 0.1, 1e-9).unwrap(), max_relative = 1e-7);
    }

    #[test]
    fn prefactors_are_not_ordered() {
        // At t = eps^2 the all-time prefactor e^{-pi^2/4} sits below beta,
        // while for small t it exceeds it: neither bound implies the other.
        assert!((-PI * PI / 4.0).exp() < BETA);
        assert!((-PI * PI * 0.01 / 4.0).exp() > BETA);
    }

    #[test]
    fn semigroup_bound_examples() {
        let b = SeriesBudget::default();
        let dom = Interval::new(1.0).unwrap();
        let e = eps(0.5);
        for t in [1e-3, 0.05, 0.7, 4.0] {
            let sg = semigroup_bound(&dom, e, 0.0, 0.0, t, &b).unwrap();
            assert!(sg <= interval_kernel(&dom, 0.0, 0.0, t, &b).unwrap());
            let sg = semigroup_bound(&dom, e, -0.3, 0.5, t, &b).unwrap();
            let at = all_time_bound(e, &[-0.3], &[0.5], t).unwrap();
            assert!(sg >= at * (1.0 - 1e-12), "t={t}: {sg} < {at}");
        }
        let t = 1e-5;
        let ratio = semigroup_bound(&dom, e, -0.3, -0.29, t, &b).unwrap()
            / gaussian_kernel_1d(-0.3, -0.29, t).unwrap();
        assert_relative_eq!(ratio, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn center_bound_limits() {
        assert_relative_eq!(center_lower_bound(1e6, 1.0 / (4.0 * PI)).unwrap(), 1.0, max_relative = 1e-12);
        for i in 1..=1000 {
            let s = i as f64 / 1000.0 / (4.0 * PI);
            assert!(center_small_time_gap(s) >= 0.0);
        }
    }

    #[test]
    fn empty_or_mismatched_grids_are_rejected() {
        let b = SeriesBudget::default();
        let bx = Domain::Box(BoxDomain::new(vec![1.0, 1.0]).unwrap());
        let g = SweepGrid {
            points_per_axis: 0,
            ..SweepGrid::default()
        };
        assert!(sweep_verify(&bx, BoundKind::ShortTimeND, &g, &b).is_err());
        assert!(sweep_verify(&bx, BoundKind::Center, &SweepGrid::default(), &b).is_err());
    }

    #[test]
    fn all_time_monotone_in_t_on_diagonal() {
        let e = eps(0.3);
        let ts = log_space(1e-4, 10.0, 40);
        let vals: Vec<f64> = ts.iter().map(|&t| all_time_bound(e, &[0.1], &[0.1], t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn figure_profile_dominates_and_peaks() {
        let prof = kernel_profile(1.0, 0.2, 0.02, 201, &SeriesBudget::default()).unwrap();
        assert!(prof.slack().all(|s| s >= VIOLATION_THRESHOLD));
        assert_eq!(prof.kernel[0], 0.0);
        assert_eq!(*prof.kernel.last().unwrap(), 0.0);
        assert_relative_eq!(prof.bound_peak(), 0.2, epsilon = 1e-12);
    }
}
