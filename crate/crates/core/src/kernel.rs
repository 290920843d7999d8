//! Gaussian and Dirichlet heat kernels.
//!
//! The interval kernel on `(-a, a)` is evaluated by two independent series:
//!
//! * the method of images, an alternating lattice sum of Gaussians with
//!   positive sources at `y + 4ka` and negative sources at `-y + 4ka`
//!   (in the shifted coordinates of `(0, 2a)`), cheap for `t << a^2`;
//! * the sine eigenfunction expansion
//!   `(1/a) sum_k exp(-k^2 pi^2 t / 4a^2) sin(k pi x~/2a) sin(k pi y~/2a)`,
//!   cheap for `t >> a^2`.
//!
//! Both report a rigorous truncation bound and a running roundoff bound so
//! callers can tell whether a value is resolved to a given relative accuracy.
//! Box kernels are products of interval kernels, one per axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest admissible time. Below this neither series means anything in f64.
pub const T_MIN: f64 = 1e-12;

/// Truncation controls shared by both interval series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesBudget {
    /// Relative tolerance for the omitted tail.
    pub tol: f64,
    /// Largest index magnitude either series may use.
    pub k_max_cap: usize,
    /// Images are used for `t <= crossover * a^2`, the eigen-series above.
    pub crossover: f64,
}

impl Default for SeriesBudget {
    fn default() -> Self {
        SeriesBudget {
            tol: 1e-12,
            k_max_cap: 512,
            crossover: 1.0,
        }
    }
}

impl SeriesBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid(format!("series tolerance {} not in (0,1)", self.tol)));
        }
        if self.k_max_cap < 1 {
            return Err(invalid("k_max_cap must be at least 1"));
        }
        if !(self.crossover > 0.0 && self.crossover.is_finite()) {
            return Err(invalid(format!("crossover {} must be positive", self.crossover)));
        }
        Ok(())
    }
}

/// The centred interval `(-a, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    half_width: f64,
}

impl Interval {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!("interval half-width {half_width} must be positive")));
        }
        Ok(Interval { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Distance from `x` to the nearer endpoint; negative outside.
    pub fn clearance(&self, x: f64) -> f64 {
        self.half_width - x.abs()
    }

    fn check_closed(&self, x: f64) -> Result<()> {
        if x.is_finite() && x.abs() <= self.half_width {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                point: x,
                half_width: self.half_width,
            })
        }
    }
}

/// Axis-aligned box centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    half_widths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(invalid("box needs at least one axis"));
        }
        for &h in &half_widths {
            Interval::new(h)?;
        }
        Ok(BoxDomain { half_widths })
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn axis(&self, j: usize) -> Interval {
        Interval {
            half_width: self.half_widths[j],
        }
    }

    /// Euclidean distance to the boundary for an interior point.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        self.half_widths
            .iter()
            .zip(x)
            .map(|(h, xi)| h - xi.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Images,
    Eigen,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Images => "images",
            Method::Eigen => "eigen",
        }
    }
}

/// A series value together with what is known about its accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    /// Rigorous bound on the omitted tail.
    pub truncation_bound: f64,
    /// Running-error bound for the floating-point summation.
    pub roundoff_bound: f64,
    pub terms: usize,
    pub method: Method,
}

impl SeriesEval {
    fn exact_zero(method: Method) -> Self {
        SeriesEval {
            value: 0.0,
            truncation_bound: 0.0,
            roundoff_bound: 0.0,
            terms: 0,
            method,
        }
    }

    pub fn error_bound(&self) -> f64 {
        self.truncation_bound + self.roundoff_bound
    }

    /// True when the total error bound is within `rel_tol` of the value.
    pub fn is_resolved(&self, rel_tol: f64) -> bool {
        self.error_bound() <= rel_tol * self.value.abs()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < T_MIN {
        return Err(Error::TimeTooSmall { t, t_min: T_MIN });
    }
    if !t.is_finite() {
        return Err(invalid("time must be finite"));
    }
    Ok(())
}

/// Whole-space heat kernel `(4 pi t)^{-n/2} exp(-|x-y|^2 / 4t)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    if x.is_empty() || x.len() != y.len() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut dist2 = 0.0;
    for (a, b) in x.iter().zip(y) {
        if !a.is_finite() || !b.is_finite() {
            return Err(invalid("non-finite point"));
        }
        dist2 += (a - b) * (a - b);
    }
    let n = x.len() as f64;
    Ok((4.0 * PI * t).powf(-0.5 * n) * (-dist2 / (4.0 * t)).exp())
}

pub fn gaussian_kernel_1d(x: f64, y: f64, t: f64) -> Result<f64> {
    gaussian_kernel(&[x], &[y], t)
}

/// Bound on the summed magnitude of all images with index `|k| > k`,
/// measured in units of `(4 pi t)^{-1/2}`.
///
/// Every omitted image (either sign, either direction) for index
/// `|k| = k + 1 + j` sits at distance at least `4ka + 4aj` from `x`, and
/// there are four of them per `j`.
fn image_tail(a: f64, t: f64, k: usize) -> f64 {
    let d = 4.0 * k as f64 * a;
    let lead = (-d * d / (4.0 * t)).exp();
    if lead == 0.0 {
        return 0.0;
    }
    4.0 * lead / -(-2.0 * a * d / t).exp_m1()
}

fn image_index(a: f64, t: f64, b: &SeriesBudget) -> Result<usize> {
    // The tail shrinks like exp(-4 k^2 a^2 / t), so the search is short.
    for k in 1..=b.k_max_cap {
        if image_tail(a, t, k) < b.tol {
            return Ok(k);
        }
    }
    Err(Error::SeriesBudget {
        method: "images",
        cap: b.k_max_cap,
        t,
    })
}

/// Method-of-images evaluation with error bounds.
pub fn images_eval(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<SeriesEval> {
    check_time(t)?;
    b.validate()?;
    dom.check_closed(x)?;
    dom.check_closed(y)?;
    let a = dom.half_width;
    if x.abs() == a || y.abs() == a {
        return Ok(SeriesEval::exact_zero(Method::Images));
    }
    // Reflect so that the boundary closest to either point is at -a; the
    // paired terms below are then free of cancellation near that boundary.
    let (x, y) = if a - x.max(y) < x.min(y) + a {
        (-x, -y)
    } else {
        (x, y)
    };
    let xs = x + a;
    let ys = y + a;
    let kmax = image_index(a, t, b)? as i64;

    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for k in -kmax..=kmax {
        let shift = 4.0 * k as f64 * a;
        let pos = xs - ys - shift;
        let neg = xs + ys - shift;
        // (neg^2 - pos^2) / 4t = ys (xs - shift) / t
        let q = ys * (xs - shift) / t;
        let term = if q >= 0.0 {
            (-pos * pos / (4.0 * t)).exp() * -(-q).exp_m1()
        } else {
            -(-neg * neg / (4.0 * t)).exp() * -q.exp_m1()
        };
        sum += term;
        abs_sum += term.abs();
    }
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let n_terms = (2 * kmax + 1) as usize;
    Ok(SeriesEval {
        value: (pref * sum).max(0.0),
        truncation_bound: pref * image_tail(a, t, kmax as usize),
        roundoff_bound: pref * (n_terms as f64 + 3.0) * f64::EPSILON * abs_sum,
        terms: n_terms,
        method: Method::Images,
    })
}

/// Eigenfunction-series evaluation with error bounds.
pub fn eigen_eval(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<SeriesEval> {
    check_time(t)?;
    b.validate()?;
    dom.check_closed(x)?;
    dom.check_closed(y)?;
    let a = dom.half_width;
    if x.abs() == a || y.abs() == a {
        return Ok(SeriesEval::exact_zero(Method::Eigen));
    }
    let c = PI * PI * t / (4.0 * a * a);
    let wx = PI * (x + a) / (2.0 * a);
    let wy = PI * (y + a) / (2.0 * a);

    let mut sum = 0.0f64;
    let mut abs_sum = 0.0;
    for k in 1..=b.k_max_cap {
        let kf = k as f64;
        let envelope = (-kf * kf * c).exp() / a;
        if envelope == 0.0 {
            // Envelopes decrease, so every remaining term underflows too.
            return Ok(SeriesEval {
                value: sum.max(0.0),
                truncation_bound: 0.0,
                roundoff_bound: (kf + 2.0) * f64::EPSILON * abs_sum,
                terms: k - 1,
                method: Method::Eigen,
            });
        }
        let term = envelope * (kf * wx).sin() * (kf * wy).sin();
        sum += term;
        abs_sum += term.abs();
        if envelope < b.tol * sum.abs() {
            let next = kf + 1.0;
            let tail = (-next * next * c).exp() / a / -(-(2.0 * next + 1.0) * c).exp_m1();
            return Ok(SeriesEval {
                value: sum.max(0.0),
                truncation_bound: tail,
                roundoff_bound: (kf + 3.0) * f64::EPSILON * abs_sum,
                terms: k,
                method: Method::Eigen,
            });
        }
    }
    Err(Error::SeriesBudget {
        method: "eigen",
        cap: b.k_max_cap,
        t,
    })
}

pub fn interval_kernel_images(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
    images_eval(dom, x, y, t, b).map(|e| e.value)
}

pub fn interval_kernel_eigen(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
    eigen_eval(dom, x, y, t, b).map(|e| e.value)
}

pub fn select_method(dom: &Interval, t: f64, b: &SeriesBudget) -> Method {
    if t <= dom.half_width * dom.half_width * b.crossover {
        Method::Images
    } else {
        Method::Eigen
    }
}

pub fn interval_kernel_eval(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<SeriesEval> {
    match select_method(dom, t, b) {
        Method::Images => images_eval(dom, x, y, t, b),
        Method::Eigen => eigen_eval(dom, x, y, t, b),
    }
}

/// Dirichlet kernel on `(-a, a)`, choosing the cheaper series for `t`.
pub fn interval_kernel(dom: &Interval, x: f64, y: f64, t: f64, b: &SeriesBudget) -> Result<f64> {
    interval_kernel_eval(dom, x, y, t, b).map(|e| e.value)
}

/// Dirichlet kernel on a box: the product of the per-axis interval kernels.
pub fn box_kernel(dom: &BoxDomain, x: &[f64], y: &[f64], t: f64, b: &SeriesBudget) -> Result<f64> {
    if x.len() != dom.dim() || y.len() != dom.dim() {
        return Err(invalid(format!(
            "box of dimension {} queried with points of dimension {} and {}",
            dom.dim(),
            x.len(),
            y.len()
        )));
    }
    let mut prod = 1.0;
    for j in 0..dom.dim() {
        prod *= interval_kernel(&dom.axis(j), x[j], y[j], t, b)?;
    }
    Ok(prod)
}

/// Either of the two domain shapes kernels are computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval(Interval),
    Box(BoxDomain),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Box(b) => b.dim(),
        }
    }

    /// Half-width of axis `j`.
    pub fn half_width(&self, j: usize) -> f64 {
        match self {
            Domain::Interval(i) => i.half_width(),
            Domain::Box(b) => b.half_widths()[j],
        }
    }

    pub fn axis(&self, j: usize) -> Interval {
        match self {
            Domain::Interval(i) => *i,
            Domain::Box(b) => b.axis(j),
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval(i) => i.clearance(x[0]),
            Domain::Box(b) => b.clearance(x),
        }
    }

    pub fn kernel(&self, x: &[f64], y: &[f64], t: f64, b: &SeriesBudget) -> Result<f64> {
        match self {
            Domain::Interval(i) => {
                if x.len() != 1 || y.len() != 1 {
                    return Err(invalid("interval kernel expects one-dimensional points"));
                }
                interval_kernel(i, x[0], y[0], t, b)
            }
            Domain::Box(bx) => box_kernel(bx, x, y, t, b),
        }
    }
}

/// The interval kernel at fixed `x` and `t`, written as a signed sum of
/// unit Gaussians in the source variable:
/// `K(x, y; t) = sum_i sign_i G_1(y - center_i; t)` for `y` in `[-a, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageExpansion {
    pub t: f64,
    pub sources: Vec<(f64, f64)>,
}

impl ImageExpansion {
    pub fn new(dom: &Interval, x: f64, t: f64, b: &SeriesBudget) -> Result<Self> {
        check_time(t)?;
        b.validate()?;
        dom.check_closed(x)?;
        let a = dom.half_width;
        let kmax = image_index(a, t, b)? as i64;
        let mut sources = Vec::with_capacity(2 * (2 * kmax as usize + 1));
        for k in -kmax..=kmax {
            let kf = k as f64;
            sources.push((x - 4.0 * kf * a, 1.0));
            sources.push(((4.0 * kf - 2.0) * a - x, -1.0));
        }
        Ok(ImageExpansion { t, sources })
    }

    /// `int_{y0}^{y1} K(x, y; t) (g0 + (g1 - g0)(y - y0)/(y1 - y0)) dy`,
    /// exact up to rounding. Sources farther than `cutoff` standard widths
    /// from the cell are skipped.
    pub fn integrate_linear(&self, y0: f64, y1: f64, g0: f64, g1: f64) -> f64 {
        let width = (4.0 * self.t).sqrt();
        let reach = 40.0 * width;
        let slope = if y1 > y0 { (g1 - g0) / (y1 - y0) } else { 0.0 };
        let mut acc = 0.0;
        for &(c, sign) in &self.sources {
            if c < y0 - reach || c > y1 + reach {
                continue;
            }
            let (m0, m1) = gauss_segment_moments(c, y0, y1, self.t);
            acc += sign * ((g0 + slope * (c - y0)) * m0 + slope * m1);
        }
        acc
    }
}

/// Zeroth and first moments of the unit Gaussian `G_1(y - c; t)` over
/// `[y0, y1]`: `(int G dy, int (y - c) G dy)`.
pub fn gauss_segment_moments(c: f64, y0: f64, y1: f64, t: f64) -> (f64, f64) {
    let s = (4.0 * t).sqrt();
    let u0 = (y0 - c) / s;
    let u1 = (y1 - c) / s;
    let m0 = if u0 >= 0.0 {
        0.5 * (libm::erfc(u0) - libm::erfc(u1))
    } else if u1 <= 0.0 {
        0.5 * (libm::erfc(-u1) - libm::erfc(-u0))
    } else {
        0.5 * (libm::erf(u1) - libm::erf(u0))
    };
    let m1 = (t / PI).sqrt() * ((-u0 * u0).exp() - (-u1 * u1).exp());
    (m0, m1)
}
