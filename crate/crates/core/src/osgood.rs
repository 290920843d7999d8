//! A source that outgrows every power yet satisfies the Osgood condition.
//!
//! With `phi_0 = 1` and `phi_{i+1} = exp(phi_i)`, the source is linear on
//! `[0, 1]`, constant `phi_i - phi_{i-1}` on `I_i = [phi_{i-1}, phi_i / 2]`
//! and linear on `J_i = (phi_i / 2, phi_i)`. Since `phi_4` already exceeds
//! the double range, large indices are carried as iterated exponentials.

use std::cmp::Ordering;
use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `ln(f64::MAX)`: exponentials of larger arguments overflow.
const LN_MAX: f64 = 709.782_712_893_384;

/// Largest index whose `phi` is a finite double.
pub const LAST_FINITE: usize = 3;

/// The value `exp(exp(...exp(top)))` with `depth` exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTower {
    pub depth: u32,
    pub top: f64,
}

impl LogTower {
    pub fn new(depth: u32, top: f64) -> Self {
        let mut t = LogTower { depth, top };
        while t.depth > 0 && t.top < LN_MAX {
            t.top = t.top.exp();
            t.depth -= 1;
        }
        t
    }

    pub fn from_f64(x: f64) -> Self {
        LogTower { depth: 0, top: x }
    }

    /// The value as a double; `+inf` when it is out of range.
    pub fn value(&self) -> f64 {
        if self.depth == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    /// Natural logarithm, for positive values.
    pub fn ln(&self) -> LogTower {
        if self.depth == 0 {
            LogTower::from_f64(self.top.ln())
        } else {
            LogTower::new(self.depth - 1, self.top)
        }
    }

    pub fn exp(&self) -> LogTower {
        LogTower::new(self.depth + 1, self.top)
    }
}

impl PartialOrd for LogTower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b) = (LogTower::new(self.depth, self.top), LogTower::new(other.depth, other.top));
        match a.depth.cmp(&b.depth) {
            Ordering::Equal => a.top.partial_cmp(&b.top),
            o => Some(o),
        }
    }
}

impl fmt::Display for LogTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.depth == 0 {
            write!(f, "{}", self.top)
        } else {
            write!(f, "exp^{}({})", self.depth, self.top)
        }
    }
}

/// `phi_i` exactly for `i <= 3`, as a tower over `phi_3` beyond.
pub fn phi_seq(i: usize) -> LogTower {
    if i <= LAST_FINITE {
        let mut p = 1.0f64;
        for _ in 0..i {
            p = p.exp();
        }
        LogTower::from_f64(p)
    } else {
        LogTower::new((i - LAST_FINITE) as u32, phi_seq(LAST_FINITE).top)
    }
}

fn phi(i: usize) -> f64 {
    phi_seq(i).value()
}

/// Position of `s >= 0` in the segment structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    /// `[0, 1]`.
    Initial,
    /// `I_i = [phi_{i-1}, phi_i / 2]`.
    Plateau(usize),
    /// `J_i = (phi_i / 2, phi_i)`.
    Ramp(usize),
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Initial => write!(f, "J0"),
            Segment::Plateau(i) => write!(f, "I{i}"),
            Segment::Ramp(i) => write!(f, "J{i}"),
        }
    }
}

/// Segment containing `s`; doubles never reach past `I_4`.
pub fn segment_of(s: f64) -> Segment {
    if s <= 1.0 {
        return Segment::Initial;
    }
    for i in 1..=LAST_FINITE {
        if s <= 0.5 * phi(i) {
            return Segment::Plateau(i);
        }
        if s < phi(i) {
            return Segment::Ramp(i);
        }
    }
    Segment::Plateau(LAST_FINITE + 1)
}

/// Ramp on `J_i` as `f = a + m (s - phi_i/2)`, with `ln m` and `ln f(phi_i)`.
struct Ramp {
    a: f64,
    ln_m: f64,
    ln_end: f64,
}

fn ramp(i: usize) -> Ramp {
    let (p_prev, p) = (phi(i - 1), phi(i));
    let a = p - p_prev;
    // f(phi_i) = phi_{i+1} - phi_i = exp(p) - p.
    let ln_end = p + (-p * (-p).exp()).ln_1p();
    // m = (f(phi_i) - a) / (p / 2).
    let ln_m = ln_end + (-(a * (-ln_end).exp())).ln_1p() + (2.0 / p).ln();
    Ramp { a, ln_m, ln_end }
}

/// The source at a double-precision argument. Returns `+inf` where the
/// value overflows, which happens throughout `J_3` and beyond.
pub fn bad_f_eval(s: f64) -> f64 {
    if s.is_nan() || s < 0.0 {
        return f64::NAN;
    }
    match segment_of(s) {
        Segment::Initial => (E - 1.0) * s,
        Segment::Plateau(i) if i <= LAST_FINITE => phi(i) - phi(i - 1),
        Segment::Plateau(_) => f64::INFINITY,
        Segment::Ramp(i) => {
            let r = ramp(i);
            r.a + r.ln_m.exp() * (s - 0.5 * phi(i))
        }
    }
}

/// `ln f(s)` for `s > 0`, finite for every double.
pub fn bad_f_ln(s: f64) -> f64 {
    piece_ln(segment_of(s), s)
}

/// Log of the formula defining `seg`, evaluated at `s` (which may be an
/// endpoint of the segment).
fn piece_ln(seg: Segment, s: f64) -> f64 {
    match seg {
        Segment::Initial => (E - 1.0).ln() + s.ln(),
        Segment::Plateau(i) if i <= LAST_FINITE => (phi(i) - phi(i - 1)).ln(),
        Segment::Plateau(_) => {
            // phi_4 - phi_3 = exp(phi_3) (1 - phi_3 exp(-phi_3)).
            let p3 = phi(3);
            p3 + (-p3 * (-p3).exp()).ln_1p()
        }
        Segment::Ramp(i) => {
            let r = ramp(i);
            let ln_lin = r.ln_m + (s - 0.5 * phi(i)).ln();
            log_add(r.a.ln(), ln_lin)
        }
    }
}

/// Breakpoints `1, phi_i / 2, phi_i` for `i <= 3`.
pub fn joints() -> Vec<f64> {
    let mut out = vec![1.0];
    for i in 1..=LAST_FINITE {
        out.push(0.5 * phi(i));
        out.push(phi(i));
    }
    out
}

/// `(ln f(s-), ln f(s+))` at a joint, from the formulas of the two
/// neighbouring segments.
pub fn joint_limits_ln(s: f64) -> Result<(f64, f64)> {
    if s == 1.0 {
        return Ok((piece_ln(Segment::Initial, s), piece_ln(Segment::Plateau(1), s)));
    }
    for i in 1..=LAST_FINITE {
        if s == 0.5 * phi(i) {
            return Ok((piece_ln(Segment::Plateau(i), s), piece_ln(Segment::Ramp(i), s)));
        }
        if s == phi(i) {
            return Ok((piece_ln(Segment::Ramp(i), s), piece_ln(Segment::Plateau(i + 1), s)));
        }
    }
    Err(invalid(format!("{s} is not a joint")))
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `int_{I_i} ds / f = (phi_i/2 - phi_{i-1}) / (phi_i - phi_{i-1})`.
pub fn osgood_term(i: usize) -> Result<f64> {
    if i == 0 {
        return Err(invalid("osgood_term is defined for i >= 1"));
    }
    if i <= LAST_FINITE {
        let (p0, p1) = (phi(i - 1), phi(i));
        return Ok((0.5 * p1 - p0) / (p1 - p0));
    }
    // 1/2 - (phi_{i-1}/2) / (phi_i - phi_{i-1}); the correction is
    // exp(-(phi_i - ln phi_{i-1}) + ...) and underflows for i >= 4.
    let ln_prev = phi_seq(i - 1).ln();
    let ln_cur = phi_seq(i).ln();
    let gap = if ln_cur.depth == 0 && ln_prev.depth == 0 {
        ln_cur.top - ln_prev.top
    } else {
        f64::INFINITY
    };
    let corr = (-(gap + (-(-gap).exp()).ln_1p()) - 2f64.ln()).exp();
    Ok(0.5 - corr)
}

/// `-ln(1/2 - term_i)`, using `1/2 - term_i = phi_{i-1} / (2 f(phi_{i-1}))`.
/// Finite and above `ln 2` exactly when `0 < term_i < 1/2`; resolves the
/// gap for the indices where `term_i` rounds to `1/2`.
pub fn osgood_term_gap(i: usize) -> Result<LogTower> {
    if i == 0 {
        return Err(invalid("osgood_term_gap is defined for i >= 1"));
    }
    let ln_f = if i == 1 {
        LogTower::from_f64((E - 1.0).ln())
    } else {
        growth_probe(0.0, i - 1)?
    };
    let ln_prev = phi_seq(i - 1).ln();
    if ln_f.depth == 0 && ln_prev.depth == 0 {
        return Ok(LogTower::from_f64(2f64.ln() + ln_f.top - ln_prev.top));
    }
    // ln phi_{i-1} is far below the resolution of ln f(phi_{i-1}).
    Ok(ln_f)
}

pub fn osgood_partial_sum(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("partial sum needs N >= 1"));
    }
    (1..=n).map(osgood_term).sum()
}

/// `ln(phi_i^-gamma f(phi_i)) = ln(exp(phi_i) - phi_i) - gamma ln phi_i`.
pub fn growth_probe(gamma: f64, i: usize) -> Result<LogTower> {
    if i == 0 {
        return Err(invalid("growth_probe is defined for i >= 1"));
    }
    if !(gamma >= 0.0) {
        return Err(invalid("gamma must be nonnegative"));
    }
    if i <= LAST_FINITE {
        let p = phi(i);
        return Ok(LogTower::from_f64(p + (-p * (-p).exp()).ln_1p() - gamma * p.ln()));
    }
    // The value is phi_i (1 - gamma ln(phi_i) / phi_i + ...): one level down
    // it is phi_{i-1} + ln(1 - gamma phi_{i-1} / phi_i), where the
    // correction is below double resolution once phi_i overflows.
    let below = phi_seq(i - 1);
    if below.depth == 0 {
        let p = below.top;
        let corr = (-gamma * p * (-p).exp()).ln_1p();
        Ok(LogTower::new(1, p + corr))
    } else {
        Ok(LogTower::new(below.depth + 1, below.top))
    }
}

/// State of the exact flow of `x' = f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub segment: Segment,
    /// Fraction of the current segment already traversed, by position.
    pub fraction: f64,
    /// Position, `+inf` once it leaves the double range.
    pub x: f64,
    /// Lower end of the current segment.
    pub floor: LogTower,
}

fn segment_start(seg: Segment) -> LogTower {
    match seg {
        Segment::Initial => LogTower::from_f64(0.0),
        Segment::Plateau(i) => phi_seq(i - 1),
        Segment::Ramp(i) => {
            let p = phi_seq(i);
            if p.depth == 0 {
                LogTower::from_f64(0.5 * p.top)
            } else {
                p
            }
        }
    }
}

fn position(seg: Segment, frac: f64) -> f64 {
    match seg {
        Segment::Initial => frac,
        Segment::Plateau(i) if i <= LAST_FINITE => {
            let (lo, hi) = (phi(i - 1), 0.5 * phi(i));
            lo + frac * (hi - lo)
        }
        Segment::Ramp(i) if i <= 2 => {
            let (lo, hi) = (0.5 * phi(i), phi(i));
            lo + frac * (hi - lo)
        }
        Segment::Ramp(3) if frac == 0.0 => 0.5 * phi(3),
        Segment::Plateau(4) if frac == 0.0 => phi(3),
        _ => f64::INFINITY,
    }
}

fn next(seg: Segment) -> Segment {
    match seg {
        Segment::Initial => Segment::Plateau(1),
        Segment::Plateau(i) => Segment::Ramp(i),
        Segment::Ramp(i) => Segment::Plateau(i + 1),
    }
}

/// Advance from `x0` for time `t_end` by exact integration on each segment.
/// Returns the final state and the state at every segment entry.
pub fn bad_osgood_flow(x0: f64, t_end: f64) -> Result<(FlowState, Vec<FlowState>)> {
    if !(x0 >= 0.0 && x0.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid("need finite x0 >= 0 and T >= 0"));
    }
    let mut seg = segment_of(x0);
    let mut frac = match seg {
        Segment::Initial => x0,
        Segment::Plateau(i) if i > LAST_FINITE => {
            return Err(invalid("x0 beyond phi_3 is not supported"));
        }
        Segment::Plateau(i) => (x0 - phi(i - 1)) / (0.5 * phi(i) - phi(i - 1)),
        Segment::Ramp(i) => (x0 - 0.5 * phi(i)) / (0.5 * phi(i)),
    };
    let mut t = 0.0;
    let mut log = Vec::new();
    let state = |t: f64, seg: Segment, frac: f64| FlowState {
        t,
        segment: seg,
        fraction: frac,
        x: position(seg, frac),
        floor: segment_start(seg),
    };
    log.push(state(t, seg, frac));
    if x0 == 0.0 {
        return Ok((state(t_end, seg, 0.0), log));
    }
    loop {
        let left = t_end - t;
        match seg {
            Segment::Initial => {
                let need = -frac.ln() / (E - 1.0);
                if need > left {
                    frac *= ((E - 1.0) * left).exp();
                    return Ok((state(t_end, seg, frac), log));
                }
                t += need;
            }
            Segment::Plateau(i) => {
                let need = osgood_term(i)? * (1.0 - frac);
                if need > left {
                    frac += left / osgood_term(i)?;
                    return Ok((state(t_end, seg, frac), log));
                }
                t += need;
            }
            Segment::Ramp(i) if i > LAST_FINITE => {
                // Traversal takes about phi_i^2 exp(-phi_i) / 2, far below
                // double resolution of any time of order one.
            }
            Segment::Ramp(i) => {
                // f grows like a e^{m t}; position s - phi_i/2 = (a/m)(e^{mt} - 1).
                let r = ramp(i);
                let ln_a = r.a.ln();
                let ln_f_now = if frac == 0.0 {
                    ln_a
                } else {
                    log_add(ln_a, r.ln_m + (frac * 0.5 * phi(i)).ln())
                };
                let need = ((r.ln_end - ln_f_now).ln() - r.ln_m).exp();
                if need > left {
                    // f = f_now e^{m left}; recover the position.
                    let ln_f = ln_f_now + r.ln_m.exp() * left;
                    let ds = ((ln_f - r.ln_m).exp()) * (-(ln_a - ln_f).exp()).ln_1p().exp();
                    frac = ds / (0.5 * phi(i));
                    return Ok((state(t_end, seg, frac.min(1.0)), log));
                }
                t += need;
            }
        }
        seg = next(seg);
        frac = 0.0;
        log.push(state(t, seg, frac));
        if log.len() > 1_000_000 {
            return Err(Error::Degenerate("flow traversed too many segments".into()));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Values above this are reported as blow-up.
    pub x_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            x_max: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Time at which the solution left `[0, x_max]` or the step underflowed.
    pub blowup_time: Option<f64>,
    pub steps: usize,
}

impl OdeTrajectory {
    pub fn final_value(&self) -> f64 {
        *self.x.last().expect("trajectory holds the initial point")
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of the scalar `x' = f(x)`.
pub fn rk45<F: Fn(f64) -> f64>(f: F, x0: f64, t_end: f64, opts: &OdeOptions) -> Result<OdeTrajectory> {
    if !x0.is_finite() || !(t_end >= 0.0) {
        return Err(invalid("need finite x0 and T >= 0"));
    }
    let mut traj = OdeTrajectory {
        t: vec![0.0],
        x: vec![x0],
        blowup_time: None,
        steps: 0,
    };
    let (mut t, mut x) = (0.0, x0);
    let mut h = (t_end * 1e-3).max(1e-8).min(t_end);
    let mut k = [0.0; 7];
    k[0] = f(x);
    while t < t_end {
        if traj.steps >= opts.max_steps {
            return Err(Error::Degenerate(format!("step budget {} exhausted", opts.max_steps)));
        }
        h = h.min(t_end - t);
        if h <= 1e-15 * t.abs().max(1.0) {
            traj.blowup_time = Some(t);
            return Ok(traj);
        }
        for s in 1..7 {
            let xs = x + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
            k[s] = f(xs);
        }
        let x5 = x + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
        let x4 = x + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
        let scale = opts.abs_tol + opts.rel_tol * x.abs().max(x5.abs());
        let err = ((x5 - x4) / scale).abs();
        traj.steps += 1;
        if err <= 1.0 && x5.is_finite() {
            t += h;
            x = x5;
            k[0] = k[6];
            traj.t.push(t);
            traj.x.push(x);
            if x.abs() > opts.x_max {
                traj.blowup_time = Some(t);
                return Ok(traj);
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= grow;
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= shrink;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sequence_values() {
        assert_eq!(phi_seq(0).value(), 1.0);
        assert_relative_eq!(phi_seq(1).value(), E, max_relative = 1e-15);
        assert_relative_eq!(phi_seq(2).value(), 15.154_262_241_479_262, max_relative = 1e-14);
        assert_relative_eq!(phi_seq(3).value(), 3.814_279_104_760_214e6, max_relative = 1e-12);
        let p4 = phi_seq(4);
        assert_eq!(p4.depth, 1);
        assert_eq!(p4.top, phi_seq(3).value());
        assert_eq!(p4.ln().value(), phi_seq(3).value());
    }

    #[test]
    fn towers_order() {
        for i in 0..12 {
            assert!(phi_seq(i + 1) > phi_seq(i), "i = {i}");
        }
        assert!(LogTower::new(1, 800.0) > LogTower::from_f64(1e300));
        assert_eq!(LogTower::new(1, 2.0), LogTower::from_f64(2f64.exp()));
    }

    #[test]
    fn source_landmarks() {
        assert_relative_eq!(bad_f_eval(1.0), E - 1.0, max_relative = 1e-15);
        assert_relative_eq!(bad_f_eval(E), E.exp() - E, max_relative = 1e-12);
        assert_relative_eq!(bad_f_eval(2.0), 6.771_867_107_627_163, max_relative = 1e-13);
        assert_eq!(bad_f_eval(0.0), 0.0);
        assert_eq!(bad_f_eval(1e7), f64::INFINITY);
        assert_eq!(bad_f_eval(1e300), f64::INFINITY);
    }

    #[test]
    fn log_source_matches_direct() {
        for s in [0.3, 1.0, 1.2, 2.0, 2.7, 5.0, 10.0, 15.0, 1e5, 1.9e6] {
            assert_relative_eq!(bad_f_ln(s), bad_f_eval(s).ln(), max_relative = 1e-12);
        }
        let p3 = phi_seq(3).value();
        assert_relative_eq!(bad_f_ln(p3 * 0.75), p3, max_relative = 1e-6);
        assert!(bad_f_ln(1e300).is_finite());
    }

    #[test]
    fn continuity_at_joints() {
        for s in joints() {
            let (l, r) = joint_limits_ln(s).unwrap();
            if l < LN_MAX {
                let (l, r) = (l.exp(), r.exp());
                assert!((l - r).abs() <= 1e-12 * (1.0 + l), "s = {s}: {l} vs {r}");
            } else {
                assert!((l - r).abs() <= 1e-12 * (1.0 + l), "s = {s}: ln {l} vs {r}");
            }
        }
        assert!(joint_limits_ln(3.0).is_err());
    }

    #[test]
    fn terms() {
        assert_relative_eq!(osgood_term(1).unwrap(), (E / 2.0 - 1.0) / (E - 1.0), max_relative = 1e-15);
        assert_relative_eq!(osgood_term(2).unwrap(), 0.390_709, epsilon = 1e-6);
        assert_relative_eq!(osgood_term(3).unwrap(), 0.499_998_0, epsilon = 1e-7);
        assert_eq!(osgood_term(4).unwrap(), 0.5);
        assert_eq!(osgood_term(40).unwrap(), 0.5);
        assert!(osgood_term(0).is_err());
    }

    #[test]
    fn term_gaps() {
        for i in 1..=LAST_FINITE {
            let deficit = 0.5 - osgood_term(i).unwrap();
            assert_relative_eq!((-osgood_term_gap(i).unwrap().value()).exp(), deficit, max_relative = 1e-9);
        }
        let g4 = osgood_term_gap(4).unwrap();
        assert_eq!(g4.depth, 0);
        assert!(g4.top > 3.8e6);
        for i in 1..12 {
            assert!(osgood_term_gap(i + 1).unwrap() > osgood_term_gap(i).unwrap(), "i = {i}");
        }
    }

    #[test]
    fn probe_small_indices() {
        assert_relative_eq!(growth_probe(0.0, 1).unwrap().value(), (E.exp() - E).ln(), max_relative = 1e-14);
        let g = growth_probe(10.0, 3).unwrap().value();
        let p3 = phi_seq(3).value();
        assert_relative_eq!(g, p3 - 10.0 * p3.ln(), max_relative = 1e-14);
        assert!(growth_probe(100.0, 4).unwrap() > growth_probe(100.0, 3).unwrap());
    }

    #[test]
    fn exact_flow_matches_rk45_in_range() {
        // Kinks in f cost the default tolerance a few digits.
        let opts = OdeOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..OdeOptions::default()
        };
        // 40-digit sum of the segment traversal times from x0 = 1.
        let (end, _) = bad_osgood_flow(1.0, 0.9).unwrap();
        assert_relative_eq!(end.x, 187_897.033_183_098_25, max_relative = 1e-12);
        for &(x0, t) in &[(0.5, 0.4), (1.0, 0.9), (2.0, 0.3), (0.1, 2.0)] {
            let (end, _) = bad_osgood_flow(x0, t).unwrap();
            let rk = rk45(bad_f_eval, x0, t, &opts).unwrap();
            assert!(rk.blowup_time.is_none());
            assert_relative_eq!(end.x, rk.final_value(), max_relative = 1e-9);
        }
    }

    #[test]
    fn rk45_quadratic_blows_up_at_one() {
        let tr = rk45(|x| x * x, 1.0, 1.1, &OdeOptions::default()).unwrap();
        let tb = tr.blowup_time.unwrap();
        assert!((tb - 1.0).abs() < 1e-6, "blow-up at {tb}");
        let tr = rk45(|x| x * x, 1.0, 0.5, &OdeOptions::default()).unwrap();
        assert_relative_eq!(tr.final_value(), 2.0, max_relative = 1e-8);
    }

    #[test]
    fn flow_of_zero_stays() {
        let (end, _) = bad_osgood_flow(0.0, 10.0).unwrap();
        assert_eq!(end.x, 0.0);
        let tr = rk45(|_| 0.0, 3.0, 10.0, &OdeOptions::default()).unwrap();
        assert!(tr.x.iter().all(|&v| v == 3.0));
    }
}
