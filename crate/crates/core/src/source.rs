//! Reaction terms `f(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::osgood::{self, OdeOptions};
use crate::quad::{integrate, QuadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceFunction {
    FujitaPower { p: f64 },
    BadOsgood,
    /// Piecewise linear through `points`, constant beyond the ends.
    Table { points: Vec<(f64, f64)> },
}

impl SourceFunction {
    pub fn fujita(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("power exponent p = {p} must exceed 1")));
        }
        Ok(SourceFunction::FujitaPower { p })
    }

    pub fn bad_osgood() -> Self {
        SourceFunction::BadOsgood
    }

    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("table needs at least one breakpoint"));
        }
        if points.iter().any(|&(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(invalid("table entries must be finite"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[1].0 == w[0].0) {
            return Err(invalid("table abscissae must be distinct"));
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(invalid("table source must be nondecreasing"));
        }
        if points[0].0 < 0.0 {
            return Err(invalid("table abscissae must be nonnegative"));
        }
        if points[0].1 < 0.0 {
            return Err(invalid("table source must satisfy f(0) >= 0"));
        }
        Ok(SourceFunction::Table { points })
    }

    /// `f = 0`.
    pub fn zero() -> Self {
        SourceFunction::Table {
            points: vec![(0.0, 0.0)],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceFunction::Table { points } if points.iter().all(|p| p.1 == 0.0))
    }

    pub fn name(&self) -> String {
        match self {
            SourceFunction::FujitaPower { p } => format!("power:{p}"),
            SourceFunction::BadOsgood => "bad-osgood".into(),
            SourceFunction::Table { points } => format!("table:{}", points.len()),
        }
    }

    /// Parse `power:P`, `bad-osgood`, `zero` or `table:s0/v0;s1/v1;...`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "bad-osgood" {
            return Ok(SourceFunction::BadOsgood);
        }
        if text == "zero" {
            return Ok(SourceFunction::zero());
        }
        if let Some(p) = text.strip_prefix("power:") {
            let p: f64 = p.trim().parse().map_err(|_| invalid(format!("bad exponent '{p}'")))?;
            return SourceFunction::fujita(p);
        }
        if let Some(body) = text.strip_prefix("table:") {
            let mut pts = Vec::new();
            for item in body.split(';').filter(|s| !s.trim().is_empty()) {
                let (s, v) = item
                    .split_once('/')
                    .ok_or_else(|| invalid(format!("table entry '{item}' needs s/value")))?;
                let s: f64 = s.trim().parse().map_err(|_| invalid(format!("bad abscissa '{s}'")))?;
                let v: f64 = v.trim().parse().map_err(|_| invalid(format!("bad value '{v}'")))?;
                pts.push((s, v));
            }
            return SourceFunction::table(pts);
        }
        Err(invalid(format!("unknown source '{text}'")))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            SourceFunction::FujitaPower { p } => s.max(0.0).powf(*p),
            SourceFunction::BadOsgood => osgood::bad_f_eval(s.max(0.0)),
            SourceFunction::Table { points } => table_eval(points, s),
        }
    }

    /// `int_u^inf ds / f(s)`, the remaining ODE lifetime from `u`
    /// (`inf` when the integral diverges or `f` vanishes).
    pub fn remaining_lifetime(&self, u: f64) -> f64 {
        match self {
            SourceFunction::FujitaPower { p } => u.powf(1.0 - p) / (p - 1.0),
            SourceFunction::BadOsgood | SourceFunction::Table { .. } => f64::INFINITY,
        }
    }

    /// `int_u^{u_max} ds / f(s)`.
    pub fn lifetime_between(&self, u: f64, u_max: f64) -> f64 {
        if u >= u_max {
            return 0.0;
        }
        match self {
            SourceFunction::FujitaPower { .. } => self.remaining_lifetime(u) - self.remaining_lifetime(u_max),
            _ => {
                // s = e^v turns the range into a short interval.
                let g = |v: f64| {
                    let s = v.exp();
                    let fs = self.eval(s);
                    if fs > 0.0 {
                        s / fs
                    } else {
                        f64::INFINITY
                    }
                };
                integrate(g, u.max(f64::MIN_POSITIVE).ln(), u_max.ln(), &[], &QuadOptions::default())
                    .map(|r| r.value)
                    .unwrap_or(f64::INFINITY)
            }
        }
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|p| p.0 <= s);
    let (a, b) = (points[k - 1], points[k]);
    a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
}

/// Outcome of integrating `x' = f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OdeSolution {
    Sampled(osgood::OdeTrajectory),
    /// Exact traversal of the segment structure of the bad Osgood source.
    Segmented {
        end: osgood::FlowState,
        entries: Vec<osgood::FlowState>,
    },
}

impl OdeSolution {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            OdeSolution::Sampled(tr) => tr.blowup_time,
            OdeSolution::Segmented { .. } => None,
        }
    }

    pub fn summary(&self) -> String {
        match self {
            OdeSolution::Sampled(tr) => match tr.blowup_time {
                Some(t) => format!("blow-up at t = {t:.9}"),
                None => format!("x(T) = {}", tr.final_value()),
            },
            OdeSolution::Segmented { end, .. } => format!(
                "x(T) in {} at fraction {:.6e} (x = {})",
                end.segment, end.fraction, end.x
            ),
        }
    }
}

/// Integrate `x' = f(x)` from `x0` over `[0, t_end]`. The bad Osgood source
/// is traversed exactly since it overflows doubles past `phi_3 / 2`.
pub fn ode_integrate(f: &SourceFunction, x0: f64, t_end: f64, opts: &OdeOptions) -> Result<OdeSolution> {
    if !(x0 >= 0.0) || !(t_end > 0.0) {
        return Err(invalid("need x0 >= 0 and T > 0"));
    }
    match f {
        SourceFunction::BadOsgood => {
            let (end, entries) = osgood::bad_osgood_flow(x0, t_end)?;
            Ok(OdeSolution::Segmented { end, entries })
        }
        _ => Ok(OdeSolution::Sampled(osgood::rk45(|x| f.eval(x), x0, t_end, opts)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn constructors() {
        assert_eq!(SourceFunction::fujita(2.0).unwrap().eval(3.0), 9.0);
        assert!(SourceFunction::fujita(1.0).is_err());
        assert_relative_eq!(SourceFunction::bad_osgood().eval(1.0), E - 1.0, max_relative = 1e-15);
        let t = SourceFunction::table(vec![(0.0, 2.5)]).unwrap();
        assert_eq!(t.eval(0.0), 2.5);
        assert_eq!(t.eval(1e9), 2.5);
        assert!(SourceFunction::table(vec![(0.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(SourceFunction::table(vec![(0.0, -1.0)]).is_err());
        assert!(SourceFunction::zero().is_zero());
    }

    #[test]
    fn table_interpolates() {
        let t = SourceFunction::table(vec![(2.0, 3.0), (0.0, 1.0), (4.0, 3.0)]).unwrap();
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.eval(3.0), 3.0);
        assert_eq!(t.eval(-1.0), 1.0);
    }

    #[test]
    fn parse_round_trip() {
        for text in ["power:6", "bad-osgood", "zero", "table:0/0;1/2;3/2"] {
            let f = SourceFunction::parse(text).unwrap();
            assert!(!f.name().is_empty());
        }
        assert!(SourceFunction::parse("power:0.5").is_err());
        assert!(SourceFunction::parse("cubic").is_err());
    }

    #[test]
    fn lifetimes() {
        let f = SourceFunction::fujita(2.0).unwrap();
        assert_relative_eq!(f.remaining_lifetime(4.0), 0.25);
        let t = SourceFunction::table(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_relative_eq!(t.lifetime_between(2.0, 6.0), 4.0, max_relative = 1e-9);
    }

    #[test]
    fn ode_dispatch() {
        let opts = OdeOptions::default();
        let sol = ode_integrate(&SourceFunction::fujita(2.0).unwrap(), 1.0, 1.1, &opts).unwrap();
        assert!(sol.blowup_time().unwrap() < 1.0 + 1e-6);
        let sol = ode_integrate(&SourceFunction::bad_osgood(), 2.0, 10.0, &opts).unwrap();
        assert!(sol.blowup_time().is_none());
    }
}
