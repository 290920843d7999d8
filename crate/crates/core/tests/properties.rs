use heatlab::bounds::{all_time_bound, segment_clearance, short_time_bound, SegmentClearance};
use heatlab::kernel::{gaussian_kernel, gaussian_kernel_1d, interval_kernel, BoxDomain, Domain, Interval, SeriesBudget};
use heatlab::linear::{evolve_point, RadialDomain, SingularData};
use heatlab::osgood::{bad_f_eval, bad_f_ln, LogTower};
use heatlab::source::SourceFunction;
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn b() -> SeriesBudget {
    SeriesBudget::default()
}

/// Half-width, two points inside, and a time in `[1e-4 a^2, 10 a^2]`.
fn query() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.1f64..3.0, -0.999f64..0.999, -0.999f64..0.999, -4.0f64..1.0)
        .prop_map(|(a, fx, fy, e)| (a, fx * a, fy * a, a * a * 10f64.powf(e)))
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn kernel_is_symmetric((a, x, y, t) in query()) {
        let dom = Interval::new(a).unwrap();
        let kxy = interval_kernel(&dom, x, y, t, &b()).unwrap();
        let kyx = interval_kernel(&dom, y, x, t, &b()).unwrap();
        prop_assert!((kxy - kyx).abs() <= 1e-12, "{kxy} vs {kyx}");
    }

    #[test]
    fn kernel_lies_between_zero_and_gaussian((a, x, y, t) in query()) {
        let k = interval_kernel(&Interval::new(a).unwrap(), x, y, t, &b()).unwrap();
        let g = gaussian_kernel_1d(x, y, t).unwrap();
        prop_assert!(k >= 0.0);
        prop_assert!(k <= g * (1.0 + 1e-12) + 1e-300, "{k} > {g}");
    }

    #[test]
    fn kernel_grows_with_the_domain((a, x, y, t) in query(), grow in 1.0f64..3.0) {
        let small = interval_kernel(&Interval::new(a).unwrap(), x, y, t, &b()).unwrap();
        let large = interval_kernel(&Interval::new(a * grow).unwrap(), x, y, t, &b()).unwrap();
        prop_assert!(small <= large * (1.0 + 1e-12) + 1e-300, "{small} > {large}");
    }

    #[test]
    fn short_time_bound_holds_in_boxes(
        dims in prop::collection::vec((0.2f64..2.0, -0.99f64..0.99, -0.99f64..0.99), 1..=3),
        frac in 1e-3f64..1.0,
    ) {
        let hw: Vec<f64> = dims.iter().map(|d| d.0).collect();
        let x: Vec<f64> = dims.iter().map(|d| d.0 * d.1).collect();
        let y: Vec<f64> = dims.iter().map(|d| d.0 * d.2).collect();
        let dom = Domain::Box(BoxDomain::new(hw).unwrap());
        let eps = segment_clearance(&dom, &x, &y).unwrap();
        prop_assume!(eps.get() > 1e-3);
        let t = frac * eps.get().powi(2) / dims.len() as f64;
        prop_assume!(t >= 1e-10);
        let k = dom.kernel(&x, &y, t, &b()).unwrap();
        let bound = short_time_bound(eps, &x, &y, t).unwrap();
        prop_assert!(k - bound >= -1e-12, "slack {}", k - bound);
    }

    #[test]
    fn all_time_bound_holds((a, x, y, t) in query()) {
        let dom = Domain::Interval(Interval::new(a).unwrap());
        let eps = segment_clearance(&dom, &[x], &[y]).unwrap();
        let k = dom.kernel(&[x], &[y], t, &b()).unwrap();
        let bound = all_time_bound(eps, &[x], &[y], t).unwrap();
        prop_assert!(k - bound >= -1e-12, "slack {}", k - bound);
    }

    #[test]
    fn all_time_bound_decreases_on_the_diagonal(eps in 0.05f64..2.0, e0 in -4.0f64..1.0, step in 1.01f64..10.0) {
        let e = SegmentClearance::new(eps).unwrap();
        let t0 = eps * eps * 10f64.powf(e0);
        let b0 = all_time_bound(e, &[0.1], &[0.1], t0).unwrap();
        let b1 = all_time_bound(e, &[0.1], &[0.1], t0 * step).unwrap();
        prop_assert!(b1 <= b0, "{b1} > {b0}");
    }

    #[test]
    fn clearance_is_symmetric_and_explicit(a in 0.1f64..3.0, fx in -0.999f64..0.999, fy in -0.999f64..0.999) {
        let dom = Domain::Interval(Interval::new(a).unwrap());
        let (x, y) = (fx * a, fy * a);
        let exy = segment_clearance(&dom, &[x], &[y]).unwrap().get();
        let eyx = segment_clearance(&dom, &[y], &[x]).unwrap().get();
        prop_assert_eq!(exy, eyx);
        prop_assert!((exy - (a - x.abs().max(y.abs()))).abs() <= 1e-15 * a);
    }

    #[test]
    fn box_kernel_is_below_gaussian(
        dims in prop::collection::vec((0.2f64..2.0, -0.99f64..0.99, -0.99f64..0.99), 2..=3),
        e in -4.0f64..1.0,
    ) {
        let hw: Vec<f64> = dims.iter().map(|d| d.0).collect();
        let x: Vec<f64> = dims.iter().map(|d| d.0 * d.1).collect();
        let y: Vec<f64> = dims.iter().map(|d| d.0 * d.2).collect();
        let t = 0.04 * 10f64.powf(e);
        let k = Domain::Box(BoxDomain::new(hw).unwrap()).kernel(&x, &y, t, &b()).unwrap();
        let g = gaussian_kernel(&x, &y, t).unwrap();
        // Both sides may be subnormal, where relative rounding is meaningless.
        prop_assert!(k >= 0.0 && k <= g * (1.0 + 1e-12) + 1e-300, "{k} > {g}");
    }

    #[test]
    fn bad_source_is_nondecreasing(s0 in 0.0f64..2e6, ds in 0.0f64..1e5) {
        let (f0, f1) = (bad_f_eval(s0), bad_f_eval(s0 + ds));
        prop_assert!(f1 >= f0, "f({s0}) = {f0} > f({}) = {f1}", s0 + ds);
        if s0 > 0.0 {
            prop_assert!(bad_f_ln(s0 + ds) >= bad_f_ln(s0));
        }
    }

    #[test]
    fn towers_order_like_doubles(x in -50.0f64..700.0, y in -50.0f64..700.0) {
        let (tx, ty) = (LogTower::from_f64(x.exp()), LogTower::new(1, y));
        prop_assert_eq!(tx.partial_cmp(&ty), x.exp().partial_cmp(&y.exp()));
        prop_assert!((LogTower::new(1, x).ln().value() - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn power_source_is_monotone(p in 1.01f64..8.0, s in 0.0f64..10.0, ds in 0.0f64..10.0) {
        let f = SourceFunction::fujita(p).unwrap();
        prop_assert!(f.eval(s + ds) >= f.eval(s));
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn evolution_is_monotone_in_the_cap(
        alpha in 0.2f64..0.9,
        r in 0.0f64..0.9,
        e in -5.0f64..-1.0,
        cap in 4.0f64..100.0,
        raise in 1.0f64..10.0,
    ) {
        let dom = RadialDomain::interval(1.0).unwrap();
        let d = SingularData::new(alpha, 0.5, cap).unwrap();
        let t = 10f64.powf(e);
        let lo = evolve_point(&dom, &d, r, t, &b()).unwrap();
        let hi = evolve_point(&dom, &d.with_cap(cap * raise).unwrap(), r, t, &b()).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-9), "{hi} < {lo}");
    }

    #[test]
    fn evolution_lies_below_whole_space(
        alpha in 0.2f64..0.9,
        r in 0.0f64..0.95,
        e in -5.0f64..0.0,
        ball in any::<bool>(),
    ) {
        let dom = if ball { RadialDomain::ball(3, 1.0).unwrap() } else { RadialDomain::interval(1.0).unwrap() };
        let d = SingularData::new(alpha, 0.5, f64::INFINITY).unwrap();
        let t = 10f64.powf(e);
        let w = evolve_point(&dom, &d, r, t, &b()).unwrap();
        let whole = evolve_point(&dom.whole_space_of(), &d, r, t, &b()).unwrap();
        prop_assert!(w >= 0.0);
        prop_assert!(w <= whole * (1.0 + 1e-9), "{w} > {whole}");
    }
}
