use anyhow::{bail, Result};
use serde::Serialize;

use heatlab::bounds::{kernel_profile, sweep_verify, BoundKind, SweepGrid, KernelProfile, VIOLATION_THRESHOLD};
use heatlab::kernel::{BoxDomain, Domain, Interval, SeriesBudget};
use heatlab::linear::{
    fit_scaling_exponents, infimum_m, largeness_certificate, CertificateOptions, InfimumGrid, InfimumM,
    LargenessCertificate, RadialDomain, SingularData,
};
use heatlab::osgood::{
    bad_osgood_flow, growth_probe, osgood_term, phi_seq, rk45, FlowState, LogTower, OdeOptions, LAST_FINITE,
};
use heatlab::semilinear::{blowup_experiment, default_probe_time, BlowupReport, InitialData, Regime, SimConfig};
use heatlab::source::SourceFunction;
use heatlab::verify::{run_criterion, Criterion, VerifyConfig};

use crate::config::Config;
use crate::output::{num, opt_num, RunDir};
use crate::svg::{Plot, Series};

/// Outcome of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A bound was violated or a regime misclassified.
    Violation,
    /// Some acceptance criterion could not be computed.
    NumericalFailure,
}

fn budget(cfg: &Config) -> Result<SeriesBudget> {
    let b = SeriesBudget {
        tol: cfg.f64("series-tol")?,
        k_max_cap: cfg.usize("k-max-cap")?,
        crossover: cfg.f64("crossover")?,
    };
    b.validate()?;
    Ok(b)
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    let widths: Vec<f64> = body
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow::anyhow!("bad half-widths in domain '{text}'"))?;
    match (kind, widths.as_slice()) {
        ("interval", [a]) => Ok(Domain::Interval(Interval::new(*a)?)),
        ("box", ws) if !ws.is_empty() => Ok(Domain::Box(BoxDomain::new(ws.to_vec())?)),
        _ => bail!("domain '{text}' is not interval:A or box:A1,A2,..."),
    }
}

fn parse_radial(text: &str) -> Result<RadialDomain> {
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    let a: f64 = body
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("bad radius in domain '{text}'"))?;
    match kind {
        "interval" => Ok(RadialDomain::interval(a)?),
        "ball" => Ok(RadialDomain::ball(3, a)?),
        _ => bail!("domain '{text}' is not interval:A or ball:A"),
    }
}

#[derive(Serialize)]
struct KernelResult<'a> {
    profile: &'a KernelProfile,
    min_slack: f64,
    kernel_peak: f64,
    bound_peak: f64,
    cell: f64,
}

pub fn kernel(cfg: &Config) -> Result<Status> {
    let b = budget(cfg)?;
    let Domain::Interval(dom) = parse_domain(cfg.get("domain")?)? else {
        bail!("kernel tabulates interval domains only");
    };
    let length = 2.0 * dom.half_width();
    let prof = kernel_profile(length, cfg.f64("y")?, cfg.f64("t")?, cfg.usize("points")?, &b)?;
    let min_slack = prof.slack().fold(f64::INFINITY, f64::min);

    let mut run = RunDir::create(cfg)?;
    let rows: Vec<Vec<String>> = (0..prof.x.len())
        .map(|i| {
            vec![
                num(prof.x[i]),
                num(prof.y),
                num(prof.t),
                num(prof.kernel[i]),
                num(prof.bound[i]),
                num(prof.kernel[i] - prof.bound[i]),
            ]
        })
        .collect();
    run.csv("kernel.csv", &["x", "y", "t", "kernel", "bound", "slack"], &rows)?;
    run.json(
        "kernel.json",
        &KernelResult {
            profile: &prof,
            min_slack,
            kernel_peak: prof.kernel_peak(),
            bound_peak: prof.bound_peak(),
            cell: prof.cell(),
        },
    )?;
    if cfg.bool("plot")? {
        let plot = Plot {
            title: format!("Dirichlet kernel on [0, {length}], y = {}, t = {}", prof.y, prof.t),
            x_label: "x".into(),
            y_label: "K(x, y; t)".into(),
            series: vec![
                Series {
                    label: "kernel".into(),
                    points: prof.x.iter().copied().zip(prof.kernel.iter().copied()).collect(),
                    color: "black",
                    dashed: false,
                    markers: false,
                },
                Series {
                    label: "lower bound".into(),
                    points: prof.x.iter().copied().zip(prof.bound.iter().copied()).collect(),
                    color: "#1f5fbf",
                    dashed: true,
                    markers: false,
                },
            ],
        };
        run.svg("kernel.svg", &plot)?;
    }
    let dir = run.finish()?;
    println!("min slack {min_slack:e}; kernel peak at x = {}", prof.kernel_peak());
    println!("wrote {}", dir.display());
    Ok(if min_slack < VIOLATION_THRESHOLD { Status::Violation } else { Status::Ok })
}

pub fn bounds_sweep(cfg: &Config) -> Result<Status> {
    let b = budget(cfg)?;
    let dom = parse_domain(cfg.get("domain")?)?;
    let kind = BoundKind::parse(cfg.get("kind")?)?;
    let grid = SweepGrid {
        points_per_axis: cfg.usize("points-per-axis")?,
        n_times: cfg.usize("n-times")?,
        t_lo: cfg.f64("t-lo")?,
        t_hi: cfg.f64("t-hi")?,
        record_rows: true,
    };
    let report = sweep_verify(&dom, kind, &grid, &b)?;

    let mut run = RunDir::create(cfg)?;
    let join = |v: &[f64]| v.iter().map(|c| num(*c)).collect::<Vec<_>>().join(" ");
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![join(&r.x), join(&r.y), num(r.t), num(r.kernel), num(r.bound), num(r.slack)])
        .collect();
    run.csv("sweep.csv", &["x", "y", "t", "kernel", "bound", "slack"], &rows)?;
    run.json("sweep.json", &report)?;
    let dir = run.finish()?;
    println!(
        "{} on {}: {} nodes, min slack {:e}, {} violations",
        kind.name(),
        cfg.get("domain")?,
        report.nodes,
        report.min_slack,
        report.violations.len()
    );
    println!("wrote {}", dir.display());
    Ok(if report.passed() { Status::Ok } else { Status::Violation })
}

#[derive(Serialize)]
struct PropBallResult {
    certificate: LargenessCertificate,
    infimum: InfimumM,
    p_r: Option<f64>,
    p_t: Option<f64>,
    expected_p_r: f64,
    expected_p_t: f64,
}

pub fn prop_ball(cfg: &Config) -> Result<Status> {
    let b = budget(cfg)?;
    let dom = parse_radial(cfg.get("domain")?)?;
    let d = SingularData::new(cfg.f64("alpha")?, cfg.f64("radius")?, f64::INFINITY)?;
    let opts = CertificateOptions {
        n_times: cfg.usize("n-times")?,
        t_lo_frac: cfg.f64("t-lo-frac")?,
        rel_tol: cfg.f64("rel-tol")?,
        phi_star: None,
    };
    let cert = largeness_certificate(&dom, &d, &cfg.f64_list("phis")?, &opts, &b)?;
    let infimum = infimum_m(&dom, &d, &InfimumGrid::default(), &b)?;
    let fit = fit_scaling_exponents(&cert).ok();
    let result = PropBallResult {
        infimum,
        p_r: fit.map(|f| f.0),
        p_t: fit.map(|f| f.1),
        expected_p_r: -1.0 / d.alpha,
        expected_p_t: -2.0 / d.alpha,
        certificate: cert,
    };

    let mut run = RunDir::create(cfg)?;
    let rows: Vec<Vec<String>> = result
        .certificate
        .samples
        .iter()
        .map(|s| vec![num(s.phi), num(s.r), num(s.tau)])
        .collect();
    run.csv("prop_ball.csv", &["phi", "r", "tau"], &rows)?;
    run.json("prop_ball.json", &result)?;
    if cfg.bool("plot")? {
        let pts: Vec<(f64, f64)> = result
            .certificate
            .samples
            .iter()
            .map(|s| (s.phi.log10(), s.r.log10()))
            .collect();
        let mut series = vec![Series {
            label: "measured r(phi)".into(),
            points: pts.clone(),
            color: "black",
            dashed: false,
            markers: true,
        }];
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            let slope = result.expected_p_r;
            series.push(Series {
                label: format!("slope {slope:.3}"),
                points: vec![*first, (last.0, first.1 + slope * (last.0 - first.0))],
                color: "#1f5fbf",
                dashed: true,
                markers: false,
            });
        }
        let plot = Plot {
            title: format!("largeness radius, alpha = {}", d.alpha),
            x_label: "log10 phi".into(),
            y_label: "log10 r".into(),
            series,
        };
        run.svg("prop_ball.svg", &plot)?;
    }
    let dir = run.finish()?;
    println!(
        "sigma {:e}; p_r {}; p_t {}; M {}",
        result.certificate.sigma,
        opt_num(result.p_r),
        opt_num(result.p_t),
        result.infimum.m
    );
    println!("wrote {}", dir.display());
    Ok(Status::Ok)
}

/// The regime predicts the qualitative outcome of the ladder.
fn misclassified(report: &BlowupReport) -> bool {
    match report.regime {
        Regime::NonExistence => !report.lower_strictly_increasing(),
        Regime::Existence => report.records.iter().any(|r| r.blew_up),
        Regime::Borderline | Regime::Unknown => false,
    }
}

pub fn blowup(cfg: &Config) -> Result<Status> {
    let source = match cfg.opt("source") {
        Some(s) => SourceFunction::parse(s)?,
        None => SourceFunction::fujita(cfg.f64("p")?)?,
    };
    let n = cfg.usize("n")?;
    let d = SingularData::new(cfg.f64("alpha")?, cfg.f64("radius")?, f64::INFINITY)?;
    let mut sim = SimConfig::new(n, cfg.f64("domain-radius")?, InitialData::Singular(d), source);
    sim.cells = cfg.usize("cells")?;
    sim.grading = cfg.f64("grading")?;
    sim.dt_init = cfg.f64("dt")?;
    let t_probe = match cfg.get("t-probe")? {
        "auto" => default_probe_time(&sim),
        _ => cfg.f64("t-probe")?,
    };
    let report = blowup_experiment(&sim, &cfg.f64_list("caps")?, t_probe, cfg.f64("q")?)?;

    let mut run = RunDir::create(cfg)?;
    let rows: Vec<Vec<String>> = report
        .records
        .iter()
        .map(|r| vec![num(r.cap), num(r.mass), r.blew_up.to_string(), opt_num(r.t_blowup)])
        .collect();
    run.csv("blowup.csv", &["M", "I", "blew_up", "t_blowup"], &rows)?;
    run.json("blowup.json", &report)?;
    if cfg.bool("plot")? {
        let log = |v: &[(f64, f64)]| -> Vec<(f64, f64)> { v.iter().map(|p| (p.0.log10(), p.1.log10())).collect() };
        let lower: Vec<(f64, f64)> = report.records.iter().map(|r| (r.cap, r.lower_mass)).collect();
        let linear: Vec<(f64, f64)> = report.records.iter().map(|r| (r.cap, r.linear_mass)).collect();
        let finite: Vec<(f64, f64)> = report
            .records
            .iter()
            .filter(|r| !r.blew_up)
            .map(|r| (r.cap, r.mass))
            .collect();
        let mut series = vec![
            Series {
                label: "I lower (first iterate)".into(),
                points: log(&lower),
                color: "black",
                dashed: false,
                markers: true,
            },
            Series {
                label: "I linear".into(),
                points: log(&linear),
                color: "#1f5fbf",
                dashed: true,
                markers: false,
            },
        ];
        if !finite.is_empty() {
            series.push(Series {
                label: "I (finite runs)".into(),
                points: log(&finite),
                color: "#b22222",
                dashed: false,
                markers: true,
            });
        }
        let plot = Plot {
            title: format!("mass at t* = {t_probe:e}, {}", report.source.name()),
            x_label: "log10 M".into(),
            y_label: "log10 I".into(),
            series,
        };
        run.svg("blowup.svg", &plot)?;
    }
    let dir = run.finish()?;
    println!(
        "regime {}; fitted slope {}; theoretical slope {}; blown up {}/{}",
        report.regime.name(),
        opt_num(report.fitted_slope),
        opt_num(report.theoretical_slope),
        report.records.iter().filter(|r| r.blew_up).count(),
        report.records.len()
    );
    println!("wrote {}", dir.display());
    Ok(if misclassified(&report) { Status::Violation } else { Status::Ok })
}

#[derive(Serialize)]
struct OsgoodRow {
    i: usize,
    log_phi: LogTower,
    log_f_phi: LogTower,
    term: f64,
    partial_sum: f64,
}

#[derive(Serialize)]
struct GrowthRow {
    gamma: f64,
    /// `ln(phi_i^-gamma f(phi_i))` for `i = 1, 2, ...`.
    values: Vec<LogTower>,
}

#[derive(Serialize)]
struct OsgoodResult {
    table: Vec<OsgoodRow>,
    growth: Vec<GrowthRow>,
    x0: f64,
    t_end: f64,
    flow_end: FlowState,
    flow_entries: Vec<FlowState>,
    quadratic_blowup_time: Option<f64>,
}

fn parse_x0(s: &str) -> Result<f64> {
    if let Some(k) = s.trim().strip_prefix("phi") {
        let k: usize = k.parse().map_err(|_| anyhow::anyhow!("bad x0 '{s}'"))?;
        if k > LAST_FINITE {
            bail!("phi{k} is not a double");
        }
        return Ok(phi_seq(k).value());
    }
    s.trim().parse().map_err(|_| anyhow::anyhow!("bad x0 '{s}'"))
}

pub fn osgood(cfg: &Config) -> Result<Status> {
    let terms = cfg.usize("terms")?;
    let mut table = Vec::with_capacity(terms);
    let mut sum = 0.0;
    for i in 1..=terms {
        let term = osgood_term(i)?;
        sum += term;
        table.push(OsgoodRow {
            i,
            log_phi: phi_seq(i).ln(),
            log_f_phi: growth_probe(0.0, i)?,
            term,
            partial_sum: sum,
        });
    }
    let growth = cfg
        .f64_list("gammas")?
        .into_iter()
        .map(|gamma| {
            let values = (1..=LAST_FINITE + 4).map(|i| growth_probe(gamma, i)).collect::<heatlab::Result<_>>()?;
            Ok(GrowthRow { gamma, values })
        })
        .collect::<Result<Vec<_>>>()?;
    let x0 = parse_x0(cfg.get("x0")?)?;
    let t_end = cfg.f64("t-end")?;
    let (flow_end, flow_entries) = bad_osgood_flow(x0, t_end)?;
    let quad = rk45(|x| x * x, 1.0, 1.1, &OdeOptions::default())?;
    let result = OsgoodResult {
        table,
        growth,
        x0,
        t_end,
        flow_end,
        flow_entries,
        quadratic_blowup_time: quad.blowup_time,
    };

    let mut run = RunDir::create(cfg)?;
    let rows: Vec<Vec<String>> = result
        .table
        .iter()
        .map(|r| {
            vec![
                r.i.to_string(),
                r.log_phi.to_string(),
                r.log_f_phi.to_string(),
                num(r.term),
                num(r.partial_sum),
            ]
        })
        .collect();
    run.csv("osgood.csv", &["i", "log_phi", "log_f_phi", "term", "partial_sum"], &rows)?;
    run.json("osgood.json", &result)?;
    let dir = run.finish()?;
    println!(
        "partial sum at N = {terms}: {sum}; flow from {x0} reaches t = {} in {}; x' = x^2 blows up at {}",
        result.flow_end.t,
        result.flow_end.segment,
        opt_num(result.quadratic_blowup_time)
    );
    println!("wrote {}", dir.display());
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct VerifyResult {
    passed: bool,
    criteria: Vec<Criterion>,
}

pub fn verify_all(cfg: &Config) -> Result<Status> {
    let mut vc = VerifyConfig {
        budget: budget(cfg)?,
        ..VerifyConfig::default()
    };
    vc.grid.points_per_axis = cfg.usize("points-per-axis")?;
    vc.grid.n_times = cfg.usize("n-times")?;
    vc.sim_cells = cfg.usize("sim-cells")?;
    vc.sim_dt = cfg.f64("sim-dt")?;
    vc.mild_cells = cfg.usize("mild-cells")?;
    vc.mild_dt = cfg.f64("mild-dt")?;
    let ids: Vec<u32> = cfg
        .f64_list("criteria")?
        .into_iter()
        .map(|v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as u32) } else { bail!("bad criterion {v}") })
        .collect::<Result<_>>()?;

    let mut criteria = Vec::with_capacity(ids.len());
    for id in ids {
        let c = run_criterion(id, &vc);
        println!("[{}] criterion {:>2}: {}", if c.passed() { "PASS" } else { "FAIL" }, c.id, c.title);
        for ch in c.checks.iter().filter(|ch| !ch.passed) {
            println!("       {}: {} (target {})", ch.name, ch.value, ch.target);
        }
        if let Some(e) = &c.error {
            println!("       error: {e}");
        }
        criteria.push(c);
    }
    let passed = criteria.iter().all(Criterion::passed);
    let numerical = criteria.iter().any(|c| c.numerical);
    let result = VerifyResult { passed, criteria };

    let mut run = RunDir::create(cfg)?;
    let mut rows = Vec::new();
    for c in &result.criteria {
        for ch in &c.checks {
            rows.push(vec![
                c.id.to_string(),
                c.title.clone(),
                ch.name.clone(),
                num(ch.value),
                ch.target.clone(),
                ch.passed.to_string(),
            ]);
        }
    }
    run.csv("verify.csv", &["criterion", "title", "check", "value", "target", "passed"], &rows)?;
    run.json("verify.json", &result)?;
    let dir = run.finish()?;
    println!("wrote {}", dir.display());
    Ok(if numerical {
        Status::NumericalFailure
    } else if passed {
        Status::Ok
    } else {
        Status::Violation
    })
}
