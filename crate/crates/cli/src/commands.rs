use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use btl_core::bounds::{
    self, bound_constant, canonical_instances, hard_instance_report, lambda_star_by_root,
    optimize_bound_constant, run_suite, BoundCertificate, SuiteConfig,
};
use btl_core::dist::named::parse_pair;
use btl_core::mechanisms::{report, Instance, MechanismReport, Tolerances};
use btl_core::montecarlo::{mc_report, McReport};
use btl_core::search::{minimize_ratio, write_trace_csv, Family, FamilySpec, Objective, Wiring};
use serde::Serialize;

use crate::config::{Command, RunConfig};

/// What a finished command reports back.
pub struct Outcome {
    /// A certificate failed or a search tripped a proven floor.
    pub failed: bool,
}

const OK: Outcome = Outcome { failed: false };

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    if let Some(path) = path {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

fn write_rows(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(path) = path {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    cfg.tol
        .map_or_else(Tolerances::default, Tolerances::with_outer)
}

fn load_instance(cfg: &RunConfig) -> Result<(String, Instance)> {
    if let Some(path) = &cfg.instance {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let inst: Instance =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((format!("file:{}", path.display()), inst));
    }
    let (f, g) = (
        cfg.f.as_deref().unwrap_or_default(),
        cfg.g.as_deref().unwrap_or_default(),
    );
    let (fd, gd) = parse_pair(f, g)?;
    Ok((bounds::label(f, g), Instance::new(fd, gd)))
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Eval => eval(cfg),
        Command::Verify => verify(cfg),
        Command::HardInstance => hard_instance(cfg),
        Command::ScanLambda => scan_lambda(cfg),
        Command::Search => search(cfg),
    }
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    instance: &'a str,
    report: &'a MechanismReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<&'a McReport>,
}

fn eval(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = std::io::stdout().lock();
    let tol = tolerances(cfg);
    let (label, inst) = load_instance(cfg)?;
    let rep = report(&inst, cfg.lambda[0], &tol)?;
    let mut rows: Vec<(&str, f64)> = vec![
        ("fb", rep.fb),
        ("sellerp", rep.sellerp),
        ("buyerp", rep.buyerp),
        ("randoff", rep.randoff),
        ("fixedp", rep.fixedp),
        ("fixed_price", rep.fixed_price),
        ("sprofit", rep.sprofit_lb),
        ("bprofit", rep.bprofit),
        ("lambda", rep.lambda),
    ];
    rows.extend(rep.bprofit_lb.map(|x| ("bprofit_lb", x)));
    for (name, r) in [
        ("randoff/fb", rep.randoff_over_fb),
        ("sellerp/fb", rep.sellerp_over_fb),
        ("buyerp/fb", rep.buyerp_over_fb),
        ("fixedp/fb", rep.fixedp_over_fb),
    ] {
        rows.extend(r.map(|x| (name, x)));
    }
    let n = cfg.budget.unwrap_or(0);
    let mc = if n > 0 {
        Some(mc_report(&inst, n, cfg.seed.unwrap_or(0), &tol)?)
    } else {
        None
    };
    writeln!(out, "{label}")?;
    for (name, x) in &rows {
        writeln!(out, "{name:<12} {x:.10}")?;
    }
    if let Some(mc) = &mc {
        for (name, e) in [
            ("fb", mc.fb),
            ("sellerp", mc.sellerp),
            ("buyerp", mc.buyerp),
            ("randoff", mc.randoff),
        ] {
            writeln!(out, "mc {name:<9} {:.10} +- {:.2e}", e.mean, e.std_error)?;
        }
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(n, x)| vec![n.to_string(), fmt(*x)])
        .collect();
    write_rows(cfg.out_csv.as_deref(), &["quantity", "value"], &csv_rows)?;
    write_json(
        cfg.out_json.as_deref(),
        &EvalOutput {
            instance: &label,
            report: &rep,
            monte_carlo: mc.as_ref(),
        },
    )?;
    Ok(OK)
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = std::io::stdout().lock();
    let tol = tolerances(cfg);
    let instances = if cfg.f.is_some() || cfg.instance.is_some() {
        vec![load_instance(cfg)?]
    } else {
        canonical_instances()?
    };
    let grid = cfg.grid.unwrap_or(5);
    let suite = SuiteConfig {
        claims: cfg.claim.clone(),
        lambdas: cfg.lambda.clone(),
        costs: (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect(),
        main_constant: cfg.main_constant.unwrap_or(bounds::MAIN_CONSTANT),
        ..SuiteConfig::default()
    };
    let certs: Vec<BoundCertificate> = run_suite(&instances, &suite, &tol)?;
    for c in &certs {
        let lambda = c
            .lambda
            .map(|l| format!(" lambda={l:.6}"))
            .unwrap_or_default();
        let ratio = c
            .details
            .get("fb_over_randoff")
            .map(|r| format!(" fb/randoff={r:.6}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{} {} [{}]{lambda} lhs={:.12} rhs={:.12} margin={:.3e}{ratio}",
            c.verdict.as_str(),
            c.claim_id,
            c.instance,
            c.lhs,
            c.rhs,
            c.margin
        )?;
    }
    let failed = certs.iter().filter(|c| !c.passed()).count();
    writeln!(out, "{} claims, {failed} failed", certs.len())?;
    if let Some(path) = &cfg.out_csv {
        let mut w = create(path)?;
        bounds::write_csv(&certs, &mut w)?;
        w.flush()?;
    }
    write_json(cfg.out_json.as_deref(), &certs)?;
    Ok(Outcome { failed: failed > 0 })
}

fn hard_instance(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = std::io::stdout().lock();
    let tol = tolerances(cfg);
    let rows = cfg
        .delta
        .iter()
        .map(|&d| hard_instance_report(d, &tol))
        .collect::<btl_core::Result<Vec<_>>>()?;
    writeln!(
        out,
        "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "delta", "sellerp", "fb", "fb/sellerp", "randoff_rev", "randoff/fb"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>8} {:>12.8} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            r.delta, r.sellerp, r.fb, r.ratio_seller, r.randoff_reversed, r.ratio_randoff
        )?;
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [
                r.delta,
                r.sellerp,
                r.fb,
                r.ratio_seller,
                r.fb_reversed,
                r.randoff_reversed,
                r.ratio_randoff,
            ]
            .into_iter()
            .map(fmt)
            .collect()
        })
        .collect();
    write_rows(
        cfg.out_csv.as_deref(),
        &[
            "delta",
            "sellerp",
            "fb",
            "fb_over_sellerp",
            "fb_reversed",
            "randoff_reversed",
            "randoff_over_fb",
        ],
        &csv_rows,
    )?;
    write_json(cfg.out_json.as_deref(), &rows)?;
    Ok(OK)
}

#[derive(Serialize)]
struct ScanOutput {
    lambda_star: f64,
    minimum: f64,
    stationarity_root: f64,
    rows: Vec<(f64, f64)>,
}

fn scan_lambda(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = std::io::stdout().lock();
    let lambdas: Vec<f64> = match cfg.grid {
        Some(n) => (1..=n).map(|i| i as f64 / (n + 1) as f64).collect(),
        None => cfg.lambda.clone(),
    };
    let rows = lambdas
        .iter()
        .map(|&l| Ok((l, bound_constant(l)?)))
        .collect::<btl_core::Result<Vec<_>>>()?;
    let (lambda_star, minimum) = optimize_bound_constant(1e-10);
    let root = lambda_star_by_root(1e-14)?;
    writeln!(
        out,
        "minimum {minimum:.10} at lambda {lambda_star:.10} (stationarity root {root:.10})"
    )?;
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|(l, c)| vec![fmt(*l), fmt(*c)]).collect();
    write_rows(cfg.out_csv.as_deref(), &["lambda", "constant"], &csv_rows)?;
    write_json(
        cfg.out_json.as_deref(),
        &ScanOutput {
            lambda_star,
            minimum,
            stationarity_root: root,
            rows,
        },
    )?;
    Ok(OK)
}

fn family_spec(cfg: &RunConfig) -> FamilySpec {
    let family = match cfg.family.as_deref().unwrap_or_default() {
        "piecewise-linear-cdf" => Family::PiecewiseLinearCdf {
            knots: cfg.knots.unwrap_or(4),
        },
        "exponential-with-truncation" => Family::ExponentialWithTruncation,
        "hard-instance-delta" => Family::HardInstanceDelta {
            wiring: if cfg.g.as_deref() == Some("reverse") {
                Wiring::Reverse
            } else {
                Wiring::PointMassZero
            },
        },
        _ => Family::AtomPlusUniformMix,
    };
    FamilySpec::new(family)
}

fn search(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = std::io::stdout().lock();
    let tol = tolerances(cfg);
    let spec = family_spec(cfg);
    let objective = Objective::parse(cfg.objective.as_deref().unwrap_or("randoff/fb"))?;
    let budget = cfg.budget.unwrap_or(1000);
    let seed = cfg.seed.unwrap_or(0);
    eprintln!(
        "search: {} over {} parameters, budget {budget}, seed {seed}",
        objective.as_str(),
        spec.dim()
    );
    let result = minimize_ratio(&spec, objective, budget, seed, &tol)?;
    eprintln!(
        "search: {} restarts, {} evaluations, best ratio {:.10}",
        result.restarts, result.evaluations, result.best_ratio
    );
    writeln!(out, "best_ratio {:.12}", result.best_ratio)?;
    writeln!(out, "best_params {:?}", result.best_params)?;
    if let Some(floor) = result.floor {
        writeln!(
            out,
            "floor {floor:.10}, min trace ratio {:.10}, violations {}",
            result.min_trace_ratio(),
            result.floor_violations
        )?;
    }
    if let Some(path) = &cfg.out_csv {
        let mut w = create(path)?;
        write_trace_csv(&result, &mut w)?;
        w.flush()?;
    }
    write_json(cfg.out_json.as_deref(), &result)?;
    Ok(Outcome {
        failed: result.floor_violations > 0,
    })
}
