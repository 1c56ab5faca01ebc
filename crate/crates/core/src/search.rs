//! Adversarial search for instances with a small mechanism-to-first-best
//! ratio over closed-form families.
//!
//! Minimization is Nelder-Mead in the unit cube mapped onto the parameter
//! box, restarted from random points. Restarts run in parallel and are
//! reduced in a fixed order, so a result depends only on
//! `(spec, objective, budget, seed, tol)`.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::PRINTED_MIN_CONSTANT;
use crate::dist::{
    atom_plus_uniform, exponential_then_truncate, hard_instance_f, piecewise_linear_cdf,
    point_mass, Distribution,
};
use crate::error::{Error, Result};
use crate::mechanisms::{buyerp, fb, fixedp, sellerp, Instance, Tolerances};

/// Evaluations per restart.
pub const EVALS_PER_RESTART: u64 = 200;
/// Below this first-best value an instance scores ratio 1.
pub const FB_FLOOR: f64 = 1e-12;

/// How the seller's law is tied to the hard-instance buyer law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wiring {
    PointMassZero,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `F` and `G` piecewise-linear with `knots` equal pieces each;
    /// parameters are the `2 * knots` piece weights, `F` first.
    PiecewiseLinearCdf { knots: usize },
    /// `F` exponential with rate `a` cut at 1, `G` the reflection of the same
    /// construction with rate `b`; parameters `[a, b]`.
    ExponentialWithTruncation,
    /// Parameter `[delta]`.
    HardInstanceDelta { wiring: Wiring },
    /// Parameters `[x_F, mass_F, x_G, mass_G]`.
    AtomPlusUniformMix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: Family,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FamilySpec {
    /// The family with its default box.
    pub fn new(family: Family) -> Self {
        let (lower, upper) = match &family {
            Family::PiecewiseLinearCdf { knots } => (vec![0.01; 2 * knots], vec![1.0; 2 * knots]),
            Family::ExponentialWithTruncation => (vec![0.05; 2], vec![10.0; 2]),
            Family::HardInstanceDelta { .. } => (vec![0.005], vec![0.45]),
            Family::AtomPlusUniformMix => (vec![0.0; 4], vec![1.0; 4]),
        };
        FamilySpec {
            family,
            lower,
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let want = match &self.family {
            Family::PiecewiseLinearCdf { knots } => {
                if *knots == 0 {
                    return Err(Error::InvalidParams("knots must be at least 1".into()));
                }
                2 * knots
            }
            Family::ExponentialWithTruncation => 2,
            Family::HardInstanceDelta { .. } => 1,
            Family::AtomPlusUniformMix => 4,
        };
        if self.lower.len() != want || self.upper.len() != want {
            return Err(Error::InvalidParams(format!(
                "family needs {want} bounds, got {} lower and {} upper",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParams(format!(
                    "bad box for parameter {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| lo + t.clamp(0.0, 1.0) * (hi - lo))
            .collect()
    }
}

/// The instance at `params`.
pub fn instantiate(spec: &FamilySpec, params: &[f64]) -> Result<Instance> {
    spec.validate()?;
    if params.len() != spec.dim() {
        return Err(Error::InvalidParams(format!(
            "expected {} parameters, got {}",
            spec.dim(),
            params.len()
        )));
    }
    for (i, p) in params.iter().enumerate() {
        if !(*p >= spec.lower[i] && *p <= spec.upper[i]) {
            return Err(Error::InvalidParams(format!(
                "parameter {i} = {p} outside [{}, {}]",
                spec.lower[i], spec.upper[i]
            )));
        }
    }
    let inst = match &spec.family {
        Family::PiecewiseLinearCdf { knots } => {
            let (a, b) = params.split_at(*knots);
            Instance::new(piecewise_linear_cdf(a)?, piecewise_linear_cdf(b)?)
        }
        Family::ExponentialWithTruncation => Instance::new(
            exponential_then_truncate(params[0])?,
            exponential_then_truncate(params[1])?.reverse(),
        ),
        Family::HardInstanceDelta { wiring } => {
            let f = hard_instance_f(params[0])?;
            let g: Distribution = match wiring {
                Wiring::PointMassZero => point_mass(0.0)?,
                Wiring::Reverse => f.reverse(),
            };
            Instance::new(f, g)
        }
        Family::AtomPlusUniformMix => Instance::new(
            atom_plus_uniform(params[0], params[1])?,
            atom_plus_uniform(params[2], params[3])?,
        ),
    };
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "randoff/fb")]
    RandoffOverFb,
    #[serde(rename = "sellerp/fb")]
    SellerpOverFb,
    #[serde(rename = "fixedp/fb")]
    FixedpOverFb,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::RandoffOverFb => "randoff/fb",
            Objective::SellerpOverFb => "sellerp/fb",
            Objective::FixedpOverFb => "fixedp/fb",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "randoff/fb" | "randoff" => Ok(Objective::RandoffOverFb),
            "sellerp/fb" | "sellerp" => Ok(Objective::SellerpOverFb),
            "fixedp/fb" | "fixedp" => Ok(Objective::FixedpOverFb),
            _ => Err(Error::InvalidParams(format!("unknown objective `{text}`"))),
        }
    }

    /// Proven lower bound on the ratio, checked on every evaluation.
    pub fn floor(self) -> Option<f64> {
        match self {
            Objective::RandoffOverFb => Some(1.0 / PRINTED_MIN_CONSTANT - 1e-6),
            _ => None,
        }
    }
}

/// Objective ratio at an instance; 1 when first-best is (numerically) zero.
pub fn ratio(inst: &Instance, objective: Objective, tol: &Tolerances) -> Result<f64> {
    let first_best = fb(inst, tol)?;
    if first_best <= FB_FLOOR {
        return Ok(1.0);
    }
    let value = match objective {
        Objective::RandoffOverFb => 0.5 * (sellerp(inst, tol)? + buyerp(inst, tol)?),
        Objective::SellerpOverFb => sellerp(inst, tol)?,
        Objective::FixedpOverFb => fixedp(inst, tol)?.gft,
    };
    Ok(value / first_best)
}

pub fn evaluate(
    spec: &FamilySpec,
    objective: Objective,
    params: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    ratio(&instantiate(spec, params)?, objective, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub params: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub family: FamilySpec,
    pub objective: Objective,
    pub seed: u64,
    pub budget: u64,
    pub restarts: u64,
    pub best_params: Vec<f64>,
    pub best_ratio: f64,
    pub evaluations: u64,
    /// Proven floor of the objective, when there is one.
    pub floor: Option<f64>,
    /// Trace entries below `floor`; any is a numerical bug.
    pub floor_violations: u64,
    pub trace: Vec<TracePoint>,
}

impl SearchResult {
    pub fn min_trace_ratio(&self) -> f64 {
        self.trace
            .iter()
            .map(|t| t.ratio)
            .fold(f64::INFINITY, f64::min)
    }
}

fn cmp_points(a: &TracePoint, b: &TracePoint) -> Ordering {
    a.ratio.total_cmp(&b.ratio).then_with(|| {
        a.params
            .iter()
            .zip(&b.params)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// One restart: Nelder-Mead from random starts until `evals` evaluations
/// are spent.
struct Run<'a> {
    spec: &'a FamilySpec,
    objective: Objective,
    tol: &'a Tolerances,
    left: u64,
    trace: Vec<TracePoint>,
}

impl Run<'_> {
    /// `None` once the budget is spent.
    fn eval(&mut self, u: &[f64]) -> Result<Option<f64>> {
        if self.left == 0 {
            return Ok(None);
        }
        self.left -= 1;
        let params = self.spec.from_unit(u);
        let r = evaluate(self.spec, self.objective, &params, self.tol)?;
        self.trace.push(TracePoint { params, ratio: r });
        Ok(Some(r))
    }

    fn nelder_mead(&mut self, start: Vec<f64>) -> Result<()> {
        let d = start.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
        let Some(f0) = self.eval(&start)? else {
            return Ok(());
        };
        simplex.push((start.clone(), f0));
        for i in 0..d {
            let mut p = start.clone();
            p[i] = if p[i] + 0.15 <= 1.0 {
                p[i] + 0.15
            } else {
                p[i] - 0.15
            };
            let Some(f) = self.eval(&p)? else {
                return Ok(());
            };
            simplex.push((p, f));
        }
        let clamp = |p: Vec<f64>| p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[d].1 - simplex[0].1;
            let size = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread <= 1e-13 && size <= 1e-7 {
                return Ok(());
            }
            let centroid: Vec<f64> = (0..d)
                .map(|j| simplex[..d].iter().map(|(p, _)| p[j]).sum::<f64>() / d as f64)
                .collect();
            let worst = simplex[d].clone();
            let along = |t: f64| -> Vec<f64> {
                clamp(
                    centroid
                        .iter()
                        .zip(&worst.0)
                        .map(|(c, w)| c + t * (c - w))
                        .collect(),
                )
            };
            let xr = along(1.0);
            let Some(fr) = self.eval(&xr)? else {
                return Ok(());
            };
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let Some(fe) = self.eval(&xe)? else {
                    return Ok(());
                };
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, outside) = if fr < worst.1 {
                (along(0.5), true)
            } else {
                (along(-0.5), false)
            };
            let Some(fc) = self.eval(&xc)? else {
                return Ok(());
            };
            if (outside && fc <= fr) || (!outside && fc < worst.1) {
                simplex[d] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for k in 1..=d {
                let p: Vec<f64> = best
                    .iter()
                    .zip(&simplex[k].0)
                    .map(|(b, x)| b + 0.5 * (x - b))
                    .collect();
                let Some(f) = self.eval(&p)? else {
                    return Ok(());
                };
                simplex[k] = (p, f);
            }
        }
    }
}

fn restart(
    spec: &FamilySpec,
    objective: Objective,
    evals: u64,
    seed: u64,
    index: u64,
    tol: &Tolerances,
) -> Result<Vec<TracePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut run = Run {
        spec,
        objective,
        tol,
        left: evals,
        trace: Vec::new(),
    };
    while run.left > 0 {
        let start: Vec<f64> = (0..spec.dim()).map(|_| rng.gen::<f64>()).collect();
        run.nelder_mead(start)?;
    }
    Ok(run.trace)
}

/// Minimizes the objective ratio over the family with `budget` evaluations
/// split over `max(1, budget / 200)` restarts.
pub fn minimize_ratio(
    spec: &FamilySpec,
    objective: Objective,
    budget: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<SearchResult> {
    spec.validate()?;
    if budget == 0 {
        return Err(Error::InvalidParams("budget must be at least 1".into()));
    }
    let restarts = (budget / EVALS_PER_RESTART).max(1);
    let traces: Vec<Vec<TracePoint>> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let evals = budget / restarts + u64::from(i < budget % restarts);
            restart(spec, objective, evals, seed, i, tol)
        })
        .collect::<Result<_>>()?;
    let trace: Vec<TracePoint> = traces.into_iter().flatten().collect();
    let best = trace
        .iter()
        .min_by(|a, b| cmp_points(a, b))
        .expect("budget >= 1 gives one evaluation")
        .clone();
    let floor = objective.floor();
    let floor_violations = floor.map_or(0, |f| trace.iter().filter(|t| t.ratio < f).count() as u64);
    Ok(SearchResult {
        family: spec.clone(),
        objective,
        seed,
        budget,
        restarts,
        best_params: best.params,
        best_ratio: best.ratio,
        evaluations: trace.len() as u64,
        floor,
        floor_violations,
        trace,
    })
}

/// Trace as CSV: `index,ratio,p0,p1,...`, numbers to 17 significant digits.
pub fn write_trace_csv<W: Write>(result: &SearchResult, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: "<csv>".into(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "ratio".to_string()];
    header.extend((0..result.family.dim()).map(|i| format!("p{i}")));
    w.write_record(&header).map_err(io)?;
    for (i, t) in result.trace.iter().enumerate() {
        let mut row = vec![i.to_string(), format!("{:.16e}", t.ratio)];
        row.extend(t.params.iter().map(|p| format!("{p:.16e}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        reason: e.to_string(),
    })
}
