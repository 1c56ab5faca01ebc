//! Command-line parsing and the normalized run configuration.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use btl_core::bounds::{optimize_bound_constant, CLAIMS, MAIN_CONSTANT};
use btl_core::search::Objective;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.01];
pub const FAMILIES: [&str; 4] = [
    "piecewise-linear-cdf",
    "exponential-with-truncation",
    "hard-instance-delta",
    "atom-plus-uniform-mix",
];

#[derive(Parser, Debug)]
#[command(name = "btl", version, about = "Bilateral trade mechanism laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,

    /// Print the normalized run configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Evaluate every mechanism on one instance.
    Eval(EvalArgs),
    /// Run bound certificates.
    Verify(VerifyArgs),
    /// Convergence table of the hard instance.
    HardInstance(HardArgs),
    /// Tabulate the bound constant over lambda.
    ScanLambda(ScanArgs),
    /// Adversarial search for small ratios.
    Search(SearchArgs),
    /// Execute a saved run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
pub struct Output {
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    /// Buyer value distribution id.
    #[arg(long = "F")]
    pub f: Option<String>,
    /// Seller cost distribution id; `reverse` reflects F.
    #[arg(long = "G")]
    pub g: Option<String>,
    /// JSON file holding `{"F": ..., "G": ...}`.
    #[arg(long, conflicts_with_all = ["f", "g"])]
    pub instance: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    /// Outer integration tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Quantile level of the profit lower bound.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Monte Carlo draws for a sampled cross-check (0 skips it).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Claim ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub claim: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Number of cost points on [0, 1] for the per-cost claims.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, hide = true)]
    pub main_constant: Option<f64>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct HardArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Explicit lambda values; overrides `--grid`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Number of equally spaced interior points of (0, 1).
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub family: Option<String>,
    /// Pieces per side for the piecewise-linear family.
    #[arg(long)]
    pub knots: Option<usize>,
    /// `randoff/fb`, `sellerp/fb` or `fixedp/fb`.
    #[arg(long)]
    pub objective: Option<String>,
    /// Seller law for the hard-instance family: `atom:0` or `reverse`.
    #[arg(long = "G")]
    pub g: Option<String>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eval,
    Verify,
    HardInstance,
    ScanLambda,
    Search,
}

/// Everything a command needs, with defaults filled in and fields the
/// command does not use left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "F")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "G")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claim: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_csv: Option<PathBuf>,
}

impl RunConfig {
    fn empty(command: Command) -> Self {
        RunConfig {
            command,
            f: None,
            g: None,
            instance: None,
            tol: None,
            lambda: vec![],
            delta: vec![],
            grid: None,
            seed: None,
            budget: None,
            claim: vec![],
            family: None,
            knots: None,
            objective: None,
            main_constant: None,
            out_json: None,
            out_csv: None,
        }
    }

    pub fn from_cli(cmd: Cmd) -> Result<Self> {
        let raw = match cmd {
            Cmd::Run { config } => {
                let text = std::fs::read_to_string(&config)
                    .with_context(|| format!("reading {}", config.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", config.display()))?
            }
            Cmd::Eval(a) => RunConfig {
                f: a.inst.f,
                g: a.inst.g,
                instance: a.inst.instance,
                tol: a.tol,
                lambda: a.lambda.into_iter().collect(),
                budget: a.budget,
                seed: a.seed,
                out_json: a.out.out_json,
                out_csv: a.out.out_csv,
                ..RunConfig::empty(Command::Eval)
            },
            Cmd::Verify(a) => RunConfig {
                f: a.inst.f,
                g: a.inst.g,
                instance: a.inst.instance,
                tol: a.tol,
                claim: a.claim,
                lambda: a.lambda,
                grid: a.grid,
                main_constant: a.main_constant,
                out_json: a.out.out_json,
                out_csv: a.out.out_csv,
                ..RunConfig::empty(Command::Verify)
            },
            Cmd::HardInstance(a) => RunConfig {
                delta: a.delta,
                tol: a.tol,
                out_json: a.out.out_json,
                out_csv: a.out.out_csv,
                ..RunConfig::empty(Command::HardInstance)
            },
            Cmd::ScanLambda(a) => RunConfig {
                lambda: a.lambda,
                grid: a.grid,
                out_json: a.out.out_json,
                out_csv: a.out.out_csv,
                ..RunConfig::empty(Command::ScanLambda)
            },
            Cmd::Search(a) => RunConfig {
                family: a.family,
                knots: a.knots,
                objective: a.objective,
                g: a.g,
                budget: a.budget,
                seed: a.seed,
                tol: a.tol,
                out_json: a.out.out_json,
                out_csv: a.out.out_csv,
                ..RunConfig::empty(Command::Search)
            },
        };
        raw.normalize()
    }

    /// Fills defaults, checks ranges and clears fields the command ignores.
    /// Idempotent.
    pub fn normalize(self) -> Result<Self> {
        let base = RunConfig {
            out_json: self.out_json.clone(),
            out_csv: self.out_csv.clone(),
            ..RunConfig::empty(self.command)
        };
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            bail!("--tol must lie in (0, 1), got {tol}");
        }
        let (lambda_star, _) = optimize_bound_constant(1e-10);
        let check_lambdas = |ls: &[f64]| -> Result<()> {
            match ls.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
                Some(l) => bail!("--lambda values must lie in (0, 1), got {l}"),
                None => Ok(()),
            }
        };
        let cfg = match self.command {
            Command::Eval => {
                let lambda = if self.lambda.is_empty() {
                    vec![lambda_star]
                } else {
                    self.lambda
                };
                if lambda.len() != 1 {
                    bail!("eval takes a single --lambda");
                }
                check_lambdas(&lambda)?;
                let (f, g, instance) = instance_source(self.f, self.g, self.instance, true)?;
                let budget = self.budget.unwrap_or(0);
                RunConfig {
                    f,
                    g,
                    instance,
                    tol: Some(tol),
                    lambda,
                    budget: Some(budget),
                    seed: Some(self.seed.unwrap_or(0)),
                    ..base
                }
            }
            Command::Verify => {
                let lambda = if self.lambda.is_empty() {
                    vec![0.2, lambda_star, 0.7]
                } else {
                    self.lambda
                };
                check_lambdas(&lambda)?;
                if let Some(c) = self.claim.iter().find(|c| !CLAIMS.contains(&c.as_str())) {
                    bail!("unknown claim `{c}`; known claims: {}", CLAIMS.join(", "));
                }
                let mut claim = self.claim;
                claim.sort();
                claim.dedup();
                let grid = self.grid.unwrap_or(5);
                if grid < 2 {
                    bail!("--grid must be at least 2");
                }
                let main_constant = self.main_constant.unwrap_or(MAIN_CONSTANT);
                if !(main_constant > 0.0 && main_constant.is_finite()) {
                    bail!("--main-constant must be positive");
                }
                let (f, g, instance) = instance_source(self.f, self.g, self.instance, false)?;
                RunConfig {
                    f,
                    g,
                    instance,
                    tol: Some(tol),
                    lambda,
                    claim,
                    grid: Some(grid),
                    main_constant: Some(main_constant),
                    ..base
                }
            }
            Command::HardInstance => {
                let delta = if self.delta.is_empty() {
                    DEFAULT_DELTAS.to_vec()
                } else {
                    self.delta
                };
                if let Some(d) = delta.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
                    bail!("--delta values must lie in (0, 1/2), got {d}");
                }
                RunConfig {
                    delta,
                    tol: Some(tol),
                    ..base
                }
            }
            Command::ScanLambda => {
                if self.lambda.is_empty() {
                    let grid = self.grid.unwrap_or(99);
                    if grid == 0 {
                        bail!("--grid must be at least 1");
                    }
                    RunConfig {
                        grid: Some(grid),
                        ..base
                    }
                } else {
                    check_lambdas(&self.lambda)?;
                    RunConfig {
                        lambda: self.lambda,
                        ..base
                    }
                }
            }
            Command::Search => {
                let family = self.family.unwrap_or_else(|| FAMILIES[0].to_string());
                if !FAMILIES.contains(&family.as_str()) {
                    bail!(
                        "unknown family `{family}`; known families: {}",
                        FAMILIES.join(", ")
                    );
                }
                let objective =
                    Objective::parse(self.objective.as_deref().unwrap_or("randoff/fb"))?;
                let knots = if family == FAMILIES[0] {
                    let k = self.knots.unwrap_or(4);
                    if k == 0 {
                        bail!("--knots must be at least 1");
                    }
                    Some(k)
                } else {
                    None
                };
                let g = if family == "hard-instance-delta" {
                    let g = self.g.unwrap_or_else(|| "atom:0".into());
                    if g != "atom:0" && g != "reverse" {
                        bail!("the hard-instance family takes --G atom:0 or --G reverse");
                    }
                    Some(g)
                } else {
                    None
                };
                let budget = self.budget.unwrap_or(1000);
                if budget == 0 {
                    bail!("--budget must be at least 1");
                }
                RunConfig {
                    family: Some(family),
                    knots,
                    objective: Some(objective.as_str().to_string()),
                    g,
                    budget: Some(budget),
                    seed: Some(self.seed.unwrap_or(0)),
                    tol: Some(tol),
                    ..base
                }
            }
        };
        Ok(cfg)
    }
}

type Source = (Option<String>, Option<String>, Option<PathBuf>);

fn instance_source(
    f: Option<String>,
    g: Option<String>,
    instance: Option<PathBuf>,
    required: bool,
) -> Result<Source> {
    match (f, g, instance) {
        (None, None, Some(p)) => Ok((None, None, Some(p))),
        (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => bail!("use either --F/--G or --instance"),
        (Some(f), Some(g), None) => Ok((Some(f), Some(g), None)),
        (None, None, None) if !required => Ok((None, None, None)),
        _ => bail!("give both --F and --G, or --instance"),
    }
}
