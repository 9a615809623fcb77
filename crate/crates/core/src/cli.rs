//! Command-line front end.
//!
//! Every command writes a report bundle under `--out` and maps the outcome to
//! an exit status: 0 when all checks pass, 2 when a check fails and 1 on usage
//! or configuration errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{
    ensemble_flow, joint_flow, linear_limit_flow, linspace, mc_value_flow, nstep_value_flow, sample_cumulants,
    sample_weights, stream_rng, td_lambda_value_flow, td_operator, td_value_flow, EnsembleState, LinearFlowSpec,
    Trajectory,
};
use crate::error::{config, Result};
use crate::experiments::{
    apply_overrides, parse_overrides, run_bayes_optimality, run_chain_transfer, run_four_rooms_features,
    run_limit_checks, run_multi_task, run_two_state, BayesConfig, ChainTransferConfig, FourRoomsConfig,
    LimitChecksConfig, MultiTaskConfig, ReportBundle, TwoStateConfig,
};
use crate::gridworld::build_four_rooms;
use crate::mdp::{build_chain_mdp, build_two_state_mdp, induce, MarkovChain, Policy};
use crate::svg::{emit_svg, SvgKind};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "repdyn",
    version,
    about = "Representation dynamics of TD learning on tabular MDPs"
)]
struct Cli {
    /// Master seed; falls back to REPDYN_SEED, then to the experiment default.
    #[arg(long, global = true, env = "REPDYN_SEED", value_parser = parse_count)]
    seed: Option<u64>,

    /// Output directory for the report bundle.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

/// Experiment or raw flow to run.
#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Two-state value-flow illustration.
    TwoState,
    /// Four-rooms representation learning with eigen-projections.
    FourRooms,
    /// Feature transfer along the policy-iteration path of the chain.
    ChainTransfer,
    /// Finite-head convergence and infinite-head statistics.
    LimitChecks,
    /// Optimality of the resolvent singular basis.
    BayesOpt,
    /// Heads split across several policies or discounts.
    MultiTask,
    /// A single value or representation flow.
    Flow(FlowArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TwoState => "two-state",
            Command::FourRooms => "four-rooms",
            Command::ChainTransfer => "chain-transfer",
            Command::LimitChecks => "limit-checks",
            Command::BayesOpt => "bayes-opt",
            Command::MultiTask => "multi-task",
            Command::Flow(_) => "flow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Td,
    Mc,
    Nstep,
    Tdlambda,
    Joint,
    Ensemble,
    Rc,
    Limit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MdpKind {
    Chain,
    FourRooms,
    TwoState,
}

#[derive(Clone, Debug, Serialize, Args)]
pub struct FlowArgs {
    #[arg(long, value_enum)]
    pub flow: FlowKind,
    #[arg(long, value_enum, default_value = "chain")]
    pub mdp: MdpKind,
    #[arg(long, default_value = "0.9", value_parser = parse_real)]
    pub gamma: f64,
    #[arg(long, default_value = "10", value_parser = parse_real)]
    pub t_max: f64,
    /// Number of output times, including t = 0.
    #[arg(long, default_value = "101", value_parser = parse_count)]
    pub n_times: u64,
    /// Bootstrap horizon of the n-step flow.
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub n: u64,
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub lambda: f64,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub alpha: f64,
    #[arg(long, default_value = "0", value_parser = parse_real)]
    pub beta: f64,
    #[arg(long, default_value = "4", value_parser = parse_count)]
    pub k: u64,
    #[arg(long, default_value = "100", value_parser = parse_count)]
    pub m: u64,
    #[arg(long, default_value = "1e-3", value_parser = parse_real)]
    pub step: f64,
    /// Length of the chain MDP.
    #[arg(long, default_value = "30", value_parser = parse_count)]
    pub n_states: u64,
}

/// Resolved invocation.
#[derive(Clone, Debug)]
pub struct CliConfig {
    pub command: Command,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub overrides: Vec<String>,
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{s:?} is not a finite number"))
}

/// Non-negative integer, also written as an integral float such as `1e4`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    match parse_real(s) {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("{s:?} is not a non-negative integer")),
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = CliConfig {
        out_dir: cli.out.unwrap_or_else(|| PathBuf::from("out").join(cli.command.name())),
        command: cli.command,
        seed: cli.seed,
        overrides: cli.overrides,
    };
    match run(&cfg) {
        Ok(bundle) => {
            println!("{}", bundle.summary());
            println!("wrote {}", cfg.out_dir.display());
            if bundle.all_passed() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a resolved invocation and writes its bundle to `out_dir`.
pub fn run(cfg: &CliConfig) -> Result<ReportBundle> {
    let mut overrides = Vec::new();
    if let Some(seed) = cfg.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    overrides.extend(parse_overrides(&cfg.overrides)?);
    let bundle = match &cfg.command {
        Command::TwoState => run_two_state(&apply_overrides(&TwoStateConfig::default(), &overrides)?)?,
        Command::FourRooms => run_four_rooms_features(&apply_overrides(&FourRoomsConfig::default(), &overrides)?)?,
        Command::ChainTransfer => run_chain_transfer(&apply_overrides(&ChainTransferConfig::default(), &overrides)?)?,
        Command::LimitChecks => run_limit_checks(&apply_overrides(&LimitChecksConfig::default(), &overrides)?)?,
        Command::BayesOpt => run_bayes_optimality(&apply_overrides(&BayesConfig::default(), &overrides)?)?,
        Command::MultiTask => run_multi_task(&apply_overrides(&MultiTaskConfig::default(), &overrides)?)?,
        Command::Flow(args) => {
            if !cfg.overrides.is_empty() {
                return Err(config("flow takes its parameters as flags, not --set overrides"));
            }
            run_flow(args, cfg.seed.unwrap_or(0))?
        }
    };
    bundle.write(&cfg.out_dir)?;
    Ok(bundle)
}

fn flow_chain(args: &FlowArgs) -> Result<MarkovChain> {
    let (mdp, policy) = match args.mdp {
        MdpKind::Chain => {
            let n = args.n_states as usize;
            (build_chain_mdp(n, 0.01, 2.0, 1.0)?, Policy::uniform(n, 2))
        }
        MdpKind::FourRooms => build_four_rooms(),
        MdpKind::TwoState => build_two_state_mdp(0.9, 0.1, [1.0, 0.0])?,
    };
    induce(&mdp, &policy, args.gamma)
}

#[derive(Serialize)]
struct FlowRecord<'a> {
    #[serde(flatten)]
    args: &'a FlowArgs,
    seed: u64,
}

/// Integrates one flow from a seeded initial condition.
///
/// Value flows start from `V0 = 0`. Representation flows start from a
/// Gaussian `Φ0` with entry variance `1/|X|`; ensemble heads have variance
/// `1/M` and random cumulants use `Σ = I`.
pub fn run_flow(args: &FlowArgs, seed: u64) -> Result<ReportBundle> {
    let chain = flow_chain(args)?;
    let n = chain.n_states();
    let times = linspace(args.t_max, args.n_times as usize);
    let (k, m) = (args.k as usize, args.m as usize);
    let phi0 = || {
        let mut rng = stream_rng(seed, 2);
        crate::experiments::gaussian_matrix(&mut rng, n, k, 1.0 / (n as f64).sqrt())
    };
    let v0 = DVector::zeros(n);
    let tr: Trajectory = match args.flow {
        FlowKind::Td => td_value_flow(&chain, &v0, &times)?,
        FlowKind::Mc => mc_value_flow(&chain, &v0, &times)?,
        FlowKind::Nstep => nstep_value_flow(&chain, args.n as usize, &v0, &times)?,
        FlowKind::Tdlambda => td_lambda_value_flow(&chain, args.lambda, &v0, &times)?,
        FlowKind::Joint => {
            let w0 = sample_weights(1, k, 1.0, seed)?.column(0).into_owned();
            joint_flow(&chain, &phi0(), &w0, args.alpha, args.beta, &times, args.step)?
        }
        FlowKind::Ensemble | FlowKind::Rc => {
            let w = sample_weights(m, k, 1.0 / m as f64, seed)?;
            let cumulants = match args.flow {
                FlowKind::Rc => Some(sample_cumulants(m, &DMatrix::identity(n, n), seed)?),
                _ => None,
            };
            let state = EnsembleState::new(phi0(), w, cumulants)?;
            ensemble_flow(&chain, &state, args.alpha, args.beta, &times, args.step)?
        }
        FlowKind::Limit => {
            let spec = LinearFlowSpec::new(td_operator(&chain), DMatrix::zeros(n, k), phi0())?;
            linear_limit_flow(&spec, &times)?
        }
    };
    let mut bundle = ReportBundle::new("flow", &FlowRecord { args, seed })?;
    let value_flow = matches!(
        args.flow,
        FlowKind::Td | FlowKind::Mc | FlowKind::Nstep | FlowKind::Tdlambda
    );
    if value_flow {
        bundle.add_table("trajectory", tr.to_wide_csv()?);
        let curves = DMatrix::from_fn(tr.len(), n + 1, |i, j| {
            if j == 0 {
                tr.times[i]
            } else {
                tr.states[i][(j - 1, 0)]
            }
        });
        bundle.add_figure("trajectory", emit_svg(&curves, SvgKind::Line, "value flow")?);
    } else {
        bundle.add_table("trajectory", tr.to_long_csv());
        if let Some(w) = tr.weights_long_csv() {
            bundle.add_table("weights", w);
        }
        let norms = DMatrix::from_fn(
            tr.len(),
            2,
            |i, j| if j == 0 { tr.times[i] } else { tr.states[i].norm() },
        );
        bundle.add_figure(
            "phi_norm",
            emit_svg(&norms, SvgKind::Line, "Frobenius norm of the representation")?,
        );
    }
    Ok(bundle)
}
