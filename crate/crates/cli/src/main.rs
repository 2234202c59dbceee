//! `tvprox`: run scenarios, check step parameters, dump scenario files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tvprox_core::io::{dump_scenario, load_scenario};
use tvprox_core::metrics::{certify_pn_enwe, trailing_window};
use tvprox_core::precondition::{
    check_bounds, suggest_params, PreconditionerDiagnostics, PreconditionerOps, SolverParams,
};
use tvprox_core::scenarios::{self, SCENARIO_NAMES};
use tvprox_core::solver::{run, run_best_response, ClosedFormBr, ExplicitParams, ParamSource, RunOptions};
use tvprox_core::{Error, GameSpec, RunTrace};

const EXIT_FAILURE: u8 = 1;
const EXIT_UNKNOWN_SCENARIO: u8 = 2;
const EXIT_BAD_CONFIG: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

/// Window of trailing time indices used to certify the final iterate.
const CERT_WINDOW: usize = 50;
const CERT_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "tvprox", version, about = "Equilibrium seeking on time-varying network games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dynamics {
    Gnwe,
    #[value(alias = "best_response")]
    BestResponse,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Built-in scenario name (see `list-scenarios`) or path to a scenario JSON file
    #[arg(long)]
    scenario: String,
    /// Seed for the scenario's random network (and boxes, where drawn)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct ParamArgs {
    /// `auto` or a path to a JSON file with `delta`, `beta`, `gamma`
    #[arg(long, default_value = "auto")]
    params: String,
    /// Slack used by automatic parameter selection, in (0, 1)
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate a scenario and write a CSV trace
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "gnwe")]
        dynamics: Dynamics,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-12)]
        residual_tol: f64,
        /// Abort when the step parameters violate a bound
        #[arg(long)]
        strict: bool,
        /// Trace file; its directory is replaced by TVPROX_OUT_DIR when set
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Print the four parameter inequalities at one time index
    CheckParams {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
    /// Write a built-in scenario as JSON
    DumpScenario {
        #[arg(long)]
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List built-in scenario names
    ListScenarios,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownScenario(_) => EXIT_UNKNOWN_SCENARIO,
            Error::Divergence { .. } => EXIT_DIVERGED,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

fn config_error(path: &Path, e: Error) -> Failure {
    Failure::new(EXIT_BAD_CONFIG, format!("{}: {e}", path.display()))
}

fn out_path(out: &Path) -> PathBuf {
    match std::env::var_os("TVPROX_OUT_DIR") {
        Some(dir) => Path::new(&dir).join(out.file_name().unwrap_or(out.as_os_str())),
        None => out.to_path_buf(),
    }
}

/// Built-in names first, then files.
fn load(args: &ScenarioArgs) -> Result<(GameSpec, Vec<f64>), Failure> {
    match scenarios::resolve(&args.scenario, args.seed) {
        Ok(s) => Ok((s.game, s.x0)),
        Err(Error::UnknownScenario(name)) => {
            let path = Path::new(&args.scenario);
            if !path.exists() {
                return Err(Failure::new(
                    EXIT_UNKNOWN_SCENARIO,
                    format!("unknown scenario `{name}` (and no such file)"),
                ));
            }
            let (game, x0) = load_scenario(path).map_err(|e| config_error(path, e))?;
            let x0 = x0.unwrap_or_else(|| game.project_boxes(&vec![0.0; game.size()]));
            Ok((game, x0))
        }
        Err(e) => Err(e.into()),
    }
}

fn param_source(args: &ParamArgs) -> Result<ParamSource, Failure> {
    if args.params == "auto" {
        return Ok(ParamSource::Auto { margin: args.margin });
    }
    let path = Path::new(&args.params);
    let text = fs::read_to_string(path).map_err(|e| config_error(path, e.into()))?;
    let p: ExplicitParams = serde_json::from_str(&text).map_err(|e| config_error(path, e.into()))?;
    Ok(ParamSource::Explicit(p))
}

fn summary(game: &GameSpec, trace: &RunTrace) -> Result<serde_json::Value, Failure> {
    let last = trace.last().ok_or_else(|| Failure::new(EXIT_FAILURE, "empty trace"))?;
    let s = &trace.final_state;
    let certified = trace.diverged_at.is_none()
        && certify_pn_enwe(&s.x, &s.sigma, game, &trailing_window(s.k, CERT_WINDOW), CERT_TOL)?.certified;
    Ok(json!({
        "final_residual": last.fp_residual,
        "final_violation": last.max_violation,
        "iters_used": trace.iters_used,
        "converged": trace.converged,
        "certified": certified,
        "final_x": s.x,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    scenario: &ScenarioArgs,
    params: &ParamArgs,
    dynamics: Dynamics,
    iters: usize,
    residual_tol: f64,
    strict: bool,
    out: &Path,
) -> Result<(), Failure> {
    let (game, x0) = load(scenario)?;
    let trace = match dynamics {
        Dynamics::Gnwe => {
            let opts = RunOptions {
                max_iters: iters,
                residual_tol,
                params: param_source(params)?,
                strict,
                ..Default::default()
            };
            run(&game, &x0, None, &opts)?
        }
        Dynamics::BestResponse => {
            let br = ClosedFormBr::for_game(&game)?;
            run_best_response(&game, &br, &x0, iters, residual_tol)?
        }
    };
    let path = out_path(out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    }
    let file = File::create(&path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    trace
        .write_csv(BufWriter::new(file))
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    if let Some(k) = trace.diverged_at {
        return Err(Failure::new(EXIT_DIVERGED, format!("iteration diverged at k = {k}")));
    }
    println!("{}", summary(&game, &trace)?);
    Ok(())
}

fn cmd_check_params(scenario: &ScenarioArgs, params: &ParamArgs, k: usize) -> Result<bool, Failure> {
    let (game, _) = load(scenario)?;
    let snap = game.snapshot(k)?;
    let p = match param_source(params)? {
        ParamSource::Auto { margin } => suggest_params(&game, &snap, margin)?,
        ParamSource::Explicit(e) => {
            let g = e.gamma_schedule.as_ref().map_or(e.gamma, |s| s.value(k));
            SolverParams::new(&snap, e.delta, e.beta, g)?
        }
    };
    let report = check_bounds(&game, &snap, &p)?;
    println!("{report}");
    println!(
        "  delta = {:.16e} .. {:.16e}, beta = {:.16e}, gamma = {:.16e}",
        p.delta.iter().copied().fold(f64::INFINITY, f64::min),
        p.delta.iter().copied().fold(0.0, f64::max),
        p.beta,
        p.gamma
    );
    let ops = PreconditionerOps::new(&snap, &p, game.dim);
    let d = PreconditionerDiagnostics::compute(&ops)?;
    println!(
        "  m_k = {:.6e}, M_k = {:.6e}, L_k = {:.6e}, rho = {:.6e}, q_m = {:.6e}, gamma*|K| = {:.6e}{}",
        d.m_k,
        d.big_m_k,
        d.l_k,
        d.rho,
        d.q_m,
        p.gamma * d.k_norm,
        if d.skew_dominates { "  (L_k > m_k)" } else { "" }
    );
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            params,
            dynamics,
            iters,
            residual_tol,
            strict,
            out,
        } => cmd_run(scenario, params, *dynamics, *iters, *residual_tol, *strict, out),
        Command::CheckParams { scenario, params, k } => match cmd_check_params(scenario, params, *k) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_FAILURE),
            Err(f) => Err(f),
        },
        Command::DumpScenario { name, seed, out } => scenarios::resolve(name, *seed)
            .and_then(|s| dump_scenario(&out_path(out), &s.game, Some(&s.x0)))
            .map_err(Failure::from),
        Command::ListScenarios => {
            for n in SCENARIO_NAMES {
                println!("{n}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tvprox: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
