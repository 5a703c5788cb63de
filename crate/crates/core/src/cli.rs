//! Command-line front end.
//!
//! Exit codes: 0 success, 1 argument error, 2 invalid game definition,
//! 3 I/O or numerical failure.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::circuit::{ControlSpec, EntanglerAngle};
use crate::equilibrium::{
    classify, find_ne_bayesian, find_ne_bayesian_circuit, find_ne_two_player, verify_ne,
    EquilibriumRecord, Evaluation, DEFAULT_EPS_TIE,
};
use crate::error::Error;
use crate::exec::{with_threads, Execution};
use crate::game::{builtin_da, builtin_pd, GameDefinition, GameInstance};
use crate::grid::{enumerate, GridSteps};
use crate::io::{
    figure_csv, load_game, load_result, sweep_csv, to_json, write_output, ResultFile, SolveResult,
};
use crate::sweep::{run_sweep, summarize_regions, SweepEvaluation, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "QGAME_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qgame",
    version,
    about = "Nash equilibria of EWL-quantized Bayesian prisoner's dilemma games"
)]
struct Cli {
    /// Worker threads (overrides QGAME_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Solve one game at a single entanglement value.
    Solve(SolveArgs),
    /// Sweep the (p, gamma) plane, or gamma alone for two-player games.
    Sweep(SweepArgs),
    /// Summarize the equilibrium regions of a result file.
    Classify(InputArgs),
    /// Write the data behind the payoff figures.
    EmitFigure(FigureArgs),
    /// Re-check every equilibrium in a result file by brute-force deviation.
    Verify(InputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BuiltinGame {
    Pd,
    Da,
    Bayesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircuitMode {
    Mixture,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Pd,
    Da,
    Bayesian,
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Built-in game.
    #[arg(long, value_enum, conflicts_with = "config")]
    game: Option<BuiltinGame>,
    /// Game definition file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Theta step in radians; must divide pi.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    d_theta: f64,
    /// Phi step in radians; must divide 2 pi.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    d_phi: f64,
    /// Alpha step in radians; must divide 2 pi.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    d_alpha: f64,
    /// Absolute tie tolerance for best responses.
    #[arg(long, default_value_t = DEFAULT_EPS_TIE)]
    eps_tie: f64,
}

#[derive(Debug, Args)]
struct CircuitArgs {
    /// Bayesian payoff evaluation.
    #[arg(long, value_enum, default_value = "mixture")]
    circuit: CircuitMode,
    /// Control rotation theta (full circuit); defaults to 2 asin(sqrt(p)).
    #[arg(long)]
    theta_q: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    phi_q: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_q: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the extension of --out, else JSON for
    /// solve and CSV for sweep.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    gamma: f64,
    /// Probability of facing type B1 (Bayesian games).
    #[arg(long)]
    p: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    circuit: CircuitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 0.05)]
    p_step: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_step: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Skip the brute-force re-check of every equilibrium.
    #[arg(long)]
    no_verify: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Result file written by `solve` or `sweep` in JSON format.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[arg(long, value_enum)]
    fig: Figure,
    #[arg(long, default_value_t = 0.05)]
    p_step: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Worker cap; `Some(1)` runs sequentially.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Solve {
        game: Box<GameInstance>,
        gamma: EntanglerAngle,
        steps: GridSteps,
        eps_tie: f64,
        evaluation: Evaluation,
        out: Option<PathBuf>,
        format: OutputFormat,
    },
    Sweep {
        spec: Box<SweepSpec>,
        out: Option<PathBuf>,
        format: OutputFormat,
    },
    Classify {
        input: PathBuf,
        out: Option<PathBuf>,
    },
    EmitFigure {
        fig: Figure,
        spec: Box<SweepSpec>,
        out: Option<PathBuf>,
    },
    Verify {
        input: PathBuf,
        out: Option<PathBuf>,
    },
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn arg_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_ARGS,
        message: message.into(),
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::GameConfig { .. } => EXIT_CONFIG,
            Error::OutOfRange { .. } | Error::GridStep { .. } => EXIT_ARGS,
            _ => EXIT_FAILURE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn resolve_game(args: &GameArgs) -> Result<GameDefinition, CliError> {
    match (&args.game, &args.config) {
        (Some(BuiltinGame::Pd), None) => Ok(GameDefinition::TwoPlayer(builtin_pd())),
        (Some(BuiltinGame::Da), None) => Ok(GameDefinition::TwoPlayer(builtin_da())),
        (Some(BuiltinGame::Bayesian), None) | (None, None) => {
            Ok(GameDefinition::builtin_bayesian())
        }
        (None, Some(path)) => load_game(path).map_err(|e| CliError {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }),
        (Some(_), Some(_)) => Err(arg_error("--game and --config are mutually exclusive")),
    }
}

fn check_probability(p: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(arg_error(format!("--p {p} is outside [0, 1]")))
    }
}

fn grid_steps(args: &GridArgs) -> Result<GridSteps, CliError> {
    let steps = GridSteps::new(args.d_theta, args.d_phi, args.d_alpha);
    steps.divisions().map_err(|e| arg_error(e.to_string()))?;
    if args.eps_tie.is_nan() || args.eps_tie < 0.0 {
        return Err(arg_error("--eps-tie must be non-negative"));
    }
    Ok(steps)
}

fn infer_format(output: &OutputArgs, default: OutputFormat) -> OutputFormat {
    output.format.unwrap_or_else(|| {
        match output
            .out
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
        {
            Some("json") => OutputFormat::Json,
            Some("csv") => OutputFormat::Csv,
            _ => default,
        }
    })
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

/// Parses and validates command-line arguments.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_ARGS,
        };
        CliError {
            code,
            message: e.render().to_string(),
        }
    })?;
    let threads = cli.threads.or_else(threads_from_env);
    if threads == Some(0) {
        return Err(arg_error("thread count must be positive"));
    }

    let command = match cli.command {
        CliCommand::Solve(args) => {
            let def = resolve_game(&args.game)?;
            let gamma = EntanglerAngle::new(args.gamma).map_err(|e| arg_error(e.to_string()))?;
            let steps = grid_steps(&args.grid)?;
            let p = args.p.map(check_probability).transpose()?;
            if def.is_bayesian() && p.is_none() && args.circuit.theta_q.is_none() {
                return Err(arg_error(
                    "Bayesian solve needs --p (or --theta-q with --circuit full)",
                ));
            }
            let evaluation = match args.circuit.circuit {
                CircuitMode::Mixture => Evaluation::Mixture,
                CircuitMode::Full => {
                    let theta_q = match args.circuit.theta_q {
                        Some(t) => t,
                        None => ControlSpec::from_probability(p.unwrap_or(0.0))?.theta_q,
                    };
                    let control =
                        ControlSpec::new(theta_q, args.circuit.phi_q, args.circuit.alpha_q)
                            .map_err(|e| arg_error(e.to_string()))?;
                    Evaluation::FullCircuit { control }
                }
            };
            let p = match evaluation {
                Evaluation::FullCircuit { control } if def.is_bayesian() => {
                    Some(control.probability())
                }
                _ => p,
            };
            Command::Solve {
                game: Box::new(def.instance(p)?),
                gamma,
                steps,
                eps_tie: args.grid.eps_tie,
                evaluation,
                format: infer_format(&args.output, OutputFormat::Json),
                out: args.output.out,
            }
        }
        CliCommand::Sweep(args) => {
            let def = resolve_game(&args.game)?;
            for (name, step) in [("--p-step", args.p_step), ("--gamma-step", args.gamma_step)] {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(arg_error(format!("{name} must be positive")));
                }
            }
            let mut spec = if def.is_bayesian() {
                SweepSpec::bayesian(def, args.p_step, args.gamma_step)?
            } else {
                SweepSpec::two_player(def, args.gamma_step)?
            };
            spec.grid_steps = grid_steps(&args.grid)?;
            spec.eps_tie = args.grid.eps_tie;
            spec.verify = !args.no_verify;
            if args.circuit.circuit == CircuitMode::Full {
                if args.circuit.theta_q.is_some() {
                    return Err(arg_error("--theta-q is set per cell from p in a sweep"));
                }
                spec.evaluation = SweepEvaluation::FullCircuit {
                    phi_q: args.circuit.phi_q,
                    alpha_q: args.circuit.alpha_q,
                };
                ControlSpec::new(0.0, args.circuit.phi_q, args.circuit.alpha_q)
                    .map_err(|e| arg_error(e.to_string()))?;
            }
            Command::Sweep {
                spec: Box::new(spec),
                format: infer_format(&args.output, OutputFormat::Csv),
                out: args.output.out,
            }
        }
        CliCommand::Classify(args) => Command::Classify {
            input: args.input,
            out: args.out,
        },
        CliCommand::Verify(args) => Command::Verify {
            input: args.input,
            out: args.out,
        },
        CliCommand::EmitFigure(args) => {
            let spec = match args.fig {
                Figure::Pd => {
                    SweepSpec::two_player(GameDefinition::TwoPlayer(builtin_pd()), args.gamma_step)?
                }
                Figure::Da => {
                    SweepSpec::two_player(GameDefinition::TwoPlayer(builtin_da()), args.gamma_step)?
                }
                Figure::Bayesian => SweepSpec::bayesian(
                    GameDefinition::builtin_bayesian(),
                    args.p_step,
                    args.gamma_step,
                )?,
            };
            Command::EmitFigure {
                fig: args.fig,
                spec: Box::new(spec),
                out: args.out,
            }
        }
    };
    Ok(RunConfig { command, threads })
}

fn execution(threads: Option<usize>) -> Execution {
    match threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    }
}

/// Runs a validated command.
pub fn run(config: RunConfig) -> Result<(), CliError> {
    let exec = execution(config.threads);
    with_threads(config.threads, || run_command(config.command, exec))
}

fn run_command(command: Command, exec: Execution) -> Result<(), CliError> {
    match command {
        Command::Solve {
            game,
            gamma,
            steps,
            eps_tie,
            evaluation,
            out,
            format,
        } => {
            let set = enumerate(steps)?;
            let records = match (game.as_ref(), &evaluation) {
                (GameInstance::TwoPlayer(g), _) => {
                    find_ne_two_player(g, gamma, &set, eps_tie, exec)?
                }
                (GameInstance::Bayesian(g), Evaluation::Mixture) => {
                    find_ne_bayesian(g, gamma, &set, eps_tie, exec)?
                }
                (GameInstance::Bayesian(g), Evaluation::FullCircuit { control }) => {
                    find_ne_bayesian_circuit(g, control, gamma, &set, eps_tie, exec)?
                }
            };
            let p = match game.as_ref() {
                GameInstance::Bayesian(b) => Some(b.p()),
                GameInstance::TwoPlayer(_) => None,
            };
            let result = SolveResult {
                game: (*game).into(),
                p,
                gamma,
                grid_steps: steps,
                eps_tie,
                evaluation,
                classes: classify(&records, &set),
            };
            let text = match format {
                OutputFormat::Json => to_json(&ResultFile::Solve(result))?,
                OutputFormat::Csv => solve_csv(&result),
            };
            write_output(out.as_deref(), &text)?;
        }
        Command::Sweep { spec, out, format } => {
            let result = run_sweep(&spec, exec)?;
            if let Some(t) = result.elapsed {
                eprintln!(
                    "sweep: {} cells in {:.3} s",
                    result.cells.len(),
                    t.as_secs_f64()
                );
            }
            let text = match format {
                OutputFormat::Json => to_json(&ResultFile::Sweep(result))?,
                OutputFormat::Csv => sweep_csv(&result),
            };
            write_output(out.as_deref(), &text)?;
        }
        Command::EmitFigure { fig, spec, out } => {
            let result = run_sweep(&spec, exec)?;
            let text = match fig {
                Figure::Pd | Figure::Da => figure_csv(&result),
                Figure::Bayesian => sweep_csv(&result),
            };
            write_output(out.as_deref(), &text)?;
        }
        Command::Classify { input, out } => {
            let text = match load_result(&input)? {
                ResultFile::Sweep(result) => to_json(&summarize_regions(&result))?,
                ResultFile::Solve(mut result) => {
                    let set = enumerate(result.grid_steps)?;
                    let records: Vec<EquilibriumRecord> = result
                        .classes
                        .iter()
                        .flat_map(|c| c.members.clone())
                        .collect();
                    result.classes = classify(&records, &set);
                    to_json(&ResultFile::Solve(result))?
                }
            };
            write_output(out.as_deref(), &text)?;
        }
        Command::Verify { input, out } => {
            let (checked, failures) = verify_file(&load_result(&input)?)?;
            let summary = format!("verified {checked} equilibria, {} failed\n", failures.len());
            let mut text = summary.clone();
            for f in &failures {
                text.push_str(f);
                text.push('\n');
            }
            write_output(out.as_deref(), &text)?;
            if !failures.is_empty() {
                return Err(CliError {
                    code: EXIT_FAILURE,
                    message: summary.trim_end().to_string(),
                });
            }
        }
    }
    Ok(())
}

fn solve_csv(result: &SolveResult) -> String {
    use crate::io::fmt_sig9;
    let n = result
        .classes
        .first()
        .map_or(if result.game.is_bayesian() { 3 } else { 2 }, |c| {
            c.theta_profile.len()
        });
    let names: &[&str] = if n == 3 {
        &["A", "B1", "B2"]
    } else {
        &["A", "B"]
    };
    let mut out = String::from("p,gamma,class_id");
    for prefix in ["theta", "payoff"] {
        for name in names {
            out.push_str(&format!(",{prefix}_{name}"));
        }
    }
    out.push_str(",n_profiles,operator_label\n");
    let p = result.p.map(fmt_sig9).unwrap_or_default();
    for c in &result.classes {
        let nums: Vec<String> = c
            .theta_profile
            .iter()
            .chain(&c.payoffs)
            .map(|&v| fmt_sig9(v))
            .collect();
        out.push_str(&format!(
            "{p},{},{},{},{},{}\n",
            fmt_sig9(result.gamma.value()),
            c.class_id(),
            nums.join(","),
            c.n_profiles(),
            c.operator_label.clone().unwrap_or_default()
        ));
    }
    out
}

/// Re-checks every stored equilibrium; returns the count checked and a
/// description of each failure.
pub fn verify_file(file: &ResultFile) -> Result<(usize, Vec<String>), Error> {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut check = |game: &GameInstance,
                     g: EntanglerAngle,
                     steps: GridSteps,
                     eps: f64,
                     eval: &Evaluation,
                     records: &[EquilibriumRecord]|
     -> Result<(), Error> {
        let set = enumerate(steps)?;
        for r in records {
            checked += 1;
            if !verify_ne(r, game, g, &set, eps, eval)? {
                failures.push(format!("gamma={} profile={:?}", g.value(), r.profile.0));
            }
        }
        Ok(())
    };
    match file {
        ResultFile::Solve(s) => {
            let game = s.game.instance(s.p)?;
            let records: Vec<_> = s.classes.iter().flat_map(|c| c.members.clone()).collect();
            check(
                &game,
                s.gamma,
                s.grid_steps,
                s.eps_tie,
                &s.evaluation,
                &records,
            )?;
        }
        ResultFile::Sweep(r) => {
            for cell in &r.cells {
                let game = r.spec.game.instance(cell.p)?;
                let g = EntanglerAngle::new(cell.gamma)?;
                let eval = match (r.spec.evaluation, cell.p) {
                    (SweepEvaluation::FullCircuit { phi_q, alpha_q }, Some(p)) => {
                        let theta_q = ControlSpec::from_probability(p)?.theta_q;
                        Evaluation::FullCircuit {
                            control: ControlSpec::new(theta_q, phi_q, alpha_q)?,
                        }
                    }
                    _ => Evaluation::Mixture,
                };
                let records: Vec<_> = cell
                    .classes
                    .iter()
                    .flat_map(|c| c.members.clone())
                    .collect();
                check(&game, g, r.spec.grid_steps, r.spec.eps_tie, &eval, &records)?;
            }
        }
    }
    Ok((checked, failures))
}

/// Entry point shared by the binary: parse, run, report, return exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(run);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("qgame: {}", e.message.trim_end());
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        parse_args(std::iter::once("qgame").chain(args.iter().copied()))
    }

    #[test]
    fn solve_pd_config() {
        let cfg = parse(&["solve", "--game", "pd", "--gamma", "0.5"]).unwrap();
        let Command::Solve {
            game,
            gamma,
            steps,
            eps_tie,
            evaluation,
            ..
        } = cfg.command
        else {
            panic!("expected solve");
        };
        assert_eq!(*game, GameInstance::TwoPlayer(builtin_pd()));
        assert_eq!(gamma.value(), 0.5);
        assert_eq!(steps, GridSteps::coarse());
        assert_eq!(eps_tie, DEFAULT_EPS_TIE);
        assert_eq!(evaluation, Evaluation::Mixture);
    }

    #[test]
    fn sweep_defaults() {
        let cfg = parse(&[
            "sweep",
            "--p-step",
            "0.05",
            "--gamma-step",
            "0.05",
            "--out",
            "phase.csv",
        ])
        .unwrap();
        let Command::Sweep { spec, format, out } = cfg.command else {
            panic!("expected sweep");
        };
        assert_eq!(format, OutputFormat::Csv);
        assert_eq!(out.unwrap(), PathBuf::from("phase.csv"));
        assert!(spec.game.is_bayesian());
        assert_eq!(spec.p_values.len(), 21);
        assert_eq!(spec.gamma_values.len(), 32);
    }

    #[test]
    fn bad_probability_is_an_argument_error() {
        let err = parse(&[
            "solve", "--game", "bayesian", "--p", "1.2", "--gamma", "0.1",
        ])
        .unwrap_err();
        assert_eq!(err.code, EXIT_ARGS);
        let err = parse(&["solve", "--game", "pd", "--gamma", "2.0"]).unwrap_err();
        assert_eq!(err.code, EXIT_ARGS);
        let err = parse(&["solve", "--bogus"]).unwrap_err();
        assert_eq!(err.code, EXIT_ARGS);
        let err = parse(&[
            "solve",
            "--game",
            "pd",
            "--gamma",
            "0.1",
            "--d-theta",
            "1.0",
        ])
        .unwrap_err();
        assert_eq!(err.code, EXIT_ARGS);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let err = parse(&[
            "solve",
            "--config",
            "/nonexistent/game.json",
            "--gamma",
            "0.1",
        ])
        .unwrap_err();
        assert_eq!(err.code, EXIT_CONFIG);
    }

    #[test]
    fn full_circuit_uses_control_probability() {
        let cfg = parse(&[
            "solve",
            "--game",
            "bayesian",
            "--gamma",
            "0.3",
            "--circuit",
            "full",
            "--theta-q",
            "1.5707963267948966",
        ])
        .unwrap();
        let Command::Solve {
            game, evaluation, ..
        } = cfg.command
        else {
            panic!("expected solve");
        };
        let GameInstance::Bayesian(b) = *game else {
            panic!("expected Bayesian game");
        };
        assert!((b.p() - 0.5).abs() < 1e-12);
        assert!(matches!(evaluation, Evaluation::FullCircuit { .. }));
    }
}
