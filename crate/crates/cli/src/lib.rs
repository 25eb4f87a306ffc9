//! Command-line front end for the `tsallis-core` solvers and experiments.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tsallis_core::experiments::{theorem6_experiment_with, BANDIT8_REWARDS};
use tsallis_core::{
    bandit_sweep, build_gridworld, theorem1_experiment, tsallis_policy_iteration,
    tsallis_value_iteration, EntropicIndex, Error, GridWorldSpec, SolverConfig, TabularMdp,
};

pub const FIG3_DEFAULT: &str = "fig3-default";
pub const BANDIT8: &str = "bandit8";
pub const ONE_STATE: &str = "one-state";

#[derive(Debug, Parser)]
#[command(name = "tsallis", version, about = "Solve and analyse Tsallis-entropy regularized MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tsallis value iteration on an MDP.
    SolveTvi(SolveArgs),
    /// Tsallis policy iteration on an MDP.
    SolveTpi(SolveArgs),
    /// Optimal bandit policies over a (q, alpha) grid.
    Bandit(BanditArgs),
    /// Return of the Tsallis-optimal policy against the standard optimum.
    GridworldBounds(GridArgs),
    /// q-max([c, 0]) and its bounds over a range of c.
    QmaxBounds(QmaxArgs),
    /// Check an MDP file against the schema and its invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl ToleranceArgs {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let mut config = SolverConfig::default();
        if let Some(tol) = self.tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::usage(format!("--tolerance must be > 0, got {tol}")));
            }
            config.tolerance = tol;
            config.evaluation_tolerance = tol;
        }
        if let Some(n) = self.max_iterations {
            if n == 0 {
                return Err(CliError::usage("--max-iterations must be positive"));
            }
            config.max_iterations = n;
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// MDP file or built-in scenario (fig3-default, bandit8, one-state).
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BanditArgs {
    /// Built-in `bandit8` or a single-state MDP file whose rewards are the arms.
    #[arg(long, default_value = BANDIT8)]
    pub input: String,
    #[arg(long, value_delimiter = ',', default_value = "1,1.2,1.5,2,3,5,10,100")]
    pub q: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Built-in `fig3-default` or a gridworld spec file.
    #[arg(long, default_value = FIG3_DEFAULT)]
    pub input: String,
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3,5,10,100")]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QmaxArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub c_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub c_max: f64,
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// What went wrong, grouped by exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    NotFound,
    Validation,
    NonConvergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::NotFound | ErrorKind::Validation => 2,
            ErrorKind::NonConvergence => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::NotFound => "file-not-found",
            ErrorKind::Validation => "validation",
            ErrorKind::NonConvergence => "non-convergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Usage, message: message.into() }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind.label(), "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let kind = match &err {
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => ErrorKind::NotFound,
            e if e.is_validation() => ErrorKind::Validation,
            _ => ErrorKind::NonConvergence,
        };
        CliError { kind, message: err.to_string() }
    }
}

/// Built-in single-state MDP with two zero-reward actions and discount 0.5.
pub fn one_state_mdp() -> TabularMdp {
    TabularMdp::new(1, 2, vec![1.0, 1.0], vec![0.0, 0.0], 0.5, vec![1.0]).expect("built-in scenario is valid")
}

/// Built-in single-state MDP whose actions are the canonical bandit arms.
pub fn bandit8_mdp() -> TabularMdp {
    let n = BANDIT8_REWARDS.len();
    TabularMdp::new(1, n, vec![1.0; n], BANDIT8_REWARDS.to_vec(), 0.5, vec![1.0])
        .expect("built-in scenario is valid")
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| {
        let kind = if e.kind() == std::io::ErrorKind::NotFound {
            ErrorKind::NotFound
        } else {
            ErrorKind::Validation
        };
        CliError { kind, message: format!("{path}: {e}") }
    })
}

/// Resolves a built-in scenario name or loads an MDP file.
pub fn load_mdp(input: &str) -> Result<TabularMdp, CliError> {
    match input {
        ONE_STATE => Ok(one_state_mdp()),
        BANDIT8 => Ok(bandit8_mdp()),
        FIG3_DEFAULT => Ok(build_gridworld(&GridWorldSpec::default_scenario())?),
        path => TabularMdp::from_json_str(&read_file(path)?).map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{path}: {}", err.message);
            err
        }),
    }
}

fn load_gridworld(input: &str) -> Result<GridWorldSpec, CliError> {
    if input == FIG3_DEFAULT {
        return Ok(GridWorldSpec::default_scenario());
    }
    serde_json::from_str(&read_file(input)?).map_err(|e| CliError {
        kind: ErrorKind::Validation,
        message: format!("{input}: {e}"),
    })
}

fn bandit_rewards(input: &str) -> Result<Vec<f64>, CliError> {
    if input == BANDIT8 {
        return Ok(BANDIT8_REWARDS.to_vec());
    }
    let mdp = load_mdp(input)?;
    if mdp.n_states() != 1 {
        return Err(CliError {
            kind: ErrorKind::Validation,
            message: format!("bandit input must have exactly one state, found {}", mdp.n_states()),
        });
    }
    Ok((0..mdp.n_actions()).map(|a| mdp.expected_reward(0, a)).collect())
}

fn entropic(q: f64) -> Result<EntropicIndex, CliError> {
    EntropicIndex::new(q).map_err(|e| CliError::usage(e.to_string()))
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::usage(format!("--{name} must be > 0, got {x}")))
    }
}

fn nonempty<'a>(name: &str, values: &'a [f64]) -> Result<&'a [f64], CliError> {
    if values.is_empty() {
        return Err(CliError::usage(format!("--{name} needs at least one value")));
    }
    Ok(values)
}

fn json_only(output: &OutputArgs, command: &str) -> Result<(), CliError> {
    if output.format == Some(Format::Csv) {
        return Err(CliError::usage(format!("{command} only writes json")));
    }
    Ok(())
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
    text.push('\n');
    text
}

fn solve(args: &SolveArgs, policy_iteration: bool) -> Result<String, CliError> {
    let name = if policy_iteration { "solve-tpi" } else { "solve-tvi" };
    json_only(&args.output, name)?;
    let q = entropic(args.q)?;
    let alpha = positive("alpha", args.alpha)?;
    let config = args.tolerances.config()?;
    let mdp = load_mdp(&args.input)?;
    let report = if policy_iteration {
        tsallis_policy_iteration(&mdp, q, alpha, &config)?
    } else {
        tsallis_value_iteration(&mdp, q, alpha, &config)?
    };
    Ok(pretty(&json!({
        "command": name,
        "input": args.input,
        "q": args.q,
        "alpha": alpha,
        "report": report,
    })))
}

fn sweep_output(result: tsallis_core::SweepResult, output: &OutputArgs) -> String {
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => result.to_csv(),
        Format::Json => {
            let mut text = result.to_json();
            text.push('\n');
            text
        }
    }
}

/// Executes one command and returns the text it produced.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::SolveTvi(args) => solve(args, false),
        Command::SolveTpi(args) => solve(args, true),
        Command::Bandit(args) => {
            let qs = nonempty("q", &args.q)?;
            let alphas = nonempty("alpha", &args.alpha)?;
            for &q in qs {
                entropic(q)?;
            }
            for &a in alphas {
                positive("alpha", a)?;
            }
            let rewards = bandit_rewards(&args.input)?;
            Ok(sweep_output(bandit_sweep(&rewards, qs, alphas)?, &args.output))
        }
        Command::GridworldBounds(args) => {
            let qs = nonempty("q", &args.q)?;
            for &q in qs {
                entropic(q)?;
            }
            let alpha = positive("alpha", args.alpha)?;
            let config = args.tolerances.config()?;
            let spec = load_gridworld(&args.input)?;
            Ok(sweep_output(theorem6_experiment_with(&spec, qs, alpha, &config)?, &args.output))
        }
        Command::QmaxBounds(args) => {
            let qs = nonempty("q", &args.q)?;
            for &q in qs {
                entropic(q)?;
            }
            let result = theorem1_experiment((args.c_min, args.c_max), args.steps, qs)
                .map_err(|e| CliError::usage(e.to_string()))?;
            Ok(sweep_output(result, &args.output))
        }
        Command::Validate(args) => {
            json_only(&args.output, "validate")?;
            let mdp = load_mdp(&args.input)?;
            Ok(pretty(&json!({
                "valid": true,
                "n_states": mdp.n_states(),
                "n_actions": mdp.n_actions(),
                "discount": mdp.discount(),
            })))
        }
    }
}

fn output_target(command: &Command) -> Option<&Path> {
    let out = match command {
        Command::SolveTvi(a) | Command::SolveTpi(a) => &a.output,
        Command::Bandit(a) => &a.output,
        Command::GridworldBounds(a) => &a.output,
        Command::QmaxBounds(a) => &a.output,
        Command::Validate(a) => &a.output,
    };
    out.output.as_deref()
}

/// Runs a parsed command line, writing to `--output` or returning the text
/// for stdout.
pub fn run(cli: &Cli) -> Result<Option<String>, CliError> {
    let text = execute(&cli.command)?;
    match output_target(&cli.command) {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError {
                kind: ErrorKind::Validation,
                message: format!("{}: {e}", path.display()),
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_q_lists() {
        let cli = Cli::try_parse_from(["tsallis", "gridworld-bounds", "--q", "1,2.5,10"]).unwrap();
        let Command::GridworldBounds(args) = cli.command else { panic!() };
        assert_eq!(args.q, vec![1.0, 2.5, 10.0]);
        assert_eq!(args.input, FIG3_DEFAULT);
    }

    #[test]
    fn negative_c_range() {
        let cli = Cli::try_parse_from(["tsallis", "qmax-bounds", "--c-min", "-3", "--steps", "4"]).unwrap();
        let text = execute(&cli.command).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.lines().nth(1).unwrap().starts_with("1.0,-3.0,"));
    }

    #[test]
    fn error_kinds_map_to_codes() {
        let e: CliError = Error::NonConvergence { what: "x", iterations: 1, residual: 1.0 }.into();
        assert_eq!(e.kind.exit_code(), 3);
        let e: CliError = Error::InvalidMdp("bad".into()).into();
        assert_eq!(e.kind.exit_code(), 2);
        assert_eq!(CliError::usage("x").to_json_line(), r#"{"error":"usage","message":"x"}"#);
    }
}
