//! Command-line front end. Players are numbered from 1 on the command line
//! and in files.
//!
//! Exit codes: 0 success, 1 verification failed, 2 usage or input error,
//! 3 synthesis proven infeasible, 4 inconclusive.

pub mod format;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use format::{
    format_game, format_schedule, format_strategies, parse_document, parse_game_file,
    parse_schedule_file, parse_strategy_file, write_strategy_file, Document, FormatError, GameFile,
};

use crate::dynamics::{effective_payoffs, AverageOptions};
use crate::game::GameSpec;
use crate::relation::PayoffRelation;
use crate::ruling::{
    detect_relations, falsify_candidate, full_family, synthesize, verify_relation, AllianceMode,
    RulingError, ScheduleForm, SynthesisOptions, SynthesisOutcome, SynthesisTarget, VerifyConfig,
    SCHEDULE_TOL,
};
use crate::schedule::{ContinuationSchedule, ExpectedRounds};
use crate::simulate::{monte_carlo_play, SimulationError};
use crate::strategy::{MarkovStrategy, StrategyError, StrategyProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Ruling(#[from] RulingError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "ruling",
    about = "Ruling strategies for repeated games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build controller strategies enforcing a payoff relation.
    Synth(SynthArgs),
    /// Sample opponents and check that a relation holds.
    Verify(VerifyArgs),
    /// Print the relations a strategy set enforces.
    Detect(DetectArgs),
    /// Play the game round by round and summarise payoffs.
    Simulate(SimulateArgs),
    /// Report which ruling-vector family a schedule admits.
    Classify(ClassifyArgs),
    /// Search for opponents breaking a candidate ruling vector.
    Falsify(FalsifyArgs),
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Game file.
    #[arg(long)]
    game: PathBuf,
    /// infinite, delta:<d>, horizon:<T> or custom:<file>. Defaults to the
    /// game file's [schedule] section, else infinite.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Debug, Args)]
struct RelationArgs {
    /// Comma-separated coefficients, one per player.
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Independent,
    Correlated,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    relation: RelationArgs,
    /// Comma-separated controller players.
    #[arg(long)]
    controllers: String,
    #[arg(long, value_enum, default_value = "independent")]
    mode: ModeArg,
    /// Strategy file to write; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    relation: RelationArgs,
    /// Strategy file with the controllers' strategies.
    #[arg(long)]
    strategy: PathBuf,
    /// Restrict to these players from the strategy file.
    #[arg(long)]
    controllers: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0.1)]
    boundary_fraction: f64,
    /// CSV of sampled payoffs; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    strategy: PathBuf,
    #[arg(long)]
    controllers: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Strategy files; together they must cover every player.
    #[arg(long, required = true)]
    strategy: Vec<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop each episode after this many rounds (required for infinite schedules).
    #[arg(long)]
    round_cap: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    schedule: Option<String>,
    /// Take the schedule from this file's [schedule] section.
    #[arg(long)]
    game: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FalsifyArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    strategy: PathBuf,
    #[arg(long)]
    controllers: Option<String>,
    /// Comma-separated candidate vector over profiles.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "family")]
    candidate: Option<String>,
    /// Use the infinite-rounds family vector of this joint action (1-based
    /// index in canonical order). Default 1.
    #[arg(long)]
    family: Option<usize>,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit
/// code, writing reports to stdout and diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a, out, err),
        Command::Verify(a) => verify(a, out, err),
        Command::Detect(a) => detect(a, out),
        Command::Simulate(a) => simulate(a, out, err),
        Command::Classify(a) => classify(a, out),
        Command::Falsify(a) => falsify(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Parses a `--schedule` value.
pub fn parse_schedule_arg(text: &str) -> Result<ContinuationSchedule, CliError> {
    let bad = |m: String| CliError::Usage(format!("--schedule {text:?}: {m}"));
    let (kind, value) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "infinite" if value.is_empty() => Ok(ContinuationSchedule::Infinite),
        "delta" => {
            let d = value
                .parse::<f64>()
                .map_err(|_| bad("delta must be a number".into()))?;
            ContinuationSchedule::delta(d).map_err(|e| bad(e.to_string()))
        }
        "horizon" => {
            let t = value
                .parse::<usize>()
                .map_err(|_| bad("horizon must be a positive integer".into()))?;
            ContinuationSchedule::horizon(t).map_err(|e| bad(e.to_string()))
        }
        "custom" if !value.is_empty() => Ok(parse_schedule_file(value)?),
        _ => Err(bad(
            "expected infinite, delta:<d>, horizon:<T> or custom:<file>".into(),
        )),
    }
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{flag}: {t:?} is not a number")))
        })
        .collect()
}

/// 1-based comma list to sorted 0-based players.
fn parse_players(text: &str, game: &GameSpec) -> Result<Vec<usize>, CliError> {
    let mut players = text
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(p) if (1..=game.player_count()).contains(&p) => Ok(p - 1),
            _ => Err(CliError::Usage(format!(
                "--controllers: {t:?} is not a player in 1..={}",
                game.player_count()
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    players.sort_unstable();
    Ok(players)
}

fn parse_relation(args: &RelationArgs, game: &GameSpec) -> Result<PayoffRelation, CliError> {
    let alpha = parse_list("alpha", &args.alpha)?;
    if alpha.len() != game.player_count() {
        return Err(CliError::Usage(format!(
            "--alpha has {} entries, game has {} players",
            alpha.len(),
            game.player_count()
        )));
    }
    PayoffRelation::new(alpha, args.gamma).map_err(|e| CliError::Usage(format!("relation: {e}")))
}

fn load(args: &GameArgs) -> Result<(GameFile, ContinuationSchedule), CliError> {
    let file = parse_game_file(&args.game)?;
    let schedule = match &args.schedule {
        Some(text) => parse_schedule_arg(text)?,
        None => file
            .schedule
            .clone()
            .unwrap_or(ContinuationSchedule::Infinite),
    };
    Ok((file, schedule))
}

/// Strategies from `path`, optionally restricted to `controllers`.
fn load_strategies(
    path: &Path,
    game: &GameSpec,
    controllers: Option<&str>,
) -> Result<Vec<MarkovStrategy>, CliError> {
    let doc = parse_strategy_file(path, game)?;
    if doc.strategies.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no [strategy.<i>] sections",
            path.display()
        )));
    }
    let Some(list) = controllers else {
        return Ok(doc.strategies);
    };
    parse_players(list, game)?
        .into_iter()
        .map(|p| {
            doc.strategies
                .iter()
                .find(|s| s.player() == p)
                .cloned()
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: no strategy for player {}",
                        path.display(),
                        p + 1
                    ))
                })
        })
        .collect()
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Decimal with 12 significant digits, trailing zeros dropped.
pub fn format_csv_number(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    let text = if (-5..15).contains(&exponent) {
        format!("{:.*}", (11 - exponent).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    };
    let (mantissa, suffix) = match text.split_once('e') {
        Some((m, e)) => (m.to_string(), format!("e{e}")),
        None => (text, String::new()),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        mantissa
    };
    format!("{mantissa}{suffix}")
}

fn synth(args: SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (file, schedule) = load(&args.game)?;
    let game = &file.game;
    let relation = parse_relation(&args.relation, game)?;
    let target = SynthesisTarget {
        relation: relation.clone(),
        controllers: parse_players(&args.controllers, game)?,
        mode: match args.mode {
            ModeArg::Independent => AllianceMode::Independent,
            ModeArg::Correlated => AllianceMode::Correlated,
        },
    };
    match synthesize(game, &schedule, &target, &SynthesisOptions::default())? {
        SynthesisOutcome::Feasible(result) => {
            let header = vec![
                format!("enforces {relation}"),
                format!("schedule {schedule}"),
                format!("margin {}", result.margin),
                format!("equation residual {:e}", result.equation_residual),
            ];
            let mut text = String::new();
            for line in &header {
                text.push_str(&format!("# {line}\n"));
            }
            text.push('\n');
            text.push_str(&format_strategies(game, &result.strategies));
            emit(args.out.as_deref(), &text, out)?;
            let _ = writeln!(
                err,
                "feasible: margin {:.3e}, equation residual {:.3e}",
                result.margin, result.equation_residual
            );
            Ok(EXIT_OK)
        }
        SynthesisOutcome::Infeasible(why) => {
            let _ = writeln!(err, "infeasible ({:?}): {}", why.kind, why.detail);
            Ok(if why.kind.is_proof() {
                EXIT_INFEASIBLE
            } else {
                EXIT_INCONCLUSIVE
            })
        }
    }
}

fn verify(args: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (file, schedule) = load(&args.game)?;
    let game = &file.game;
    let relation = parse_relation(&args.relation, game)?;
    let controllers = load_strategies(&args.strategy, game, args.controllers.as_deref())?;
    let config = VerifyConfig {
        samples: args.samples,
        tol: args.tol,
        seed: args.seed,
        boundary_fraction: args.boundary_fraction,
    };
    let report = verify_relation(game, &schedule, &controllers, &relation, &config)?;

    let mut csv = String::from("sample");
    for p in 1..=game.player_count() {
        csv.push_str(&format!(",u{p}"));
    }
    csv.push_str(",residual\n");
    for record in &report.records {
        csv.push_str(&record.id.to_string());
        for x in &record.payoffs {
            csv.push(',');
            csv.push_str(&format_csv_number(*x));
        }
        csv.push(',');
        csv.push_str(&format_csv_number(record.residual));
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv, out)?;
    let _ = writeln!(
        err,
        "{}: max |residual| {:.3e} (interior {:.3e}, boundary {:.3e}) over {} samples, {} skipped, tolerance {:e}",
        if report.pass { "pass" } else { "FAIL" },
        report.max_abs_violation,
        report.max_interior_violation,
        report.max_boundary_violation,
        report.records.len(),
        report.skipped,
        args.tol
    );
    Ok(if report.pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn detect(args: DetectArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (file, schedule) = load(&args.game)?;
    let controllers = load_strategies(&args.strategy, &file.game, args.controllers.as_deref())?;
    let relations = detect_relations(&file.game, &controllers, &schedule)?;
    let mut text = String::new();
    if relations.is_empty() {
        text.push_str("# no non-trivial relation enforced\n");
    }
    for r in &relations {
        let coefficients: Vec<String> = r
            .coefficients()
            .iter()
            .map(|x| format_csv_number(*x))
            .collect();
        text.push_str(&format!(
            "{r}    # alpha,gamma = {}\n",
            coefficients.join(",")
        ));
    }
    emit(args.out.as_deref(), &text, out)?;
    Ok(EXIT_OK)
}

fn simulate(args: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (file, schedule) = load(&args.game)?;
    let game = &file.game;
    let mut strategies = Vec::new();
    for path in &args.strategy {
        for s in load_strategies(path, game, None)? {
            if strategies
                .iter()
                .any(|t: &MarkovStrategy| t.player() == s.player())
            {
                return Err(CliError::Usage(format!(
                    "player {} has two strategies",
                    s.player() + 1
                )));
            }
            strategies.push(s);
        }
    }
    let profile = StrategyProfile::new(game, strategies)?;
    let summary = monte_carlo_play(
        game,
        &profile,
        &schedule,
        args.episodes,
        args.seed,
        args.round_cap,
    )?;
    let exact = match args.round_cap {
        None => effective_payoffs(game, &profile, &schedule, &AverageOptions::default()).ok(),
        Some(_) => None,
    };
    let mut csv = String::from("player,mean,std_error,exact\n");
    for p in 0..game.player_count() {
        let exact = exact
            .as_ref()
            .map_or(String::new(), |e| format_csv_number(e[p]));
        csv.push_str(&format!(
            "{},{},{},{}\n",
            p + 1,
            format_csv_number(summary.means[p]),
            format_csv_number(summary.std_errors[p]),
            exact
        ));
    }
    emit(args.out.as_deref(), &csv, out)?;
    let _ = writeln!(
        err,
        "{} episodes, mean rounds {:.3}, expected rounds {:.3}",
        summary.episodes, summary.mean_rounds, summary.expected_rounds
    );
    Ok(EXIT_OK)
}

fn classify(args: ClassifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let schedule = match (&args.schedule, &args.game) {
        (Some(text), _) => parse_schedule_arg(text)?,
        (None, Some(path)) => parse_document(
            &std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?,
            &path.display().to_string(),
            None,
        )?
        .schedule
        .ok_or_else(|| CliError::Usage(format!("{}: no [schedule] section", path.display())))?,
        (None, None) => {
            return Err(CliError::Usage(
                "classify needs --schedule or --game".into(),
            ))
        }
    };
    let rounds = match schedule
        .expected_rounds(1)
        .map_err(|e| CliError::Usage(e.to_string()))?
    {
        ExpectedRounds::Finite(x) => format_csv_number(x),
        ExpectedRounds::Infinite => "inf".into(),
    };
    let class = schedule.classify(SCHEDULE_TOL);
    let family = match ScheduleForm::from_schedule(&schedule) {
        Ok(ScheduleForm::Infinite) => "s_j - rep_j".to_string(),
        Ok(ScheduleForm::Delta(d)) => format!("{d} s_j + {} s_j|0 - rep_j", 1.0 - d),
        Err(_) => "none (no strict-Markov ruling vectors)".to_string(),
    };
    let _ = writeln!(out, "schedule: {schedule}");
    let _ = writeln!(out, "class: {class}");
    let _ = writeln!(out, "expected rounds: {rounds}");
    let _ = writeln!(out, "ruling family: {family}");
    Ok(EXIT_OK)
}

fn falsify(args: FalsifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (file, schedule) = load(&args.game)?;
    let game = &file.game;
    let controllers = load_strategies(&args.strategy, game, args.controllers.as_deref())?;
    let candidate = match &args.candidate {
        Some(text) => parse_list("candidate", text)?,
        None => {
            let family = full_family(game, &controllers, ScheduleForm::Infinite)?;
            let j = args.family.unwrap_or(1);
            if j == 0 || j > family.len() {
                return Err(CliError::Usage(format!(
                    "--family must be in 1..={}",
                    family.len()
                )));
            }
            family.vectors[j - 1].clone()
        }
    };
    let report = falsify_candidate(
        game,
        &schedule,
        &controllers,
        &candidate,
        args.budget,
        args.seed,
    )?;
    let mut text = String::new();
    let listed: Vec<String> = candidate.iter().map(|x| format!("{x}")).collect();
    text.push_str(&format!("# candidate = {}\n", listed.join(",")));
    text.push_str(&format!("# schedule {schedule}\n"));
    text.push_str(&format!(
        "# achieved |<candidate, v>| = {:e}\n",
        report.achieved
    ));
    text.push_str(&format!("# evaluations = {}\n", report.evaluations));
    match &report.counterexample {
        Some(opponents) => {
            text.push_str("# counterexample opponents follow\n\n");
            text.push_str(&format_strategies(game, opponents));
        }
        None => text.push_str("# no counterexample found (inconclusive)\n"),
    }
    emit(args.out.as_deref(), &text, out)?;
    let _ = writeln!(
        err,
        "achieved {:.3e} after {} evaluations",
        report.achieved, report.evaluations
    );
    Ok(if report.inconclusive() {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}
