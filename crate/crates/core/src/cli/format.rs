//! The sectioned text format for games, strategies and schedules.
//!
//! ```text
//! # comments run to the end of the line
//! [game]
//! players = 2
//! actions.1 = C D
//! actions.2 = C D
//! payoffs:
//!   3 3    # CC
//!   0 5    # CD
//!   5 0    # DC
//!   1 1    # DD
//!
//! [strategy.1]
//! initial = 1 0
//! conditionals:
//!   0.9 0.1
//!   ...
//!
//! [schedule]
//! kind = delta
//! delta = 0.9
//! ```
//!
//! `[game]` may instead name a builtin: `builtin = donation` with
//! `params = 2 5 1 3 0 0`. Payoff and conditional rows follow the canonical
//! profile order. Players are numbered from 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::game::{builtin_game, GameSpec};
use crate::schedule::ContinuationSchedule;
use crate::strategy::{MarkovStrategy, StrategyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: invalid {field}: {message}")]
    Validation {
        file: String,
        line: usize,
        field: String,
        message: String,
    },
    #[error("{file}: {message}")]
    Missing { file: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone)]
struct Field {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Block {
    key: String,
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    fields: Vec<Field>,
    blocks: Vec<Block>,
}

impl Section {
    fn field(&self, key: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.key == key)
    }

    fn block(&self, key: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.key == key)
    }
}

/// Everything a file may hold. Strategies are sorted by player.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub game: Option<GameSpec>,
    pub strategies: Vec<MarkovStrategy>,
    pub schedule: Option<ContinuationSchedule>,
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn parse(&self, line: usize, message: impl Into<String>) -> FormatError {
        FormatError::Parse {
            file: self.file.to_string(),
            line,
            message: message.into(),
        }
    }

    fn invalid(&self, line: usize, field: &str, message: impl ToString) -> FormatError {
        FormatError::Validation {
            file: self.file.to_string(),
            line,
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    fn missing(&self, message: impl Into<String>) -> FormatError {
        FormatError::Missing {
            file: self.file.to_string(),
            message: message.into(),
        }
    }

    fn numbers(&self, line: usize, field: &str, text: &str) -> Result<Vec<f64>, FormatError> {
        text.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.invalid(line, field, format!("{t:?} is not a number")))
            })
            .collect()
    }

    fn integer(&self, field: &Field, name: &str) -> Result<usize, FormatError> {
        field.value.parse::<usize>().map_err(|_| {
            self.invalid(
                field.line,
                name,
                format!("{:?} is not a non-negative integer", field.value),
            )
        })
    }

    fn number(&self, field: &Field, name: &str) -> Result<f64, FormatError> {
        field.value.parse::<f64>().map_err(|_| {
            self.invalid(
                field.line,
                name,
                format!("{:?} is not a number", field.value),
            )
        })
    }
}

fn split_sections(ctx: &Ctx, text: &str) -> Result<Vec<Section>, FormatError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut in_block = false;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ctx.parse(line, "section header is missing ']'"))?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(ctx.parse(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                fields: Vec::new(),
                blocks: Vec::new(),
            });
            in_block = false;
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ctx.parse(line, "content before the first section header"))?;
        if let Some((key, value)) = content.split_once('=') {
            let key = key.trim().to_string();
            if section.fields.iter().any(|f| f.key == key) {
                return Err(ctx.parse(line, format!("duplicate field {key:?}")));
            }
            section.fields.push(Field {
                key,
                value: value.trim().to_string(),
                line,
            });
            in_block = false;
        } else if let Some(key) = content.strip_suffix(':') {
            let key = key.trim().to_string();
            if section.blocks.iter().any(|b| b.key == key) {
                return Err(ctx.parse(line, format!("duplicate block {key:?}")));
            }
            section.blocks.push(Block {
                key,
                line,
                rows: Vec::new(),
            });
            in_block = true;
        } else if in_block {
            let block = section.blocks.last_mut().expect("in_block implies a block");
            let field = format!("{} row {}", block.key, block.rows.len() + 1);
            let row = ctx.numbers(line, &field, content)?;
            block.rows.push((line, row));
        } else {
            return Err(ctx.parse(
                line,
                format!("expected 'key = value' or 'key:', got {content:?}"),
            ));
        }
    }
    Ok(sections)
}

fn build_game(ctx: &Ctx, section: &Section) -> Result<GameSpec, FormatError> {
    if let Some(kind) = section.field("builtin") {
        let params = match section.field("params") {
            Some(p) => ctx.numbers(p.line, "params", &p.value)?,
            None => Vec::new(),
        };
        return builtin_game(&kind.value, &params)
            .map_err(|e| ctx.invalid(kind.line, "builtin", e));
    }
    let players_field = section
        .field("players")
        .ok_or_else(|| ctx.missing("[game] needs 'players' (or 'builtin')"))?;
    let players = ctx.integer(players_field, "players")?;
    if players == 0 {
        return Err(ctx.invalid(players_field.line, "players", "need at least one player"));
    }
    let mut labels = Vec::with_capacity(players);
    for p in 1..=players {
        let key = format!("actions.{p}");
        let field = section
            .field(&key)
            .ok_or_else(|| ctx.missing(format!("[game] needs '{key}'")))?;
        labels.push(
            field
                .value
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>(),
        );
    }
    if let Some(extra) = section.fields.iter().find(|f| {
        f.key.starts_with("actions.") && !(1..=players).any(|p| f.key == format!("actions.{p}"))
    }) {
        return Err(ctx.invalid(
            extra.line,
            &extra.key,
            format!("only {players} players declared"),
        ));
    }
    let payoffs = section
        .block("payoffs")
        .ok_or_else(|| ctx.missing("[game] needs a 'payoffs:' block"))?;
    let rows: Vec<Vec<f64>> = payoffs.rows.iter().map(|(_, r)| r.clone()).collect();
    if let Some((line, row)) = payoffs.rows.iter().find(|(_, r)| r.len() != players) {
        return Err(ctx.invalid(
            *line,
            "payoffs",
            format!("row has {} entries, expected {players}", row.len()),
        ));
    }
    GameSpec::new(players, labels, rows).map_err(|e| ctx.invalid(payoffs.line, "payoffs", e))
}

fn build_strategy(
    ctx: &Ctx,
    section: &Section,
    player: usize,
    game: &GameSpec,
) -> Result<MarkovStrategy, FormatError> {
    let name = &section.name;
    let initial_field = section
        .field("initial")
        .ok_or_else(|| ctx.missing(format!("[{name}] needs 'initial'")))?;
    let initial = ctx.numbers(initial_field.line, "initial", &initial_field.value)?;
    let block = section
        .block("conditionals")
        .ok_or_else(|| ctx.missing(format!("[{name}] needs a 'conditionals:' block")))?;
    let rows = block.rows.iter().map(|(_, r)| r.clone()).collect();
    MarkovStrategy::new(game, player, initial, rows).map_err(|e| match &e {
        StrategyError::InvalidRow { row: 0, .. } => {
            ctx.invalid(initial_field.line, &format!("{name} initial"), &e)
        }
        StrategyError::InvalidRow { row, .. } => {
            let line = block.rows.get(row - 1).map_or(block.line, |(l, _)| *l);
            ctx.invalid(line, &format!("{name} conditionals row {row}"), &e)
        }
        _ => ctx.invalid(block.line, name, &e),
    })
}

fn build_schedule(ctx: &Ctx, section: &Section) -> Result<ContinuationSchedule, FormatError> {
    let kind = section
        .field("kind")
        .ok_or_else(|| ctx.missing("[schedule] needs 'kind'"))?;
    let need = |key: &str| {
        section
            .field(key)
            .ok_or_else(|| ctx.missing(format!("schedule kind {} needs '{key}'", kind.value)))
    };
    let schedule = match kind.value.as_str() {
        "infinite" => Ok(ContinuationSchedule::Infinite),
        "delta" => {
            let f = need("delta")?;
            ContinuationSchedule::delta(ctx.number(f, "delta")?)
                .map_err(|e| ctx.invalid(f.line, "delta", e))
        }
        "horizon" => {
            let f = need("horizon")?;
            ContinuationSchedule::horizon(ctx.integer(f, "horizon")?)
                .map_err(|e| ctx.invalid(f.line, "horizon", e))
        }
        "custom" => {
            let values = need("values")?;
            let tail = need("tail")?;
            ContinuationSchedule::custom(
                ctx.numbers(values.line, "values", &values.value)?,
                ctx.number(tail, "tail")?,
            )
            .map_err(|e| ctx.invalid(values.line, "values", e))
        }
        other => Err(ctx.invalid(
            kind.line,
            "kind",
            format!("{other:?} is not one of infinite, delta, horizon, custom"),
        )),
    }?;
    Ok(schedule)
}

/// Parses `text`. Strategy blocks need a game: the file's own `[game]` or
/// `game` when the file has none.
pub fn parse_document(
    text: &str,
    file: &str,
    game: Option<&GameSpec>,
) -> Result<Document, FormatError> {
    let ctx = Ctx { file };
    let sections = split_sections(&ctx, text)?;
    let mut doc = Document {
        game: None,
        strategies: Vec::new(),
        schedule: None,
    };
    if let Some(section) = sections.iter().find(|s| s.name == "game") {
        doc.game = Some(build_game(&ctx, section)?);
    }
    for section in &sections {
        match section.name.as_str() {
            "game" => {}
            "schedule" => doc.schedule = Some(build_schedule(&ctx, section)?),
            name => {
                let number = name
                    .strip_prefix("strategy.")
                    .ok_or_else(|| ctx.parse(section.line, format!("unknown section [{name}]")))?;
                let game =
                    doc.game.as_ref().or(game).ok_or_else(|| {
                        ctx.parse(section.line, "strategy section without a game")
                    })?;
                let player = number
                    .parse::<usize>()
                    .ok()
                    .filter(|&p| (1..=game.player_count()).contains(&p))
                    .ok_or_else(|| {
                        ctx.parse(
                            section.line,
                            format!("[{name}]: player must be 1..={}", game.player_count()),
                        )
                    })?;
                doc.strategies
                    .push(build_strategy(&ctx, section, player - 1, game)?);
            }
        }
    }
    doc.strategies.sort_by_key(MarkovStrategy::player);
    Ok(doc)
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// A game file: `[game]` plus optional strategy and schedule sections.
#[derive(Debug, Clone, PartialEq)]
pub struct GameFile {
    pub game: GameSpec,
    pub strategies: Vec<MarkovStrategy>,
    pub schedule: Option<ContinuationSchedule>,
}

pub fn parse_game_file(path: impl AsRef<Path>) -> Result<GameFile, FormatError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let doc = parse_document(&read(path)?, &name, None)?;
    let game = doc.game.ok_or(FormatError::Missing {
        file: name,
        message: "no [game] section".into(),
    })?;
    Ok(GameFile {
        game,
        strategies: doc.strategies,
        schedule: doc.schedule,
    })
}

/// Strategy (and optional schedule) sections interpreted against `game`.
pub fn parse_strategy_file(
    path: impl AsRef<Path>,
    game: &GameSpec,
) -> Result<Document, FormatError> {
    let path = path.as_ref();
    let doc = parse_document(&read(path)?, &path.display().to_string(), Some(game))?;
    if let Some(own) = &doc.game {
        if own != game {
            return Err(FormatError::Missing {
                file: path.display().to_string(),
                message: "its [game] section differs from the game given".into(),
            });
        }
    }
    Ok(doc)
}

/// A file holding only a `[schedule]` section (used by `custom:<file>`).
pub fn parse_schedule_file(path: impl AsRef<Path>) -> Result<ContinuationSchedule, FormatError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    parse_document(&read(path)?, &name, None)?
        .schedule
        .ok_or(FormatError::Missing {
            file: name,
            message: "no [schedule] section".into(),
        })
}

fn join(values: &[f64]) -> String {
    // `{}` on f64 prints the shortest string that parses back exactly
    values
        .iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `[game]` section text.
pub fn format_game(game: &GameSpec) -> String {
    let mut out = String::from("[game]\n");
    let _ = writeln!(out, "players = {}", game.player_count());
    for p in 0..game.player_count() {
        let _ = writeln!(
            out,
            "actions.{} = {}",
            p + 1,
            game.action_labels(p).join(" ")
        );
    }
    out.push_str("payoffs:\n");
    for a in 0..game.profile_count() {
        let labels = game
            .profile_labels(a)
            .map(|l| l.join(","))
            .unwrap_or_default();
        let _ = writeln!(out, "  {}    # {labels}", join(game.payoff_row(a)));
    }
    out
}

/// `[strategy.<i>]` sections, one per strategy.
pub fn format_strategies(game: &GameSpec, strategies: &[MarkovStrategy]) -> String {
    let mut out = String::new();
    for (k, s) in strategies.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[strategy.{}]", s.player() + 1);
        let _ = writeln!(out, "initial = {}", join(s.initial().probs()));
        out.push_str("conditionals:\n");
        for a in 0..game.profile_count() {
            let labels = game
                .profile_labels(a)
                .map(|l| l.join(","))
                .unwrap_or_default();
            let _ = writeln!(out, "  {}    # {labels}", join(s.row(a)));
        }
    }
    out
}

pub fn format_schedule(schedule: &ContinuationSchedule) -> String {
    match schedule {
        ContinuationSchedule::Infinite => "[schedule]\nkind = infinite\n".into(),
        ContinuationSchedule::Delta(d) => format!("[schedule]\nkind = delta\ndelta = {d}\n"),
        ContinuationSchedule::FiniteHorizon(t) => {
            format!("[schedule]\nkind = horizon\nhorizon = {t}\n")
        }
        ContinuationSchedule::Custom { values, tail } => format!(
            "[schedule]\nkind = custom\nvalues = {}\ntail = {tail}\n",
            join(values)
        ),
    }
}

/// Writes strategy sections preceded by `# `-prefixed `header` lines.
pub fn write_strategy_file(
    path: impl AsRef<Path>,
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    header: &[String],
) -> Result<(), FormatError> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut text = String::new();
    for line in header {
        let _ = writeln!(text, "# {line}");
    }
    if !header.is_empty() {
        text.push('\n');
    }
    text.push_str(&format_strategies(game, strategies));
    std::fs::write(&path, text).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
