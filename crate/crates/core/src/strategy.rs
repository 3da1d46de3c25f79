//! One-step-memory (Markov) strategies.

use thiserror::Error;

use crate::game::{GameError, GameSpec, MixedAction, MIXED_SUM_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("strategy for player {player}: {detail}")]
    InconsistentStrategy { player: usize, detail: String },
    #[error("strategy for player {player}, row {row}: {source}")]
    InvalidRow {
        player: usize,
        row: usize,
        source: GameError,
    },
    #[error("strategy profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Player `player`'s initial mixed action plus one conditional mixed action
/// per last-round profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovStrategy {
    player: usize,
    initial: MixedAction,
    /// Row-major `profile_count x action_count`.
    conditionals: Vec<f64>,
    action_count: usize,
}

impl MarkovStrategy {
    pub fn new(
        game: &GameSpec,
        player: usize,
        initial: Vec<f64>,
        conditionals: Vec<Vec<f64>>,
    ) -> Result<Self, StrategyError> {
        game.check_player(player)?;
        let m = game.action_count(player);
        let initial_len = initial.len();
        if initial_len != m {
            return Err(StrategyError::InconsistentStrategy {
                player,
                detail: format!("initial action has {initial_len} entries, expected {m}"),
            });
        }
        let initial = MixedAction::new(initial).map_err(|source| StrategyError::InvalidRow {
            player,
            row: 0,
            source,
        })?;
        if conditionals.len() != game.profile_count() {
            return Err(StrategyError::InconsistentStrategy {
                player,
                detail: format!(
                    "{} conditional rows, expected {}",
                    conditionals.len(),
                    game.profile_count()
                ),
            });
        }
        let mut flat = Vec::with_capacity(m * conditionals.len());
        for (row, probs) in conditionals.into_iter().enumerate() {
            if probs.len() != m {
                return Err(StrategyError::InconsistentStrategy {
                    player,
                    detail: format!("row {row} has {} entries, expected {m}", probs.len()),
                });
            }
            let mixed = MixedAction::new(probs).map_err(|source| StrategyError::InvalidRow {
                player,
                row: row + 1,
                source,
            })?;
            flat.extend_from_slice(mixed.probs());
        }
        Ok(Self {
            player,
            initial,
            conditionals: flat,
            action_count: m,
        })
    }

    /// Two-action shorthand: `first[a]` is the probability of action 0 after
    /// profile `a`, `initial_first` the round-one probability of action 0.
    pub fn from_first_action(
        game: &GameSpec,
        player: usize,
        initial_first: f64,
        first: &[f64],
    ) -> Result<Self, StrategyError> {
        game.check_player(player)?;
        if game.action_count(player) != 2 {
            return Err(StrategyError::InconsistentStrategy {
                player,
                detail: "shorthand needs exactly two actions".into(),
            });
        }
        Self::new(
            game,
            player,
            vec![initial_first, 1.0 - initial_first],
            first.iter().map(|&p| vec![p, 1.0 - p]).collect(),
        )
    }

    /// Columns `s_{a^1}, ..., s_{a^{m-1}}` given; the last column is
    /// `1 - sum` of the others.
    pub fn from_columns(
        game: &GameSpec,
        player: usize,
        initial: Vec<f64>,
        columns: &[Vec<f64>],
    ) -> Result<Self, StrategyError> {
        let rows = (0..game.profile_count())
            .map(|a| {
                let mut row: Vec<f64> = columns
                    .iter()
                    .map(|c| c.get(a).copied().unwrap_or(f64::NAN))
                    .collect();
                let rest = 1.0 - row.iter().sum::<f64>();
                // absorb rounding like 1 - 0.7 - 0.2
                row.push(if rest.abs() < MIXED_SUM_TOL {
                    0.0
                } else {
                    rest
                });
                row
            })
            .collect();
        Self::new(game, player, initial, rows)
    }

    /// Replays the player's own last action; round one uses `initial`.
    pub fn repeat(
        game: &GameSpec,
        player: usize,
        initial: MixedAction,
    ) -> Result<Self, StrategyError> {
        let m = game.action_count(player);
        let rows = (0..game.profile_count())
            .map(|a| {
                MixedAction::pure(m, game.action_of(a, player))
                    .probs()
                    .to_vec()
            })
            .collect();
        Self::new(game, player, initial.probs().to_vec(), rows)
    }

    /// Plays `mixed` after every history.
    pub fn memoryless(
        game: &GameSpec,
        player: usize,
        mixed: MixedAction,
    ) -> Result<Self, StrategyError> {
        let rows = vec![mixed.probs().to_vec(); game.profile_count()];
        Self::new(game, player, mixed.probs().to_vec(), rows)
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn profile_count(&self) -> usize {
        self.conditionals.len() / self.action_count
    }

    pub fn initial(&self) -> &MixedAction {
        &self.initial
    }

    /// `p(action | last profile)`.
    pub fn prob(&self, profile: usize, action: usize) -> f64 {
        self.conditionals[profile * self.action_count + action]
    }

    pub fn row(&self, profile: usize) -> &[f64] {
        let m = self.action_count;
        &self.conditionals[profile * m..(profile + 1) * m]
    }

    /// The vector `s_{a^action}` over all profiles.
    pub fn column(&self, action: usize) -> Vec<f64> {
        (0..self.profile_count())
            .map(|a| self.prob(a, action))
            .collect()
    }

    pub fn check_game(&self, game: &GameSpec) -> Result<(), StrategyError> {
        if self.player >= game.player_count()
            || game.action_count(self.player) != self.action_count
            || game.profile_count() != self.profile_count()
        {
            return Err(StrategyError::InconsistentStrategy {
                player: self.player,
                detail: "shape does not match the game".into(),
            });
        }
        Ok(())
    }

    /// Same conditional row after every profile.
    pub fn is_memory_zero(&self, tol: f64) -> bool {
        let first = self.row(0);
        (1..self.profile_count()).all(|a| {
            self.row(a)
                .iter()
                .zip(first)
                .all(|(x, y)| (x - y).abs() <= tol)
        })
    }
}

/// One Markov strategy per player, ordered by player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile(Vec<MarkovStrategy>);

impl StrategyProfile {
    pub fn new(game: &GameSpec, strategies: Vec<MarkovStrategy>) -> Result<Self, StrategyError> {
        let mut strategies = strategies;
        strategies.sort_by_key(MarkovStrategy::player);
        if strategies.len() != game.player_count()
            || strategies.iter().enumerate().any(|(i, s)| s.player() != i)
        {
            return Err(StrategyError::InvalidProfile(format!(
                "players {:?} do not cover 0..{} exactly once",
                strategies
                    .iter()
                    .map(MarkovStrategy::player)
                    .collect::<Vec<_>>(),
                game.player_count()
            )));
        }
        for s in &strategies {
            s.check_game(game)?;
        }
        Ok(Self(strategies))
    }

    /// Controllers' strategies combined with the remaining players'.
    pub fn combine(
        game: &GameSpec,
        controllers: &[MarkovStrategy],
        others: &[MarkovStrategy],
    ) -> Result<Self, StrategyError> {
        Self::new(game, controllers.iter().chain(others).cloned().collect())
    }

    pub fn strategies(&self) -> &[MarkovStrategy] {
        &self.0
    }

    pub fn get(&self, player: usize) -> &MarkovStrategy {
        &self.0[player]
    }
}
