//! Finite n-player base games.
//!
//! Action profiles are indexed lexicographically with player 1 (index 0) as
//! the most significant digit, so a two-action game lists `CC, CD, DC, DD`.
//! Players are 0-based throughout the library; the CLI translates to 1-based.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Tolerance on the sum of a freshly constructed mixed action.
pub const MIXED_SUM_TOL: f64 = 1e-12;
/// Tolerance on the sum of a distribution produced by arithmetic.
pub const DIST_SUM_TOL: f64 = 1e-10;
/// Entries above `-DIST_NEG_TOL` are clamped to zero.
pub const DIST_NEG_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite payoff at profile {profile}, player {player}")]
    NonFiniteEntry { profile: usize, player: usize },
    #[error("duplicate action label {label:?} for player {player}")]
    DuplicateActionLabel { player: usize, label: String },
    #[error("unknown action label {label:?} for player {player}")]
    UnknownLabel { player: usize, label: String },
    #[error("profile index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("player {0} out of range")]
    PlayerOutOfRange(usize),
    #[error("unknown builtin game {0:?}")]
    UnknownKind(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
}

/// A validated strategic-form game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    action_labels: Vec<Vec<String>>,
    /// Row-major `profile_count x player_count`.
    payoffs: Vec<f64>,
    /// Place value of each player's action digit in the profile index.
    strides: Vec<usize>,
    profile_count: usize,
}

impl GameSpec {
    pub fn new(
        player_count: usize,
        action_labels: Vec<Vec<String>>,
        payoff_rows: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        if player_count < 2 {
            return Err(GameError::InvalidParams(format!(
                "need at least 2 players, got {player_count}"
            )));
        }
        if action_labels.len() != player_count {
            return Err(GameError::DimensionMismatch(format!(
                "{} action lists for {} players",
                action_labels.len(),
                player_count
            )));
        }
        for (player, labels) in action_labels.iter().enumerate() {
            if labels.len() < 2 {
                return Err(GameError::DimensionMismatch(format!(
                    "player {player} has {} actions, need at least 2",
                    labels.len()
                )));
            }
            let mut seen = HashSet::new();
            for label in labels {
                if !seen.insert(label.as_str()) {
                    return Err(GameError::DuplicateActionLabel {
                        player,
                        label: label.clone(),
                    });
                }
            }
        }

        let mut strides = vec![1; player_count];
        for p in (0..player_count - 1).rev() {
            strides[p] = strides[p + 1] * action_labels[p + 1].len();
        }
        let profile_count = strides[0] * action_labels[0].len();

        if payoff_rows.len() != profile_count {
            return Err(GameError::DimensionMismatch(format!(
                "expected {profile_count} payoff rows, got {}",
                payoff_rows.len()
            )));
        }
        let mut payoffs = Vec::with_capacity(profile_count * player_count);
        for (profile, row) in payoff_rows.iter().enumerate() {
            if row.len() != player_count {
                return Err(GameError::DimensionMismatch(format!(
                    "payoff row {profile} has {} columns, expected {player_count}",
                    row.len()
                )));
            }
            for (player, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(GameError::NonFiniteEntry { profile, player });
                }
                payoffs.push(x);
            }
        }

        Ok(Self {
            action_labels,
            payoffs,
            strides,
            profile_count,
        })
    }

    pub fn player_count(&self) -> usize {
        self.action_labels.len()
    }

    pub fn action_count(&self, player: usize) -> usize {
        self.action_labels[player].len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.action_labels.iter().map(Vec::len).collect()
    }

    pub fn action_labels(&self, player: usize) -> &[String] {
        &self.action_labels[player]
    }

    pub fn profile_count(&self) -> usize {
        self.profile_count
    }

    pub fn payoff(&self, profile: usize, player: usize) -> f64 {
        self.payoffs[profile * self.player_count() + player]
    }

    pub fn payoff_row(&self, profile: usize) -> &[f64] {
        let n = self.player_count();
        &self.payoffs[profile * n..(profile + 1) * n]
    }

    /// Column `u_i` of the payoff table.
    pub fn payoff_vector(&self, player: usize) -> Result<Vec<f64>, GameError> {
        self.check_player(player)?;
        Ok((0..self.profile_count)
            .map(|a| self.payoff(a, player))
            .collect())
    }

    pub fn check_player(&self, player: usize) -> Result<(), GameError> {
        if player < self.player_count() {
            Ok(())
        } else {
            Err(GameError::PlayerOutOfRange(player))
        }
    }

    /// Action played by `player` in the profile with index `profile`.
    pub fn action_of(&self, profile: usize, player: usize) -> usize {
        (profile / self.strides[player]) % self.action_labels[player].len()
    }

    pub fn profile_index(&self, actions: &[usize]) -> Result<usize, GameError> {
        if actions.len() != self.player_count() {
            return Err(GameError::DimensionMismatch(format!(
                "profile has {} actions for {} players",
                actions.len(),
                self.player_count()
            )));
        }
        let mut index = 0;
        for (player, &action) in actions.iter().enumerate() {
            if action >= self.action_count(player) {
                return Err(GameError::UnknownLabel {
                    player,
                    label: action.to_string(),
                });
            }
            index += action * self.strides[player];
        }
        Ok(index)
    }

    pub fn profile_index_by_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize, GameError> {
        if labels.len() != self.player_count() {
            return Err(GameError::DimensionMismatch(format!(
                "profile has {} labels for {} players",
                labels.len(),
                self.player_count()
            )));
        }
        let actions = labels
            .iter()
            .enumerate()
            .map(|(player, label)| self.action_index(player, label.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        self.profile_index(&actions)
    }

    pub fn action_index(&self, player: usize, label: &str) -> Result<usize, GameError> {
        self.check_player(player)?;
        self.action_labels[player]
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| GameError::UnknownLabel {
                player,
                label: label.to_string(),
            })
    }

    pub fn profile_from_index(&self, index: usize) -> Result<Vec<usize>, GameError> {
        if index >= self.profile_count {
            return Err(GameError::IndexOutOfRange(index));
        }
        Ok((0..self.player_count())
            .map(|p| self.action_of(index, p))
            .collect())
    }

    pub fn profile_labels(&self, index: usize) -> Result<Vec<&str>, GameError> {
        let actions = self.profile_from_index(index)?;
        Ok(actions
            .iter()
            .enumerate()
            .map(|(p, &a)| self.action_labels[p][a].as_str())
            .collect())
    }

    /// `<u_i, v>`.
    pub fn expected_payoff(
        &self,
        player: usize,
        dist: &ProfileDistribution,
    ) -> Result<f64, GameError> {
        self.check_player(player)?;
        if dist.len() != self.profile_count {
            return Err(GameError::DimensionMismatch(format!(
                "distribution has {} entries, game has {} profiles",
                dist.len(),
                self.profile_count
            )));
        }
        Ok(dist
            .probs()
            .iter()
            .enumerate()
            .map(|(a, &p)| p * self.payoff(a, player))
            .sum())
    }

    pub fn expected_payoffs(&self, dist: &ProfileDistribution) -> Result<Vec<f64>, GameError> {
        (0..self.player_count())
            .map(|i| self.expected_payoff(i, dist))
            .collect()
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in 0..self.profile_count {
            let labels = self.profile_labels(a).map_err(|_| fmt::Error)?;
            write!(f, "{:>12}", labels.join(""))?;
            for x in self.payoff_row(a) {
                write!(f, " {x:>8}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    /// Entries within `MIXED_SUM_TOL` outside `[0, 1]` are clamped.
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -MIXED_SUM_TOL || *p > 1.0 + MIXED_SUM_TOL {
                return Err(GameError::InvalidProbabilities(format!(
                    "entry {p} outside [0, 1]"
                )));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MIXED_SUM_TOL {
            return Err(GameError::InvalidProbabilities(format!(
                "entries sum to {sum}"
            )));
        }
        Ok(Self(probs))
    }

    pub fn pure(action_count: usize, action: usize) -> Self {
        let mut probs = vec![0.0; action_count];
        probs[action] = 1.0;
        Self(probs)
    }

    pub fn uniform(action_count: usize) -> Self {
        Self(vec![1.0 / action_count as f64; action_count])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A probability distribution over action profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDistribution(Vec<f64>);

impl ProfileDistribution {
    /// Entries down to `-DIST_NEG_TOL` are clamped to zero; the sum must be
    /// within `DIST_SUM_TOL` of one.
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -DIST_NEG_TOL {
                return Err(GameError::InvalidProbabilities(format!(
                    "profile probability {p}"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(GameError::InvalidProbabilities(format!(
                "profile probabilities sum to {sum}"
            )));
        }
        Ok(Self(probs))
    }

    pub fn point_mass(profile_count: usize, profile: usize) -> Self {
        let mut probs = vec![0.0; profile_count];
        probs[profile] = 1.0;
        Self(probs)
    }

    pub fn uniform(profile_count: usize) -> Self {
        Self(vec![1.0 / profile_count as f64; profile_count])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, vector: &[f64]) -> f64 {
        self.0.iter().zip(vector).map(|(p, x)| p * x).sum()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Closed-form games used by the worked examples and tests.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinGame {
    /// Rows `CC, CD, DC, DD` carry `(R,R), (S,T), (T,S), (P,P)`.
    PrisonersDilemma { r: f64, s: f64, t: f64, p: f64 },
    /// Two-player donation game. Action `k` costs the actor `costs[k]` and
    /// gives the opponent `benefits[k]`.
    Donation { costs: Vec<f64>, benefits: Vec<f64> },
    /// Each cooperator pays `cost` into a pot that is multiplied and shared
    /// equally among all `players`.
    PublicGoods {
        players: usize,
        cost: f64,
        multiplier: f64,
    },
}

impl BuiltinGame {
    /// Parses `kind` with positional `params`:
    /// `prisoners_dilemma R S T P`, `donation c1 b1 c2 b2 ...`,
    /// `public_goods n cost multiplier`.
    pub fn from_params(kind: &str, params: &[f64]) -> Result<Self, GameError> {
        match kind {
            "prisoners_dilemma" | "pd" => match params {
                [r, s, t, p] => Ok(Self::PrisonersDilemma {
                    r: *r,
                    s: *s,
                    t: *t,
                    p: *p,
                }),
                _ => Err(GameError::InvalidParams(
                    "prisoners_dilemma takes R S T P".into(),
                )),
            },
            "donation" => {
                if params.len() < 4 || !params.len().is_multiple_of(2) {
                    return Err(GameError::InvalidParams(
                        "donation takes cost/benefit pairs for at least 2 actions".into(),
                    ));
                }
                let costs = params.iter().step_by(2).copied().collect();
                let benefits = params.iter().skip(1).step_by(2).copied().collect();
                Ok(Self::Donation { costs, benefits })
            }
            "public_goods" | "pgg" => match params {
                [n, cost, multiplier] => {
                    if n.fract() != 0.0 || *n < 0.0 {
                        return Err(GameError::InvalidParams(format!(
                            "player count {n} is not a non-negative integer"
                        )));
                    }
                    Ok(Self::PublicGoods {
                        players: *n as usize,
                        cost: *cost,
                        multiplier: *multiplier,
                    })
                }
                _ => Err(GameError::InvalidParams(
                    "public_goods takes n cost multiplier".into(),
                )),
            },
            other => Err(GameError::UnknownKind(other.to_string())),
        }
    }

    pub fn build(&self) -> Result<GameSpec, GameError> {
        match self {
            Self::PrisonersDilemma { r, s, t, p } => GameSpec::new(
                2,
                vec![labels(&["C", "D"]), labels(&["C", "D"])],
                vec![vec![*r, *r], vec![*s, *t], vec![*t, *s], vec![*p, *p]],
            ),
            Self::Donation { costs, benefits } => {
                let m = costs.len();
                if m < 2 || benefits.len() != m {
                    return Err(GameError::InvalidParams(format!(
                        "{m} costs and {} benefits",
                        benefits.len()
                    )));
                }
                let names = donation_labels(costs);
                let mut rows = Vec::with_capacity(m * m);
                for a in 0..m {
                    for b in 0..m {
                        rows.push(vec![benefits[b] - costs[a], benefits[a] - costs[b]]);
                    }
                }
                GameSpec::new(2, vec![names.clone(), names], rows)
            }
            Self::PublicGoods {
                players,
                cost,
                multiplier,
            } => {
                let n = *players;
                if n < 2 {
                    return Err(GameError::InvalidParams(format!(
                        "public goods game needs n >= 2, got {n}"
                    )));
                }
                let count = 1usize << n;
                let rows = (0..count)
                    .map(|profile| {
                        // bit (n-1-i) set means player i defects
                        let cooperates: Vec<bool> =
                            (0..n).map(|i| (profile >> (n - 1 - i)) & 1 == 0).collect();
                        let contributors = cooperates.iter().filter(|&&c| c).count() as f64;
                        let share = multiplier * cost * contributors / n as f64;
                        cooperates
                            .iter()
                            .map(|&c| if c { share - cost } else { share })
                            .collect()
                    })
                    .collect();
                GameSpec::new(n, vec![labels(&["C", "D"]); n], rows)
            }
        }
    }
}

/// Convenience wrapper around [`BuiltinGame::from_params`] and
/// [`BuiltinGame::build`].
pub fn builtin_game(kind: &str, params: &[f64]) -> Result<GameSpec, GameError> {
    BuiltinGame::from_params(kind, params)?.build()
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Zero-cost actions are `D`; the others are `C1, C2, ...` (or `C` if only one).
fn donation_labels(costs: &[f64]) -> Vec<String> {
    let giving = costs.iter().filter(|&&c| c != 0.0).count();
    let mut k = 0;
    let mut defect = 0;
    let names: Vec<String> = costs
        .iter()
        .map(|&c| {
            if c == 0.0 {
                defect += 1;
                if defect == 1 {
                    "D".to_string()
                } else {
                    format!("D{defect}")
                }
            } else {
                k += 1;
                if giving == 1 {
                    "C".to_string()
                } else {
                    format!("C{k}")
                }
            }
        })
        .collect();
    names
}
