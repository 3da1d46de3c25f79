//! Ruling vectors and the payoff relations they enforce.
//!
//! A ruling vector `ũ` satisfies `<ũ, v̄> = 0` whatever the other players
//! do. For Markov controllers two families are known in closed form: the
//! infinite-rounds family `s_j - s^Rep_j` and the discounted family
//! `δ s_j + (1 - δ) s_{j|0} 1 - s^Rep_j`, where `j` ranges over the
//! controllers' joint actions. A strategy set enforces a non-trivial relation
//! `sum alpha_i ū_i + gamma = 0` exactly when `sum alpha_i u_i + gamma 1` lies in
//! the span of its ruling vectors.

mod basis;
mod detect;
mod falsify;
mod sampling;
mod synth;
mod verify;

pub use basis::{
    full_family, joint_conditional, repeat_indicator, ruling_basis, RulingBasis, ScheduleForm,
};
pub use detect::{detect_relations, relation_enforced};
pub use falsify::{falsify_candidate, FalsificationReport, FALSIFY_THRESHOLD};
pub use sampling::{sample_opponents, SampleKind};
pub use synth::{
    synthesize, AllianceMode, CertificateKind, Infeasibility, SynthesisOptions, SynthesisOutcome,
    SynthesisResult, SynthesisTarget,
};
pub use verify::{verify_relation, SampleRecord, VerifyConfig, VerifyReport};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::game::{GameError, GameSpec};
use crate::relation::RelationError;
use crate::schedule::ScheduleClass;
use crate::strategy::{MarkovStrategy, StrategyError};

/// Tolerance used when classifying a schedule for the ruling-vector gate.
pub const SCHEDULE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RulingError {
    #[error("schedule class {0} admits no strict-Markov ruling vectors")]
    UnsupportedSchedule(ScheduleClass),
    #[error("unknown action {action} for player {player}")]
    UnknownAction { player: usize, action: usize },
    #[error("invalid controller set: {0}")]
    InvalidControllers(String),
    #[error("target relation is trivial: it holds for every strategy profile")]
    TrivialTarget,
    #[error("candidate vector has {got} entries, game has {expected} profiles")]
    CandidateLength { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("synthesised strategies failed the detection round trip: {0}")]
    RoundTripFailed(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Joint actions of a controller set, lexicographic with the lowest-numbered
/// controller most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActions {
    controllers: Vec<usize>,
    counts: Vec<usize>,
}

impl JointActions {
    pub fn new(game: &GameSpec, controllers: &[usize]) -> Result<Self, RulingError> {
        let controllers = normalize_controllers(game, controllers)?;
        let counts = controllers.iter().map(|&k| game.action_count(k)).collect();
        Ok(Self {
            controllers,
            counts,
        })
    }

    pub fn controllers(&self) -> &[usize] {
        &self.controllers
    }

    pub fn count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.counts.len()];
        for (slot, &m) in out.iter_mut().zip(&self.counts).rev() {
            *slot = index % m;
            index /= m;
        }
        out
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&a, &m)| acc * m + a)
    }

    /// Joint action of the controllers inside profile `profile`.
    pub fn of_profile(&self, game: &GameSpec, profile: usize) -> usize {
        self.controllers
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&k, &m)| acc * m + game.action_of(profile, k))
    }

    pub fn member_counts(&self) -> &[usize] {
        &self.counts
    }
}

pub(crate) fn normalize_controllers(
    game: &GameSpec,
    controllers: &[usize],
) -> Result<Vec<usize>, RulingError> {
    if controllers.is_empty() {
        return Err(RulingError::InvalidControllers("no controllers".into()));
    }
    let mut sorted = controllers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != controllers.len() {
        return Err(RulingError::InvalidControllers(format!(
            "duplicate controllers in {controllers:?}"
        )));
    }
    if let Some(&bad) = sorted.iter().find(|&&k| k >= game.player_count()) {
        return Err(RulingError::Game(GameError::PlayerOutOfRange(bad)));
    }
    Ok(sorted)
}

/// Sorts controller strategies by player and checks them against the game.
pub(crate) fn controller_strategies(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
) -> Result<(JointActions, Vec<MarkovStrategy>), RulingError> {
    let players: Vec<usize> = strategies.iter().map(MarkovStrategy::player).collect();
    let joint = JointActions::new(game, &players)?;
    let mut sorted = strategies.to_vec();
    sorted.sort_by_key(MarkovStrategy::player);
    for s in &sorted {
        s.check_game(game)?;
    }
    Ok((joint, sorted))
}

/// The players outside `controllers`.
pub(crate) fn complement(game: &GameSpec, controllers: &[usize]) -> Vec<usize> {
    (0..game.player_count())
        .filter(|p| !controllers.contains(p))
        .collect()
}
