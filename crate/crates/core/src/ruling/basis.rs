use nalgebra::DMatrix;

use super::{controller_strategies, JointActions, RulingError, SCHEDULE_TOL};
use crate::game::GameSpec;
use crate::linalg;
use crate::schedule::{ContinuationSchedule, ScheduleClass};
use crate::strategy::MarkovStrategy;

/// Which closed-form ruling-vector family applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleForm {
    Infinite,
    Delta(f64),
}

impl ScheduleForm {
    /// Gate: only infinite-expected-rounds and constant-δ schedules admit
    /// strict-Markov ruling vectors.
    pub fn from_schedule(schedule: &ContinuationSchedule) -> Result<Self, RulingError> {
        match schedule.classify(SCHEDULE_TOL) {
            ScheduleClass::InfiniteExpectedRounds => Ok(Self::Infinite),
            ScheduleClass::DeltaRepeated(delta) => Ok(Self::Delta(delta)),
            other => Err(RulingError::UnsupportedSchedule(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulingBasis {
    pub vectors: Vec<Vec<f64>>,
    pub controllers: Vec<usize>,
    pub form: ScheduleForm,
    /// Joint action (one action per controller) behind each vector.
    pub provenance: Vec<Vec<usize>>,
}

impl RulingBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Profiles x vectors.
    pub fn as_matrix(&self, profile_count: usize) -> DMatrix<f64> {
        DMatrix::from_fn(profile_count, self.vectors.len(), |a, j| self.vectors[j][a])
    }

    pub fn rank(&self, profile_count: usize) -> usize {
        linalg::rank(&self.as_matrix(profile_count), linalg::RANK_TOL)
    }

    /// `sum_j y_j ũ_j`.
    pub fn combine(&self, y: &[f64]) -> Vec<f64> {
        let len = self.vectors.first().map_or(0, Vec::len);
        let mut out = vec![0.0; len];
        for (v, coef) in self.vectors.iter().zip(y) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += coef * x;
            }
        }
        out
    }
}

/// Indicator of the profiles in which the controllers play `joint_action`.
pub fn repeat_indicator(
    game: &GameSpec,
    controllers: &[usize],
    joint_action: &[usize],
) -> Result<Vec<f64>, RulingError> {
    let joint = JointActions::new(game, controllers)?;
    if joint_action.len() != controllers.len() {
        return Err(RulingError::InvalidControllers(format!(
            "{} actions for {} controllers",
            joint_action.len(),
            controllers.len()
        )));
    }
    // pair actions with controllers in the caller's order, then sort
    let mut pairs: Vec<(usize, usize)> = controllers
        .iter()
        .copied()
        .zip(joint_action.iter().copied())
        .collect();
    pairs.sort_unstable();
    for &(player, action) in &pairs {
        if action >= game.action_count(player) {
            return Err(RulingError::UnknownAction { player, action });
        }
    }
    let target = joint.encode(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(indicator(game, &joint, target))
}

fn indicator(game: &GameSpec, joint: &JointActions, target: usize) -> Vec<f64> {
    (0..game.profile_count())
        .map(|a| {
            if joint.of_profile(game, a) == target {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// `s_j(a) = prod_k p_k(j_k | a)` over profiles, and `s_{j|0} = prod_k
/// p_k(j_k | round 1)`. `strategies` must be sorted by player.
pub fn joint_conditional(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    joint: &JointActions,
    j: usize,
) -> (Vec<f64>, f64) {
    let actions = joint.decode(j);
    let conditional = (0..game.profile_count())
        .map(|a| {
            strategies
                .iter()
                .zip(&actions)
                .map(|(s, &act)| s.prob(a, act))
                .product()
        })
        .collect();
    let initial = strategies
        .iter()
        .zip(&actions)
        .map(|(s, &act)| s.initial().probs()[act])
        .product();
    (conditional, initial)
}

/// All `prod m_k` vectors of the family, including the dependent last one.
pub fn full_family(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    form: ScheduleForm,
) -> Result<RulingBasis, RulingError> {
    let (joint, sorted) = controller_strategies(game, strategies)?;
    let mut vectors = Vec::with_capacity(joint.count());
    let mut provenance = Vec::with_capacity(joint.count());
    for j in 0..joint.count() {
        let (conditional, initial) = joint_conditional(game, &sorted, &joint, j);
        let rep = indicator(game, &joint, j);
        let vector = match form {
            ScheduleForm::Infinite => conditional.iter().zip(&rep).map(|(s, r)| s - r).collect(),
            ScheduleForm::Delta(delta) => conditional
                .iter()
                .zip(&rep)
                .map(|(s, r)| delta * s + (1.0 - delta) * initial - r)
                .collect(),
        };
        vectors.push(vector);
        provenance.push(joint.decode(j));
    }
    Ok(RulingBasis {
        vectors,
        controllers: joint.controllers().to_vec(),
        form,
        provenance,
    })
}

/// The family with the last joint action's vector dropped, since the whole
/// family sums to zero.
pub fn ruling_basis(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    form: ScheduleForm,
) -> Result<RulingBasis, RulingError> {
    let mut family = full_family(game, strategies, form)?;
    family.vectors.pop();
    family.provenance.pop();
    Ok(family)
}
