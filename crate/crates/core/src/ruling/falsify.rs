//! Search for opponents that break a candidate ruling vector.
//!
//! Useful on schedules the gate rejects (finite horizons, non-constant
//! continuation): there a candidate built from the closed-form families is
//! generally not ruling, and this search exhibits a witness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::{sample_opponents, SampleKind};
use super::{complement, controller_strategies, RulingError};
use crate::dynamics::{average_distribution, AverageOptions};
use crate::game::GameSpec;
use crate::schedule::ContinuationSchedule;
use crate::strategy::{MarkovStrategy, StrategyProfile};

/// `|<candidate, v̄>|` above this counts as a counterexample.
pub const FALSIFY_THRESHOLD: f64 = 1e-6;

const REFINE_STEPS: [f64; 6] = [0.5, 0.25, 0.1, 0.05, 0.02, 0.01];
const REFINE_PASSES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FalsificationReport {
    pub candidate: Vec<f64>,
    /// Opponent strategies (one per non-controller) beating the threshold.
    pub counterexample: Option<Vec<MarkovStrategy>>,
    /// Largest `|<candidate, v̄>|` seen.
    pub achieved: f64,
    pub evaluations: usize,
}

impl FalsificationReport {
    /// No counterexample after the whole budget; not a proof.
    pub fn inconclusive(&self) -> bool {
        self.counterexample.is_none()
    }
}

pub fn falsify_candidate(
    game: &GameSpec,
    schedule: &ContinuationSchedule,
    controllers: &[MarkovStrategy],
    candidate: &[f64],
    budget: usize,
    seed: u64,
) -> Result<FalsificationReport, RulingError> {
    if candidate.len() != game.profile_count() {
        return Err(RulingError::CandidateLength {
            expected: game.profile_count(),
            got: candidate.len(),
        });
    }
    if budget == 0 {
        return Err(RulingError::InvalidArgument(
            "budget must be at least 1".into(),
        ));
    }
    let (joint, controllers) = controller_strategies(game, controllers)?;
    let others = complement(game, joint.controllers());
    let options = AverageOptions::default();
    let mut evaluations = 0;
    let mut score = |opponents: &[MarkovStrategy]| -> Result<f64, RulingError> {
        evaluations += 1;
        let profile = StrategyProfile::combine(game, &controllers, opponents)?;
        let avg = average_distribution(game, &profile, schedule, &options)?;
        Ok(avg.dist.dot(candidate).abs())
    };

    let mut best: Option<(f64, Vec<MarkovStrategy>)> = None;
    for draw in 0..budget {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw as u64);
        let kind = if draw % 2 == 0 {
            SampleKind::Boundary
        } else {
            SampleKind::Interior
        };
        let opponents = sample_opponents(&mut rng, game, &others, kind);
        let value = score(&opponents)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, opponents));
        }
    }
    let (mut best_value, mut best_opponents) = best.expect("budget >= 1");

    // Coordinatewise refinement: pull one row of one opponent toward a pure
    // action and keep the move if it helps.
    for &step in &REFINE_STEPS {
        for _ in 0..REFINE_PASSES {
            let mut improved = false;
            for o in 0..best_opponents.len() {
                for row in 0..=game.profile_count() {
                    for action in 0..best_opponents[o].action_count() {
                        let trial = nudge(game, &best_opponents[o], row, action, step);
                        let mut opponents = best_opponents.clone();
                        opponents[o] = trial;
                        let value = score(&opponents)?;
                        if value > best_value * (1.0 + 1e-12) + 1e-15 {
                            best_value = value;
                            best_opponents = opponents;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    Ok(FalsificationReport {
        candidate: candidate.to_vec(),
        counterexample: (best_value > FALSIFY_THRESHOLD).then_some(best_opponents),
        achieved: best_value,
        evaluations,
    })
}

/// Row `row` (`profile_count` means the initial action) moved a fraction
/// `step` toward pure `action`.
fn nudge(
    game: &GameSpec,
    s: &MarkovStrategy,
    row: usize,
    action: usize,
    step: f64,
) -> MarkovStrategy {
    let pull = |probs: &[f64]| -> Vec<f64> {
        probs
            .iter()
            .enumerate()
            .map(|(k, p)| (1.0 - step) * p + if k == action { step } else { 0.0 })
            .collect()
    };
    let profiles = game.profile_count();
    let initial = if row == profiles {
        pull(s.initial().probs())
    } else {
        s.initial().probs().to_vec()
    };
    let rows = (0..profiles)
        .map(|a| {
            if a == row {
                pull(s.row(a))
            } else {
                s.row(a).to_vec()
            }
        })
        .collect();
    MarkovStrategy::new(game, s.player(), initial, rows).expect("convex move stays on the simplex")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_game;
    use crate::ruling::basis::{ruling_basis, ScheduleForm};

    #[test]
    fn infinite_schedule_has_no_counterexample() {
        let g = builtin_game("pd", &[3., 0., 5., 1.]).unwrap();
        let s = MarkovStrategy::from_first_action(&g, 0, 0.6, &[0.9, 0.2, 0.7, 0.4]).unwrap();
        let basis = ruling_basis(&g, std::slice::from_ref(&s), ScheduleForm::Infinite).unwrap();
        let report = falsify_candidate(
            &g,
            &ContinuationSchedule::Infinite,
            &[s],
            &basis.vectors[0],
            30,
            5,
        )
        .unwrap();
        assert!(report.inconclusive());
        assert!(report.achieved < 1e-9, "{}", report.achieved);
    }

    #[test]
    fn discounted_family_has_no_counterexample() {
        let g = builtin_game("pd", &[3., 0., 5., 1.]).unwrap();
        let s = MarkovStrategy::from_first_action(&g, 0, 0.6, &[0.9, 0.2, 0.7, 0.4]).unwrap();
        let basis = ruling_basis(&g, std::slice::from_ref(&s), ScheduleForm::Delta(0.5)).unwrap();
        let report = falsify_candidate(
            &g,
            &ContinuationSchedule::Delta(0.5),
            &[s],
            &basis.vectors[0],
            30,
            6,
        )
        .unwrap();
        assert!(report.inconclusive());
        assert!(report.achieved < 1e-9, "{}", report.achieved);
    }

    #[test]
    fn rejects_wrong_length() {
        let g = builtin_game("pd", &[3., 0., 5., 1.]).unwrap();
        let s = MarkovStrategy::from_first_action(&g, 0, 0.6, &[0.9, 0.2, 0.7, 0.4]).unwrap();
        assert!(matches!(
            falsify_candidate(&g, &ContinuationSchedule::Infinite, &[s], &[0.0; 3], 1, 0),
            Err(RulingError::CandidateLength { .. })
        ));
    }
}
