use nalgebra::DMatrix;

use super::basis::{ruling_basis, ScheduleForm};
use super::RulingError;
use crate::game::GameSpec;
use crate::linalg::{self, RANK_TOL};
use crate::relation::{is_trivial, PayoffRelation};
use crate::schedule::ContinuationSchedule;
use crate::strategy::MarkovStrategy;

/// `[u_1 ... u_n 1]`, profiles x (n + 1).
fn payoff_block(game: &GameSpec) -> DMatrix<f64> {
    let n = game.player_count();
    DMatrix::from_fn(game.profile_count(), n + 1, |a, c| {
        if c < n {
            game.payoff(a, c)
        } else {
            1.0
        }
    })
}

/// Orthonormal basis (columns) of the coefficient vectors `(alpha, gamma)`
/// whose combined payoff vector lies in the ruling space, with the trivial
/// relations projected out.
fn relation_space(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    schedule: &ContinuationSchedule,
) -> Result<DMatrix<f64>, RulingError> {
    let form = ScheduleForm::from_schedule(schedule)?;
    let basis = ruling_basis(game, strategies, form)?;
    let payoffs = payoff_block(game);
    let k = payoffs.ncols();
    let r = basis.len();
    let rows = game.profile_count();

    // [U 1 -Ũ] (alpha; gamma; y) = 0
    let mut block = DMatrix::zeros(rows, k + r);
    block.view_mut((0, 0), (rows, k)).copy_from(&payoffs);
    block
        .view_mut((0, k), (rows, r))
        .copy_from(&(-basis.as_matrix(rows)));
    let null = linalg::null_space(&block, RANK_TOL);
    let projected = null.rows(0, k).into_owned();
    let relations = linalg::column_space(&projected, RANK_TOL);

    let trivial = linalg::null_space(&payoffs, RANK_TOL);
    if trivial.ncols() == 0 || relations.ncols() == 0 {
        return Ok(relations);
    }
    let projector = DMatrix::identity(k, k) - &trivial * trivial.transpose();
    Ok(linalg::column_space(&(projector * relations), RANK_TOL))
}

/// Non-trivial relations enforced by the controllers, one per dimension of
/// the relation space, in canonical form. The basis is the reduced row
/// echelon form of the space, so it does not depend on SVD sign choices.
pub fn detect_relations(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    schedule: &ContinuationSchedule,
) -> Result<Vec<PayoffRelation>, RulingError> {
    let space = relation_space(game, strategies, schedule)?;
    if space.ncols() == 0 {
        return Ok(Vec::new());
    }
    let echelon = linalg::rref(&space.transpose(), RANK_TOL);
    let relations = echelon
        .row_iter()
        .filter_map(|row| {
            let coefficients: Vec<f64> = row
                .iter()
                .map(|&x| if x.abs() < 1e-13 { 0.0 } else { x })
                .collect();
            PayoffRelation::from_coefficients(&coefficients).ok()
        })
        .map(|r| r.canonical())
        .filter(|r| !is_trivial(game, r))
        .collect();
    Ok(relations)
}

/// Whether `relation` (up to trivial relations) lies in the enforced span.
pub fn relation_enforced(
    game: &GameSpec,
    strategies: &[MarkovStrategy],
    schedule: &ContinuationSchedule,
    relation: &PayoffRelation,
    tol: f64,
) -> Result<bool, RulingError> {
    relation.check_game(game)?;
    if is_trivial(game, relation) {
        return Ok(true);
    }
    let space = relation_space(game, strategies, schedule)?;
    let mut target = nalgebra::DVector::from_vec(relation.canonical().coefficients());
    let trivial = linalg::null_space(&payoff_block(game), RANK_TOL);
    if trivial.ncols() > 0 {
        let along = &trivial * (trivial.transpose() * &target);
        target -= along;
    }
    let residual = if space.ncols() == 0 {
        target.amax()
    } else {
        (&target - &space * (space.transpose() * &target)).amax()
    };
    Ok(residual <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{builtin_game, MixedAction};

    fn donation() -> GameSpec {
        builtin_game("donation", &[2., 5., 1., 3., 0., 0.]).unwrap()
    }

    fn pin_two(game: &GameSpec) -> MarkovStrategy {
        MarkovStrategy::from_columns(
            game,
            0,
            vec![1., 0., 0.],
            &[
                vec![0.7, 0.4, 0.1, 0.6, 0.4, 0.2, 0.8, 0.5, 0.3],
                vec![0.2, 0.4, 0.6, 0.2, 0.2, 0.2, 0.0, 0.2, 0.2],
            ],
        )
        .unwrap()
    }

    fn equalizer(game: &GameSpec) -> MarkovStrategy {
        MarkovStrategy::from_columns(
            game,
            0,
            vec![1., 0., 0.],
            &[
                vec![1.0, 0.5, 0.2, 0.7, 0.0, 0.1, 0.6, 0.3, 0.0],
                vec![0.0, 0.4, 0.2, 0.2, 1.0, 0.0, 0.2, 0.2, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn pin_strategy_enforces_one_relation() {
        let g = donation();
        let found = detect_relations(&g, &[pin_two(&g)], &ContinuationSchedule::Infinite).unwrap();
        assert_eq!(found.len(), 1);
        let pin = PayoffRelation::new(vec![0.0, 1.0], -2.0).unwrap();
        assert!(found[0].equivalent(&pin, 1e-10), "{}", found[0]);
        assert!(relation_enforced(
            &g,
            &[pin_two(&g)],
            &ContinuationSchedule::Infinite,
            &pin,
            1e-9
        )
        .unwrap());
    }

    #[test]
    fn equalizer_strategy() {
        let g = donation();
        let found =
            detect_relations(&g, &[equalizer(&g)], &ContinuationSchedule::Infinite).unwrap();
        assert_eq!(found.len(), 1);
        let eq = PayoffRelation::new(vec![1.0, -1.0], 0.0).unwrap();
        assert!(found[0].equivalent(&eq, 1e-10), "{}", found[0]);
    }

    #[test]
    fn repeat_strategy_enforces_nothing() {
        let g = donation();
        let rep = MarkovStrategy::repeat(&g, 0, MixedAction::pure(3, 0)).unwrap();
        assert!(
            detect_relations(&g, &[rep], &ContinuationSchedule::Infinite)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn unsupported_schedule() {
        let g = donation();
        assert!(matches!(
            detect_relations(&g, &[pin_two(&g)], &ContinuationSchedule::FiniteHorizon(3)),
            Err(RulingError::UnsupportedSchedule(_))
        ));
    }

    #[test]
    fn zero_sum_game_drops_trivial_relation() {
        let pennies = GameSpec::new(
            2,
            vec![vec!["H".into(), "T".into()], vec!["H".into(), "T".into()]],
            vec![vec![1., -1.], vec![-1., 1.], vec![-1., 1.], vec![1., -1.]],
        )
        .unwrap();
        let s = MarkovStrategy::from_first_action(&pennies, 0, 0.5, &[0.2, 0.7, 0.4, 0.9]).unwrap();
        let found = detect_relations(&pennies, &[s], &ContinuationSchedule::Infinite).unwrap();
        assert!(found.iter().all(|r| !is_trivial(&pennies, r)));
    }
}
