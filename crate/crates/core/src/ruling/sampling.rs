use rand::Rng;

use crate::game::GameSpec;
use crate::strategy::MarkovStrategy;

/// Interior draws keep every entry in `[0.05, 0.95]`; boundary draws mix in
/// pure rows (entries 0 and 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Interior,
    Boundary,
}

const INTERIOR_FLOOR: f64 = 0.05;

/// Uniform draw from the probability simplex.
fn simplex<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn mixed<R: Rng>(rng: &mut R, m: usize, kind: SampleKind) -> Vec<f64> {
    match kind {
        SampleKind::Interior => {
            // floor + (1 - m floor) * simplex keeps entries in [0.05, 0.95]
            let spread = 1.0 - m as f64 * INTERIOR_FLOOR;
            simplex(rng, m)
                .into_iter()
                .map(|x| INTERIOR_FLOOR + spread * x)
                .collect()
        }
        SampleKind::Boundary => {
            if rng.gen_bool(0.5) {
                let mut p = vec![0.0; m];
                p[rng.gen_range(0..m)] = 1.0;
                p
            } else {
                simplex(rng, m)
            }
        }
    }
}

/// Random Markov strategy for `player`.
pub fn sample_strategy<R: Rng>(
    rng: &mut R,
    game: &GameSpec,
    player: usize,
    kind: SampleKind,
) -> MarkovStrategy {
    let m = game.action_count(player);
    let initial = mixed(rng, m, kind);
    let rows = (0..game.profile_count())
        .map(|_| mixed(rng, m, kind))
        .collect();
    MarkovStrategy::new(game, player, initial, rows).expect("sampled rows are distributions")
}

/// One random strategy for each of `players`.
pub fn sample_opponents<R: Rng>(
    rng: &mut R,
    game: &GameSpec,
    players: &[usize],
    kind: SampleKind,
) -> Vec<MarkovStrategy> {
    players
        .iter()
        .map(|&p| sample_strategy(rng, game, p, kind))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_game;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_bounds() {
        let g = builtin_game("donation", &[2., 5., 1., 3., 0., 0.]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = sample_strategy(&mut rng, &g, 1, SampleKind::Interior);
            for a in 0..9 {
                assert!(s.row(a).iter().all(|&p| (0.05..=0.95).contains(&p)));
            }
        }
    }

    #[test]
    fn boundary_draws_hit_pure_rows() {
        let g = builtin_game("pd", &[3., 0., 5., 1.]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sample_strategy(&mut rng, &g, 0, SampleKind::Boundary);
        let pure = (0..4).filter(|&a| s.row(a).contains(&1.0)).count();
        let mut any = pure > 0;
        for _ in 0..20 {
            let s = sample_strategy(&mut rng, &g, 0, SampleKind::Boundary);
            any |= (0..4).any(|a| s.row(a).contains(&1.0));
        }
        assert!(any);
    }
}
