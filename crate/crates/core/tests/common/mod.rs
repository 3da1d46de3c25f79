//! Shared fixtures and hand-rolled oracles for the integration tests.
#![allow(dead_code)]

use ruling::game::{builtin_game, GameSpec};
use ruling::strategy::{MarkovStrategy, StrategyProfile};

pub fn pd() -> GameSpec {
    builtin_game("pd", &[3., 0., 5., 1.]).unwrap()
}

pub fn donation() -> GameSpec {
    builtin_game("donation", &[2., 5., 1., 3., 0., 0.]).unwrap()
}

pub fn pgg() -> GameSpec {
    builtin_game("public_goods", &[3., 3., 2.]).unwrap()
}

fn donation_player1(c1: &[f64], c2: &[f64]) -> MarkovStrategy {
    MarkovStrategy::from_columns(
        &donation(),
        0,
        vec![1., 0., 0.],
        &[c1.to_vec(), c2.to_vec()],
    )
    .unwrap()
}

/// Pins player 2 to 2.
pub fn pin_two() -> MarkovStrategy {
    donation_player1(
        &[0.7, 0.4, 0.1, 0.6, 0.4, 0.2, 0.8, 0.5, 0.3],
        &[0.2, 0.4, 0.6, 0.2, 0.2, 0.2, 0.0, 0.2, 0.2],
    )
}

/// Equalizes players 1 and 2.
pub fn equalizer() -> MarkovStrategy {
    donation_player1(
        &[1.0, 0.5, 0.2, 0.7, 0.0, 0.1, 0.6, 0.3, 0.0],
        &[0.0, 0.4, 0.2, 0.2, 1.0, 0.0, 0.2, 0.2, 0.0],
    )
}

/// Enforces nothing.
pub fn plain() -> MarkovStrategy {
    donation_player1(
        &[0.2, 0.5, 0.3, 0.2, 0.4, 0.5, 0.3, 0.5, 0.2],
        &[0.4, 0.2, 0.5, 0.6, 0.3, 0.0, 0.3, 0.5, 0.5],
    )
}

fn pgg_pair(s1: &[f64], s2: &[f64]) -> Vec<MarkovStrategy> {
    let g = pgg();
    vec![
        MarkovStrategy::from_first_action(&g, 0, 1.0, s1).unwrap(),
        MarkovStrategy::from_first_action(&g, 1, 1.0, s2).unwrap(),
    ]
}

/// Players 1 and 2 pin player 1 to 1.
pub fn alliance_pin_first() -> Vec<MarkovStrategy> {
    pgg_pair(
        &[0.8, 0.4, 1.0, 0.6, 0.5, 0.1, 0.7, 0.3],
        &[0.4, 0.7, 0.0, 0.3, 0.5, 0.8, 0.1, 0.4],
    )
}

/// Players 1 and 2 pin player 3 to 1.
pub fn alliance_pin_third() -> Vec<MarkovStrategy> {
    pgg_pair(
        &[0.6, 0.7, 0.4, 0.3, 0.4, 0.5, 0.2, 0.1],
        &[0.7, 0.4, 0.3, 0.1, 0.8, 0.5, 0.4, 0.2],
    )
}

pub fn wsls() -> MarkovStrategy {
    MarkovStrategy::from_first_action(&pd(), 0, 1.0, &[1.0, 0.0, 0.0, 1.0]).unwrap()
}

/// Round-one profile distribution by direct products.
pub fn oracle_initial(game: &GameSpec, profile: &StrategyProfile) -> Vec<f64> {
    (0..game.profile_count())
        .map(|a| {
            (0..game.player_count())
                .map(|i| profile.get(i).initial().probs()[game.action_of(a, i)])
                .product()
        })
        .collect()
}

/// One step `v -> v M`, with `M[a][b] = prod_i p_i(b_i | a)`.
pub fn oracle_step(game: &GameSpec, profile: &StrategyProfile, v: &[f64]) -> Vec<f64> {
    let n = game.profile_count();
    let mut next = vec![0.0; n];
    for (a, va) in v.iter().enumerate() {
        if *va == 0.0 {
            continue;
        }
        for (b, nb) in next.iter_mut().enumerate() {
            let p: f64 = (0..game.player_count())
                .map(|i| profile.get(i).prob(a, game.action_of(b, i)))
                .product();
            *nb += va * p;
        }
    }
    next
}

/// `sum_t w_t v(t) / sum_t w_t` over the listed weights.
pub fn oracle_weighted(game: &GameSpec, profile: &StrategyProfile, weights: &[f64]) -> Vec<f64> {
    let mut v = oracle_initial(game, profile);
    let mut acc = vec![0.0; v.len()];
    let total: f64 = weights.iter().sum();
    for w in weights {
        for (x, y) in acc.iter_mut().zip(&v) {
            *x += w * y / total;
        }
        v = oracle_step(game, profile, &v);
    }
    acc
}

/// Discounted average truncated after `terms` rounds.
pub fn oracle_delta(
    game: &GameSpec,
    profile: &StrategyProfile,
    delta: f64,
    terms: usize,
) -> Vec<f64> {
    let weights: Vec<f64> = (0..terms).map(|t| delta.powi(t as i32)).collect();
    oracle_weighted(game, profile, &weights)
}

/// Running (Cesàro) mean of the first `rounds` rounds.
pub fn oracle_cesaro(game: &GameSpec, profile: &StrategyProfile, rounds: usize) -> Vec<f64> {
    oracle_weighted(game, profile, &vec![1.0; rounds])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
