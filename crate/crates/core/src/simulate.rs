//! Seeded round-by-round play.
//!
//! Each episode plays rounds until the continuation draw fails (or the round
//! cap is hit) and records `X = sum of realised payoffs`. Since round `t` is
//! reached with probability `p(t)`, `X / sum_t p(t)` is an unbiased estimate
//! of the effective payoff.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::GameSpec;
use crate::schedule::{ContinuationSchedule, ExpectedRounds, ScheduleError};
use crate::strategy::StrategyProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("schedule has infinite expected rounds; a round cap is required")]
    MissingRoundCap,
    #[error("at least one episode is required")]
    NoEpisodes,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub episodes: usize,
    pub mean_rounds: f64,
    /// `sum_t p(t)`, truncated at the round cap when one is given.
    pub expected_rounds: f64,
}

pub fn monte_carlo_play(
    game: &GameSpec,
    profile: &StrategyProfile,
    schedule: &ContinuationSchedule,
    episodes: usize,
    seed: u64,
    round_cap: Option<usize>,
) -> Result<MonteCarloSummary, SimulationError> {
    if episodes == 0 {
        return Err(SimulationError::NoEpisodes);
    }
    schedule.validate()?;
    let expected_rounds = match round_cap {
        Some(cap) => schedule.survival_probabilities(cap.max(1)).iter().sum(),
        None => match schedule.expected_rounds(1)? {
            ExpectedRounds::Finite(x) => x,
            ExpectedRounds::Infinite => return Err(SimulationError::MissingRoundCap),
        },
    };
    let cap = round_cap.unwrap_or(usize::MAX);
    let n = game.player_count();

    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut total_rounds = 0usize;
    let mut actions = vec![0usize; n];
    let mut totals = vec![0.0; n];
    for episode in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(episode as u64);

        totals.iter_mut().for_each(|x| *x = 0.0);
        for (i, action) in actions.iter_mut().enumerate() {
            *action = sample(&mut rng, profile.get(i).initial().probs());
        }
        let mut t = 1;
        loop {
            let current = game
                .profile_index(&actions)
                .expect("sampled actions are in range");
            for (i, total) in totals.iter_mut().enumerate() {
                *total += game.payoff(current, i);
            }
            total_rounds += 1;
            if t >= cap {
                break;
            }
            let c = schedule.continuation(t);
            if c < 1.0 && rng.gen::<f64>() >= c {
                break;
            }
            for (i, action) in actions.iter_mut().enumerate() {
                *action = sample(&mut rng, profile.get(i).row(current));
            }
            t += 1;
        }
        for i in 0..n {
            let x = totals[i] / expected_rounds;
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }

    let count = episodes as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let std_errors = sum_sq
        .iter()
        .zip(&means)
        .map(|(sq, mean)| {
            if episodes < 2 {
                0.0
            } else {
                let var = ((sq - count * mean * mean) / (count - 1.0)).max(0.0);
                (var / count).sqrt()
            }
        })
        .collect();
    Ok(MonteCarloSummary {
        means,
        std_errors,
        episodes,
        mean_rounds: total_rounds as f64 / count,
        expected_rounds,
    })
}

fn sample<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap at the top; take the last positive entry
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}
