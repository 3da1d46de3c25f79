//! The Markov chain over action profiles induced by a Markov strategy
//! profile, and the limiting weighted-average distribution
//! `v̄ = lim_t sum_{s<=t} p(s) v^s / sum_{s<=t} p(s)`.
//!
//! Only Markov opponents are supported: for them the limit always exists.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::game::{GameError, GameSpec, ProfileDistribution};
use crate::schedule::{ContinuationSchedule, ExpectedRounds, ScheduleError};
use crate::strategy::{StrategyError, StrategyProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Relative pivot threshold below which the stationary system is treated as
/// singular.
const STATIONARY_PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageOptions {
    pub tol: f64,
    /// Cap on repeated squarings of the lazy chain (Infinite schedules);
    /// `k` squarings cover `2^k` steps.
    pub max_squarings: usize,
    /// Cap on summed rounds (finite and custom schedules).
    pub max_terms: usize,
}

impl Default for AverageOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_squarings: 64,
            max_terms: 10_000_000,
        }
    }
}

impl AverageOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMethod {
    /// Cesàro limit of `v^1 M^t`. `fast_path` means the stationary equation
    /// had a unique solution.
    Cesaro {
        fast_path: bool,
    },
    ClosedFormDelta,
    TruncatedSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvgDistributionResult {
    pub dist: ProfileDistribution,
    pub method: AverageMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// `M[a, b] = prod_i p_i(b_i | a)`.
pub fn transition_matrix(game: &GameSpec, profile: &StrategyProfile) -> DMatrix<f64> {
    let n = game.profile_count();
    let players = game.player_count();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut p = 1.0;
            for i in 0..players {
                p *= profile.get(i).prob(a, game.action_of(b, i));
                if p == 0.0 {
                    break;
                }
            }
            m[(a, b)] = p;
        }
    }
    m
}

/// `v^1(a) = prod_i initial_i(a_i)`.
pub fn initial_distribution(game: &GameSpec, profile: &StrategyProfile) -> ProfileDistribution {
    let probs = (0..game.profile_count())
        .map(|a| {
            (0..game.player_count())
                .map(|i| profile.get(i).initial().probs()[game.action_of(a, i)])
                .product()
        })
        .collect();
    ProfileDistribution::new(probs).expect("product of mixed actions is a distribution")
}

pub fn average_distribution(
    game: &GameSpec,
    profile: &StrategyProfile,
    schedule: &ContinuationSchedule,
    options: &AverageOptions,
) -> Result<AvgDistributionResult, DynamicsError> {
    if options.tol <= 0.0 {
        return Err(DynamicsError::InvalidTolerance);
    }
    schedule.validate()?;
    let m = transition_matrix(game, profile);
    let v1 = initial_distribution(game, profile);
    average_from_chain(&m, &v1, schedule, options)
}

/// [`average_distribution`] for an explicit chain and start distribution.
pub fn average_from_chain(
    m: &DMatrix<f64>,
    v1: &ProfileDistribution,
    schedule: &ContinuationSchedule,
    options: &AverageOptions,
) -> Result<AvgDistributionResult, DynamicsError> {
    let start = DVector::from_column_slice(v1.probs());
    match schedule {
        ContinuationSchedule::Infinite => cesaro_limit(m, &start, options),
        ContinuationSchedule::Delta(delta) => Ok(delta_closed_form(m, &start, *delta)),
        ContinuationSchedule::FiniteHorizon(_) => truncated_sum(m, &start, schedule, options),
        ContinuationSchedule::Custom { .. } => match schedule.expected_rounds(1)? {
            // p(t) is eventually a positive constant, so the weighted
            // average has the plain Cesàro limit.
            ExpectedRounds::Infinite => cesaro_limit(m, &start, options),
            ExpectedRounds::Finite(_) => truncated_sum(m, &start, schedule, options),
        },
    }
}

pub fn effective_payoffs(
    game: &GameSpec,
    profile: &StrategyProfile,
    schedule: &ContinuationSchedule,
    options: &AverageOptions,
) -> Result<Vec<f64>, DynamicsError> {
    let avg = average_distribution(game, profile, schedule, options)?;
    Ok(game.expected_payoffs(&avg.dist)?)
}

fn to_distribution(v: &DVector<f64>) -> ProfileDistribution {
    let probs: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = probs.iter().sum();
    ProfileDistribution::new(probs.iter().map(|x| x / sum).collect())
        .expect("renormalised nonnegative vector")
}

fn cesaro_limit(
    m: &DMatrix<f64>,
    start: &DVector<f64>,
    options: &AverageOptions,
) -> Result<AvgDistributionResult, DynamicsError> {
    if let Some((v, residual)) = unique_stationary(m) {
        return Ok(AvgDistributionResult {
            dist: to_distribution(&v),
            method: AverageMethod::Cesaro { fast_path: true },
            iterations: 0,
            residual,
        });
    }

    // The lazy chain (I + M) / 2 shares M's eigenvalue-1 projector and has no
    // other unit-modulus eigenvalues, so its powers converge to the Cesàro
    // limit operator of M even when M is periodic or reducible.
    let n = m.nrows();
    let threshold = options.tol.max(16.0 * f64::EPSILON * n as f64);
    let mut lazy = (DMatrix::identity(n, n) + m) * 0.5;
    let mut residual = f64::INFINITY;
    for k in 1..=options.max_squarings {
        let squared = &lazy * &lazy;
        residual = (&squared - &lazy).amax();
        lazy = squared;
        if residual < threshold {
            let v = lazy.transpose() * start;
            return Ok(AvgDistributionResult {
                dist: to_distribution(&v),
                method: AverageMethod::Cesaro { fast_path: false },
                iterations: k,
                residual,
            });
        }
    }
    Err(DynamicsError::NoConvergence {
        iterations: options.max_squarings,
        residual,
    })
}

/// Solves `v (I - M) = 0`, `sum v = 1` when the solution is unique.
fn unique_stationary(m: &DMatrix<f64>) -> Option<(DVector<f64>, f64)> {
    let n = m.nrows();
    let mut system = DMatrix::identity(n, n) - m.transpose();
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;

    let lu = system.full_piv_lu();
    let u = lu.u();
    let diag = u.diagonal();
    let largest = diag.amax();
    let smallest = diag.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    if largest == 0.0 || smallest < STATIONARY_PIVOT_TOL * largest {
        return None;
    }
    let v = lu.solve(&rhs)?;
    if v.iter().any(|&x| !x.is_finite() || x < -1e-9) {
        return None;
    }
    let residual = (m.transpose() * &v - &v).amax();
    Some((v, residual))
}

/// `v̄ = (1 - δ) v^1 (I - δM)^{-1}`.
fn delta_closed_form(m: &DMatrix<f64>, start: &DVector<f64>, delta: f64) -> AvgDistributionResult {
    let n = m.nrows();
    let system = DMatrix::identity(n, n) - m.transpose() * delta;
    let rhs = start * (1.0 - delta);
    let v = system
        .clone()
        .lu()
        .solve(&rhs)
        .expect("I - δM is nonsingular for δ < 1");
    let residual = (&system * &v - &rhs).amax();
    AvgDistributionResult {
        dist: to_distribution(&v),
        method: AverageMethod::ClosedFormDelta,
        iterations: 0,
        residual,
    }
}

fn truncated_sum(
    m: &DMatrix<f64>,
    start: &DVector<f64>,
    schedule: &ContinuationSchedule,
    options: &AverageOptions,
) -> Result<AvgDistributionResult, DynamicsError> {
    let explicit = match schedule {
        ContinuationSchedule::Custom { values, .. } => values.len(),
        _ => 0,
    };
    let mt = m.transpose();
    let mut v = start.clone();
    let mut numerator = DVector::zeros(start.len());
    let mut weight_sum = 0.0;
    let mut p = 1.0;
    for t in 1..=options.max_terms {
        numerator.axpy(p, &v, 1.0);
        weight_sum += p;
        p *= schedule.continuation(t);
        if p == 0.0 {
            return Ok(AvgDistributionResult {
                dist: to_distribution(&(numerator / weight_sum)),
                method: AverageMethod::TruncatedSum,
                iterations: t,
                residual: 0.0,
            });
        }
        if t >= explicit {
            if let ContinuationSchedule::Custom { tail, .. } = schedule {
                // remaining weight is p (1 + tail + tail^2 + ...)
                let remaining = p / (1.0 - tail);
                if remaining / (weight_sum + remaining) < options.tol {
                    return Ok(AvgDistributionResult {
                        dist: to_distribution(&(numerator / weight_sum)),
                        method: AverageMethod::TruncatedSum,
                        iterations: t,
                        residual: remaining / (weight_sum + remaining),
                    });
                }
            }
        }
        v = &mt * v;
    }
    Err(DynamicsError::NoConvergence {
        iterations: options.max_terms,
        residual: p,
    })
}
