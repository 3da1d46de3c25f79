//! Continuation schedules `c(t)`: the probability that round `t + 1` is
//! played once round `t` has been played.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("discount factor {0} outside [0, 1)")]
    InvalidDelta(f64),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("continuation value {0} outside [0, 1]")]
    InvalidContinuation(f64),
    #[error("truncation cap must be at least 1")]
    InvalidCap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuationSchedule {
    /// `c(t) = 1` for all rounds.
    Infinite,
    /// `c(t) = delta` for all rounds.
    Delta(f64),
    /// Exactly `T` rounds: `c(t) = 1` for `t < T` and `0` afterwards.
    FiniteHorizon(usize),
    /// `c(t) = values[t - 1]` for listed rounds, `tail` afterwards.
    Custom { values: Vec<f64>, tail: f64 },
}

/// Result of [`ContinuationSchedule::expected_rounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectedRounds {
    Finite(f64),
    Infinite,
}

impl ExpectedRounds {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }
}

/// The gate for strict-Markov ruling vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleClass {
    InfiniteExpectedRounds,
    DeltaRepeated(f64),
    Other,
}

impl fmt::Display for ScheduleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InfiniteExpectedRounds => write!(f, "infinite-expected-rounds"),
            Self::DeltaRepeated(d) => write!(f, "delta-repeated({d})"),
            Self::Other => write!(f, "other"),
        }
    }
}

impl ContinuationSchedule {
    pub fn delta(delta: f64) -> Result<Self, ScheduleError> {
        let s = Self::Delta(delta);
        s.validate()?;
        Ok(s)
    }

    pub fn horizon(rounds: usize) -> Result<Self, ScheduleError> {
        let s = Self::FiniteHorizon(rounds);
        s.validate()?;
        Ok(s)
    }

    pub fn custom(values: Vec<f64>, tail: f64) -> Result<Self, ScheduleError> {
        let s = Self::Custom { values, tail };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        match self {
            Self::Infinite => Ok(()),
            Self::Delta(d) => {
                if (0.0..1.0).contains(d) {
                    Ok(())
                } else {
                    Err(ScheduleError::InvalidDelta(*d))
                }
            }
            Self::FiniteHorizon(t) => {
                if *t >= 1 {
                    Ok(())
                } else {
                    Err(ScheduleError::InvalidHorizon)
                }
            }
            Self::Custom { values, tail } => values
                .iter()
                .chain(std::iter::once(tail))
                .find(|c| !(0.0..=1.0).contains(*c))
                .map_or(Ok(()), |c| Err(ScheduleError::InvalidContinuation(*c))),
        }
    }

    /// `c(t)` for `t >= 1`.
    pub fn continuation(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self {
            Self::Infinite => 1.0,
            Self::Delta(d) => *d,
            Self::FiniteHorizon(horizon) => {
                if t < *horizon {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Custom { values, tail } => values.get(t - 1).copied().unwrap_or(*tail),
        }
    }

    /// `p(1), ..., p(t_max)` with `p(t) = c(1) c(2) ... c(t - 1)`.
    pub fn survival_probabilities(&self, t_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(t_max);
        let mut p = 1.0;
        for t in 1..=t_max {
            out.push(p);
            p *= self.continuation(t);
        }
        out
    }

    /// `sum_t p(t)`. `cap` only guards the argument; every variant has a
    /// closed form.
    pub fn expected_rounds(&self, cap: usize) -> Result<ExpectedRounds, ScheduleError> {
        if cap < 1 {
            return Err(ScheduleError::InvalidCap);
        }
        Ok(match self {
            Self::Infinite => ExpectedRounds::Infinite,
            Self::Delta(d) => ExpectedRounds::Finite(1.0 / (1.0 - d)),
            Self::FiniteHorizon(t) => ExpectedRounds::Finite(*t as f64),
            Self::Custom { values, tail } => {
                let mut sum = 0.0;
                let mut p = 1.0;
                for c in values {
                    sum += p;
                    p *= c;
                }
                // Remaining terms are p, p*tail, p*tail^2, ...
                if p == 0.0 {
                    ExpectedRounds::Finite(sum)
                } else if *tail >= 1.0 {
                    ExpectedRounds::Infinite
                } else {
                    ExpectedRounds::Finite(sum + p / (1.0 - tail))
                }
            }
        })
    }

    pub fn classify(&self, tol: f64) -> ScheduleClass {
        match self {
            Self::Infinite => ScheduleClass::InfiniteExpectedRounds,
            Self::Delta(d) => ScheduleClass::DeltaRepeated(*d),
            // a single round is c = 0 everywhere
            Self::FiniteHorizon(1) => ScheduleClass::DeltaRepeated(0.0),
            Self::FiniteHorizon(_) => ScheduleClass::Other,
            Self::Custom { values, tail } => {
                if *tail < 1.0 && values.iter().all(|c| (c - tail).abs() <= tol) {
                    ScheduleClass::DeltaRepeated(*tail)
                } else if matches!(self.expected_rounds(1), Ok(ExpectedRounds::Infinite)) {
                    ScheduleClass::InfiniteExpectedRounds
                } else {
                    ScheduleClass::Other
                }
            }
        }
    }
}

impl fmt::Display for ContinuationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinite => write!(f, "infinite"),
            Self::Delta(d) => write!(f, "delta:{d}"),
            Self::FiniteHorizon(t) => write!(f, "horizon:{t}"),
            Self::Custom { values, tail } => {
                write!(f, "custom({} values, tail {tail})", values.len())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_examples() {
        let p = ContinuationSchedule::Delta(0.9).survival_probabilities(3);
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 0.9).abs() < 1e-15);
        assert!((p[2] - 0.81).abs() < 1e-15);
        assert_eq!(
            ContinuationSchedule::Infinite.survival_probabilities(4),
            vec![1.0; 4]
        );
        let custom = ContinuationSchedule::custom(vec![0.5, 0.0], 0.0).unwrap();
        assert_eq!(custom.survival_probabilities(3), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn survival_is_nonincreasing() {
        let s = ContinuationSchedule::custom(vec![0.9, 1.0, 0.3, 0.7], 0.95).unwrap();
        let p = s.survival_probabilities(50);
        assert!(p.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn expected_rounds_examples() {
        match ContinuationSchedule::Delta(0.9).expected_rounds(1).unwrap() {
            ExpectedRounds::Finite(x) => assert!((x - 10.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            ContinuationSchedule::FiniteHorizon(2)
                .expected_rounds(1)
                .unwrap(),
            ExpectedRounds::Finite(2.0)
        );
        assert!(ContinuationSchedule::Infinite
            .expected_rounds(1)
            .unwrap()
            .is_infinite());
        assert_eq!(
            ContinuationSchedule::Infinite.expected_rounds(0),
            Err(ScheduleError::InvalidCap)
        );
    }

    #[test]
    fn custom_expected_rounds_matches_long_sum() {
        let s = ContinuationSchedule::custom(vec![0.9, 0.5, 1.0], 0.8).unwrap();
        let direct: f64 = s.survival_probabilities(2000).iter().sum();
        match s.expected_rounds(1).unwrap() {
            ExpectedRounds::Finite(x) => assert!((x - direct).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let unbounded = ContinuationSchedule::custom(vec![0.5], 1.0).unwrap();
        assert!(unbounded.expected_rounds(1).unwrap().is_infinite());
    }

    #[test]
    fn classification() {
        assert_eq!(
            ContinuationSchedule::Infinite.classify(1e-12),
            ScheduleClass::InfiniteExpectedRounds
        );
        assert_eq!(
            ContinuationSchedule::Delta(0.9).classify(1e-12),
            ScheduleClass::DeltaRepeated(0.9)
        );
        assert_eq!(
            ContinuationSchedule::FiniteHorizon(5).classify(1e-12),
            ScheduleClass::Other
        );
        assert_eq!(
            ContinuationSchedule::FiniteHorizon(1).classify(1e-12),
            ScheduleClass::DeltaRepeated(0.0)
        );
        let flat = ContinuationSchedule::custom(vec![0.7, 0.7 + 1e-14], 0.7).unwrap();
        assert_eq!(flat.classify(1e-12), ScheduleClass::DeltaRepeated(0.7));
        let ones = ContinuationSchedule::custom(vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(ones.classify(1e-12), ScheduleClass::InfiniteExpectedRounds);
        let bumpy = ContinuationSchedule::custom(vec![0.5, 0.9], 0.7).unwrap();
        assert_eq!(bumpy.classify(1e-12), ScheduleClass::Other);
    }

    #[test]
    fn validation() {
        assert_eq!(
            ContinuationSchedule::delta(1.0),
            Err(ScheduleError::InvalidDelta(1.0))
        );
        assert_eq!(
            ContinuationSchedule::horizon(0),
            Err(ScheduleError::InvalidHorizon)
        );
        assert!(ContinuationSchedule::custom(vec![1.2], 0.0).is_err());
        assert!(ContinuationSchedule::delta(0.0).is_ok());
    }
}
