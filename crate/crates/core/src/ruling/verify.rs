use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::{sample_opponents, SampleKind};
use super::{complement, controller_strategies, RulingError};
use crate::dynamics::{effective_payoffs, AverageOptions, DynamicsError};
use crate::game::GameSpec;
use crate::relation::PayoffRelation;
use crate::schedule::ContinuationSchedule;
use crate::strategy::{MarkovStrategy, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Share of samples drawn with 0/1 entries (the last ones).
    pub boundary_fraction: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            tol: 1e-8,
            seed: 0,
            boundary_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: usize,
    pub kind: SampleKind,
    pub payoffs: Vec<f64>,
    /// `sum alpha_i ū_i + gamma`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub max_abs_violation: f64,
    pub max_interior_violation: f64,
    pub max_boundary_violation: f64,
    pub worst_opponent: Option<Vec<MarkovStrategy>>,
    pub pass: bool,
    pub records: Vec<SampleRecord>,
    /// Samples whose average distribution failed to converge.
    pub skipped: usize,
}

/// Samples opponent Markov strategies and measures how far the relation is
/// from holding. Deterministic given the seed: sample `k` draws from stream
/// `k` of a ChaCha8 generator seeded with `seed`.
pub fn verify_relation(
    game: &GameSpec,
    schedule: &ContinuationSchedule,
    controllers: &[MarkovStrategy],
    relation: &PayoffRelation,
    config: &VerifyConfig,
) -> Result<VerifyReport, RulingError> {
    if config.samples == 0 {
        return Err(RulingError::InvalidArgument(
            "samples must be at least 1".into(),
        ));
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(RulingError::InvalidArgument(
            "tolerance must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.boundary_fraction) {
        return Err(RulingError::InvalidArgument(
            "boundary fraction must lie in [0, 1]".into(),
        ));
    }
    relation.check_game(game)?;
    let (joint, controllers) = controller_strategies(game, controllers)?;
    let others = complement(game, joint.controllers());
    let boundary = (config.samples as f64 * config.boundary_fraction).round() as usize;
    let first_boundary = config.samples - boundary.min(config.samples);
    let options = AverageOptions::default();

    let mut report = VerifyReport {
        max_abs_violation: 0.0,
        max_interior_violation: 0.0,
        max_boundary_violation: 0.0,
        worst_opponent: None,
        pass: true,
        records: Vec::with_capacity(config.samples),
        skipped: 0,
    };
    for id in 0..config.samples {
        let kind = if id >= first_boundary {
            SampleKind::Boundary
        } else {
            SampleKind::Interior
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(id as u64);
        let opponents = sample_opponents(&mut rng, game, &others, kind);
        let profile = StrategyProfile::combine(game, &controllers, &opponents)?;
        let payoffs = match effective_payoffs(game, &profile, schedule, &options) {
            Ok(p) => p,
            Err(DynamicsError::NoConvergence { .. }) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let residual = relation.residual(&payoffs);
        let violation = residual.abs();
        match kind {
            SampleKind::Interior => {
                report.max_interior_violation = report.max_interior_violation.max(violation)
            }
            SampleKind::Boundary => {
                report.max_boundary_violation = report.max_boundary_violation.max(violation)
            }
        }
        if violation > report.max_abs_violation || report.worst_opponent.is_none() {
            report.max_abs_violation = report.max_abs_violation.max(violation);
            report.worst_opponent = Some(opponents);
        }
        report.records.push(SampleRecord {
            id,
            kind,
            payoffs,
            residual,
        });
    }
    report.pass = report.max_abs_violation <= config.tol;
    Ok(report)
}
