//! Linear payoff relations `alpha_1 ū_1 + ... + alpha_n ū_n + gamma = 0`.

use std::fmt;

use thiserror::Error;

use crate::game::GameSpec;

/// Coefficients below this (after scaling to unit max-norm) count as zero
/// when picking the sign of the canonical form.
const SIGN_TOL: f64 = 1e-9;

/// `w = sum alpha_i u_i + gamma 1` vanishing below this makes a relation trivial.
pub const TRIVIAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelationError {
    #[error("relation coefficients are all zero")]
    AllZero,
    #[error("relation has {got} payoff coefficients, game has {expected} players")]
    WrongLength { expected: usize, got: usize },
    #[error("non-finite relation coefficient")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffRelation {
    alpha: Vec<f64>,
    gamma: f64,
}

impl PayoffRelation {
    pub fn new(alpha: Vec<f64>, gamma: f64) -> Result<Self, RelationError> {
        if alpha.iter().chain(Some(&gamma)).any(|x| !x.is_finite()) {
            return Err(RelationError::NonFinite);
        }
        if alpha.iter().all(|&a| a == 0.0) && gamma == 0.0 {
            return Err(RelationError::AllZero);
        }
        Ok(Self { alpha, gamma })
    }

    /// `ū_player = value`.
    pub fn pin(player_count: usize, player: usize, value: f64) -> Self {
        let mut alpha = vec![0.0; player_count];
        alpha[player] = 1.0;
        Self {
            alpha,
            gamma: -value,
        }
    }

    /// `ū_i = ū_j`.
    pub fn equalizer(player_count: usize, i: usize, j: usize) -> Self {
        let mut alpha = vec![0.0; player_count];
        alpha[i] = 1.0;
        alpha[j] = -1.0;
        Self { alpha, gamma: 0.0 }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(alpha_1, ..., alpha_n, gamma)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = self.alpha.clone();
        c.push(self.gamma);
        c
    }

    pub fn from_coefficients(coefficients: &[f64]) -> Result<Self, RelationError> {
        let (gamma, alpha) = coefficients.split_last().ok_or(RelationError::AllZero)?;
        Self::new(alpha.to_vec(), *gamma)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, RelationError> {
        Self::new(
            self.alpha.iter().map(|a| a * factor).collect(),
            self.gamma * factor,
        )
    }

    /// Largest-magnitude coefficient scaled to one, first nonzero positive.
    pub fn canonical(&self) -> Self {
        let coefficients = self.coefficients();
        let largest = coefficients.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut scaled: Vec<f64> = coefficients.iter().map(|x| x / largest).collect();
        let first = scaled
            .iter()
            .find(|x| x.abs() > SIGN_TOL)
            .copied()
            .unwrap_or(1.0);
        if first < 0.0 {
            scaled.iter_mut().for_each(|x| *x = -*x);
        }
        for x in scaled.iter_mut() {
            if *x == 0.0 {
                *x = 0.0; // drop negative zero
            }
        }
        Self::from_coefficients(&scaled).expect("nonzero after scaling")
    }

    /// Canonical forms agree within `tol` in every coefficient.
    pub fn equivalent(&self, other: &Self, tol: f64) -> bool {
        if self.alpha.len() != other.alpha.len() {
            return false;
        }
        let (a, b) = (
            self.canonical().coefficients(),
            other.canonical().coefficients(),
        );
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    pub fn check_game(&self, game: &GameSpec) -> Result<(), RelationError> {
        if self.alpha.len() != game.player_count() {
            return Err(RelationError::WrongLength {
                expected: game.player_count(),
                got: self.alpha.len(),
            });
        }
        Ok(())
    }

    /// `w = sum_i alpha_i u_i + gamma 1`, one entry per profile.
    pub fn combined_payoff_vector(&self, game: &GameSpec) -> Vec<f64> {
        (0..game.profile_count())
            .map(|a| {
                game.payoff_row(a)
                    .iter()
                    .zip(&self.alpha)
                    .map(|(u, alpha)| u * alpha)
                    .sum::<f64>()
                    + self.gamma
            })
            .collect()
    }

    /// `sum alpha_i payoffs_i + gamma`.
    pub fn residual(&self, payoffs: &[f64]) -> f64 {
        payoffs
            .iter()
            .zip(&self.alpha)
            .map(|(u, a)| u * a)
            .sum::<f64>()
            + self.gamma
    }
}

/// A relation holds for every strategy profile exactly when its combined
/// payoff vector vanishes. Compared in canonical scale.
pub fn is_trivial(game: &GameSpec, relation: &PayoffRelation) -> bool {
    relation
        .canonical()
        .combined_payoff_vector(game)
        .iter()
        .all(|x| x.abs() <= TRIVIAL_TOL)
}

impl fmt::Display for PayoffRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, a) in self.alpha.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            if wrote {
                write!(f, " {} ", if *a < 0.0 { '-' } else { '+' })?;
                write!(f, "{}*u{}", a.abs(), i + 1)?;
            } else {
                write!(f, "{}*u{}", a, i + 1)?;
            }
            wrote = true;
        }
        if self.gamma != 0.0 || !wrote {
            if wrote {
                write!(
                    f,
                    " {} {}",
                    if self.gamma < 0.0 { '-' } else { '+' },
                    self.gamma.abs()
                )?;
            } else {
                write!(f, "{}", self.gamma)?;
            }
        }
        write!(f, " = 0")
    }
}
