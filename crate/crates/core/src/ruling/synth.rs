//! Ruling-strategy synthesis.
//!
//! Write the full ruling family with coefficients `y_j`, one per joint action
//! `j` of the controllers (the family sums to zero, so `y` is defined up to a
//! shift). For a profile `a` whose controller joint action is `g(a)`, the
//! target equation `sum_j y_j ũ_j = w` reads
//!
//! ```text
//! infinite form:  sum_j y_j s_j(a) = w(a) + y_g(a)
//! δ form:         δ sum_j y_j s_j(a) = w(a) + y_g(a) - (1 - δ) c,   c = sum_j y_j s_{j|0}
//! ```
//!
//! For fixed `y` the rows decouple, and `sum_j y_j s_j(a)` over product-form
//! conditionals `s_j(a) = prod_k p_k(j_k | a)` ranges over exactly
//! `[min y, max y]`: it is multilinear in the members' mixed actions, so its
//! extremes sit at pure joint actions and every value in between is reached
//! along a path. Feasibility therefore depends on `y` (and `c`) alone. Fixing
//! which joint actions carry `min y` and `max y` turns it into a small linear
//! program, and enumerating those pairs decides the question exactly. In the
//! infinite form the pair test is the interval condition "`w <= 0` on the
//! max group and `w >= 0` on the min group".

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use super::basis::{joint_conditional, ruling_basis, ScheduleForm};
use super::detect::relation_enforced;
use super::{normalize_controllers, JointActions, RulingError};
use crate::game::GameSpec;
use crate::relation::{is_trivial, PayoffRelation};
use crate::schedule::ContinuationSchedule;
use crate::strategy::MarkovStrategy;

/// How alliance members may coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllianceMode {
    /// Each member randomises on its own; joint conditionals are products.
    Independent,
    /// Members share randomness; joint conditionals are arbitrary.
    Correlated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisTarget {
    pub relation: PayoffRelation,
    pub controllers: Vec<usize>,
    pub mode: AllianceMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Round-trip tolerance for the detected relation.
    pub round_trip_tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            round_trip_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    /// One strategy per controller, sorted by player.
    pub strategies: Vec<MarkovStrategy>,
    /// `joint_conditionals[a][j]`: probability of controller joint action `j`
    /// after profile `a`. Always product-form.
    pub joint_conditionals: Vec<Vec<f64>>,
    /// Coefficients on the dropped-last ruling basis.
    pub y: Vec<f64>,
    /// Smallest `min(p, 1 - p)` over all probability entries.
    pub margin: f64,
    /// `sum alpha_i u_i + gamma 1`.
    pub w: Vec<f64>,
    /// `max |sum_j y_j ũ_j - w|` for the returned strategies.
    pub equation_residual: f64,
    pub form: ScheduleForm,
    pub mode: AllianceMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Infinite form: no pair of joint actions has `w <= 0` on one group and
    /// `w >= 0` on another. A proof.
    ExactIntervalEmpty,
    /// δ form: every extremal-pair linear program is infeasible. A proof up
    /// to solver tolerance.
    LinearProgramInfeasible,
    /// The solver gave up; nothing is proven.
    SearchBudgetExhausted,
}

impl CertificateKind {
    pub fn is_proof(&self) -> bool {
        !matches!(self, Self::SearchBudgetExhausted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    pub kind: CertificateKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisOutcome {
    Feasible(Box<SynthesisResult>),
    Infeasible(Infeasibility),
}

impl SynthesisOutcome {
    pub fn feasible(&self) -> Option<&SynthesisResult> {
        match self {
            Self::Feasible(r) => Some(r),
            Self::Infeasible(_) => None,
        }
    }
}

/// Relative tolerance for the sign tests on `w`.
const SIGN_TOL: f64 = 1e-12;

pub fn synthesize(
    game: &GameSpec,
    schedule: &ContinuationSchedule,
    target: &SynthesisTarget,
    options: &SynthesisOptions,
) -> Result<SynthesisOutcome, RulingError> {
    let form = ScheduleForm::from_schedule(schedule)?;
    target.relation.check_game(game)?;
    if is_trivial(game, &target.relation) {
        return Err(RulingError::TrivialTarget);
    }
    let controllers = normalize_controllers(game, &target.controllers)?;
    let joint = JointActions::new(game, &controllers)?;
    let w = target.relation.combined_payoff_vector(game);
    let groups: Vec<usize> = (0..game.profile_count())
        .map(|a| joint.of_profile(game, a))
        .collect();
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let pairs: Vec<(usize, usize)> = match form {
        ScheduleForm::Infinite => {
            let pairs = sign_pairs(&w, &groups, joint.count(), scale);
            if pairs.is_empty() {
                return Ok(SynthesisOutcome::Infeasible(Infeasibility {
                    kind: CertificateKind::ExactIntervalEmpty,
                    detail: "no controller joint action has w <= 0 on all its profiles while \
                             another has w >= 0 on all of its"
                        .into(),
                }));
            }
            pairs
        }
        ScheduleForm::Delta(_) => (0..joint.count())
            .flat_map(|lo| (0..joint.count()).map(move |hi| (lo, hi)))
            .filter(|(lo, hi)| lo != hi)
            .collect(),
    };

    let delta = match form {
        ScheduleForm::Infinite => 1.0,
        ScheduleForm::Delta(d) => d,
    };
    let mut best: Option<(f64, Coefficients)> = None;
    let mut solver_failures = 0;
    for &(lo, hi) in &pairs {
        match solve_pair(&w, &groups, joint.count(), lo, hi, delta, scale) {
            PairResult::Solved(objective, coefficients) => {
                if best.as_ref().is_none_or(|(b, _)| objective > *b) {
                    best = Some((objective, coefficients));
                }
            }
            PairResult::Infeasible => {}
            PairResult::Failed => solver_failures += 1,
        }
    }

    let Some((_, mut coefficients)) = best else {
        let kind = if solver_failures > 0 {
            CertificateKind::SearchBudgetExhausted
        } else if matches!(form, ScheduleForm::Infinite) {
            // sign pairs exist but no LP succeeded; should not happen
            CertificateKind::SearchBudgetExhausted
        } else {
            CertificateKind::LinearProgramInfeasible
        };
        return Ok(SynthesisOutcome::Infeasible(Infeasibility {
            kind,
            detail: format!(
                "{} extremal pairs examined, {solver_failures} solver failures",
                pairs.len()
            ),
        }));
    };
    if matches!(form, ScheduleForm::Infinite) {
        coefficients.repair_infinite(&w, &groups);
    }

    let strategies = build_strategies(game, &joint, &w, &groups, &coefficients, delta)?;
    let result = finish(
        game,
        &joint,
        strategies,
        &coefficients,
        w,
        form,
        target.mode,
    )?;

    if !relation_enforced(
        game,
        &result.strategies,
        schedule,
        &target.relation,
        options.round_trip_tol,
    )? {
        return Err(RulingError::RoundTripFailed(format!(
            "{} not detected (equation residual {:e})",
            target.relation, result.equation_residual
        )));
    }
    Ok(SynthesisOutcome::Feasible(Box::new(result)))
}

/// Ordered `(min, max)` joint-action pairs with `w >= 0` on the min group and
/// `w <= 0` on the max group.
fn sign_pairs(w: &[f64], groups: &[usize], count: usize, scale: f64) -> Vec<(usize, usize)> {
    let eps = SIGN_TOL * scale.max(1.0);
    let mut nonneg = vec![true; count];
    let mut nonpos = vec![true; count];
    for (&x, &g) in w.iter().zip(groups) {
        if x < -eps {
            nonneg[g] = false;
        }
        if x > eps {
            nonpos[g] = false;
        }
    }
    let mut pairs = Vec::new();
    for lo in (0..count).filter(|&j| nonneg[j]) {
        for hi in (0..count).filter(|&j| nonpos[j]) {
            if lo != hi {
                pairs.push((lo, hi));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone)]
struct Coefficients {
    /// Full-family coefficients, `y[lo] = 0`.
    y: Vec<f64>,
    /// Target of `sum_j y_j s_{j|0}` (δ form only).
    c: f64,
    lo: usize,
    hi: usize,
}

impl Coefficients {
    /// Snaps LP round-off back inside the exact infinite-form intervals:
    /// `y_j in [-min w_j, y_hi - max w_j]` per group `j`.
    fn repair_infinite(&mut self, w: &[f64], groups: &[usize]) {
        let count = self.y.len();
        let mut lo_w = vec![f64::INFINITY; count];
        let mut hi_w = vec![f64::NEG_INFINITY; count];
        for (&x, &g) in w.iter().zip(groups) {
            lo_w[g] = lo_w[g].min(x);
            hi_w[g] = hi_w[g].max(x);
        }
        let spread = (0..count)
            .filter(|&j| lo_w[j].is_finite())
            .map(|j| hi_w[j] - lo_w[j])
            .fold(0.0, f64::max);
        let top = self.y[self.hi].max(spread);
        self.y[self.hi] = top;
        self.y[self.lo] = 0.0;
        for j in 0..count {
            if j == self.lo || j == self.hi || !lo_w[j].is_finite() {
                self.y[j] = self.y[j].clamp(0.0, top);
                continue;
            }
            let (low, high) = ((-lo_w[j]).max(0.0), (top - hi_w[j]).min(top));
            self.y[j] = self.y[j].clamp(low, high.max(low));
        }
    }
}

enum PairResult {
    Solved(f64, Coefficients),
    Infeasible,
    Failed,
}

/// Linear program for a fixed `(argmin, argmax)` pair. Variables: `y_j` for
/// `j != lo` (with `y_lo = 0`), `c` (δ form), and a per-profile slack `e_a`
/// that keeps each row target away from both ends of `[0, y_hi]`. The
/// objective rewards slack and lightly penalises large `y_hi`.
fn solve_pair(
    w: &[f64],
    groups: &[usize],
    count: usize,
    lo: usize,
    hi: usize,
    delta: f64,
    scale: f64,
) -> PairResult {
    let scale = scale.max(1e-300);
    let y_bound = 1e4 * scale / delta.max(1e-3);
    let slack_bound = scale;
    let penalty = 1e-3;
    let discounted = delta < 1.0;

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let mut y_vars: Vec<Option<Variable>> = vec![None; count];
    for (j, slot) in y_vars.iter_mut().enumerate() {
        if j != lo {
            let objective = if j == hi { -penalty } else { 0.0 };
            *slot = Some(problem.add_var(objective, (0.0, y_bound)));
        }
    }
    let y_hi = y_vars[hi].expect("hi != lo");
    for (j, var) in y_vars.iter().enumerate() {
        if let Some(v) = var {
            if j != hi {
                problem.add_constraint([(*v, 1.0), (y_hi, -1.0)], ComparisonOp::Le, 0.0);
            }
        }
    }
    let c_var = discounted.then(|| {
        let c = problem.add_var(0.0, (0.0, y_bound));
        problem.add_constraint([(c, 1.0), (y_hi, -1.0)], ComparisonOp::Le, 0.0);
        c
    });

    for (&wa, &g) in w.iter().zip(groups) {
        let e = problem.add_var(1.0, (0.0, slack_bound));
        // lower: y_g - (1-δ) c - δ e >= -w
        let mut lower = Vec::with_capacity(3);
        // upper: y_g - (1-δ) c - δ y_hi + δ e <= -w
        let mut upper = Vec::with_capacity(4);
        let mut y_hi_coef = -delta;
        if let Some(v) = y_vars[g] {
            if g == hi {
                y_hi_coef += 1.0;
                lower.push((v, 1.0));
            } else {
                lower.push((v, 1.0));
                upper.push((v, 1.0));
            }
        }
        if y_hi_coef != 0.0 {
            upper.push((y_hi, y_hi_coef));
        }
        if let Some(c) = c_var {
            lower.push((c, -(1.0 - delta)));
            upper.push((c, -(1.0 - delta)));
        }
        lower.push((e, -delta));
        upper.push((e, delta));
        problem.add_constraint(lower.as_slice(), ComparisonOp::Ge, -wa);
        problem.add_constraint(upper.as_slice(), ComparisonOp::Le, -wa);
    }

    match problem.solve() {
        Ok(solution) => {
            let y = y_vars
                .iter()
                .map(|v| v.map_or(0.0, |v| solution[v]))
                .collect();
            let c = c_var.map_or(0.0, |c| solution[c]);
            PairResult::Solved(solution.objective(), Coefficients { y, c, lo, hi })
        }
        Err(minilp::Error::Infeasible) => PairResult::Infeasible,
        Err(minilp::Error::Unbounded) => PairResult::Failed,
    }
}

fn build_strategies(
    game: &GameSpec,
    joint: &JointActions,
    w: &[f64],
    groups: &[usize],
    coefficients: &Coefficients,
    delta: f64,
) -> Result<Vec<MarkovStrategy>, RulingError> {
    let y = &coefficients.y;
    let (y_min, y_max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let members = joint.member_counts();
    let uniform: Vec<Vec<f64>> = members.iter().map(|&m| vec![1.0 / m as f64; m]).collect();

    let mut rows: Vec<Vec<Vec<f64>>> =
        vec![Vec::with_capacity(game.profile_count()); members.len()];
    for (a, (&wa, &g)) in w.iter().zip(groups).enumerate() {
        let mixed = if delta == 0.0 {
            uniform.clone()
        } else {
            let value = (wa + y[g] - (1.0 - delta) * coefficients.c) / delta;
            product_for_value(y, joint, value.clamp(y_min, y_max))
        };
        debug_assert_eq!(a, rows[0].len());
        for (k, p) in mixed.into_iter().enumerate() {
            rows[k].push(p);
        }
    }
    let initial = if delta < 1.0 {
        product_for_value(y, joint, coefficients.c.clamp(y_min, y_max))
    } else {
        uniform
    };

    joint
        .controllers()
        .iter()
        .enumerate()
        .map(|(k, &player)| {
            MarkovStrategy::new(game, player, initial[k].clone(), rows[k].clone())
                .map_err(RulingError::from)
        })
        .collect()
}

/// Per-member mixed actions whose product gives `sum_j y_j s_j = value`.
///
/// Walks from the uniform product toward the pure joint action holding the
/// extreme of `y` on the value's side, `p_k = (1 - λ) uniform_k + λ e_k`, and
/// bisects on `λ`. The walk is continuous and ends at that extreme, so any
/// value between the uniform average and the extreme is hit.
fn product_for_value(y: &[f64], joint: &JointActions, value: f64) -> Vec<Vec<f64>> {
    let members = joint.member_counts();
    let at = |lambda: f64, vertex: &[usize]| -> (Vec<Vec<f64>>, f64) {
        let mixed: Vec<Vec<f64>> = members
            .iter()
            .zip(vertex)
            .map(|(&m, &v)| {
                (0..m)
                    .map(|act| {
                        let pure = if act == v { 1.0 } else { 0.0 };
                        (1.0 - lambda) / m as f64 + lambda * pure
                    })
                    .collect()
            })
            .collect();
        let total = (0..joint.count())
            .map(|j| {
                let actions = joint.decode(j);
                let weight: f64 = mixed.iter().zip(&actions).map(|(p, &act)| p[act]).product();
                weight * y[j]
            })
            .sum();
        (mixed, total)
    };

    let (argmin, argmax) = y.iter().enumerate().fold((0, 0), |(lo, hi), (j, &x)| {
        (
            if x < y[lo] { j } else { lo },
            if x > y[hi] { j } else { hi },
        )
    });
    let center = at(0.0, &vec![0; members.len()]);
    if value == center.1 {
        return center.0;
    }
    let vertex = joint.decode(if value > center.1 { argmax } else { argmin });
    let increasing = value > center.1;
    let (mut low, mut high) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (low + high);
        if mid == low || mid == high {
            break;
        }
        let reached = at(mid, &vertex).1;
        if (reached < value) == increasing {
            low = mid;
        } else {
            high = mid;
        }
    }
    let (low_mixed, low_value) = at(low, &vertex);
    let (high_mixed, high_value) = at(high, &vertex);
    if (low_value - value).abs() <= (high_value - value).abs() {
        low_mixed
    } else {
        high_mixed
    }
}

fn finish(
    game: &GameSpec,
    joint: &JointActions,
    strategies: Vec<MarkovStrategy>,
    coefficients: &Coefficients,
    w: Vec<f64>,
    form: ScheduleForm,
    mode: AllianceMode,
) -> Result<SynthesisResult, RulingError> {
    let count = joint.count();
    // shift so the dropped last vector carries coefficient zero
    let last = coefficients.y[count - 1];
    let y: Vec<f64> = coefficients.y[..count - 1]
        .iter()
        .map(|v| v - last)
        .collect();
    let basis = ruling_basis(game, &strategies, form)?;
    let combined = basis.combine(&y);
    let equation_residual = combined
        .iter()
        .zip(&w)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let mut joint_conditionals = vec![vec![0.0; count]; game.profile_count()];
    for j in 0..count {
        let (column, _) = joint_conditional(game, &strategies, joint, j);
        for (row, p) in joint_conditionals.iter_mut().zip(column) {
            row[j] = p;
        }
    }
    let margin = strategies
        .iter()
        .flat_map(|s| {
            (0..s.profile_count())
                .flat_map(move |a| s.row(a).to_vec())
                .chain(s.initial().probs().to_vec())
        })
        .fold(f64::INFINITY, |m, p| m.min(p.min(1.0 - p)))
        .max(0.0);

    Ok(SynthesisResult {
        strategies,
        joint_conditionals,
        y,
        margin,
        w,
        equation_residual,
        form,
        mode,
    })
}
