//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use ruling::cli::{format_game, format_strategies, parse_document};
use ruling::dynamics::{average_distribution, transition_matrix, AverageOptions};
use ruling::game::GameSpec;
use ruling::relation::PayoffRelation;
use ruling::ruling::{
    detect_relations, falsify_candidate, full_family, relation_enforced, ruling_basis,
    sample_opponents, synthesize, verify_relation, AllianceMode, CertificateKind, SampleKind,
    ScheduleForm, SynthesisOptions, SynthesisOutcome, SynthesisTarget, VerifyConfig,
};
use ruling::schedule::ContinuationSchedule;
use ruling::strategy::{MarkovStrategy, StrategyProfile};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(limit: Duration, started: Instant, what: &str) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, || {
        format!("{what} took {took:.2?}, limit {limit:?}")
    })
}

fn verify_config(samples: usize, seed: u64) -> VerifyConfig {
    VerifyConfig {
        samples,
        tol: 1e-8,
        seed,
        boundary_fraction: 0.1,
    }
}

fn pin_reproduction() -> Result<String, String> {
    let started = Instant::now();
    let game = donation();
    let relation = PayoffRelation::pin(2, 1, 2.0);
    let report = verify_relation(
        &game,
        &ContinuationSchedule::Infinite,
        &[pin_two()],
        &relation,
        &verify_config(20_000, 7),
    )
    .map_err(|e| e.to_string())?;
    ensure(report.skipped == 0, || {
        format!("{} samples skipped", report.skipped)
    })?;
    ensure(report.max_interior_violation < 1e-8, || {
        format!(
            "interior max |u2 - 2| = {:e}",
            report.max_interior_violation
        )
    })?;
    ensure(report.max_boundary_violation < 1e-6, || {
        format!(
            "boundary max |u2 - 2| = {:e}",
            report.max_boundary_violation
        )
    })?;
    within(Duration::from_secs(60), started, "20000 samples")?;
    Ok(format!(
        "max |u2 - 2| interior {:.1e}, boundary {:.1e}, 20000 samples in {:.1?}",
        report.max_interior_violation,
        report.max_boundary_violation,
        started.elapsed()
    ))
}

fn equalizer_reproduction() -> Result<String, String> {
    let game = donation();
    let report = verify_relation(
        &game,
        &ContinuationSchedule::Infinite,
        &[equalizer()],
        &PayoffRelation::equalizer(2, 0, 1),
        &verify_config(20_000, 11),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        report.skipped == 0 && report.max_abs_violation < 1e-8,
        || {
            format!(
                "max |u1 - u2| = {:e}, skipped {}",
                report.max_abs_violation, report.skipped
            )
        },
    )?;
    Ok(format!(
        "max |u1 - u2| {:.1e} over 20000 samples",
        report.max_abs_violation
    ))
}

fn alliance_reproduction() -> Result<String, String> {
    let game = pgg();
    let mut details = Vec::new();
    for (name, pair, player) in [
        ("player 1", alliance_pin_first(), 0),
        ("player 3", alliance_pin_third(), 2),
    ] {
        let report = verify_relation(
            &game,
            &ContinuationSchedule::Infinite,
            &pair,
            &PayoffRelation::pin(3, player, 1.0),
            &verify_config(20_000, 13),
        )
        .map_err(|e| e.to_string())?;
        ensure(
            report.skipped == 0 && report.max_abs_violation < 1e-8,
            || format!("{name}: max violation {:e}", report.max_abs_violation),
        )?;
        details.push(format!(
            "{name} pinned, max {:.1e}",
            report.max_abs_violation
        ));
    }
    Ok(details.join("; "))
}

fn infeasibility_reproduction() -> Result<String, String> {
    let started = Instant::now();
    let game = pgg();
    for k in 0..81 {
        let g = -4.0 + 0.1 * k as f64;
        let target = SynthesisTarget {
            relation: PayoffRelation::pin(3, 2, g),
            controllers: vec![0],
            mode: AllianceMode::Independent,
        };
        let outcome = synthesize(
            &game,
            &ContinuationSchedule::Infinite,
            &target,
            &SynthesisOptions::default(),
        )
        .map_err(|e| format!("g = {g}: {e}"))?;
        match outcome {
            SynthesisOutcome::Infeasible(why)
                if why.kind == CertificateKind::ExactIntervalEmpty => {}
            other => return Err(format!("g = {g}: {other:?}")),
        }
    }
    within(Duration::from_secs(5), started, "81 syntheses")?;
    Ok(format!(
        "81/81 exact-interval certificates in {:.1?}",
        started.elapsed()
    ))
}

fn synthesis_round_trip() -> Result<String, String> {
    let game = donation();
    let mut details = Vec::new();
    for (alpha, gamma) in [(vec![0.0, 1.0], -2.0), (vec![1.0, -1.0], 0.0)] {
        let relation = PayoffRelation::new(alpha, gamma).unwrap();
        let target = SynthesisTarget {
            relation: relation.clone(),
            controllers: vec![0],
            mode: AllianceMode::Independent,
        };
        let schedule = ContinuationSchedule::Infinite;
        let outcome = synthesize(&game, &schedule, &target, &SynthesisOptions::default())
            .map_err(|e| e.to_string())?;
        let result = outcome
            .feasible()
            .ok_or_else(|| format!("{relation}: {outcome:?}"))?;
        let found =
            detect_relations(&game, &result.strategies, &schedule).map_err(|e| e.to_string())?;
        ensure(
            found.len() == 1 && found[0].equivalent(&relation.canonical(), 1e-8),
            || format!("{relation}: detected {found:?}"),
        )?;
        let report = verify_relation(
            &game,
            &schedule,
            &result.strategies,
            &relation,
            &verify_config(1000, 5),
        )
        .map_err(|e| e.to_string())?;
        ensure(report.pass, || {
            format!("{relation}: verify max {:e}", report.max_abs_violation)
        })?;
        details.push(format!(
            "{} ok (max {:.1e})",
            relation.canonical(),
            report.max_abs_violation
        ));
    }
    Ok(details.join("; "))
}

fn delta_form_validity() -> Result<String, String> {
    let game = pd();
    let schedule = ContinuationSchedule::Delta(0.9);
    let relation = PayoffRelation::pin(2, 1, 2.0);
    let target = SynthesisTarget {
        relation: relation.clone(),
        controllers: vec![0],
        mode: AllianceMode::Independent,
    };
    let outcome = synthesize(&game, &schedule, &target, &SynthesisOptions::default())
        .map_err(|e| e.to_string())?;
    let result = outcome.feasible().ok_or_else(|| format!("{outcome:?}"))?;
    let report = verify_relation(
        &game,
        &schedule,
        &result.strategies,
        &relation,
        &verify_config(1000, 17),
    )
    .map_err(|e| e.to_string())?;
    ensure(report.pass, || {
        format!("verify max {:e}", report.max_abs_violation)
    })?;

    // closed form against a hand-written 500-term sum
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for k in 0..100 {
        let kind = if k % 4 == 0 {
            SampleKind::Boundary
        } else {
            SampleKind::Interior
        };
        let opponents = sample_opponents(&mut rng, &game, &[1], kind);
        let profile = StrategyProfile::combine(&game, &result.strategies, &opponents).unwrap();
        let closed = average_distribution(&game, &profile, &schedule, &AverageOptions::default())
            .map_err(|e| e.to_string())?;
        let truncated = oracle_delta(&game, &profile, 0.9, 500);
        worst = worst.max(max_abs_diff(closed.dist.probs(), &truncated));
    }
    ensure(worst < 1e-10, || {
        format!("closed form vs truncated sum differ by {worst:e}")
    })?;
    Ok(format!(
        "verify max {:.1e}; closed form vs 500-term sum {:.1e}",
        report.max_abs_violation, worst
    ))
}

/// `<s_C - rep_C, v̄>` for WSLS against an opponent over two rounds, by hand.
fn wsls_two_rounds(q0: f64, q: [f64; 4]) -> f64 {
    // round 1: WSLS plays C; round 2: C after CC, D after CD
    let v1 = [q0, 1.0 - q0, 0.0, 0.0];
    let v2 = [
        q0 * q[0],
        q0 * (1.0 - q[0]),
        (1.0 - q0) * q[1],
        (1.0 - q0) * (1.0 - q[1]),
    ];
    let candidate = [0.0, -1.0, 0.0, 1.0];
    (0..4).map(|a| candidate[a] * (v1[a] + v2[a]) / 2.0).sum()
}

fn finite_horizon_falsification() -> Result<String, String> {
    let game = pd();
    let schedule = ContinuationSchedule::FiniteHorizon(2);
    let family =
        full_family(&game, &[wsls()], ScheduleForm::Infinite).map_err(|e| e.to_string())?;
    let candidate = family.vectors[0].clone();
    ensure(candidate == vec![0.0, -1.0, 0.0, 1.0], || {
        format!("candidate {candidate:?}")
    })?;
    let report = falsify_candidate(&game, &schedule, &[wsls()], &candidate, 200, 29)
        .map_err(|e| e.to_string())?;
    let opponents = report
        .counterexample
        .as_ref()
        .ok_or_else(|| format!("no counterexample, achieved {:e}", report.achieved))?;
    ensure(report.achieved > 1e-3, || {
        format!("achieved {:e}", report.achieved)
    })?;

    // the witness checked by the hand computation
    let opp = &opponents[0];
    let first = |row: usize| opp.row(row)[0];
    let hand = wsls_two_rounds(
        opp.initial().probs()[0],
        [first(0), first(1), first(2), first(3)],
    )
    .abs();
    ensure((hand - report.achieved).abs() < 1e-12, || {
        format!(
            "falsifier reports {:e}, hand computation {hand:e}",
            report.achieved
        )
    })?;

    // brute-force grid at step 0.1 over the opponent's five parameters
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut best: f64 = 0.0;
    for &q0 in &grid {
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        best = best.max(wsls_two_rounds(q0, [a, b, c, d]).abs());
                    }
                }
            }
        }
    }
    ensure(best > 1e-3, || format!("grid maximum {best:e}"))?;
    ensure(report.achieved >= best - 1e-9, || {
        format!(
            "falsifier {:e} below grid maximum {best:e}",
            report.achieved
        )
    })?;
    Ok(format!(
        "falsifier {:.3}, grid maximum {:.3}",
        report.achieved, best
    ))
}

fn random_controller(rng: &mut ChaCha8Rng, game: &GameSpec, player: usize) -> MarkovStrategy {
    loop {
        let s = sample_opponents(rng, game, &[player], SampleKind::Interior).remove(0);
        if !s.is_memory_zero(1e-9) {
            return s;
        }
    }
}

fn property_suites() -> Result<String, String> {
    let games = [pd(), donation(), pgg()];
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // stochastic rows
    for k in 0..150 {
        let game = &games[k % 3];
        let kind = if k % 2 == 0 {
            SampleKind::Interior
        } else {
            SampleKind::Boundary
        };
        let players: Vec<usize> = (0..game.player_count()).collect();
        let profile =
            StrategyProfile::new(game, sample_opponents(&mut rng, game, &players, kind)).unwrap();
        let m = transition_matrix(game, &profile);
        for row in m.row_iter() {
            let sum: f64 = row.iter().sum();
            ensure((sum - 1.0).abs() <= 1e-10, || format!("row sum {sum}"))?;
        }
    }

    // family sums to zero; vanishing inner product
    let mut worst_inner: f64 = 0.0;
    let mut worst_family: f64 = 0.0;
    for (form, schedule) in [
        (ScheduleForm::Infinite, ContinuationSchedule::Infinite),
        (ScheduleForm::Delta(0.3), ContinuationSchedule::Delta(0.3)),
        (ScheduleForm::Delta(0.9), ContinuationSchedule::Delta(0.9)),
    ] {
        for k in 0..500 {
            let game = &games[k % 3];
            let controllers: Vec<usize> = if k % 6 == 2 {
                vec![0, 1]
            } else {
                vec![k % game.player_count()]
            };
            let strategies: Vec<MarkovStrategy> = controllers
                .iter()
                .map(|&p| random_controller(&mut rng, game, p))
                .collect();
            let others: Vec<usize> = (0..game.player_count())
                .filter(|p| !controllers.contains(p))
                .collect();
            let kind = if k % 5 == 0 {
                SampleKind::Boundary
            } else {
                SampleKind::Interior
            };
            let opponents = sample_opponents(&mut rng, game, &others, kind);

            let family = full_family(game, &strategies, form).unwrap();
            for a in 0..game.profile_count() {
                let sum: f64 = family.vectors.iter().map(|v| v[a]).sum();
                worst_family = worst_family.max(sum.abs());
            }
            let profile = StrategyProfile::combine(game, &strategies, &opponents).unwrap();
            let avg = average_distribution(game, &profile, &schedule, &AverageOptions::default())
                .unwrap();
            for v in &ruling_basis(game, &strategies, form).unwrap().vectors {
                worst_inner = worst_inner.max(avg.dist.dot(v).abs());
            }
        }
    }
    ensure(worst_family <= 1e-12, || {
        format!("family sum {worst_family:e}")
    })?;
    ensure(worst_inner < 1e-8, || {
        format!("inner product {worst_inner:e}")
    })?;

    // relation scaling invariance
    let game = donation();
    let relation = PayoffRelation::pin(2, 1, 2.0);
    let payoffs = [1.25, 2.5];
    for factor in [-3.0, 0.5, 1e3] {
        let scaled = relation.scaled(factor).unwrap();
        ensure(scaled.equivalent(&relation, 1e-12), || {
            format!("scaled by {factor}")
        })?;
        ensure(
            relation_enforced(
                &game,
                &[pin_two()],
                &ContinuationSchedule::Infinite,
                &scaled,
                1e-9,
            )
            .unwrap(),
            || format!("scaled by {factor} not enforced"),
        )?;
        let r = scaled.residual(&payoffs) - factor * relation.residual(&payoffs);
        ensure(r.abs() < 1e-9, || format!("residual does not scale: {r:e}"))?;
    }

    // profile index round trip
    let odd = GameSpec::new(
        3,
        vec![
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
        ],
        vec![vec![0.0; 3]; 24],
    )
    .unwrap();
    for game in games.iter().chain(std::iter::once(&odd)) {
        for a in 0..game.profile_count() {
            let actions = game.profile_from_index(a).unwrap();
            ensure(game.profile_index(&actions).unwrap() == a, || {
                format!("profile {a}")
            })?;
        }
    }

    // file round trip
    for (k, game) in games.iter().enumerate() {
        let players: Vec<usize> = (0..game.player_count()).collect();
        let strategies = sample_opponents(&mut rng, game, &players, SampleKind::Boundary);
        let text = format!(
            "{}\n{}",
            format_game(game),
            format_strategies(game, &strategies)
        );
        let doc = parse_document(&text, "round-trip", None).map_err(|e| e.to_string())?;
        ensure(
            doc.game.as_ref() == Some(game) && doc.strategies == strategies,
            || format!("file round trip failed for game {k}"),
        )?;
    }
    Ok(format!(
        "rows, family sum {worst_family:.1e}, 1500 inner products max {worst_inner:.1e}, scaling, indices, files"
    ))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("1 pin reproduction", pin_reproduction),
        ("2 equalizer reproduction", equalizer_reproduction),
        ("3 alliance reproduction", alliance_reproduction),
        ("4 infeasibility reproduction", infeasibility_reproduction),
        ("5 synthesis round trip", synthesis_round_trip),
        ("6 delta-form validity", delta_form_validity),
        (
            "7 finite-horizon falsification",
            finite_horizon_falsification,
        ),
        ("8 property suites", property_suites),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.1?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} [{took:.1?}]");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
