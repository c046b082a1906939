//! Acceptance gate. Each test prints one `[PASS]`/`[FAIL]` line with the
//! measured quantities and then asserts the same condition.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::{oracle_evaluate, stackelberg_grid_oracle, two_step_grid_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strategize_core::control::{evaluate, merge, search, search_with, subdivide, SearchOptions};
use strategize_core::learners::{
    expected_regret, expected_swap_regret, mean_based_audit, regret_under, swap_regret,
    Feedback, Learner, RoundContext, SwapFunction,
};
use strategize_core::optimizers::{commitment_schedule, exploit_policy_table1, policy_to_schedule};
use strategize_core::simulation::{sweep, MatchConfig, MatchResult, TraceLevel};
use strategize_core::{Algorithm, Game, LearnerConfig, MixedStrategy, Policy, PolicyStep, RewardTrace};

fn report(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{tag}] {name}: {detail}");
}

fn bundled(name: &str) -> Game {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "data", "games", name].iter().collect();
    Game::load(path).unwrap()
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).map(|s| 1000 + s).collect()
}

/// Mean optimizer average over seeds, plus the worst seed.
fn run_seeds(game: &Game, schedule_policy: &Policy, learner: &LearnerConfig, rounds: usize, n: u64) -> (f64, f64) {
    let schedule = policy_to_schedule(schedule_policy, rounds).unwrap();
    let configs: Vec<MatchConfig> = seeds(n)
        .into_iter()
        .map(|s| {
            MatchConfig::new(game.clone(), schedule.clone(), learner.clone(), rounds)
                .with_seed(s)
                .with_trace(TraceLevel::Summary)
        })
        .collect();
    let results: Vec<MatchResult> = sweep(&configs).into_iter().map(Result::unwrap).collect();
    let avgs: Vec<f64> = results.iter().map(|r| r.optimizer_average).collect();
    let mean = avgs.iter().sum::<f64>() / avgs.len() as f64;
    let worst = avgs.iter().cloned().fold(f64::INFINITY, f64::min);
    (mean, worst)
}

#[test]
fn stackelberg_reproduction() {
    let game = bundled("table1_eps005.json");
    let start = Instant::now();
    let s = game.stackelberg().unwrap();
    let elapsed = start.elapsed();
    let p = s.commitment.probs();
    let response = &game.learner_actions()[s.response];
    let pass = s.value.abs() <= 1e-9
        && (p[0] - 0.5).abs() <= 1e-9
        && (p[1] - 0.5).abs() <= 1e-9
        && response == "Right"
        && elapsed < Duration::from_secs(1);
    report(
        "stackelberg_reproduction",
        pass,
        &format!("value {:.3e}, commitment {}, response {response}, {elapsed:?} (need 0 +- 1e-9, (1/2,1/2), Right, < 1 s)", s.value, s.commitment),
    );
    assert!(pass);
}

#[test]
fn exploit_beats_stackelberg_against_mean_based() {
    let game = bundled("table1_eps005.json");
    let rounds = 200_000;
    let t = rounds as f64;
    let policy = exploit_policy_table1(0.05).unwrap();
    let start = Instant::now();
    let ftl = LearnerConfig::new(Algorithm::Ftl).with_gamma(t.powf(-0.25));
    let mw = LearnerConfig::new(Algorithm::Mw).with_rate((3f64.ln() / t).sqrt());
    let (ftl_mean, ftl_min) = run_seeds(&game, &policy, &ftl, rounds, 20);
    let (mw_mean, mw_min) = run_seeds(&game, &policy, &mw, rounds, 20);
    let elapsed = start.elapsed();
    let v = game.stackelberg().unwrap().value;
    let pass = ftl_mean >= 0.8 && mw_mean >= 0.8 && ftl_mean - v >= 0.8 && mw_mean - v >= 0.8
        && elapsed < Duration::from_secs(120);
    report(
        "exploit_beats_stackelberg_against_mean_based",
        pass,
        &format!(
            "FTL mean {ftl_mean:.4} (min {ftl_min:.4}), MW mean {mw_mean:.4} (min {mw_min:.4}), V = {v:.1e}, {elapsed:.1?} (need >= 0.8 each, < 120 s)"
        ),
    );
    assert!(pass);
}

#[test]
fn swap_regret_learner_caps_exploit() {
    let game = bundled("table1_eps005.json");
    let rounds = 200_000;
    let policy = exploit_policy_table1(0.05).unwrap();
    let bm = LearnerConfig::new(Algorithm::BlumMansour { inner: Box::new(Algorithm::Mw) });
    let start = Instant::now();
    let (mean, _) = run_seeds(&game, &policy, &bm, rounds, 20);
    let elapsed = start.elapsed();
    let pass = mean <= 0.1 && elapsed < Duration::from_secs(300);
    report(
        "swap_regret_learner_caps_exploit",
        pass,
        &format!("BlumMansour(MW) mean {mean:.4}, {elapsed:.1?} (need <= 0.1, < 300 s)"),
    );
    assert!(pass);
}

#[test]
fn constant_sum_is_capped() {
    let game = bundled("matching_pennies.json");
    let rounds = 100_000;
    let mw = LearnerConfig::new(Algorithm::Mw);
    let heads_then_tails = Policy::new(vec![
        PolicyStep::new(MixedStrategy::pure(2, 0), 0.5),
        PolicyStep::new(MixedStrategy::pure(2, 1), 0.5),
    ])
    .unwrap();
    let tails_then_heads = Policy::new(vec![
        PolicyStep::new(MixedStrategy::pure(2, 1), 0.5),
        PolicyStep::new(MixedStrategy::pure(2, 0), 0.5),
    ])
    .unwrap();
    let found = search(&game, 3, 10).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (name, p) in [("H->T", &heads_then_tails), ("T->H", &tails_then_heads), ("search", &found.policy)] {
        let (mean, _) = run_seeds(&game, p, &mw, rounds, 1);
        worst = worst.max(mean);
        parts.push(format!("{name} {mean:.4}"));
    }
    let pass = worst <= 0.05 && found.value <= 1e-6;
    report(
        "constant_sum_is_capped",
        pass,
        &format!("{}; search value {:.3e} (need <= 0.05, search <= 1e-6)", parts.join(", "), found.value),
    );
    assert!(pass);
}

/// Reg(pi^1) + Reg(pi^2) where pi^1 remaps only arm 0 and pi^2 only arm 1,
/// each to its best replacement.
fn split_swap_regret(trace: &RewardTrace) -> (f64, f64) {
    let (_, best) = swap_regret(trace);
    let only = |arm: usize| {
        let mut mapping = vec![0, 1];
        mapping[arm] = best.mapping[arm];
        regret_under(trace, &SwapFunction { mapping }).unwrap()
    };
    (only(0), only(1))
}

#[test]
fn two_action_learner_is_capped() {
    let game = bundled("commitment_2x2.json");
    let v = game.stackelberg().unwrap().value;
    let found = search(&game, 4, 10).unwrap();

    // Identity on random and learner-generated 2-arm traces.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_gap = 0.0f64;
    let mut traces = Vec::new();
    for _ in 0..200 {
        let len = rng.gen_range(1..200);
        let rows: Vec<Vec<f64>> = (0..len).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let chosen: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        traces.push(RewardTrace::from_rounds(rows, chosen).unwrap());
    }
    for seed in 0..5 {
        let schedule = policy_to_schedule(&Policy::new(vec![
            PolicyStep::new(MixedStrategy::pure(2, 0), 0.3),
            PolicyStep::new(MixedStrategy::uniform(2), 0.7),
        ]).unwrap(), 5000).unwrap();
        let r = strategize_core::simulation::run(
            &MatchConfig::new(game.clone(), schedule, LearnerConfig::new(Algorithm::Mw), 5000)
                .with_seed(seed)
                .with_sampling(strategize_core::simulation::SamplingMode::Sampled),
        )
        .unwrap();
        traces.push(r.trace.unwrap());
    }
    for trace in &traces {
        let (total, _) = swap_regret(trace);
        let (r1, r2) = split_swap_regret(trace);
        worst_gap = worst_gap.max((total - r1 - r2).abs() / (1.0 + total.abs()));
    }
    let pass = found.value <= v + 1e-6 && worst_gap <= 1e-12;
    report(
        "two_action_learner_is_capped",
        pass,
        &format!(
            "search {:.6} vs V {v:.6}; identity gap {worst_gap:.1e} over {} traces (need <= V + 1e-6, gap <= 1e-12)",
            found.value,
            traces.len()
        ),
    );
    assert!(pass);
}

#[test]
fn commitment_secures_stackelberg() {
    let game = bundled("table1_eps005.json");
    let rounds = 100_000;
    let delta = 0.05;
    let commitment = game.conservative_commitment(delta).unwrap();
    let schedule = commitment_schedule(&game, delta, rounds).unwrap();
    let target = commitment.target_response;
    let v = game.stackelberg().unwrap().value;
    let mut pass = true;
    let mut parts = Vec::new();
    for (alg, experts) in [
        (Algorithm::Mw, true),
        (Algorithm::Ftpl, true),
        (Algorithm::Exp3, false),
        (Algorithm::BlumMansour { inner: Box::new(Algorithm::Mw) }, true),
    ] {
        let label = alg.label();
        let config = MatchConfig::new(game.clone(), schedule.clone(), LearnerConfig::new(alg), rounds)
            .with_seed(11)
            .with_trace(TraceLevel::Summary);
        let r = strategize_core::simulation::run(&config).unwrap();
        let share = r.learner_play_share[target];
        let ok = r.optimizer_average >= v - 0.1 && (!experts || share >= 0.95);
        pass &= ok;
        parts.push(format!("{label} avg {:.4} target share {:.4}", r.optimizer_average, share));
    }
    report(
        "commitment_secures_stackelberg",
        pass,
        &format!(
            "margin {:.4}; {} (need avg >= {:.2}, share >= 0.95 for experts learners)",
            commitment.margin,
            parts.join(", "),
            v - 0.1
        ),
    );
    assert!(pass);
}

#[test]
fn control_evaluation_is_exact() {
    let game = bundled("table1_eps0.json");
    let exploit = evaluate(&exploit_policy_table1(0.05).unwrap(), &game).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=4));
        let g = Game::random_integer(m, n, 2, &mut rng).unwrap();
        let k = rng.gen_range(1..=5);
        let steps = (0..k)
            .map(|_| {
                let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                PolicyStep::new(MixedStrategy::from_weights(&w).unwrap(), rng.gen_range(0.01..3.0))
            })
            .collect();
        let p = Policy::new(steps).unwrap();
        let base = evaluate(&p, &g).unwrap();
        let annotated = subdivide(&p, &g).unwrap();
        let mut values = vec![
            annotated.value(),
            evaluate(&annotated.to_policy().unwrap(), &g).unwrap(),
            merge(&annotated).value(),
        ];
        for lambda in [0.5, 2.0, 7.0] {
            values.push(evaluate(&p.scaled(lambda).unwrap(), &g).unwrap());
        }
        for v in values {
            worst = worst.max((v - base).abs());
        }
    }
    let pass = (exploit - 1.0).abs() <= 1e-12 && worst <= 1e-12;
    report(
        "control_evaluation_is_exact",
        pass,
        &format!("exploit value {exploit}, worst rewrite/scale drift {worst:.1e} over 200 policies (need 1 +- 1e-12, <= 1e-12)"),
    );
    assert!(pass);
}

#[test]
fn oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst_stackelberg = (0.0f64, 0);
    let mut worst_control = (0.0f64, 0);
    let mut oracle_above = 0.0f64;
    let mut replay_drift = 0.0f64;
    for i in 0..50 {
        let (m, n) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let g = Game::random_integer(m, n, 2, &mut rng).unwrap();
        let v = g.stackelberg().unwrap().value;
        let gap = (v - stackelberg_grid_oracle(&g, 200)).abs();
        if gap > worst_stackelberg.0 {
            worst_stackelberg = (gap, i);
        }
        let found = search_with(&g, &SearchOptions::new(2, 10).paths_only()).unwrap();
        let oracle = two_step_grid_oracle(&g, 50);
        let gap = (found.value - oracle).abs();
        if gap > worst_control.0 {
            worst_control = (gap, i);
        }
        oracle_above = oracle_above.max(oracle - found.value);
        // The reported policy must reach its value under the independent evaluator.
        let steps: Vec<(Vec<f64>, f64)> = found
            .policy
            .steps()
            .iter()
            .map(|s| (s.alpha.probs().to_vec(), s.duration))
            .collect();
        let (replayed, pieces, _) = oracle_evaluate(&g, &steps, &vec![0.0; n]);
        assert!(pieces <= 2);
        replay_drift = replay_drift.max((replayed - found.value).abs());
    }
    let pass = worst_stackelberg.0 <= 1e-2 && worst_control.0 <= 1e-2 && oracle_above <= 1e-9;
    report(
        "oracle_equivalence",
        pass,
        &format!(
            "stackelberg gap {:.2e} (game {}), 2-step control gap {:.2e} (game {}), oracle excess {oracle_above:.1e}, replay drift {replay_drift:.1e} over 50 games (need <= 1e-2, <= 1e-2)",
            worst_stackelberg.0, worst_stackelberg.1, worst_control.0, worst_control.1
        ),
    );
    assert!(pass);
}

/// Reward streams for the regret checks. Streams 0..7 are i.i.d. uniform,
/// 7..14 switch the best arm in blocks, 14..20 reward whichever arm the
/// learner currently plays least.
fn stream_reward(kind: usize, t: usize, k: usize, rng: &mut ChaCha8Rng, probs: &[f64]) -> Vec<f64> {
    match kind {
        0 => (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let block = (t / 5000) % k;
            (0..k)
                .map(|i| if i == block { 0.6 } else { -0.2 } + rng.gen_range(-0.4..0.4))
                .collect()
        }
        _ => {
            let low = (0..k)
                .min_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap())
                .unwrap();
            (0..k).map(|i| if i == low { 1.0 } else { -1.0 }).collect()
        }
    }
}

fn play_stream(learner: &mut dyn Learner, stream: usize, k: usize, rounds: usize, seed: u64) -> RewardTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RewardTrace::with_distributions(k);
    let kind = match stream {
        0..7 => 0,
        7..14 => 1,
        _ => 2,
    };
    for t in 0..rounds {
        let dist = learner.strategy(&RoundContext::default()).unwrap();
        let arm = learner.choose(&dist);
        let r = stream_reward(kind, t, k, &mut rng, dist.probs());
        learner.observe(Feedback::Experts(&r)).unwrap();
        trace.push(r, arm, Some(dist.probs())).unwrap();
    }
    trace
}

#[test]
fn regret_guarantees() {
    let rounds = 100_000;
    let t = rounds as f64;
    let gamma = t.powf(-0.25);
    let scale = 1.0;
    let mut worst_mw = f64::NEG_INFINITY;
    let mut worst_bm = f64::NEG_INFINITY;
    let mut violations = 0;
    for stream in 0..20usize {
        let k = 2 + stream % 3;
        let seed = 500 + stream as u64;
        let ln_k = (k as f64).ln();
        let mut mw = LearnerConfig::new(Algorithm::Mw).with_seed(seed).build(k, rounds, scale).unwrap();
        let trace = play_stream(mw.as_mut(), stream, k, rounds, seed);
        worst_mw = worst_mw.max(expected_regret(&trace).unwrap() / (3.0 * scale * (t * ln_k).sqrt()));
        violations += mean_based_audit(&trace, gamma).unwrap().violations.len();

        let mut ftpl = LearnerConfig::new(Algorithm::Ftpl).with_seed(seed).build(k, rounds, scale).unwrap();
        let trace = play_stream(ftpl.as_mut(), stream, k, rounds, seed);
        violations += mean_based_audit(&trace, gamma).unwrap().violations.len();

        let mut bm = LearnerConfig::new(Algorithm::BlumMansour { inner: Box::new(Algorithm::Mw) })
            .with_seed(seed)
            .build(k, rounds, scale)
            .unwrap();
        let trace = play_stream(bm.as_mut(), stream, k, rounds, seed);
        let (swap, _) = expected_swap_regret(&trace).unwrap();
        worst_bm = worst_bm.max(swap / (6.0 * scale * (t * k as f64 * ln_k).sqrt()));
    }
    let pass = worst_mw <= 1.0 && worst_bm <= 1.0 && violations == 0;
    report(
        "regret_guarantees",
        pass,
        &format!(
            "MW regret / bound max {worst_mw:.3}, BlumMansour swap regret / bound max {worst_bm:.3}, mean-based violations {violations} (need <= 1, <= 1, 0)"
        ),
    );
    assert!(pass);
}
