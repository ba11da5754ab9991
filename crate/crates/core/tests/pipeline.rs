//! Cross-module integration: simulator output flowing through the
//! mechanism, game, and analysis layers.

mod common;

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use mobilize_core::analysis::{
    compute_stats, fit_exponential, fit_power_law, inter_signup_times, recruitment_timeline,
};
use mobilize_core::diffusion::{
    equilibrium_on_graph, run_cascade, sample_finders, DiffusionConfig, SuccessModel,
};
use mobilize_core::game::{is_all_recruit_nash, weight};
use mobilize_core::mechanism::{check_budget, settle, TaskEnvironment};
use mobilize_core::network::{AgentId, RecruitmentForest, RecruitmentRecord, SocialGraph};

#[test]
fn uniform_finder_sampling_is_unbiased() {
    // 4,400 recruited agents, 100,000 tasks: per-agent finder counts
    // should pass a chi-square uniformity check (df = 4,399, so the
    // statistic concentrates at 4,399 ± 94; we allow five sigma).
    let n = 4_400u64;
    let records: Vec<RecruitmentRecord> = (1..=n)
        .map(|i| RecruitmentRecord {
            child: AgentId(i),
            parent: None,
            signup_time: 0.0,
        })
        .collect();
    let forest = RecruitmentForest::from_records(&records).unwrap();
    let tasks = 100_000u64;
    let env = TaskEnvironment::uniform(whole(tasks as i64), tasks).unwrap();
    let sequences =
        sample_finders(&forest, SuccessModel::UniformOverRecruited, env.tasks(), 99).unwrap();
    assert_eq!(sequences.len(), tasks as usize);

    let mut counts: BTreeMap<AgentId, usize> = BTreeMap::new();
    for seq in &sequences {
        *counts.entry(seq.finder()).or_insert(0) += 1;
    }
    let expected = tasks as f64 / n as f64; // ≈ 22.7 hits per agent
    let chi2: f64 = (1..=n)
        .map(|i| {
            let observed = counts.get(&AgentId(i)).copied().unwrap_or(0) as f64;
            (observed - expected).powi(2) / expected
        })
        .sum();
    let df = (n - 1) as f64;
    let sigma = (2.0 * df).sqrt();
    assert!(
        (chi2 - df).abs() < 5.0 * sigma,
        "chi-square {chi2} too far from df {df}"
    );
}

#[test]
fn near_critical_cascade_sizes_follow_a_power_law() {
    // Sparse random graph, three attempts per node at p = 1/3: mean
    // offspring just under one, so tree sizes behave like a subcritical
    // branching process — a power-law body with an exponential cutoff.
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let n = 50_000u64;
    let mut graph = SocialGraph::new();
    for u in 1..=n {
        graph.add_node(AgentId(u));
        let mut added = 0;
        while added < 3 {
            let v = rng.random_range(1..=n);
            if v != u {
                graph.add_edge(AgentId(u), AgentId(v)).unwrap();
                added += 1;
            }
        }
    }
    let mut seeds = std::collections::BTreeSet::new();
    while seeds.len() < 2_000 {
        seeds.insert(AgentId(rng.random_range(1..=n)));
    }
    let config = DiffusionConfig::new(seeds, 1.0 / 3.0, 50.0, 616);
    let forest = run_cascade(&graph, &config).unwrap();
    let stats = compute_stats(&forest, true);
    assert_eq!(stats.tree_count, 2_000);
    assert!(
        (0.80..1.0).contains(&stats.mean_branching_with_singletons),
        "branching {} not near-critical",
        stats.mean_branching_with_singletons
    );

    // The avalanche slope shows in the well-populated bins before the
    // cutoff: log-log least squares there sits near the branching
    // process's −3/2.
    let pts: Vec<(f64, f64)> = stats
        .size_histogram
        .iter()
        .filter(|&(_, &count)| count >= 10)
        .map(|(&size, &count)| {
            (
                (size as f64).ln(),
                (count as f64 / stats.tree_count as f64).ln(),
            )
        })
        .collect();
    assert!(pts.len() >= 8, "too few populated size bins");
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum::<f64>();
    assert!(
        (-1.8..=-1.0).contains(&slope),
        "populated-bin slope {slope} outside the avalanche band"
    );

    // The MLE fit stays reportable; KS-minimal xmin lands in the cutoff
    // (trees capped by subcriticality), so its exponent reads steeper
    // than the body slope — both are part of the detected regime.
    let sizes: Vec<u64> = stats
        .size_histogram
        .iter()
        .flat_map(|(&size, &count)| std::iter::repeat_n(size as u64, count))
        .collect();
    let fit = fit_power_law(&sizes).unwrap();
    assert!(fit.exponent < -1.5, "exponent {}", fit.exponent);
    assert!(fit.n_tail >= 10);
    assert!(fit.ks_statistic < 0.1, "ks {}", fit.ks_statistic);
}

#[test]
fn graph_equilibrium_agrees_with_forest_verdict() {
    // The prisoner's-dilemma forest embedded as a graph: the coupled
    // diffusion check and the analytic forest check must agree.
    let mut graph = SocialGraph::new();
    graph.add_edge(AgentId(1), AgentId(2)).unwrap();
    graph.add_edge(AgentId(3), AgentId(4)).unwrap();
    graph.add_node(AgentId(5));
    let config = DiffusionConfig::new([AgentId(1), AgentId(3), AgentId(5)], 1.0, 100.0, 27);
    let report = equilibrium_on_graph(&graph, &config, 8).unwrap();
    assert_eq!(report.n_prime, 5);
    assert_eq!(report.max_tree_size, 2);
    assert!(report.premise_holds);
    assert!(report.nash_asserted);

    let forest_verdict = is_all_recruit_nash(&pd_forest());
    assert_eq!(report.nash_asserted, forest_verdict.is_nash);
}

#[test]
fn simulated_delays_recover_the_configured_mean() {
    // A tree-shaped graph gives every node exactly one possible offer, so
    // recorded inter-signup delays are raw exponential draws.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let n = 12_000u64;
    let mut graph = SocialGraph::new();
    graph.add_node(AgentId(1));
    for i in 2..=n {
        let parent = rng.random_range(1..i);
        graph.add_edge(AgentId(parent), AgentId(i)).unwrap();
    }
    let config = DiffusionConfig::new([AgentId(1)], 1.0, 600.0, 707);
    let forest = run_cascade(&graph, &config).unwrap();
    assert_eq!(forest.len(), n as usize);

    let delays = inter_signup_times(&forest);
    assert_eq!(delays.len(), (n - 1) as usize);
    let fit = fit_exponential(&delays).unwrap();
    let target = 1.0 / 600.0;
    assert!(
        (fit.rate - target).abs() / target < 0.05,
        "rate {} strays from 1/600",
        fit.rate
    );

    let timeline = recruitment_timeline(&forest, 600.0).unwrap();
    assert!(timeline.cumulative.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*timeline.cumulative.last().unwrap(), forest.len());
}

#[test]
fn weight_matches_descendant_profile_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    for _ in 0..20 {
        let forest = random_forest(&mut rng, 60);
        for agent in forest.agents() {
            let profile = forest.descendant_profile(agent).unwrap();
            assert_eq!(
                weight(&forest, agent).unwrap(),
                BigRational::one() + profile.discounted()
            );
        }
    }
}

#[test]
fn cascade_settles_within_budget() {
    let mut graph = SocialGraph::new();
    for (u, v) in [
        (1, 2),
        (1, 5),
        (1, 8),
        (2, 3),
        (2, 7),
        (3, 4),
        (5, 4),
        (6, 9),
        (7, 9),
        (8, 6),
    ] {
        graph.add_edge(AgentId(u), AgentId(v)).unwrap();
    }
    let config = DiffusionConfig::new([AgentId(1)], 1.0, 300.0, 4242);
    let forest = run_cascade(&graph, &config).unwrap();
    assert_eq!(forest.len(), 9);

    let env = TaskEnvironment::uniform(whole(8_000), 2).unwrap();
    let sequences =
        sample_finders(&forest, SuccessModel::UniformOverRecruited, env.tasks(), 11).unwrap();
    let ledger = settle(&env, &sequences).unwrap();
    assert_eq!(
        ledger.total_paid() + ledger.total_surplus(),
        whole(8_000)
    );

    let report = check_budget(&env, &config.seeds, &ledger);
    assert!(report.satisfied);
    assert!(report.slack >= BigRational::from_integer(0.into()));

    // The exported ledger parses back with the same surplus.
    let json: serde_json::Value = serde_json::from_str(&ledger.to_json()).unwrap();
    let surplus = json["surplus"].as_str().unwrap();
    assert_eq!(
        mobilize_core::mechanism::ratio_from_str(surplus).unwrap(),
        ledger.total_surplus()
    );
}
