//! Fixtures and generators shared by the integration suites.

#![allow(dead_code)] // each test target uses its own subset

use num::rational::BigRational;
use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mobilize_core::analysis::hurwitz_zeta;
use mobilize_core::mechanism::TaskEnvironment;
use mobilize_core::network::{
    AgentId, RecruitmentForest, RecruitmentRecord, SocialGraph, TaskId, WinningSequence,
};

pub fn id(n: u64) -> AgentId {
    AgentId(n)
}

pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn whole(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn forest(records: &[(u64, Option<u64>, f64)]) -> RecruitmentForest {
    let records: Vec<RecruitmentRecord> = records
        .iter()
        .map(|&(child, parent, signup_time)| RecruitmentRecord {
            child: AgentId(child),
            parent: parent.map(AgentId),
            signup_time,
        })
        .collect();
    RecruitmentForest::from_records(&records).unwrap()
}

/// The worked settlement fixture: one tree, two tasks worth 4,000 each,
/// found by agents 6 and 4.
pub fn worked_example() -> (TaskEnvironment, RecruitmentForest, Vec<WinningSequence>) {
    let env = TaskEnvironment::uniform(whole(8_000), 2).unwrap();
    let tree = forest(&[
        (1, None, 0.0),
        (2, Some(1), 5.0),
        (5, Some(1), 8.0),
        (8, Some(1), 11.0),
        (3, Some(2), 17.0),
        (6, Some(8), 21.0),
        (4, Some(3), 30.0),
    ]);
    let sequences = vec![
        tree.path_to_root(id(6), TaskId(1)).unwrap(),
        tree.path_to_root(id(4), TaskId(2)).unwrap(),
    ];
    (env, tree, sequences)
}

/// Two two-node trees plus a bystander: the prisoner's-dilemma fixture
/// whose recruiting players are 1 and 3.
pub fn pd_forest() -> RecruitmentForest {
    forest(&[
        (1, None, 0.0),
        (3, None, 0.0),
        (5, None, 0.0),
        (2, Some(1), 1.0),
        (4, Some(3), 2.0),
    ])
}

/// Uniform random forest: node i attaches to an earlier node or starts a
/// new tree, each uniformly. Ids and signup times are 1..=n.
pub fn random_forest(rng: &mut ChaCha8Rng, max_nodes: usize) -> RecruitmentForest {
    let n = rng.random_range(1..=max_nodes);
    let records: Vec<(u64, Option<u64>, f64)> = (1..=n as u64)
        .map(|i| {
            let parent = if i == 1 {
                None
            } else {
                match rng.random_range(0..i) {
                    0 => None,
                    p => Some(p),
                }
            };
            (i, parent, i as f64)
        })
        .collect();
    forest(&records)
}

/// Random forest of exactly `n` nodes in which no tree exceeds `cap`
/// nodes: sizes are drawn first, then each block grows as a uniform
/// recursive tree.
pub fn random_forest_capped(rng: &mut ChaCha8Rng, n: usize, cap: usize) -> RecruitmentForest {
    assert!(cap >= 1 && cap <= n);
    let mut records: Vec<(u64, Option<u64>, f64)> = Vec::with_capacity(n);
    let mut next = 1u64;
    let mut remaining = n;
    while remaining > 0 {
        let size = rng.random_range(1..=cap.min(remaining));
        let base = next;
        for j in 0..size as u64 {
            let parent = if j == 0 {
                None
            } else {
                Some(base + rng.random_range(0..j))
            };
            records.push((next, parent, next as f64));
            next += 1;
        }
        remaining -= size;
    }
    forest(&records)
}

/// Directed random graph: `m` distinct non-loop edges over nodes 1..=n.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: u64, m: usize) -> SocialGraph {
    let mut graph = SocialGraph::new();
    for node in 1..=n {
        graph.add_node(AgentId(node));
    }
    let mut added = 0usize;
    while added < m {
        let u = rng.random_range(1..=n);
        let v = rng.random_range(1..=n);
        if u == v {
            continue;
        }
        graph.add_edge(AgentId(u), AgentId(v)).unwrap();
        added += 1;
    }
    graph
}

/// Inverse-CDF sampler for the zeta distribution pmf ∝ x^(−α) on x ≥ 1,
/// table-truncated well past any mass the fits can see.
pub fn sample_zeta(alpha: f64, n: usize, seed: u64) -> Vec<u64> {
    const TABLE: usize = 1_000_000;
    let z = hurwitz_zeta(alpha, 1.0).unwrap();
    let mut cdf = Vec::with_capacity(TABLE);
    let mut acc = 0.0;
    for x in 1..=TABLE {
        acc += (x as f64).powf(-alpha) / z;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let i = cdf.partition_point(|&p| p <= u);
            (i + 1).min(TABLE) as u64
        })
        .collect()
}
