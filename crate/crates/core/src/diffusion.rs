//! Stochastic cascade simulation over a social graph.
//!
//! The default process is a single-attempt independent cascade: when an
//! agent signs up, it tries each acquaintance once; a successful attempt
//! delivers an offer after an exponentially distributed delay, and the
//! earliest offer wins a contested node. Every random draw is keyed by
//! (rng seed, edge), not by draw order, so two runs that differ only in
//! the seed set share all edge-level randomness — the common-random-number
//! coupling that makes seed-removal comparisons meaningful.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num::rational::BigRational;
use num::{BigInt, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::weight;
use crate::mechanism::Task;
use crate::network::{AgentId, RecruitmentForest, RecruitmentRecord, SocialGraph, WinningSequence};
use crate::{Error, Result};

/// How task completion probability is assigned to recruited agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuccessModel {
    /// Every recruited agent finds a given task with probability ε.
    Epsilon(f64),
    /// Each task's finder is drawn uniformly from the recruited agents.
    UniformOverRecruited,
}

/// Which contagion rule drives the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProcessKind {
    /// One signal suffices: first successful offer recruits the node.
    #[default]
    IndependentCascade,
    /// A node (other than a seed) joins only on its second incoming
    /// signal — a minimal complex-contagion rule, present as the standard
    /// way to break seed-removal monotonicity.
    TwoSignalContagion,
}

/// How random draws are attached to the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Draws keyed by (rng seed, edge): runs with different seed sets
    /// share randomness. Required by the seed-removal probes.
    #[default]
    Keyed,
    /// A single sequential stream in event order. Still reproducible for
    /// identical configs, but not comparable across seed-set changes.
    DrawOrder,
}

/// Full description of one cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    /// The initially targeted agents I; they sign up at t = 0.
    pub seeds: BTreeSet<AgentId>,
    /// Probability that a signup's attempt on one acquaintance succeeds.
    pub recruit_probability: f64,
    /// Per-agent overrides of `recruit_probability` (keyed by the
    /// recruiting agent), for modeling heterogeneous enthusiasm.
    pub node_probabilities: BTreeMap<AgentId, f64>,
    /// Mean of the exponential delay between a signup and the arrival of
    /// its recruitment offers, in seconds.
    pub mean_intersignup: f64,
    /// Offers arriving after this time are discarded.
    pub horizon: Option<f64>,
    pub rng_seed: u64,
    pub process: ProcessKind,
    pub coupling: Coupling,
}

impl DiffusionConfig {
    pub fn new(
        seeds: impl IntoIterator<Item = AgentId>,
        recruit_probability: f64,
        mean_intersignup: f64,
        rng_seed: u64,
    ) -> Self {
        Self {
            seeds: seeds.into_iter().collect(),
            recruit_probability,
            node_probabilities: BTreeMap::new(),
            mean_intersignup,
            horizon: None,
            rng_seed,
            process: ProcessKind::default(),
            coupling: Coupling::default(),
        }
    }

    fn validate(&self, graph: &SocialGraph) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed set is empty".into()));
        }
        for &seed in &self.seeds {
            if !graph.contains(seed) {
                return Err(Error::Config(format!("seed {seed} is not in the graph")));
            }
        }
        let ok_prob = |p: f64| (0.0..=1.0).contains(&p);
        if !ok_prob(self.recruit_probability) {
            return Err(Error::Config(format!(
                "recruit probability {} outside [0, 1]",
                self.recruit_probability
            )));
        }
        for (&agent, &p) in &self.node_probabilities {
            if !ok_prob(p) {
                return Err(Error::Config(format!(
                    "recruit probability {p} for agent {agent} outside [0, 1]"
                )));
            }
        }
        if !self.mean_intersignup.is_finite() || self.mean_intersignup <= 0.0 {
            return Err(Error::Config("mean inter-signup time must be positive".into()));
        }
        if let Some(h) = self.horizon {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::Config("horizon must be non-negative".into()));
            }
        }
        Ok(())
    }

    fn probability_of(&self, agent: AgentId) -> f64 {
        self.node_probabilities
            .get(&agent)
            .copied()
            .unwrap_or(self.recruit_probability)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit key for one directed edge under one rng seed.
fn edge_key(seed: u64, u: AgentId, v: AgentId) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ u.0) ^ v.0)
}

/// f64 with a total order, so offers can live in a heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdTime(f64);

impl Eq for OrdTime {}

impl PartialOrd for OrdTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Pending recruitment offer; min-heap orders by (time, child, parent) so
/// simultaneous offers resolve to the lowest parent id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Offer {
    time: OrdTime,
    child: AgentId,
    parent: AgentId,
}

/// Run one cascade. Deterministic given (graph, config); the result always
/// satisfies the recruitment-forest invariants, with every child signup
/// strictly after its recruiter's.
pub fn run_cascade(graph: &SocialGraph, config: &DiffusionConfig) -> Result<RecruitmentForest> {
    config.validate(graph)?;
    let mut stream = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut recruited: BTreeMap<AgentId, (Option<AgentId>, f64)> = BTreeMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<Offer>> = BinaryHeap::new();
    let mut signals: BTreeMap<AgentId, u32> = BTreeMap::new();

    let offer_attempts =
        |from: AgentId,
         at: f64,
         stream: &mut ChaCha8Rng,
         heap: &mut BinaryHeap<std::cmp::Reverse<Offer>>,
         recruited: &BTreeMap<AgentId, (Option<AgentId>, f64)>| {
            let p = config.probability_of(from);
            for to in graph.out_neighbors(from) {
                if recruited.contains_key(&to) {
                    continue; // any later offer would lose anyway
                }
                let (success, delay) = match config.coupling {
                    Coupling::Keyed => {
                        let mut rng = ChaCha8Rng::seed_from_u64(edge_key(config.rng_seed, from, to));
                        draw_attempt(&mut rng, p, config.mean_intersignup)
                    }
                    Coupling::DrawOrder => draw_attempt(stream, p, config.mean_intersignup),
                };
                if !success {
                    continue;
                }
                let mut time = at + delay;
                if time <= at {
                    // Zero or absorbed delay; nudge to keep signups strictly
                    // after the recruiter's.
                    time = at.next_up();
                }
                if config.horizon.is_some_and(|h| time > h) {
                    continue;
                }
                heap.push(std::cmp::Reverse(Offer {
                    time: OrdTime(time),
                    child: to,
                    parent: from,
                }));
            }
        };

    for &seed in &config.seeds {
        recruited.insert(seed, (None, 0.0));
    }
    for &seed in &config.seeds {
        offer_attempts(seed, 0.0, &mut stream, &mut heap, &recruited);
    }

    while let Some(std::cmp::Reverse(offer)) = heap.pop() {
        let child = offer.child;
        if recruited.contains_key(&child) {
            continue;
        }
        if config.process == ProcessKind::TwoSignalContagion {
            let count = signals.entry(child).or_insert(0);
            *count += 1;
            if *count < 2 {
                continue;
            }
        }
        recruited.insert(child, (Some(offer.parent), offer.time.0));
        offer_attempts(child, offer.time.0, &mut stream, &mut heap, &recruited);
    }

    let records: Vec<RecruitmentRecord> = recruited
        .iter()
        .map(|(&child, &(parent, signup_time))| RecruitmentRecord {
            child,
            parent,
            signup_time,
        })
        .collect();
    RecruitmentForest::from_records(&records)
}

fn draw_attempt(rng: &mut ChaCha8Rng, probability: f64, mean: f64) -> (bool, f64) {
    let success = rng.random::<f64>() < probability;
    // Inverse-CDF exponential; u ∈ [0, 1) keeps 1−u strictly positive.
    let u: f64 = rng.random();
    let delay = -mean * (1.0 - u).ln();
    (success, delay)
}

/// Pick task finders from a realized forest.
///
/// `UniformOverRecruited` draws each task's finder uniformly (with
/// replacement across tasks); `Epsilon(ε)` marks each recruited agent a
/// finder independently with probability ε and hands tasks to finders in
/// ascending id order, leaving surplus tasks unfound.
pub fn sample_finders(
    forest: &RecruitmentForest,
    model: SuccessModel,
    tasks: &[Task],
    rng_seed: u64,
) -> Result<Vec<WinningSequence>> {
    let agents: Vec<AgentId> = forest.agents().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match model {
        SuccessModel::UniformOverRecruited => {
            if agents.is_empty() {
                return Err(Error::Domain(
                    "cannot sample finders from an empty forest".into(),
                ));
            }
            tasks
                .iter()
                .map(|task| {
                    let finder = agents[rng.random_range(0..agents.len())];
                    forest.path_to_root(finder, task.id)
                })
                .collect()
        }
        SuccessModel::Epsilon(epsilon) => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
            }
            if epsilon * agents.len() as f64 > 1.0 {
                return Err(Error::Config(format!(
                    "epsilon {epsilon} times population {} exceeds 1",
                    agents.len()
                )));
            }
            let finders: Vec<AgentId> = agents
                .iter()
                .copied()
                .filter(|_| rng.random::<f64>() < epsilon)
                .collect();
            tasks
                .iter()
                .zip(finders)
                .map(|(task, finder)| forest.path_to_root(finder, task.id))
                .collect()
        }
    }
}

/// Tree sizes before and after removing one seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalProbe {
    pub removed: AgentId,
    /// Size of each surviving seed's tree in the rerun.
    pub sizes: Vec<(AgentId, usize)>,
    /// Surviving seeds whose tree shrank — monotonicity violations.
    pub shrunk: Vec<AgentId>,
}

/// Outcome of the seed-removal monotonicity probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// Per-seed tree sizes of the full-seed-set run.
    pub baseline: Vec<(AgentId, usize)>,
    pub removals: Vec<RemovalProbe>,
    pub monotonic: bool,
}

/// Rerun the cascade once per removed seed (under shared edge randomness)
/// and flag any surviving seed whose tree shrank. A diffusion process is
/// monotonic when no removal ever shrinks another seed's tree.
pub fn check_monotonic(graph: &SocialGraph, config: &DiffusionConfig) -> Result<MonotonicityReport> {
    if config.coupling != Coupling::Keyed {
        return Err(Error::Capability(
            "seed-removal comparison requires keyed (common-random-number) coupling".into(),
        ));
    }
    let baseline_forest = run_cascade(graph, config)?;
    let tree_size = |forest: &RecruitmentForest, seed: AgentId| {
        forest.subtree_size(seed).unwrap_or(0)
    };
    let baseline: Vec<(AgentId, usize)> = config
        .seeds
        .iter()
        .map(|&s| (s, tree_size(&baseline_forest, s)))
        .collect();

    let mut removals = Vec::new();
    if config.seeds.len() > 1 {
        for &removed in &config.seeds {
            let mut reduced = config.clone();
            reduced.seeds.remove(&removed);
            let rerun = run_cascade(graph, &reduced)?;
            let sizes: Vec<(AgentId, usize)> = reduced
                .seeds
                .iter()
                .map(|&s| (s, tree_size(&rerun, s)))
                .collect();
            let shrunk = sizes
                .iter()
                .filter(|&&(seed, size)| {
                    let before = baseline
                        .iter()
                        .find(|&&(s, _)| s == seed)
                        .map(|&(_, n)| n)
                        .unwrap_or(0);
                    size < before
                })
                .map(|&(seed, _)| seed)
                .collect();
            removals.push(RemovalProbe {
                removed,
                sizes,
                shrunk,
            });
        }
    }
    let monotonic = removals.iter().all(|probe| probe.shrunk.is_empty());
    Ok(MonotonicityReport {
        baseline,
        removals,
        monotonic,
    })
}

/// One sampled unilateral deviation in the graph equilibrium check.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationProbe {
    pub node: AgentId,
    pub baseline_payoff: BigRational,
    pub deviated_payoff: BigRational,
    pub improves: bool,
}

/// Verdict on all-recruit as an equilibrium of diffusion over a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEquilibriumReport {
    pub n_prime: usize,
    pub max_tree_size: usize,
    /// No seed's realized tree exceeds half the recruited population.
    pub premise_holds: bool,
    pub monotonic: bool,
    /// Premise and monotonicity both verified, so all-recruit is claimed
    /// to be an equilibrium.
    pub nash_asserted: bool,
    pub deviations: Vec<DeviationProbe>,
    pub any_profitable_deviation: bool,
}

/// Check the graph-level equilibrium condition: if no seed's coupled tree
/// exceeds half the recruited population and the (coupled) process is
/// monotonic, all-recruit is an equilibrium. Validates the claim by
/// replaying up to `max_deviations` unilateral refuse-to-recruit
/// deviations and comparing exact uniform-model payoffs.
///
/// The premise is verified on the realized coupled run — the expectation
/// version of the condition is not directly observable.
pub fn equilibrium_on_graph(
    graph: &SocialGraph,
    config: &DiffusionConfig,
    max_deviations: usize,
) -> Result<GraphEquilibriumReport> {
    if config.coupling != Coupling::Keyed {
        return Err(Error::Capability(
            "graph equilibrium check requires keyed (common-random-number) coupling".into(),
        ));
    }
    let baseline = run_cascade(graph, config)?;
    let n_prime = baseline.len();
    let max_tree_size = baseline
        .roots()
        .iter()
        .map(|&r| baseline.subtree_size(r).unwrap())
        .max()
        .unwrap_or(0);
    let premise_holds = 2 * max_tree_size <= n_prime;
    let monotonic = check_monotonic(graph, config)?.monotonic;

    // Candidates whose deviation changes anything: recruited nodes that
    // actually recruited someone.
    let mut candidates: Vec<AgentId> = baseline
        .agents()
        .filter(|&a| !baseline.children(a).is_empty())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.rng_seed ^ 0x6465_7669_6174_6500));
    candidates.shuffle(&mut rng);
    candidates.truncate(max_deviations);
    candidates.sort();

    let n_big = BigRational::from_integer(BigInt::from(n_prime));
    let mut deviations = Vec::new();
    for node in candidates {
        let baseline_payoff = weight(&baseline, node)? / &n_big;
        let mut deviated = config.clone();
        deviated.node_probabilities.insert(node, 0.0);
        let rerun = run_cascade(graph, &deviated)?;
        let deviated_payoff = if rerun.contains(node) {
            weight(&rerun, node)? / BigRational::from_integer(BigInt::from(rerun.len()))
        } else {
            BigRational::zero()
        };
        deviations.push(DeviationProbe {
            node,
            improves: deviated_payoff > baseline_payoff,
            baseline_payoff,
            deviated_payoff,
        });
    }
    let any_profitable_deviation = deviations.iter().any(|d| d.improves);
    Ok(GraphEquilibriumReport {
        n_prime,
        max_tree_size,
        premise_holds,
        monotonic,
        nash_asserted: premise_holds && monotonic && !any_profitable_deviation,
        deviations,
        any_profitable_deviation,
    })
}
