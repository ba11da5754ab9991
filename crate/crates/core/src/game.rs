//! Recruitment as a game on a fixed forest.
//!
//! Every node decides whether to pass task information to its children.
//! Under the uniform success model a node's expected payoff is its weight
//! within the realized subforest divided by the subforest size, so
//! recruiting trades a larger personal share against a more diluted pool.
//! This module computes those payoffs exactly, evaluates the closed-form
//! recruit/defect thresholds for all-or-none and selective strategy spaces,
//! and provides a brute-force equilibrium oracle that validates the
//! closed forms on small instances.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use crate::network::{AgentId, DescendantProfile, RecruitmentForest};
use crate::{Error, Result};

/// One node's recruitment decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    RecruitAll,
    RecruitNone,
    /// Selective mode: recruit exactly this subset of the node's children.
    RecruitSubset(BTreeSet<AgentId>),
}

impl Choice {
    fn covers(&self, child: AgentId) -> bool {
        match self {
            Choice::RecruitAll => true,
            Choice::RecruitNone => false,
            Choice::RecruitSubset(set) => set.contains(&child),
        }
    }
}

/// A full assignment of choices. Nodes absent from the map recruit no one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyProfile {
    choices: BTreeMap<AgentId, Choice>,
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Everyone recruits everyone they can.
    pub fn all_recruit(forest: &RecruitmentForest) -> Self {
        let choices = forest
            .agents()
            .filter(|&a| !forest.children(a).is_empty())
            .map(|a| (a, Choice::RecruitAll))
            .collect();
        Self { choices }
    }

    pub fn set(&mut self, agent: AgentId, choice: Choice) -> &mut Self {
        self.choices.insert(agent, choice);
        self
    }

    /// The effective choice of `agent` (absent ⇒ recruit no one).
    pub fn choice(&self, agent: AgentId) -> &Choice {
        self.choices.get(&agent).unwrap_or(&Choice::RecruitNone)
    }

    pub fn choices(&self) -> &BTreeMap<AgentId, Choice> {
        &self.choices
    }

    /// Does every node with children recruit all of them under this
    /// profile?
    pub fn is_all_recruit(&self, forest: &RecruitmentForest) -> bool {
        forest.agents().all(|a| {
            let children = forest.children(a);
            children.iter().all(|&c| self.choice(a).covers(c))
        })
    }

    fn validate(&self, forest: &RecruitmentForest) -> Result<()> {
        for (&agent, choice) in &self.choices {
            if !forest.contains(agent) {
                return Err(Error::UnknownAgent(agent));
            }
            if let Choice::RecruitSubset(set) = choice {
                let children: BTreeSet<AgentId> = forest.children(agent).iter().copied().collect();
                if let Some(&stray) = set.difference(&children).next() {
                    return Err(Error::Config(format!(
                        "agent {stray} is not a child of agent {agent}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The subforest actually reached when nodes play `profile`: a node is
/// included iff every ancestor on its path chose to recruit the next step.
/// Roots are always included — seeds are informed directly.
pub fn recruited_subforest(
    forest: &RecruitmentForest,
    profile: &StrategyProfile,
) -> Result<RecruitmentForest> {
    profile.validate(forest)?;
    let members = membership(forest, profile);
    let records: Vec<_> = forest
        .records()
        .filter(|rec| members.contains(&rec.child))
        .collect();
    RecruitmentForest::from_records(&records)
}

fn membership(forest: &RecruitmentForest, profile: &StrategyProfile) -> BTreeSet<AgentId> {
    let mut members: BTreeSet<AgentId> = BTreeSet::new();
    let mut frontier: Vec<AgentId> = forest.roots().to_vec();
    while let Some(agent) = frontier.pop() {
        members.insert(agent);
        let choice = profile.choice(agent);
        for &child in forest.children(agent) {
            if choice.covers(child) {
                frontier.push(child);
            }
        }
    }
    members
}

/// Expected payment share under the uniform success model for a node whose
/// reachable subtree has shape `profile` inside a recruited population of
/// `n_prime`: (1 + Σᵢ xᵢ/2ⁱ)/n′.
///
/// Units are normalized (the task value and the finder's ½ factor scale
/// every payoff identically); see
/// [`expected_payment_uniform_valued`] for currency units.
pub fn expected_payment_uniform(
    shape: &DescendantProfile,
    n_prime: u64,
) -> Result<BigRational> {
    if n_prime < 1 + shape.total() {
        return Err(Error::Domain(format!(
            "population {n_prime} cannot contain a node with {} descendants",
            shape.total()
        )));
    }
    let numer = BigRational::one() + shape.discounted();
    Ok(numer / BigRational::from_integer(BigInt::from(n_prime)))
}

/// [`expected_payment_uniform`] scaled by a task value.
pub fn expected_payment_uniform_valued(
    shape: &DescendantProfile,
    n_prime: u64,
    task_value: &BigRational,
) -> Result<BigRational> {
    Ok(expected_payment_uniform(shape, n_prime)? * task_value)
}

/// The ε success model: every agent finds any given task with the same
/// small probability ε, with n·ε ≤ 1 so probabilities stay coherent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonModel {
    epsilon: BigRational,
    population: u64,
}

impl EpsilonModel {
    pub fn new(epsilon: BigRational, population: u64) -> Result<Self> {
        if !epsilon.is_positive() || epsilon > BigRational::one() {
            return Err(Error::Config("epsilon must lie in (0, 1]".into()));
        }
        if population == 0 {
            return Err(Error::Config("population must be positive".into()));
        }
        if &epsilon * BigRational::from_integer(BigInt::from(population)) > BigRational::one() {
            return Err(Error::Config(
                "population times epsilon must not exceed 1".into(),
            ));
        }
        Ok(Self {
            epsilon,
            population,
        })
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn population(&self) -> u64 {
        self.population
    }
}

/// Expected reward under the ε model for a node with subtree shape
/// `shape`: ε·v/2 + Σⱼ ε·xⱼ·v/2ʲ. Grows with every additional recruit,
/// which is why recruiting is dominant when finder probabilities don't
/// dilute.
pub fn expected_reward_epsilon(
    model: &EpsilonModel,
    task_value: &BigRational,
    shape: &DescendantProfile,
) -> BigRational {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    model.epsilon() * task_value * (half + shape.discounted())
}

/// Weight of a node: the total (normalized) reward it would collect if
/// every node in its subtree completed one task. Leaves weigh 1; otherwise
/// W = 1 + ½·Σ W_child.
pub fn weight(forest: &RecruitmentForest, node: AgentId) -> Result<BigRational> {
    if !forest.contains(node) {
        return Err(Error::UnknownAgent(node));
    }
    // Children-before-parent order: BFS order reversed.
    let mut order = vec![node];
    let mut i = 0;
    while i < order.len() {
        order.extend_from_slice(forest.children(order[i]));
        i += 1;
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut weights: BTreeMap<AgentId, BigRational> = BTreeMap::new();
    for &a in order.iter().rev() {
        let child_sum: BigRational = forest.children(a).iter().map(|c| weights[c].clone()).sum();
        weights.insert(a, BigRational::one() + &half * child_sum);
    }
    Ok(weights.remove(&node).unwrap())
}

/// Why a node does (or does not) prefer recruiting all children over
/// recruiting none, with everyone else recruiting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecruitReport {
    pub node: AgentId,
    /// Strictly prefers recruiting: k > threshold.
    pub recruits: bool,
    /// Exactly indifferent: k = threshold.
    pub indifferent: bool,
    /// Number of agents outside the node's subtree, including the node.
    pub k: u64,
    /// Σxᵢ / Σ(xᵢ/2ⁱ); recruiting wins iff k exceeds this. Zero for leaves.
    pub threshold: BigRational,
    pub profile: DescendantProfile,
}

/// Decide recruit-all vs recruit-none for one node, all others recruiting.
///
/// Recruiting dilutes the finder pool from k to k + Σxᵢ but adds the
/// discounted subtree; it wins exactly when k > Σxᵢ / Σ(xᵢ/2ⁱ). Leaves
/// have nothing to recruit and count as (vacuously) preferring.
pub fn prefers_recruit_all(forest: &RecruitmentForest, node: AgentId) -> Result<RecruitReport> {
    let profile = forest.descendant_profile(node)?;
    let total = profile.total();
    let k = forest.len() as u64 - total;
    if total == 0 {
        return Ok(RecruitReport {
            node,
            recruits: true,
            indifferent: false,
            k,
            threshold: BigRational::zero(),
            profile,
        });
    }
    let threshold = BigRational::from_integer(BigInt::from(total)) / profile.discounted();
    let k_exact = BigRational::from_integer(BigInt::from(k));
    Ok(RecruitReport {
        node,
        recruits: k_exact > threshold,
        indifferent: k_exact == threshold,
        k,
        threshold,
        profile,
    })
}

/// Verdict on the all-recruit profile in the all-or-none game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashReport {
    pub is_nash: bool,
    /// Nodes that strictly gain by deviating to recruit-none.
    pub deviators: Vec<AgentId>,
    pub reports: Vec<RecruitReport>,
}

/// Is everyone-recruits a (weak) Nash equilibrium of the all-or-none game?
///
/// A node breaks the equilibrium only if defecting is a strict
/// improvement, i.e. k < threshold; indifferent nodes are not deviators.
pub fn is_all_recruit_nash(forest: &RecruitmentForest) -> NashReport {
    let mut deviators = Vec::new();
    let mut reports = Vec::new();
    for node in forest.agents() {
        let report = prefers_recruit_all(forest, node).expect("node is in forest");
        if !report.recruits && !report.indifferent {
            deviators.push(node);
        }
        reports.push(report);
    }
    NashReport {
        is_nash: deviators.is_empty(),
        deviators,
        reports,
    }
}

/// Verdict on recruiting one particular child, holding the rest recruited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildDecision {
    pub child: AgentId,
    /// Recruiting this child is strictly better than dropping it.
    pub recruit: bool,
    /// Dropping this child is a strict improvement.
    pub drop_improves: bool,
    pub indifferent: bool,
    /// The coarse per-child screen W_c/|c| > (1 + ½(m−1))/(k + m − 1).
    /// Intended as a quick sufficient check for `recruit`, but loose:
    /// a deep-chain child can pass the screen while the exact inequality
    /// still favors dropping it (see the quarter-tree boundary test), so
    /// `recruit` is authoritative whenever the two disagree.
    pub sufficient_condition: bool,
}

/// Selective-recruitment analysis of one node, all other nodes recruiting
/// all of their children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectiveReport {
    pub node: AgentId,
    /// Agents outside the node's subtree, including the node itself.
    pub k: u64,
    pub decisions: Vec<ChildDecision>,
    /// Every child is strictly worth recruiting.
    pub all_strict: bool,
    /// No single dropped child strictly improves the payoff (recruit-all
    /// is a best response up to single-child deviations).
    pub no_improving_drop: bool,
}

/// For each child of `node`, decide whether recruiting that child beats
/// dropping it (everyone else, and the node's other children, recruited).
/// Child subtree sizes count the child itself, so k + Σ|cᵢ| = n.
pub fn prefers_selective_recruit_all(
    forest: &RecruitmentForest,
    node: AgentId,
) -> Result<SelectiveReport> {
    if !forest.contains(node) {
        return Err(Error::UnknownAgent(node));
    }
    let children = forest.children(node).to_vec();
    let m = children.len() as u64;
    let n = forest.len() as u64;
    let child_weights: Vec<BigRational> = children
        .iter()
        .map(|&c| weight(forest, c))
        .collect::<Result<_>>()?;
    let child_sizes: Vec<u64> = children
        .iter()
        .map(|&c| forest.subtree_size(c).unwrap() as u64)
        .collect();
    let k = n - child_sizes.iter().sum::<u64>();

    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let weight_sum: BigRational = child_weights.iter().sum();
    let full_numer = BigRational::one() + &half * &weight_sum;
    let full_payoff = &full_numer / BigRational::from_integer(BigInt::from(n));

    let mut decisions = Vec::new();
    for (i, &child) in children.iter().enumerate() {
        let drop_numer = &full_numer - &half * &child_weights[i];
        let drop_pop = n - child_sizes[i];
        let drop_payoff = drop_numer / BigRational::from_integer(BigInt::from(drop_pop));
        let recruit = drop_payoff < full_payoff;
        let drop_improves = drop_payoff > full_payoff;
        // Coarse bound: per-node weight of this child's subtree against the
        // worst case where every other child is a bare leaf.
        let lhs = &child_weights[i] / BigRational::from_integer(BigInt::from(child_sizes[i]));
        let rhs = (BigRational::one() + &half * BigRational::from_integer(BigInt::from(m - 1)))
            / BigRational::from_integer(BigInt::from(k + m - 1));
        decisions.push(ChildDecision {
            child,
            recruit,
            drop_improves,
            indifferent: !recruit && !drop_improves,
            sufficient_condition: lhs > rhs,
        });
    }
    Ok(SelectiveReport {
        node,
        k,
        all_strict: decisions.iter().all(|d| d.recruit),
        no_improving_drop: decisions.iter().all(|d| !d.drop_improves),
        decisions,
    })
}

/// Which strategy space the brute-force oracle enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyMode {
    AllOrNone,
    Selective,
}

/// Default ceiling on the number of profiles the oracle will enumerate.
pub const DEFAULT_PROFILE_CAP: u128 = 1 << 20;

/// Exact expected payoff of every agent under `profile` (uniform success
/// model, normalized units). Agents outside the recruited subforest
/// earn zero.
pub fn profile_payoffs(
    forest: &RecruitmentForest,
    profile: &StrategyProfile,
) -> Result<BTreeMap<AgentId, BigRational>> {
    profile.validate(forest)?;
    let members = membership(forest, profile);
    let n_prime = BigRational::from_integer(BigInt::from(members.len()));
    // Weights within the subforest, children before parents.
    let mut order: Vec<AgentId> = Vec::with_capacity(members.len());
    let mut i = 0;
    order.extend(forest.roots().iter().copied());
    while i < order.len() {
        let a = order[i];
        let choice = profile.choice(a);
        order.extend(forest.children(a).iter().copied().filter(|&c| choice.covers(c)));
        i += 1;
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut weights: BTreeMap<AgentId, BigRational> = BTreeMap::new();
    for &a in order.iter().rev() {
        let choice = profile.choice(a);
        let child_sum: BigRational = forest
            .children(a)
            .iter()
            .filter(|&&c| choice.covers(c))
            .map(|c| weights[c].clone())
            .sum();
        weights.insert(a, BigRational::one() + &half * child_sum);
    }
    Ok(forest
        .agents()
        .map(|a| {
            let payoff = match weights.get(&a) {
                Some(w) => w / &n_prime,
                None => BigRational::zero(),
            };
            (a, payoff)
        })
        .collect())
}

/// Enumerate every pure strategy profile and return those where no single
/// node can strictly improve its payoff by changing its own choice.
///
/// Strategy spaces beyond `cap` profiles are refused rather than silently
/// truncated.
pub fn brute_force_equilibrium(
    forest: &RecruitmentForest,
    mode: StrategyMode,
    cap: u128,
) -> Result<Vec<StrategyProfile>> {
    let players: Vec<AgentId> = forest
        .agents()
        .filter(|&a| !forest.children(a).is_empty())
        .collect();
    let options: Vec<Vec<Choice>> = players
        .iter()
        .map(|&p| match mode {
            StrategyMode::AllOrNone => vec![Choice::RecruitAll, Choice::RecruitNone],
            StrategyMode::Selective => {
                let children = forest.children(p);
                (0u64..1 << children.len())
                    .map(|mask| {
                        let subset = children
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, &c)| c)
                            .collect();
                        Choice::RecruitSubset(subset)
                    })
                    .collect()
            }
        })
        .collect();
    let total = options
        .iter()
        .fold(1u128, |acc, opts| acc.saturating_mul(opts.len() as u128));
    if total > cap {
        return Err(Error::CapExceeded {
            profiles: total,
            cap,
        });
    }

    let mut equilibria = Vec::new();
    for index in 0..total {
        let mut profile = StrategyProfile::new();
        let mut rest = index;
        for (p, opts) in players.iter().zip(&options) {
            let pick = (rest % opts.len() as u128) as usize;
            rest /= opts.len() as u128;
            profile.set(*p, opts[pick].clone());
        }
        let payoffs = profile_payoffs(forest, &profile)?;
        let mut stable = true;
        'players: for (p, opts) in players.iter().zip(&options) {
            let current = profile.choice(*p).clone();
            for alt in opts {
                if *alt == current {
                    continue;
                }
                let mut deviated = profile.clone();
                deviated.set(*p, alt.clone());
                let alt_payoffs = profile_payoffs(forest, &deviated)?;
                if alt_payoffs[p] > payoffs[p] {
                    stable = false;
                    break 'players;
                }
            }
        }
        if stable {
            equilibria.push(profile);
        }
    }
    Ok(equilibria)
}
