//! The recursive incentive payment engine.
//!
//! Whoever completes a task receives half its value; each recruiter up the
//! chain receives half of what the person below them received. Summed over
//! a chain of length r the mechanism pays out v·(2ʳ−1)/2ʳ < v, so it can
//! never exceed a budget that covers the task values themselves. All money
//! arithmetic here is exact rational — the deficit bound is an identity in
//! this module, not an approximation.

use std::collections::{BTreeMap, BTreeSet};

pub use num::rational::BigRational;

use num::{BigInt, One, Signed, Zero};

use crate::network::{AgentId, TaskId, WinningSequence};
use crate::{Error, Result};

/// A task with its reward value in currency units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    pub value: BigRational,
}

/// The tasks on offer, the total budget, and the per-seed advertising cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskEnvironment {
    tasks: Vec<Task>,
    budget: BigRational,
    seed_cost: BigRational,
}

impl TaskEnvironment {
    /// Environment with explicit task values. Task ids must be unique and
    /// values positive; heterogeneous values are accepted, in which case
    /// [`check_budget`] is the only feasibility guarantee.
    pub fn new(tasks: Vec<Task>, budget: BigRational, seed_cost: BigRational) -> Result<Self> {
        if !budget.is_positive() {
            return Err(Error::Config("budget must be positive".into()));
        }
        if seed_cost.is_negative() {
            return Err(Error::Config("seed cost must be non-negative".into()));
        }
        let mut seen = BTreeSet::new();
        for task in &tasks {
            if !task.value.is_positive() {
                return Err(Error::Config(format!(
                    "task {} has non-positive value",
                    task.id
                )));
            }
            if !seen.insert(task.id) {
                return Err(Error::Config(format!("duplicate task id {}", task.id)));
            }
        }
        Ok(Self {
            tasks,
            budget,
            seed_cost,
        })
    }

    /// The canonical setup: `task_count` tasks with ids 1..=count, each
    /// valued at budget/count, zero seed cost.
    pub fn uniform(budget: BigRational, task_count: u64) -> Result<Self> {
        Self::uniform_with_cost(budget, task_count, BigRational::zero())
    }

    /// [`uniform`](Self::uniform) with an explicit per-seed advertising
    /// cost (the `c` in the budget constraint c·|I| + Σρ ≤ B).
    pub fn uniform_with_cost(
        budget: BigRational,
        task_count: u64,
        seed_cost: BigRational,
    ) -> Result<Self> {
        if task_count == 0 {
            return Err(Error::Config("task count must be at least 1".into()));
        }
        if !budget.is_positive() {
            return Err(Error::Config("budget must be positive".into()));
        }
        if seed_cost.is_negative() {
            return Err(Error::Config("seed cost must be non-negative".into()));
        }
        let value = &budget / BigRational::from_integer(BigInt::from(task_count));
        let tasks = (1..=task_count)
            .map(|id| Task {
                id: TaskId(id),
                value: value.clone(),
            })
            .collect();
        Ok(Self {
            tasks,
            budget,
            seed_cost,
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn budget(&self) -> &BigRational {
        &self.budget
    }

    pub fn seed_cost(&self) -> &BigRational {
        &self.seed_cost
    }
}

/// Payment to the agent at `position` (1-based from the root) in a winning
/// chain of length `chain_length`: value/2^(length − position + 1).
///
/// The finder (last position) always receives value/2 regardless of chain
/// length; each step toward the root halves the payment.
pub fn chain_payment(
    task_value: &BigRational,
    chain_length: u64,
    position: u64,
) -> Result<BigRational> {
    if position == 0 || position > chain_length {
        return Err(Error::PositionOutOfRange {
            position,
            length: chain_length,
        });
    }
    let exponent = chain_length - position + 1;
    let denom = BigInt::one() << exponent;
    Ok(task_value / BigRational::from_integer(denom))
}

/// Aggregated payments for a settled campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentLedger {
    budget: BigRational,
    payments: BTreeMap<AgentId, BigRational>,
    per_task_surplus: BTreeMap<TaskId, BigRational>,
}

impl PaymentLedger {
    fn empty(budget: BigRational) -> Self {
        Self {
            budget,
            payments: BTreeMap::new(),
            per_task_surplus: BTreeMap::new(),
        }
    }

    /// Payment owed to `agent`; zero if the agent is on no winning chain.
    pub fn payment(&self, agent: AgentId) -> BigRational {
        self.payments.get(&agent).cloned().unwrap_or_default()
    }

    pub fn payments(&self) -> &BTreeMap<AgentId, BigRational> {
        &self.payments
    }

    pub fn per_task_surplus(&self) -> &BTreeMap<TaskId, BigRational> {
        &self.per_task_surplus
    }

    pub fn total_paid(&self) -> BigRational {
        self.payments.values().sum()
    }

    /// Budget minus all chain payments (seed costs not included here;
    /// see [`check_budget`] for the full constraint).
    pub fn total_surplus(&self) -> BigRational {
        &self.budget - self.total_paid()
    }

    pub fn budget(&self) -> &BigRational {
        &self.budget
    }

    /// Fold another batch of the same campaign into this ledger. Payments
    /// add commutatively; a task settled in both batches is an error.
    pub fn merge(&mut self, other: &PaymentLedger) -> Result<()> {
        if self.budget != other.budget {
            return Err(Error::Config(
                "cannot merge ledgers with different budgets".into(),
            ));
        }
        for (&task, surplus) in &other.per_task_surplus {
            if self.per_task_surplus.contains_key(&task) {
                return Err(Error::DuplicateTask(task));
            }
            self.per_task_surplus.insert(task, surplus.clone());
        }
        for (&agent, amount) in &other.payments {
            *self.payments.entry(agent).or_default() += amount;
        }
        Ok(())
    }

    /// JSON export with rationals rendered as `"numer/denom"` strings:
    /// `{"payments": {...}, "per_task_surplus": {...}, "surplus": "..."}`.
    /// Keys are emitted in ascending numeric order.
    pub fn to_json(&self) -> String {
        let map = |entries: Vec<String>| format!("{{{}}}", entries.join(","));
        let payments = map(self
            .payments
            .iter()
            .map(|(agent, amount)| format!("\"{agent}\":\"{}\"", ratio_to_string(amount)))
            .collect());
        let per_task = map(self
            .per_task_surplus
            .iter()
            .map(|(task, surplus)| format!("\"{task}\":\"{}\"", ratio_to_string(surplus)))
            .collect());
        format!(
            "{{\"payments\":{payments},\"per_task_surplus\":{per_task},\"surplus\":\"{}\"}}",
            ratio_to_string(&self.total_surplus())
        )
    }
}

/// Settle a set of winning sequences into a ledger.
///
/// Each agent's payment sums its chain payments across every sequence it
/// appears in; per-task surplus is the task value minus that chain's
/// payout. Settlement is permutation-invariant in the sequence order.
pub fn settle(env: &TaskEnvironment, sequences: &[WinningSequence]) -> Result<PaymentLedger> {
    let mut ledger = PaymentLedger::empty(env.budget().clone());
    for seq in sequences {
        let task = env.task(seq.task()).ok_or(Error::UnknownTask(seq.task()))?;
        if ledger.per_task_surplus.contains_key(&task.id) {
            return Err(Error::DuplicateTask(task.id));
        }
        let r = seq.len() as u64;
        let mut paid = BigRational::zero();
        for (idx, &agent) in seq.chain().iter().enumerate() {
            let amount = chain_payment(&task.value, r, idx as u64 + 1)?;
            paid += &amount;
            *ledger.payments.entry(agent).or_default() += amount;
        }
        ledger.per_task_surplus.insert(task.id, &task.value - paid);
    }
    Ok(ledger)
}

/// Outcome of the budget-feasibility check c·|I| + Σρ ≤ B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetReport {
    pub satisfied: bool,
    /// B − c·|I| − Σρ; negative iff violated.
    pub slack: BigRational,
    /// c·|I| + Σρ.
    pub outlay: BigRational,
}

/// Check the budget constraint for a settled ledger given the initially
/// targeted seed set I (advertising costs c per seed).
pub fn check_budget(
    env: &TaskEnvironment,
    seeds: &BTreeSet<AgentId>,
    ledger: &PaymentLedger,
) -> BudgetReport {
    let seeding = env.seed_cost() * BigRational::from_integer(BigInt::from(seeds.len()));
    let outlay = seeding + ledger.total_paid();
    let slack = env.budget() - &outlay;
    BudgetReport {
        satisfied: !slack.is_negative(),
        slack,
        outlay,
    }
}

/// Total reward collected by a finder who splices `m` fabricated identities
/// below themselves in the winning chain: Σ_{l=0..m} v/2^(l+1), which is
/// v·(1 − 2^{−(m+1)}). Strictly increasing in m and approaching v — the
/// reason false names must be policed outside the payment rule.
pub fn false_name_reward(task_value: &BigRational, m: u32) -> BigRational {
    let denom = BigInt::one() << (m as u64 + 1);
    let numer = &denom - BigInt::one();
    task_value * BigRational::new(numer, denom)
}

/// Render a rational as `"numer/denom"`, always with an explicit
/// denominator (`750` renders as `"750/1"`).
pub fn ratio_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `"numer/denom"` or a bare integer string.
pub fn ratio_from_str(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse {
        line: 0,
        msg: format!("invalid rational {s:?}"),
    };
    match s.split_once('/') {
        Some((numer, denom)) => {
            let numer: BigInt = numer.trim().parse().map_err(|_| bad())?;
            let denom: BigInt = denom.trim().parse().map_err(|_| bad())?;
            if denom.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(numer, denom))
        }
        None => {
            let numer: BigInt = s.trim().parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(numer))
        }
    }
}

/// Render a rational as a decimal string with `places` fraction digits,
/// rounding halves away from zero. For report output only — settlement
/// itself never rounds.
pub fn ratio_to_decimal(r: &BigRational, places: usize) -> String {
    let scale = BigInt::from(10u8).pow(places as u32);
    let scaled = r * BigRational::from_integer(scale);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded: BigInt = if scaled.is_negative() {
        (scaled - half).ceil().to_integer()
    } else {
        (scaled + half).floor().to_integer()
    };
    let digits = rounded.magnitude().to_string();
    let sign = if rounded.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    format!("{sign}{int_part}.{frac_part}")
}
