//! Recursive incentive mechanism for diffusion-based task execution.
//!
//! Agents learn about tasks only through peer recruitment. Whoever completes
//! a task is paid half its value, their recruiter a quarter, and so on up the
//! recruitment chain — a scheme that rewards mobilization without ever
//! exceeding the task budget. This crate implements that mechanism end to
//! end:
//!
//! - [`network`]: social graphs, timestamped recruitment forests, winning
//!   sequences, and file ingestion for both.
//! - [`mechanism`]: exact-rational chain payments, settlement into a payment
//!   ledger, budget feasibility, and the false-name attack payoff.
//! - [`game`]: recruitment as a game on forests — expected payoffs, node
//!   weights, Nash conditions for all-or-none and selective recruitment, and
//!   a brute-force equilibrium oracle for small instances.
//! - [`diffusion`]: stochastic cascade simulation with common-random-number
//!   coupling, finder sampling, and seed-removal monotonicity probes.
//! - [`analysis`]: cascade shape statistics, discrete power-law fitting, and
//!   exponential inter-signup fitting.
//!
//! All money and payoff arithmetic is exact ([`num::BigRational`]); floats
//! appear only where the model itself is stochastic (signup times,
//! probabilities) or where a statistic is inherently real-valued.

pub mod analysis;
pub mod diffusion;
pub mod game;
pub mod mechanism;
pub mod network;

use network::{AgentId, TaskId};

/// Errors shared across the crate.
///
/// Variants are grouped by how callers typically react: malformed input
/// (`Parse`, the forest/graph validation variants), misuse of an operation
/// (`Config`, `Domain`, lookup variants), and requests the implementation
/// declines rather than answers wrongly (`CapExceeded`, `Capability`).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed line in an ingested text format.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Social graphs model acquaintance between distinct agents.
    #[error("self-loop on agent {0}")]
    SelfLoop(AgentId),
    /// An agent appeared as `child` in two recruitment records.
    #[error("agent {0} recruited more than once")]
    DuplicateChild(AgentId),
    /// A record names a parent that never signed up itself.
    #[error("agent {child} recruited by unknown agent {parent}")]
    UnknownParent { child: AgentId, parent: AgentId },
    /// Parent pointers loop instead of reaching a root.
    #[error("recruitment cycle through agent {0}")]
    Cycle(AgentId),
    /// A child signed up no later than its recruiter.
    #[error("agent {child} signed up at {child_time} but its recruiter signed up at {parent_time}")]
    Chronology {
        child: AgentId,
        child_time: f64,
        parent_time: f64,
    },
    /// Signup times must be finite and non-negative.
    #[error("agent {agent} has invalid signup time {time}")]
    InvalidTime { agent: AgentId, time: f64 },
    /// Lookup of an agent that is not in the structure at hand.
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    /// Lookup of a task that is not in the environment.
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    /// The same task appeared in two winning sequences.
    #[error("task {0} settled more than once")]
    DuplicateTask(TaskId),
    /// Chain position outside `1..=chain_length`.
    #[error("position {position} outside chain of length {length}")]
    PositionOutOfRange { position: u64, length: u64 },
    /// A parameter or configuration value is unusable.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Inputs are well-formed but violate an operation's premise.
    #[error("{0}")]
    Domain(String),
    /// Too few samples to produce a meaningful fit or statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Brute-force enumeration would exceed the configured profile cap.
    #[error("strategy space of {profiles} profiles exceeds cap of {cap}")]
    CapExceeded { profiles: u128, cap: u128 },
    /// The requested check cannot be answered under the given configuration.
    #[error("capability not available: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;
