//! `mobilize` — command-line front end for the recruitment-mechanism
//! library.
//!
//! Five subcommands wire ingestion, simulation, settlement, equilibrium
//! checks, and analysis into reproducible pipelines:
//!
//! - `simulate`: run recruitment cascades on a social graph, writing each
//!   as a cascade CSV.
//! - `settle`: turn a cascade plus task finders into a payment ledger
//!   (exact rationals, JSON on stdout).
//! - `verify`: check whether all-recruit is a Nash equilibrium of the
//!   recruitment game on a forest.
//! - `analyze`: cascade shape statistics plus power-law and exponential
//!   fits, with plot-ready CSV tables.
//! - `monotonicity`: probe seed-removal monotonicity of the coupled
//!   diffusion, optionally with the graph-level equilibrium check.
//!
//! Scenario JSON (`--config`) supplies defaults; every flag overrides its
//! config counterpart. Randomized commands refuse to run without an
//! explicit RNG seed — there is no wall-clock default — and are fully
//! deterministic given one.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O or data error,
//! 3 declined capability (oracle profile cap exceeded, draw-order
//! coupling where keyed randomness is required).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use mobilize_core::analysis::{
    ccdf, compute_stats, fit_exponential, fit_power_law, inter_signup_times,
    recruitment_timeline,
};
use mobilize_core::diffusion::{
    check_monotonic, equilibrium_on_graph, run_cascade, sample_finders, Coupling,
    DiffusionConfig, ProcessKind, SuccessModel,
};
use mobilize_core::game::{
    brute_force_equilibrium, is_all_recruit_nash, prefers_selective_recruit_all, StrategyMode,
    DEFAULT_PROFILE_CAP,
};
use mobilize_core::mechanism::{
    check_budget, ratio_from_str, ratio_to_decimal, ratio_to_string, settle, BigRational,
    TaskEnvironment,
};
use mobilize_core::network::{AgentId, RecruitmentForest, SocialGraph, TaskId, WinningSequence};

// ---------------------------------------------------------------------
// Error handling and exit codes
// ---------------------------------------------------------------------

/// Failures bucketed by exit code: configuration problems (1), I/O and
/// data problems (2), and requests the implementation declines rather
/// than answers wrongly (3).
#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
    Capability(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Capability(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Data(msg) | CliError::Capability(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<mobilize_core::Error> for CliError {
    fn from(err: mobilize_core::Error) -> Self {
        use mobilize_core::Error as E;
        match err {
            E::Config(_) => CliError::Config(err.to_string()),
            E::CapExceeded { .. } | E::Capability(_) => CliError::Capability(err.to_string()),
            // Everything else describes the input files: parse failures,
            // forest validation, unknown agents or tasks, bad samples.
            _ => CliError::Data(err.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_data(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_data(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------
// Scenario configuration (JSON)
// ---------------------------------------------------------------------

/// On-disk scenario description. Every field is optional here; each
/// command checks for what it actually needs after merging flags over
/// the file (flags win).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    graph_path: Option<PathBuf>,
    #[serde(default)]
    symmetrize: bool,
    /// Explicit seed ids; wins over `seed_count` + `seed_rule`.
    seeds: Option<Vec<u64>>,
    seed_count: Option<usize>,
    seed_rule: Option<SeedRuleArg>,
    tasks: Option<TaskSection>,
    diffusion: Option<DiffusionSection>,
    success_model: Option<SuccessModelConfig>,
    output_dir: Option<PathBuf>,
    rng_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskSection {
    count: u64,
    /// Total budget B, as an integer or `numer/denom` string.
    budget: String,
    /// Per-seed advertising cost c; defaults to 0.
    seed_cost: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiffusionSection {
    recruit_probability: Option<f64>,
    mean_intersignup: Option<f64>,
    horizon: Option<f64>,
    process: Option<ProcessArg>,
    coupling: Option<CouplingArg>,
    /// Per-agent probability overrides, keyed by agent id.
    #[serde(default)]
    node_probabilities: BTreeMap<u64, f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
enum SuccessModelConfig {
    Uniform,
    Epsilon { epsilon: f64 },
}

fn load_scenario(path: Option<&Path>) -> CliResult<ScenarioConfig> {
    let Some(path) = path else {
        return Ok(ScenarioConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "mobilize",
    version,
    about = "Recruitment cascades, chain payments, and equilibrium checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more recruitment cascades on a social graph
    Simulate(SimulateArgs),
    /// Settle winning chains from a cascade into a payment ledger
    Settle(SettleArgs),
    /// Check recruitment equilibria on a forest
    Verify(VerifyArgs),
    /// Cascade statistics, distribution fits, and plot tables
    Analyze(AnalyzeArgs),
    /// Probe seed-removal monotonicity of the coupled diffusion
    Monotonicity(MonotonicityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SeedRuleArg {
    /// The lowest agent ids in the graph
    First,
    /// Uniform without replacement (seeded by --rng-seed)
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ProcessArg {
    /// One successful offer recruits a node
    Independent,
    /// A node joins only on its second incoming signal
    TwoSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CouplingArg {
    /// Draws keyed by (seed, edge); comparable across seed sets
    Keyed,
    /// One sequential stream in event order
    DrawOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Exact threshold test of the all-or-none recruitment game
    AllOrNone,
    /// Single-child drop test against selective deviations
    Selective,
    /// Brute-force enumeration of all-or-none profiles
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuccessArg {
    /// Each task's finder is uniform over recruited agents
    Uniform,
    /// Every recruited agent finds each task with probability ε
    Epsilon,
}

impl From<ProcessArg> for ProcessKind {
    fn from(arg: ProcessArg) -> Self {
        match arg {
            ProcessArg::Independent => ProcessKind::IndependentCascade,
            ProcessArg::TwoSignal => ProcessKind::TwoSignalContagion,
        }
    }
}

impl From<CouplingArg> for Coupling {
    fn from(arg: CouplingArg) -> Self {
        match arg {
            CouplingArg::Keyed => Coupling::Keyed,
            CouplingArg::DrawOrder => Coupling::DrawOrder,
        }
    }
}

/// Diffusion inputs shared by `simulate` and `monotonicity`.
#[derive(Debug, Args)]
struct DiffusionOpts {
    /// Edge list file: one `u v` pair per line, `#` comments allowed
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Also insert the reverse of every edge
    #[arg(long)]
    symmetrize: bool,
    /// Comma-separated ids of the initially targeted agents
    #[arg(long)]
    seeds: Option<String>,
    /// Select this many seeds by --seed-rule instead of listing them
    #[arg(long)]
    seed_count: Option<usize>,
    /// How to choose seeds when --seed-count is given [default: first]
    #[arg(long, value_enum)]
    seed_rule: Option<SeedRuleArg>,
    /// Per-offer recruitment probability p
    #[arg(long)]
    probability: Option<f64>,
    /// Mean of the exponential inter-signup delay [default: 1]
    #[arg(long)]
    mean_intersignup: Option<f64>,
    /// Discard offers arriving after this time
    #[arg(long)]
    horizon: Option<f64>,
    /// Contagion rule [default: independent]
    #[arg(long, value_enum)]
    process: Option<ProcessArg>,
    /// Randomness coupling [default: keyed]
    #[arg(long, value_enum)]
    coupling: Option<CouplingArg>,
    /// RNG seed; required, with no wall-clock default
    #[arg(long)]
    rng_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    diffusion: DiffusionOpts,
    /// Directory for cascade CSV output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Independent replicates (replicate k runs with rng seed + k)
    #[arg(long, default_value_t = 1)]
    replicates: usize,
}

#[derive(Debug, Args)]
struct SettleArgs {
    /// Scenario JSON; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cascade CSV (header `child,parent,signup_time`)
    #[arg(long)]
    cascade: PathBuf,
    /// Total budget B, as an integer or numer/denom rational
    #[arg(long)]
    budget: Option<String>,
    /// Number of tasks sharing the budget equally [default: 1]
    #[arg(long)]
    tasks: Option<u64>,
    /// Per-seed advertising cost c, for the budget check [default: 0]
    #[arg(long)]
    seed_cost: Option<String>,
    /// Ordered comma-separated finder ids: task i is completed by the
    /// i-th id, tasks beyond the list stay unfound; empty means none
    #[arg(long)]
    finders: Option<String>,
    /// Sample finders from the cascade instead of listing them
    #[arg(long, value_enum)]
    success_model: Option<SuccessArg>,
    /// Per-agent task-finding probability for --success-model epsilon
    #[arg(long)]
    epsilon: Option<f64>,
    /// RNG seed for finder sampling
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Seed set I for the budget check (comma-separated ids)
    #[arg(long)]
    seeds: Option<String>,
    /// Also write the ledger JSON to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append decimal renderings with this many places to the summary
    #[arg(long)]
    decimals: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Forest file in cascade CSV format
    #[arg(long)]
    forest: PathBuf,
    /// Which equilibrium check to run
    #[arg(long, value_enum, default_value_t = ModeArg::AllOrNone)]
    mode: ModeArg,
    /// Profile cap for oracle mode; larger spaces are refused (exit 3)
    #[arg(long, default_value_t = DEFAULT_PROFILE_CAP)]
    cap: u128,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Cascade CSV to analyze
    #[arg(long)]
    cascade: PathBuf,
    /// Directory for stats.json, sizes.csv, intersignup_ccdf.csv,
    /// timeline.csv
    #[arg(long)]
    out: PathBuf,
    /// Timeline bin width in seconds
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    /// Drop singleton trees from the attrition and branching denominators
    #[arg(long)]
    exclude_singletons: bool,
}

#[derive(Debug, Args)]
struct MonotonicityArgs {
    /// Scenario JSON; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    diffusion: DiffusionOpts,
    /// Also check the graph-level all-recruit equilibrium condition
    #[arg(long)]
    equilibrium: bool,
    /// Unilateral deviations to replay in the equilibrium check
    #[arg(long, default_value_t = 8)]
    deviations: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are successful outputs; any other
            // parse failure is a configuration problem.
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Settle(args) => cmd_settle(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Monotonicity(args) => cmd_monotonicity(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

fn parse_id_list(list: &str) -> CliResult<Vec<u64>> {
    let trimmed = list.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("invalid agent id {:?}", token.trim())))
        })
        .collect()
}

fn join_ids(ids: &[AgentId]) -> String {
    ids.iter()
        .map(AgentId::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Deepest signup level across the forest (roots count as level 1).
fn max_depth(forest: &RecruitmentForest) -> usize {
    forest
        .agents()
        .filter_map(|agent| forest.depth(agent))
        .max()
        .unwrap_or(0)
}

/// Exact rational, optionally followed by a rounded decimal rendering.
fn money(amount: &BigRational, decimals: Option<usize>) -> String {
    match decimals {
        Some(places) => format!(
            "{} (= {})",
            ratio_to_string(amount),
            ratio_to_decimal(amount, places)
        ),
        None => ratio_to_string(amount),
    }
}

fn resolve_seeds(
    graph: &SocialGraph,
    explicit: Option<Vec<u64>>,
    count: Option<usize>,
    rule: SeedRuleArg,
    rng_seed: u64,
) -> CliResult<BTreeSet<AgentId>> {
    if let Some(ids) = explicit {
        if ids.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        return Ok(ids.into_iter().map(AgentId).collect());
    }
    let count = count.ok_or_else(|| {
        CliError::Config("no seeds (--seeds, or --seed-count with --seed-rule)".into())
    })?;
    let nodes: Vec<AgentId> = graph.nodes().collect();
    if count == 0 || count > nodes.len() {
        return Err(CliError::Config(format!(
            "seed count {count} outside 1..={}",
            nodes.len()
        )));
    }
    Ok(match rule {
        SeedRuleArg::First => nodes[..count].iter().copied().collect(),
        SeedRuleArg::Random => {
            // Salted so that seed selection and cascade draws stay
            // independent even though they share one scenario seed.
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x7365_6564_7275_6c65);
            rand::seq::index::sample(&mut rng, nodes.len(), count)
                .into_iter()
                .map(|i| nodes[i])
                .collect()
        }
    })
}

/// Merge flags over the scenario file into a loaded graph plus a cascade
/// configuration.
fn build_diffusion(
    opts: &DiffusionOpts,
    scenario: &ScenarioConfig,
) -> CliResult<(SocialGraph, DiffusionConfig)> {
    let graph_path = opts
        .graph
        .clone()
        .or_else(|| scenario.graph_path.clone())
        .ok_or_else(|| CliError::Config("no graph file (--graph or graph_path)".into()))?;
    let text = read_data(&graph_path)?;
    let graph = SocialGraph::from_edge_list(&text, opts.symmetrize || scenario.symmetrize)?;

    let rng_seed = opts.rng_seed.or(scenario.rng_seed).ok_or_else(|| {
        CliError::Config(
            "rng seed is required (--rng-seed or rng_seed); there is no wall-clock default"
                .into(),
        )
    })?;

    let section = scenario.diffusion.as_ref();
    let probability = opts
        .probability
        .or_else(|| section.and_then(|d| d.recruit_probability))
        .ok_or_else(|| {
            CliError::Config(
                "no recruitment probability (--probability or diffusion.recruit_probability)"
                    .into(),
            )
        })?;
    let mean = opts
        .mean_intersignup
        .or_else(|| section.and_then(|d| d.mean_intersignup))
        .unwrap_or(1.0);

    let explicit = match &opts.seeds {
        Some(list) => Some(parse_id_list(list)?),
        None => scenario.seeds.clone(),
    };
    let rule = opts
        .seed_rule
        .or(scenario.seed_rule)
        .unwrap_or(SeedRuleArg::First);
    let seeds = resolve_seeds(
        &graph,
        explicit,
        opts.seed_count.or(scenario.seed_count),
        rule,
        rng_seed,
    )?;

    let mut config = DiffusionConfig::new(seeds, probability, mean, rng_seed);
    config.horizon = opts.horizon.or_else(|| section.and_then(|d| d.horizon));
    config.process = opts
        .process
        .or_else(|| section.and_then(|d| d.process))
        .unwrap_or(ProcessArg::Independent)
        .into();
    config.coupling = opts
        .coupling
        .or_else(|| section.and_then(|d| d.coupling))
        .unwrap_or(CouplingArg::Keyed)
        .into();
    if let Some(section) = section {
        config.node_probabilities = section
            .node_probabilities
            .iter()
            .map(|(&id, &p)| (AgentId(id), p))
            .collect();
    }
    Ok((graph, config))
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

/// Run `replicates` independent cascades, replicate k reseeded with
/// base seed + k. Workers pull indices from a shared counter; results
/// are reassembled in replicate order.
fn run_replicates(
    graph: &SocialGraph,
    base: &DiffusionConfig,
    replicates: usize,
) -> CliResult<Vec<(u64, RecruitmentForest)>> {
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(replicates);
    let mut runs: Vec<(usize, u64, mobilize_core::Result<RecruitmentForest>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let k = next.fetch_add(1, Ordering::Relaxed);
                            if k >= replicates {
                                break;
                            }
                            let mut config = base.clone();
                            config.rng_seed = base.rng_seed.wrapping_add(k as u64);
                            out.push((k, config.rng_seed, run_cascade(graph, &config)));
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|handle| handle.join().expect("cascade worker panicked"))
                .collect()
        });
    runs.sort_by_key(|(k, ..)| *k);
    runs.into_iter()
        .map(|(_, seed, result)| Ok((seed, result?)))
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let scenario = load_scenario(args.config.as_deref())?;
    let (graph, config) = build_diffusion(&args.diffusion, &scenario)?;
    let out_dir = args
        .out
        .or(scenario.output_dir)
        .ok_or_else(|| CliError::Config("no output directory (--out or output_dir)".into()))?;
    if args.replicates == 0 {
        return Err(CliError::Config("--replicates must be at least 1".into()));
    }
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", out_dir.display())))?;

    let runs = run_replicates(&graph, &config, args.replicates)?;
    if runs.len() == 1 {
        let (_, forest) = &runs[0];
        let path = out_dir.join("cascade.csv");
        write_data(&path, &forest.to_csv())?;
        println!("wrote {}", path.display());
        println!("recruited agents (n'): {}", forest.len());
        println!("trees: {}", forest.roots().len());
        println!("max depth: {}", max_depth(forest));
    } else {
        let mut entries = Vec::new();
        for (k, (seed, forest)) in runs.iter().enumerate() {
            let path = out_dir.join(format!("cascade_{k:03}.csv"));
            write_data(&path, &forest.to_csv())?;
            println!(
                "wrote {}: {} agents, {} trees, max depth {} (rng seed {seed})",
                path.display(),
                forest.len(),
                forest.roots().len(),
                max_depth(forest),
            );
            entries.push(serde_json::json!({
                "replicate": k,
                "rng_seed": seed,
                "agents": forest.len(),
                "trees": forest.roots().len(),
                "max_depth": max_depth(forest),
            }));
        }
        let aggregate = serde_json::json!({
            "replicates": runs.len(),
            "runs": entries,
        });
        let path = out_dir.join("aggregate.json");
        let text = serde_json::to_string_pretty(&aggregate).expect("aggregate serializes");
        write_data(&path, &(text + "\n"))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// settle
// ---------------------------------------------------------------------

fn resolve_sequences(
    args: &SettleArgs,
    scenario: &ScenarioConfig,
    env: &TaskEnvironment,
    forest: &RecruitmentForest,
) -> CliResult<Vec<WinningSequence>> {
    if let Some(list) = &args.finders {
        let ids = parse_id_list(list)?;
        if ids.len() > env.tasks().len() {
            return Err(CliError::Config(format!(
                "{} finders for {} tasks",
                ids.len(),
                env.tasks().len()
            )));
        }
        return ids
            .iter()
            .zip(env.tasks())
            .map(|(&finder, task)| {
                forest
                    .path_to_root(AgentId(finder), task.id)
                    .map_err(CliError::from)
            })
            .collect();
    }
    let model = match (args.success_model, scenario.success_model) {
        (Some(SuccessArg::Uniform), _) => SuccessModel::UniformOverRecruited,
        (Some(SuccessArg::Epsilon), _) => {
            let epsilon = args.epsilon.ok_or_else(|| {
                CliError::Config("--success-model epsilon needs --epsilon".into())
            })?;
            SuccessModel::Epsilon(epsilon)
        }
        (None, Some(SuccessModelConfig::Uniform)) => SuccessModel::UniformOverRecruited,
        (None, Some(SuccessModelConfig::Epsilon { epsilon })) => {
            SuccessModel::Epsilon(args.epsilon.unwrap_or(epsilon))
        }
        (None, None) => {
            return Err(CliError::Config(
                "no finders: pass --finders (possibly empty) or a success model to sample them"
                    .into(),
            ))
        }
    };
    let rng_seed = args
        .rng_seed
        .or(scenario.rng_seed)
        .ok_or_else(|| CliError::Config("sampling finders needs --rng-seed".into()))?;
    Ok(sample_finders(forest, model, env.tasks(), rng_seed)?)
}

fn cmd_settle(args: SettleArgs) -> CliResult<()> {
    let scenario = load_scenario(args.config.as_deref())?;
    let text = read_data(&args.cascade)?;
    let forest = RecruitmentForest::from_csv(&text)?;

    let section = scenario.tasks.as_ref();
    let budget_str = args
        .budget
        .clone()
        .or_else(|| section.map(|t| t.budget.clone()))
        .ok_or_else(|| CliError::Config("no budget (--budget or tasks.budget)".into()))?;
    let budget = ratio_from_str(&budget_str).map_err(|_| {
        CliError::Config(format!(
            "invalid budget {budget_str:?} (use an integer or numer/denom)"
        ))
    })?;
    let task_count = args.tasks.or_else(|| section.map(|t| t.count)).unwrap_or(1);
    let cost_str = args
        .seed_cost
        .clone()
        .or_else(|| section.and_then(|t| t.seed_cost.clone()))
        .unwrap_or_else(|| "0".into());
    let seed_cost = ratio_from_str(&cost_str)
        .map_err(|_| CliError::Config(format!("invalid seed cost {cost_str:?}")))?;
    let env = TaskEnvironment::uniform_with_cost(budget, task_count, seed_cost)?;

    let sequences = resolve_sequences(&args, &scenario, &env, &forest)?;
    let ledger = settle(&env, &sequences)?;

    // Machine-readable ledger on stdout; commentary on stderr.
    println!("{}", ledger.to_json());
    if let Some(path) = &args.out {
        write_data(path, &(ledger.to_json() + "\n"))?;
    }

    let places = args.decimals;
    eprintln!("budget: {}", money(env.budget(), places));
    eprintln!(
        "tasks: {task_count}, each valued {}",
        money(&env.tasks()[0].value, places)
    );
    let mut by_task: BTreeMap<TaskId, &WinningSequence> =
        sequences.iter().map(|seq| (seq.task(), seq)).collect();
    for task in env.tasks() {
        match by_task.remove(&task.id) {
            Some(seq) => eprintln!(
                "task {}: finder {}, chain length {}, surplus {}",
                task.id,
                seq.finder(),
                seq.len(),
                money(&ledger.per_task_surplus()[&task.id], places),
            ),
            None => eprintln!("task {}: unfound", task.id),
        }
    }
    eprintln!("total paid: {}", money(&ledger.total_paid(), places));
    eprintln!("surplus: {}", money(&ledger.total_surplus(), places));

    let seed_ids = match &args.seeds {
        Some(list) => Some(parse_id_list(list)?),
        None => scenario.seeds.clone(),
    };
    if let Some(ids) = seed_ids {
        let seeds: BTreeSet<AgentId> = ids.into_iter().map(AgentId).collect();
        let report = check_budget(&env, &seeds, &ledger);
        eprintln!(
            "budget check ({} seeds at cost {}): {}, slack {}",
            seeds.len(),
            money(env.seed_cost(), places),
            if report.satisfied {
                "satisfied"
            } else {
                "VIOLATED"
            },
            money(&report.slack, places),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let text = read_data(&args.forest)?;
    let forest = RecruitmentForest::from_csv(&text)?;
    if forest.is_empty() {
        return Err(CliError::Data("forest is empty; nothing to verify".into()));
    }
    match args.mode {
        ModeArg::AllOrNone => {
            let report = is_all_recruit_nash(&forest);
            for node in &report.reports {
                // Leaves recruit nobody either way; only nodes with
                // descendants face a real choice.
                if node.profile.total() == 0 {
                    continue;
                }
                let verdict = if node.indifferent {
                    "indifferent"
                } else if node.recruits {
                    "recruits"
                } else {
                    "defects"
                };
                println!(
                    "node {}: k={}, threshold={}, {verdict}",
                    node.node,
                    node.k,
                    ratio_to_string(&node.threshold),
                );
            }
            println!("all-recruit is Nash: {}", yes_no(report.is_nash));
            if !report.deviators.is_empty() {
                println!("deviators: {}", join_ids(&report.deviators));
            }
        }
        ModeArg::Selective => {
            let mut culprits = Vec::new();
            for node in forest.agents().filter(|&a| !forest.children(a).is_empty()) {
                let report = prefers_selective_recruit_all(&forest, node)?;
                for decision in &report.decisions {
                    let verdict = if decision.drop_improves {
                        "drop improves"
                    } else if decision.indifferent {
                        "indifferent"
                    } else {
                        "keep"
                    };
                    println!("node {node} / child {}: {verdict}", decision.child);
                }
                if !report.no_improving_drop {
                    culprits.push(node);
                }
            }
            println!(
                "recruit-all withstands every single-child drop: {}",
                yes_no(culprits.is_empty())
            );
            if !culprits.is_empty() {
                println!("nodes with an improving drop: {}", join_ids(&culprits));
            }
        }
        ModeArg::Oracle => {
            let equilibria = brute_force_equilibrium(&forest, StrategyMode::AllOrNone, args.cap)?;
            let all_recruit = equilibria.iter().any(|p| p.is_all_recruit(&forest));
            println!("pure equilibria (all-or-none): {}", equilibria.len());
            println!("all-recruit is Nash: {}", yes_no(all_recruit));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let text = read_data(&args.cascade)?;
    let forest = RecruitmentForest::from_csv(&text)?;
    let stats = compute_stats(&forest, !args.exclude_singletons);

    let mut notices: Vec<String> = Vec::new();
    let sizes: Vec<u64> = stats
        .size_histogram
        .iter()
        .flat_map(|(&size, &count)| std::iter::repeat(size as u64).take(count))
        .collect();
    let power_law = match fit_power_law(&sizes) {
        Ok(fit) => Some(fit),
        Err(err) => {
            notices.push(format!("power-law fit skipped: {err}"));
            None
        }
    };
    let delays = inter_signup_times(&forest);
    let exponential = match fit_exponential(&delays) {
        Ok(fit) => Some(fit),
        Err(err) => {
            notices.push(format!("exponential fit skipped: {err}"));
            None
        }
    };
    let timeline = recruitment_timeline(&forest, args.bin_width)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;

    let report = serde_json::json!({
        "stats": stats,
        "power_law": power_law,
        "exponential": exponential,
        "notices": notices,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_data(&args.out.join("stats.json"), &(text + "\n"))?;

    let mut csv = String::from("size,count,ln_size,ln_frequency\n");
    for (&size, &count) in &stats.size_histogram {
        let frequency = count as f64 / stats.tree_count as f64;
        csv.push_str(&format!(
            "{size},{count},{},{}\n",
            (size as f64).ln(),
            frequency.ln()
        ));
    }
    write_data(&args.out.join("sizes.csv"), &csv)?;

    let mut csv = String::from("delay,ccdf\n");
    for (value, fraction) in ccdf(&delays) {
        csv.push_str(&format!("{value},{fraction}\n"));
    }
    write_data(&args.out.join("intersignup_ccdf.csv"), &csv)?;

    let mut csv = String::from("bin_start,count,cumulative\n");
    for (i, (&count, &cumulative)) in
        timeline.counts.iter().zip(&timeline.cumulative).enumerate()
    {
        csv.push_str(&format!(
            "{},{count},{cumulative}\n",
            i as f64 * timeline.bin_width
        ));
    }
    write_data(&args.out.join("timeline.csv"), &csv)?;

    println!("trees: {}", stats.tree_count);
    println!("agents: {}", stats.node_count);
    println!("max size: {}", stats.max_size);
    println!("max depth: {}", stats.max_depth);
    println!("attrition rate: {:.4}", stats.attrition_rate);
    println!(
        "mean branching (with singletons): {:.4}",
        stats.mean_branching_with_singletons
    );
    println!(
        "mean branching (without singletons): {:.4}",
        stats.mean_branching_without_singletons
    );
    if let Some(fit) = &power_law {
        println!(
            "power-law tail: exponent {:.3}, xmin {}, tail n {}, KS {:.4}, LS slope {:.3}",
            fit.exponent, fit.xmin, fit.n_tail, fit.ks_statistic, fit.ls_slope
        );
    }
    if let Some(fit) = &exponential {
        println!(
            "inter-signup exponential: rate {:.6} (mean {:.3}), n {}",
            fit.rate,
            1.0 / fit.rate,
            fit.n
        );
    }
    for notice in &notices {
        println!("notice: {notice}");
    }
    println!(
        "wrote stats.json, sizes.csv, intersignup_ccdf.csv, timeline.csv to {}",
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------
// monotonicity
// ---------------------------------------------------------------------

fn cmd_monotonicity(args: MonotonicityArgs) -> CliResult<()> {
    let scenario = load_scenario(args.config.as_deref())?;
    let (graph, config) = build_diffusion(&args.diffusion, &scenario)?;
    if args.equilibrium {
        let report = equilibrium_on_graph(&graph, &config, args.deviations)?;
        println!("recruited (n'): {}", report.n_prime);
        println!("max tree size: {}", report.max_tree_size);
        println!(
            "premise (2 * max tree <= n'): {}",
            if report.premise_holds { "holds" } else { "fails" }
        );
        println!("seed-removal monotonic: {}", yes_no(report.monotonic));
        let profitable: Vec<AgentId> = report
            .deviations
            .iter()
            .filter(|probe| probe.improves)
            .map(|probe| probe.node)
            .collect();
        println!(
            "deviations probed: {}, profitable: {}",
            report.deviations.len(),
            profitable.len()
        );
        if !profitable.is_empty() {
            println!("nodes gaining by refusing to recruit: {}", join_ids(&profitable));
        }
        println!(
            "all-recruit Nash on this run: {}",
            if report.nash_asserted {
                "asserted"
            } else {
                "not asserted"
            }
        );
    } else {
        let report = check_monotonic(&graph, &config)?;
        let total: usize = report.baseline.iter().map(|(_, size)| size).sum();
        println!(
            "baseline: {total} recruited across {} seed trees",
            report.baseline.len()
        );
        for (seed, size) in &report.baseline {
            println!("seed {seed}: tree size {size}");
        }
        for probe in &report.removals {
            if probe.shrunk.is_empty() {
                println!("without seed {}: ok", probe.removed);
            } else {
                println!(
                    "without seed {}: trees shrank at {}",
                    probe.removed,
                    join_ids(&probe.shrunk)
                );
            }
        }
        println!("seed-removal monotonic: {}", yes_no(report.monotonic));
    }
    Ok(())
}
