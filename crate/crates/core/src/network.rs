//! Social graphs, recruitment forests, and the file formats that carry them.
//!
//! The social graph is the substrate information spreads over; the
//! recruitment forest is the realized cascade: who signed up, recruited by
//! whom, and when. A winning sequence is the root-to-finder path for one
//! completed task, and a descendant profile summarizes the shape of the
//! subtree below a node — the quantity the recruitment game is played over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Opaque agent identifier, unique within a graph or forest.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Opaque task identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Directed acquaintance graph over agents.
///
/// Edges are stored directed; callers that want mutual acquaintance pass
/// `symmetrize = true` at ingestion (or add both directions themselves).
/// Self-loops are rejected: an agent cannot recruit itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: BTreeMap<AgentId, BTreeSet<AgentId>>,
}

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a whitespace-separated edge list, one `u v` pair per line.
    /// `#` starts a comment (whole-line or trailing); blank lines are
    /// skipped. Duplicate lines are idempotent.
    pub fn from_edge_list(text: &str, symmetrize: bool) -> Result<Self> {
        let mut graph = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((head, _)) => head,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (u, v) = match (fields.next(), fields.next(), fields.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected `u v`, got {line:?}"),
                    })
                }
            };
            let parse = |tok: &str| -> Result<AgentId> {
                tok.parse::<u64>().map(AgentId).map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("invalid agent id {tok:?}"),
                })
            };
            let (u, v) = (parse(u)?, parse(v)?);
            graph.add_edge(u, v)?;
            if symmetrize {
                graph.add_edge(v, u)?;
            }
        }
        Ok(graph)
    }

    /// Insert a directed edge, creating both endpoints as needed.
    pub fn add_edge(&mut self, u: AgentId, v: AgentId) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default();
        Ok(())
    }

    /// Insert an isolated agent (no-op if already present).
    pub fn add_node(&mut self, u: AgentId) {
        self.adjacency.entry(u).or_default();
    }

    pub fn contains(&self, u: AgentId) -> bool {
        self.adjacency.contains_key(&u)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum()
    }

    /// All agents, ascending by id.
    pub fn nodes(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Out-neighbors of `u`, ascending by id; empty if `u` is unknown.
    pub fn out_neighbors(&self, u: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.adjacency
            .get(&u)
            .into_iter()
            .flat_map(|set| set.iter().copied())
    }
}

/// One signup event: who joined, recruited by whom (none for seeds), when.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecruitmentRecord {
    pub child: AgentId,
    pub parent: Option<AgentId>,
    /// Seconds since campaign start; must be finite and non-negative.
    pub signup_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeInfo {
    parent: Option<AgentId>,
    signup_time: f64,
    /// Root = 1.
    depth: usize,
}

/// A validated recruitment cascade: a forest of timestamped signups.
///
/// Immutable after construction, so it is safe to share across threads.
/// Invariants enforced by every constructor: each agent signs up at most
/// once, every named recruiter signed up itself, parent pointers are
/// acyclic, and every child signed up strictly after its recruiter.
#[derive(Debug, Clone, PartialEq)]
pub struct RecruitmentForest {
    nodes: BTreeMap<AgentId, NodeInfo>,
    /// Children ordered by (signup time, id) — recruitment order.
    children: BTreeMap<AgentId, Vec<AgentId>>,
    /// Roots ordered by (signup time, id).
    roots: Vec<AgentId>,
}

const CASCADE_HEADER: &str = "child,parent,signup_time";

impl RecruitmentForest {
    /// Validate a batch of records into a forest.
    ///
    /// Violations are reported in a fixed order: duplicate child, then
    /// unknown parent, then cycle, then invalid/inconsistent times.
    pub fn from_records(records: &[RecruitmentRecord]) -> Result<Self> {
        let mut nodes: BTreeMap<AgentId, NodeInfo> = BTreeMap::new();
        for rec in records {
            let info = NodeInfo {
                parent: rec.parent,
                signup_time: rec.signup_time,
                depth: 0,
            };
            if nodes.insert(rec.child, info).is_some() {
                return Err(Error::DuplicateChild(rec.child));
            }
        }
        for rec in records {
            if let Some(parent) = rec.parent {
                if !nodes.contains_key(&parent) {
                    return Err(Error::UnknownParent {
                        child: rec.child,
                        parent,
                    });
                }
            }
        }

        // Each node has at most one parent, so any cycle is a pure loop of
        // parent pointers; walk each chain once with three-state marking.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks: BTreeMap<AgentId, Mark> = nodes.keys().map(|&a| (a, Mark::New)).collect();
        for &start in nodes.keys() {
            if marks[&start] != Mark::New {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = start;
            loop {
                match marks[&cur] {
                    Mark::Active => return Err(Error::Cycle(cur)),
                    Mark::Done => break,
                    Mark::New => {
                        marks.insert(cur, Mark::Active);
                        path.push(cur);
                        match nodes[&cur].parent {
                            Some(p) => cur = p,
                            None => break,
                        }
                    }
                }
            }
            for a in path {
                marks.insert(a, Mark::Done);
            }
        }

        for rec in records {
            if !rec.signup_time.is_finite() || rec.signup_time < 0.0 {
                return Err(Error::InvalidTime {
                    agent: rec.child,
                    time: rec.signup_time,
                });
            }
            if let Some(parent) = rec.parent {
                let parent_time = nodes[&parent].signup_time;
                if rec.signup_time <= parent_time {
                    return Err(Error::Chronology {
                        child: rec.child,
                        child_time: rec.signup_time,
                        parent_time,
                    });
                }
            }
        }

        let mut children: BTreeMap<AgentId, Vec<AgentId>> = BTreeMap::new();
        let mut roots = Vec::new();
        for (&child, info) in &nodes {
            match info.parent {
                Some(parent) => children.entry(parent).or_default().push(child),
                None => roots.push(child),
            }
        }
        let time_order = |list: &mut Vec<AgentId>, nodes: &BTreeMap<AgentId, NodeInfo>| {
            list.sort_by(|a, b| {
                nodes[a]
                    .signup_time
                    .total_cmp(&nodes[b].signup_time)
                    .then(a.cmp(b))
            });
        };
        for list in children.values_mut() {
            time_order(list, &nodes);
        }
        time_order(&mut roots, &nodes);

        let mut forest = Self {
            nodes,
            children,
            roots,
        };
        // Depths are fixed once the shape is known; compute them eagerly.
        let mut queue: Vec<(AgentId, usize)> = forest.roots.iter().map(|&r| (r, 1)).collect();
        while let Some((agent, depth)) = queue.pop() {
            forest.nodes.get_mut(&agent).unwrap().depth = depth;
            if let Some(kids) = forest.children.get(&agent) {
                queue.extend(kids.iter().map(|&c| (c, depth + 1)));
            }
        }
        Ok(forest)
    }

    /// Parse the cascade CSV format: header `child,parent,signup_time`,
    /// one record per row, blank parent field for seeds.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l.trim_end());
        if header != Some(CASCADE_HEADER) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {CASCADE_HEADER:?}"),
            });
        }
        let mut records = Vec::new();
        for (idx, raw) in lines {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [child, parent, time] = fields.as_slice() else {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            };
            let child = child.parse::<u64>().map(AgentId).map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("invalid agent id {child:?}"),
            })?;
            let parent = if parent.is_empty() {
                None
            } else {
                Some(parent.parse::<u64>().map(AgentId).map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("invalid parent id {parent:?}"),
                })?)
            };
            let signup_time = time.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("invalid signup time {time:?}"),
            })?;
            records.push(RecruitmentRecord {
                child,
                parent,
                signup_time,
            });
        }
        Self::from_records(&records)
    }

    /// Serialize to the cascade CSV format in canonical order
    /// (signup time, then agent id). `from_csv` round-trips this exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CASCADE_HEADER);
        out.push('\n');
        for rec in self.records() {
            out.push_str(&rec.child.to_string());
            out.push(',');
            if let Some(parent) = rec.parent {
                out.push_str(&parent.to_string());
            }
            out.push(',');
            out.push_str(&rec.signup_time.to_string());
            out.push('\n');
        }
        out
    }

    /// Records in canonical order: signup time, then agent id.
    pub fn records(&self) -> impl Iterator<Item = RecruitmentRecord> + '_ {
        let mut order: Vec<AgentId> = self.nodes.keys().copied().collect();
        order.sort_by(|a, b| {
            self.nodes[a]
                .signup_time
                .total_cmp(&self.nodes[b].signup_time)
                .then(a.cmp(b))
        });
        order.into_iter().map(|agent| {
            let info = &self.nodes[&agent];
            RecruitmentRecord {
                child: agent,
                parent: info.parent,
                signup_time: info.signup_time,
            }
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.nodes.contains_key(&agent)
    }

    /// All agents, ascending by id.
    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.nodes.keys().copied()
    }

    /// Roots (seeds), ordered by signup time then id.
    pub fn roots(&self) -> &[AgentId] {
        &self.roots
    }

    /// Children of `agent` in recruitment order; empty if unknown or a leaf.
    pub fn children(&self, agent: AgentId) -> &[AgentId] {
        self.children.get(&agent).map_or(&[], Vec::as_slice)
    }

    pub fn parent(&self, agent: AgentId) -> Option<AgentId> {
        self.nodes.get(&agent).and_then(|info| info.parent)
    }

    pub fn signup_time(&self, agent: AgentId) -> Option<f64> {
        self.nodes.get(&agent).map(|info| info.signup_time)
    }

    /// Depth of `agent`, counting roots as depth 1.
    pub fn depth(&self, agent: AgentId) -> Option<usize> {
        self.nodes.get(&agent).map(|info| info.depth)
    }

    /// The root of the tree containing `agent`.
    pub fn root_of(&self, agent: AgentId) -> Option<AgentId> {
        let mut cur = self.nodes.get(&agent)?;
        let mut id = agent;
        while let Some(parent) = cur.parent {
            id = parent;
            cur = &self.nodes[&parent];
        }
        Some(id)
    }

    /// Size of the subtree rooted at `agent`, including `agent` itself.
    pub fn subtree_size(&self, agent: AgentId) -> Option<usize> {
        if !self.contains(agent) {
            return None;
        }
        let mut count = 0;
        let mut stack = vec![agent];
        while let Some(a) = stack.pop() {
            count += 1;
            stack.extend_from_slice(self.children(a));
        }
        Some(count)
    }

    /// The recruitment pathway from a root down to `finder`: the winning
    /// sequence for a task `finder` completed.
    pub fn path_to_root(&self, finder: AgentId, task: TaskId) -> Result<WinningSequence> {
        if !self.contains(finder) {
            return Err(Error::UnknownAgent(finder));
        }
        let mut chain = vec![finder];
        let mut cur = finder;
        while let Some(parent) = self.parent(cur) {
            chain.push(parent);
            cur = parent;
        }
        chain.reverse();
        WinningSequence::new(task, chain)
    }

    /// Descendant counts per level below `agent`; a leaf yields `(0)`.
    pub fn descendant_profile(&self, agent: AgentId) -> Result<DescendantProfile> {
        if !self.contains(agent) {
            return Err(Error::UnknownAgent(agent));
        }
        let mut counts: Vec<u64> = Vec::new();
        let mut frontier = vec![agent];
        loop {
            let next: Vec<AgentId> = frontier
                .iter()
                .flat_map(|&a| self.children(a).iter().copied())
                .collect();
            if next.is_empty() {
                break;
            }
            counts.push(next.len() as u64);
            frontier = next;
        }
        DescendantProfile::new(counts)
    }
}

/// Root-to-finder recruitment chain for one completed task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningSequence {
    task: TaskId,
    chain: Vec<AgentId>,
}

impl WinningSequence {
    /// Chain runs root first, finder last; must be non-empty with unique
    /// agents.
    pub fn new(task: TaskId, chain: Vec<AgentId>) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Config("winning sequence must be non-empty".into()));
        }
        let unique: BTreeSet<AgentId> = chain.iter().copied().collect();
        if unique.len() != chain.len() {
            return Err(Error::Config(format!(
                "winning sequence for task {task} repeats an agent"
            )));
        }
        Ok(Self { task, chain })
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    /// Root first, finder last.
    pub fn chain(&self) -> &[AgentId] {
        &self.chain
    }

    /// Chain length r.
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn finder(&self) -> AgentId {
        *self.chain.last().unwrap()
    }
}

/// Shape of the subtree below a node: descendant counts per level,
/// terminated by a single zero. A leaf is `(0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DescendantProfile {
    counts: Vec<u64>,
}

impl DescendantProfile {
    /// Canonicalize raw per-level counts: trailing zeros collapse to the
    /// single terminator. A zero level may not be followed by a non-zero
    /// one — nothing can be recruited through an empty level.
    pub fn new(mut counts: Vec<u64>) -> Result<Self> {
        while counts.last() == Some(&0) {
            counts.pop();
        }
        if counts.contains(&0) {
            return Err(Error::Config(
                "descendant profile has a non-zero count after a zero level".into(),
            ));
        }
        counts.push(0);
        Ok(Self { counts })
    }

    /// Per-level counts including the zero terminator.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of non-empty levels below the node.
    pub fn levels(&self) -> usize {
        self.counts.len() - 1
    }

    /// Total number of descendants.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The geometric sum Σ xᵢ/2ⁱ over levels i = 1, 2, …, exact.
    pub fn discounted(&self) -> BigRational {
        let mut sum = BigRational::zero();
        let mut denom = BigInt::one();
        for &count in &self.counts {
            denom *= 2;
            sum += BigRational::new(BigInt::from(count), denom.clone());
        }
        sum
    }
}

impl fmt::Display for DescendantProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, count) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{count}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: u64) -> AgentId {
        AgentId(n)
    }

    fn rec(child: u64, parent: Option<u64>, t: f64) -> RecruitmentRecord {
        RecruitmentRecord {
            child: id(child),
            parent: parent.map(AgentId),
            signup_time: t,
        }
    }

    /// Nine agents, ten acquaintance edges.
    fn fig_graph() -> &'static str {
        "1 2\n1 5\n1 8\n2 3\n2 7\n3 4\n5 4\n6 9\n7 9\n8 6\n"
    }

    /// Seven-node recruitment tree: 1 recruited {2, 5, 8}, 2 recruited 3,
    /// 3 recruited 4, 8 recruited 6.
    fn fig_forest() -> RecruitmentForest {
        RecruitmentForest::from_records(&[
            rec(1, None, 0.0),
            rec(2, Some(1), 5.0),
            rec(5, Some(1), 8.0),
            rec(8, Some(1), 11.0),
            rec(3, Some(2), 17.0),
            rec(6, Some(8), 21.0),
            rec(4, Some(3), 30.0),
        ])
        .unwrap()
    }

    #[test]
    fn edge_list_small() {
        let g = SocialGraph::from_edge_list("1 2\n1 5\n1 8\n8 6", false).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert!(g.contains(id(6)));
        assert_eq!(g.out_neighbors(id(1)).collect::<Vec<_>>(), vec![id(2), id(5), id(8)]);
    }

    #[test]
    fn edge_list_empty() {
        let g = SocialGraph::from_edge_list("", false).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn edge_list_nine_node_graph() {
        let g = SocialGraph::from_edge_list(fig_graph(), false).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn edge_list_duplicates_are_idempotent() {
        let g = SocialGraph::from_edge_list("1 2\n1 2\n1 2", false).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_comments_and_blanks() {
        let g = SocialGraph::from_edge_list("# roster\n\n1 2 # close friends\n2 3\n", false)
            .unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn edge_list_symmetrize_doubles_edges() {
        let g = SocialGraph::from_edge_list("1 2\n2 3", true).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.out_neighbors(id(2)).collect::<Vec<_>>(), vec![id(1), id(3)]);
    }

    #[test]
    fn edge_list_rejects_malformed_line() {
        let err = SocialGraph::from_edge_list("1 2\n3\n", false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = SocialGraph::from_edge_list("1 x", false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn edge_list_rejects_self_loop() {
        let err = SocialGraph::from_edge_list("1 1", false).unwrap_err();
        assert!(matches!(err, Error::SelfLoop(a) if a == id(1)), "{err}");
    }

    #[test]
    fn single_chain_forest() {
        let f = RecruitmentForest::from_records(&[
            rec(1, None, 0.0),
            rec(8, Some(1), 10.0),
            rec(6, Some(8), 20.0),
        ])
        .unwrap();
        assert_eq!(f.roots(), &[id(1)]);
        assert_eq!(f.depth(id(6)), Some(3));
        assert_eq!(f.root_of(id(6)), Some(id(1)));
    }

    #[test]
    fn duplicate_child_rejected() {
        let err = RecruitmentForest::from_records(&[
            rec(1, None, 0.0),
            rec(2, Some(1), 5.0),
            rec(2, Some(3), 6.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateChild(a) if a == id(2)), "{err}");
    }

    #[test]
    fn unknown_parent_rejected() {
        let err =
            RecruitmentForest::from_records(&[rec(1, None, 0.0), rec(2, Some(9), 5.0)])
                .unwrap_err();
        assert!(
            matches!(err, Error::UnknownParent { child, parent } if child == id(2) && parent == id(9)),
            "{err}"
        );
    }

    #[test]
    fn cycle_rejected() {
        let err = RecruitmentForest::from_records(&[rec(1, Some(2), 1.0), rec(2, Some(1), 2.0)])
            .unwrap_err();
        assert!(matches!(err, Error::Cycle(_)), "{err}");
    }

    #[test]
    fn chronology_violation_rejected() {
        let err =
            RecruitmentForest::from_records(&[rec(1, None, 10.0), rec(2, Some(1), 10.0)])
                .unwrap_err();
        assert!(matches!(err, Error::Chronology { .. }), "{err}");
        let err = RecruitmentForest::from_records(&[rec(1, None, 10.0), rec(2, Some(1), 3.0)])
            .unwrap_err();
        assert!(matches!(err, Error::Chronology { .. }), "{err}");
    }

    #[test]
    fn invalid_time_rejected() {
        let err = RecruitmentForest::from_records(&[rec(1, None, -1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidTime { .. }), "{err}");
        let err = RecruitmentForest::from_records(&[rec(1, None, f64::NAN)]).unwrap_err();
        assert!(matches!(err, Error::InvalidTime { .. }), "{err}");
    }

    #[test]
    fn validation_order_duplicate_before_unknown_parent() {
        // Both defects present; the duplicate is reported first.
        let err = RecruitmentForest::from_records(&[
            rec(1, None, 0.0),
            rec(2, Some(9), 5.0),
            rec(2, Some(1), 6.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateChild(_)), "{err}");
    }

    #[test]
    fn seven_node_tree_shape() {
        let f = fig_forest();
        assert_eq!(f.len(), 7);
        assert_eq!(f.roots().len(), 1);
        assert_eq!(f.depth(id(4)), Some(4));
        assert_eq!(f.children(id(1)), &[id(2), id(5), id(8)]);
        assert_eq!(f.subtree_size(id(1)), Some(7));
        assert_eq!(f.subtree_size(id(2)), Some(3));
    }

    #[test]
    fn csv_parse_and_roundtrip() {
        let text = "child,parent,signup_time\n1,,0\n2,1,5\n5,1,8\n8,1,11\n3,2,17\n6,8,21\n4,3,30\n";
        let f = RecruitmentForest::from_csv(text).unwrap();
        assert_eq!(f, fig_forest());
        assert_eq!(f.to_csv(), text);
        let again = RecruitmentForest::from_csv(&f.to_csv()).unwrap();
        assert_eq!(again.to_csv(), f.to_csv());
    }

    #[test]
    fn csv_roundtrip_ignores_row_order() {
        let shuffled = "child,parent,signup_time\n4,3,30\n1,,0\n6,8,21\n2,1,5\n8,1,11\n5,1,8\n3,2,17\n";
        let f = RecruitmentForest::from_csv(shuffled).unwrap();
        assert_eq!(f, fig_forest());
    }

    #[test]
    fn csv_rejects_bad_header_and_fields() {
        let err = RecruitmentForest::from_csv("who,whom,when\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err =
            RecruitmentForest::from_csv("child,parent,signup_time\n1,,0\n2,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err =
            RecruitmentForest::from_csv("child,parent,signup_time\n1,,soon\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn csv_fractional_times_roundtrip() {
        let text = "child,parent,signup_time\n1,,0\n2,1,0.125\n3,2,17.25\n";
        let f = RecruitmentForest::from_csv(text).unwrap();
        assert_eq!(f.to_csv(), text);
    }

    #[test]
    fn path_to_root_finder_six() {
        let f = fig_forest();
        let seq = f.path_to_root(id(6), TaskId(1)).unwrap();
        assert_eq!(seq.chain(), &[id(1), id(8), id(6)]);
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.finder(), id(6));
    }

    #[test]
    fn path_to_root_finder_four() {
        let f = fig_forest();
        let seq = f.path_to_root(id(4), TaskId(2)).unwrap();
        assert_eq!(seq.chain(), &[id(1), id(2), id(3), id(4)]);
        assert_eq!(seq.len(), 4);
    }

    #[test]
    fn path_to_root_of_root_is_singleton() {
        let f = fig_forest();
        let seq = f.path_to_root(id(1), TaskId(1)).unwrap();
        assert_eq!(seq.chain(), &[id(1)]);
        assert_eq!(seq.len(), 1);
    }

    #[test]
    fn path_to_root_unknown_finder() {
        let f = fig_forest();
        let err = f.path_to_root(id(99), TaskId(1)).unwrap_err();
        assert!(matches!(err, Error::UnknownAgent(a) if a == id(99)), "{err}");
    }

    #[test]
    fn path_lengths_bounded_by_forest_size() {
        let f = fig_forest();
        for agent in f.agents() {
            let seq = f.path_to_root(agent, TaskId(1)).unwrap();
            assert!(seq.len() <= f.len());
            assert_eq!(seq.len(), f.depth(agent).unwrap());
        }
    }

    #[test]
    fn descendant_profile_of_root() {
        let f = fig_forest();
        let profile = f.descendant_profile(id(1)).unwrap();
        assert_eq!(profile.counts(), &[3, 2, 1, 0]);
        assert_eq!(profile.levels(), 3);
        assert_eq!(profile.total(), 6);
    }

    #[test]
    fn descendant_profile_of_leaf() {
        let f = fig_forest();
        let profile = f.descendant_profile(id(4)).unwrap();
        assert_eq!(profile.counts(), &[0]);
        assert_eq!(profile.total(), 0);
        assert_eq!(profile.levels(), 0);
    }

    #[test]
    fn descendant_profile_two_children_four_grandchildren() {
        // Root with children {2, 3}; each child has two leaf children.
        let f = RecruitmentForest::from_records(&[
            rec(1, None, 0.0),
            rec(2, Some(1), 1.0),
            rec(3, Some(1), 2.0),
            rec(4, Some(2), 3.0),
            rec(5, Some(2), 4.0),
            rec(6, Some(3), 5.0),
            rec(7, Some(3), 6.0),
        ])
        .unwrap();
        let profile = f.descendant_profile(id(1)).unwrap();
        assert_eq!(profile.counts(), &[2, 4, 0]);
    }

    #[test]
    fn profile_total_plus_one_is_tree_size() {
        let f = fig_forest();
        for agent in f.agents() {
            let profile = f.descendant_profile(agent).unwrap();
            assert_eq!(
                profile.total() as usize + 1,
                f.subtree_size(agent).unwrap()
            );
        }
    }

    #[test]
    fn profile_canonicalization() {
        let p = DescendantProfile::new(vec![2, 4, 0, 0, 0]).unwrap();
        assert_eq!(p.counts(), &[2, 4, 0]);
        let p = DescendantProfile::new(vec![]).unwrap();
        assert_eq!(p.counts(), &[0]);
        assert!(DescendantProfile::new(vec![2, 0, 1]).is_err());
    }

    #[test]
    fn profile_discounted_sum() {
        let p = DescendantProfile::new(vec![1, 1]).unwrap();
        assert_eq!(p.discounted(), BigRational::new(3.into(), 4.into()));
        let p = DescendantProfile::new(vec![]).unwrap();
        assert_eq!(p.discounted(), BigRational::zero());
        let p = DescendantProfile::new(vec![3, 2, 1]).unwrap();
        // 3/2 + 2/4 + 1/8
        assert_eq!(p.discounted(), BigRational::new(17.into(), 8.into()));
    }

    #[test]
    fn winning_sequence_rejects_empty_and_repeats() {
        assert!(WinningSequence::new(TaskId(1), vec![]).is_err());
        assert!(WinningSequence::new(TaskId(1), vec![id(1), id(2), id(1)]).is_err());
    }
}
