//! Best-first tree search over partial edit paths (A*) and its beam relaxation.
//!
//! Source nodes are edited strictly in index order. A state with `k < n1`
//! edited sources branches into `u_{k+1} -> v` for every open target `v` plus
//! `u_{k+1} -> eps`; once all sources are edited, the single child inserts all
//! remaining targets at once. Because of the fixed order every mapping is
//! reachable exactly once, so no closed set is kept.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::edit::{delta_cost, mapping_cost, EditOp, EditPath, PartialMapping};
use crate::error::{GedError, Result};
use crate::graph::Graph;

/// Estimates the remaining cost of completing a partial mapping.
pub trait Heuristic: Sync {
    fn name(&self) -> &str;

    /// True when estimates never exceed the optimal remaining cost.
    fn admissible(&self) -> bool;

    /// Per-solve state (caches, scratch buffers). Sessions are never shared between solves.
    fn prepare<'a>(
        &'a self,
        g1: &'a Graph,
        g2: &'a Graph,
        cost: &'a CostModel,
    ) -> Result<Box<dyn HeuristicSession + 'a>>;
}

pub trait HeuristicSession {
    /// Nonnegative estimate; `+inf` prunes the state. Must be 0 on complete mappings.
    fn estimate(&mut self, mapping: &PartialMapping) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchLimits {
    /// Maximum number of states inserted into OPEN.
    pub max_states: u64,
    pub max_time: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_states: 10_000_000, max_time: None }
    }
}

impl SearchLimits {
    pub fn with_max_states(max_states: u64) -> Self {
        Self { max_states, ..Self::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Every insertion into OPEN (the search tree size).
    pub states_enqueued: u64,
    pub states_expanded: u64,
    /// Seconds spent inside the solve call.
    pub wall_time: f64,
    /// Set only when the heuristic is admissible and no beam truncation was applied.
    pub optimal_found: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub path: EditPath,
    pub ged: f64,
    pub stats: SearchStats,
}

/// Exact GED by A* (optimal when the heuristic is admissible).
pub fn astar_solve(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    heuristic: &dyn Heuristic,
    limits: &SearchLimits,
) -> Result<SearchOutcome> {
    Search::new(g1, g2, cost, heuristic).limits(limits.clone()).run()
}

/// Beam search: A* whose OPEN list is cut to the `beam_width` best states after
/// every expansion. Returns an upper bound on GED.
pub fn beam_solve(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    heuristic: &dyn Heuristic,
    beam_width: usize,
) -> Result<SearchOutcome> {
    if beam_width == 0 {
        return Err(GedError::InvalidArgument("beam width must be at least 1".into()));
    }
    Search::new(g1, g2, cost, heuristic).beam_width(beam_width).run()
}

/// Configurable search run. `astar_solve` and `beam_solve` cover the common cases.
pub struct Search<'a> {
    g1: &'a Graph,
    g2: &'a Graph,
    cost: &'a CostModel,
    heuristic: &'a dyn Heuristic,
    limits: SearchLimits,
    beam_width: Option<usize>,
    start: Option<PartialMapping>,
    observer: Option<Box<dyn FnMut(&PartialMapping, f64) + 'a>>,
}

impl<'a> Search<'a> {
    pub fn new(g1: &'a Graph, g2: &'a Graph, cost: &'a CostModel, heuristic: &'a dyn Heuristic) -> Self {
        Self {
            g1,
            g2,
            cost,
            heuristic,
            limits: SearchLimits::default(),
            beam_width: None,
            start: None,
            observer: None,
        }
    }

    pub fn limits(mut self, limits: SearchLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn beam_width(mut self, width: usize) -> Self {
        self.beam_width = Some(width);
        self
    }

    /// Search only completions of `start` (which may fix any subset of nodes).
    /// The returned path begins with the edits of `start`.
    pub fn start_from(mut self, start: PartialMapping) -> Self {
        self.start = Some(start);
        self
    }

    /// Called with every popped state and its priority `g + h`.
    pub fn observe(mut self, observer: impl FnMut(&PartialMapping, f64) + 'a) -> Self {
        self.observer = Some(Box::new(observer));
        self
    }

    pub fn run(mut self) -> Result<SearchOutcome> {
        let timer = Instant::now();
        let (n1, n2) = (self.g1.node_count(), self.g2.node_count());
        let start = match self.start.take() {
            Some(m) if m.source_count() == n1 && m.target_count() == n2 => m,
            Some(_) => return Err(GedError::InvalidPath("start mapping does not match graph sizes".into())),
            None => PartialMapping::new(n1, n2),
        };
        let start_cost = mapping_cost(self.g1, self.g2, self.cost, &start)?;
        if start_cost.is_infinite() {
            return Err(GedError::Infeasible);
        }
        let mut session = self.heuristic.prepare(self.g1, self.g2, self.cost)?;
        let mut tree = SearchTree::new(start, start_cost);
        let mut open = BinaryHeap::new();
        let mut stats = SearchStats::default();
        let mut seq = 0u64;
        let mut frontier = 0.0f64;

        let mut next = Some(ROOT);
        let result = loop {
            if let Some(node) = next.take() {
                let mapping = tree.mapping(node, self.g2);
                if mapping.is_complete() {
                    break Ok(node);
                }
                if node != ROOT {
                    stats.states_expanded += 1;
                }
                for child in tree.expand(node, &mapping, self.g1, self.g2, self.cost) {
                    let (child_mapping, g) = child;
                    let h = session.estimate(&child_mapping);
                    if !h.is_finite() {
                        continue;
                    }
                    let id = tree.push(node, &child_mapping, &mapping, g);
                    open.push(Entry { f: g + h, g, seq, node: id });
                    seq += 1;
                    stats.states_enqueued += 1;
                }
                if stats.states_enqueued > self.limits.max_states {
                    break Err(frontier);
                }
                if let Some(width) = self.beam_width {
                    if open.len() > width {
                        let mut sorted = std::mem::take(&mut open).into_sorted_vec();
                        let cut = sorted.len() - width;
                        sorted.drain(..cut);
                        open = BinaryHeap::from(sorted);
                    }
                }
            }
            let Some(best) = open.pop() else {
                return Err(GedError::Infeasible);
            };
            frontier = best.f;
            if let Some(observer) = self.observer.as_mut() {
                observer(&tree.mapping(best.node, self.g2), best.f);
            }
            if let Some(max_time) = self.limits.max_time {
                if stats.states_expanded % 256 == 0 && timer.elapsed() > max_time {
                    break Err(frontier);
                }
            }
            next = Some(best.node);
        };

        stats.wall_time = timer.elapsed().as_secs_f64();
        match result {
            Ok(goal) => {
                stats.optimal_found = self.heuristic.admissible() && self.beam_width.is_none();
                let path = tree.recover_path(goal, self.g2);
                Ok(SearchOutcome { path, ged: tree.nodes[goal as usize].g, stats })
            }
            Err(lower_bound) => Err(GedError::BudgetExhausted { lower_bound, stats }),
        }
    }
}

const ROOT: u32 = 0;

#[derive(Clone, Copy, Debug)]
enum Step {
    Root,
    Sub(u32, u32),
    Del(u32),
    InsertRest,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    step: Step,
    g: f64,
}

/// Arena of every state ever enqueued, linked to its parent.
struct SearchTree {
    start: PartialMapping,
    nodes: Vec<Node>,
}

impl SearchTree {
    fn new(start: PartialMapping, start_cost: f64) -> Self {
        Self { start, nodes: vec![Node { parent: ROOT, step: Step::Root, g: start_cost }] }
    }

    fn steps(&self, mut node: u32) -> Vec<Step> {
        let mut steps = Vec::new();
        while node != ROOT {
            let n = self.nodes[node as usize];
            steps.push(n.step);
            node = n.parent;
        }
        steps.reverse();
        steps
    }

    fn replay(&self, node: u32, g2: &Graph, mut on_op: impl FnMut(EditOp)) -> PartialMapping {
        let mut mapping = self.start.clone();
        for step in self.steps(node) {
            let ops: Vec<EditOp> = match step {
                Step::Root => Vec::new(),
                Step::Sub(u, v) => vec![EditOp::Sub { source: u as usize, target: v as usize }],
                Step::Del(u) => vec![EditOp::Del { source: u as usize }],
                Step::InsertRest => (0..g2.node_count())
                    .filter(|&v| mapping.target(v) == crate::edit::TargetSlot::Open)
                    .map(|target| EditOp::Ins { target })
                    .collect(),
            };
            for op in ops {
                mapping.apply_unchecked(op);
                on_op(op);
            }
        }
        mapping
    }

    fn mapping(&self, node: u32, g2: &Graph) -> PartialMapping {
        self.replay(node, g2, |_| {})
    }

    /// The edit path leading to `node`, starting with the edits of the start mapping.
    fn recover_path(&self, node: u32, g2: &Graph) -> EditPath {
        let mut ops = self.start.to_ops();
        self.replay(node, g2, |op| ops.push(op));
        EditPath::new(ops)
    }

    /// Children with finite cost, as (mapping, g).
    fn expand(
        &self,
        node: u32,
        mapping: &PartialMapping,
        g1: &Graph,
        g2: &Graph,
        cost: &CostModel,
    ) -> Vec<(PartialMapping, f64)> {
        let g = self.nodes[node as usize].g;
        let mut children = Vec::new();
        let mut push = |op_list: &[EditOp]| {
            let mut child = mapping.clone();
            let mut child_g = g;
            for &op in op_list {
                child_g += delta_cost(g1, g2, cost, &child, op);
                child.apply_unchecked(op);
            }
            if child_g.is_finite() {
                children.push((child, child_g));
            }
        };
        match mapping.next_open_source() {
            Some(source) => {
                for target in mapping.open_targets() {
                    push(&[EditOp::Sub { source, target }]);
                }
                push(&[EditOp::Del { source }]);
            }
            None => {
                let inserts: Vec<EditOp> = mapping.open_targets().map(|target| EditOp::Ins { target }).collect();
                push(&inserts);
            }
        }
        children
    }

    fn push(&mut self, parent: u32, child: &PartialMapping, parent_mapping: &PartialMapping, g: f64) -> u32 {
        let step = match parent_mapping.next_open_source() {
            Some(u) => match child.source(u) {
                crate::edit::SourceSlot::Sub(v) => Step::Sub(u as u32, v as u32),
                _ => Step::Del(u as u32),
            },
            None => Step::InsertRest,
        };
        let id = u32::try_from(self.nodes.len()).expect("search tree exceeds u32 states");
        self.nodes.push(Node { parent, step, g });
        id
    }
}

/// OPEN entry. The greatest entry is the best: lowest `f`, then highest `g`,
/// then earliest insertion.
#[derive(Clone, Copy, Debug)]
struct Entry {
    f: f64,
    g: f64,
    seq: u64,
    node: u32,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}
