//! Edit operations, partial mappings and the exact cost of (partial) edit paths.
//!
//! Only node edits are explicit. Edge edits are induced: an edge is charged
//! exactly once, at the moment the edit of its second endpoint is fixed. This
//! makes the cost of a partial path depend only on the mapping, never on the
//! order in which its operations were applied.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{GedError, Result};
use crate::graph::Graph;

/// A node edit. Sources index the first graph, targets the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Sub { source: usize, target: usize },
    Del { source: usize },
    Ins { target: usize },
}

impl EditOp {
    pub fn source(&self) -> Option<usize> {
        match *self {
            EditOp::Sub { source, .. } | EditOp::Del { source } => Some(source),
            EditOp::Ins { .. } => None,
        }
    }

    pub fn target(&self) -> Option<usize> {
        match *self {
            EditOp::Sub { target, .. } | EditOp::Ins { target } => Some(target),
            EditOp::Del { .. } => None,
        }
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::Sub { source, target } => write!(f, "{source}->{target}"),
            EditOp::Del { source } => write!(f, "{source}->eps"),
            EditOp::Ins { target } => write!(f, "eps->{target}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPath {
    pub ops: Vec<EditOp>,
}

impl EditPath {
    pub fn new(ops: Vec<EditOp>) -> Self {
        Self { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Complete when every node of both graphs is covered exactly once.
    pub fn is_complete(&self, g1: &Graph, g2: &Graph) -> bool {
        PartialMapping::from_ops(g1.node_count(), g2.node_count(), &self.ops)
            .map(|m| m.is_complete())
            .unwrap_or(false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SourceSlot {
    Open,
    Sub(usize),
    Del,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetSlot {
    Open,
    Sub(usize),
    Ins,
}

/// The set of node edits fixed so far, indexed from both sides.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialMapping {
    source: Vec<SourceSlot>,
    target: Vec<TargetSlot>,
    open_sources: usize,
    open_targets: usize,
}

impl PartialMapping {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self {
            source: vec![SourceSlot::Open; n1],
            target: vec![TargetSlot::Open; n2],
            open_sources: n1,
            open_targets: n2,
        }
    }

    pub fn from_ops(n1: usize, n2: usize, ops: &[EditOp]) -> Result<Self> {
        let mut mapping = Self::new(n1, n2);
        for &op in ops {
            mapping.apply(op)?;
        }
        Ok(mapping)
    }

    pub fn source_count(&self) -> usize {
        self.source.len()
    }

    pub fn target_count(&self) -> usize {
        self.target.len()
    }

    pub fn source(&self, u: usize) -> SourceSlot {
        self.source[u]
    }

    pub fn target(&self, v: usize) -> TargetSlot {
        self.target[v]
    }

    pub fn open_source_count(&self) -> usize {
        self.open_sources
    }

    pub fn open_target_count(&self) -> usize {
        self.open_targets
    }

    pub fn is_complete(&self) -> bool {
        self.open_sources == 0 && self.open_targets == 0
    }

    pub fn open_sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.source.iter().enumerate().filter(|(_, s)| **s == SourceSlot::Open).map(|(u, _)| u)
    }

    pub fn open_targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.target.iter().enumerate().filter(|(_, t)| **t == TargetSlot::Open).map(|(v, _)| v)
    }

    pub fn edited_sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.source.iter().enumerate().filter(|(_, s)| **s != SourceSlot::Open).map(|(u, _)| u)
    }

    pub fn edited_targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.target.iter().enumerate().filter(|(_, t)| **t != TargetSlot::Open).map(|(v, _)| v)
    }

    /// Lowest-indexed source node not yet edited.
    pub fn next_open_source(&self) -> Option<usize> {
        self.source.iter().position(|s| *s == SourceSlot::Open)
    }

    /// Fails if `op` references an out-of-range or already edited node.
    pub fn check(&self, op: EditOp) -> Result<()> {
        if let Some(u) = op.source() {
            match self.source.get(u) {
                None => return Err(GedError::InvalidPath(format!("source node {u} out of range"))),
                Some(SourceSlot::Open) => {}
                Some(_) => return Err(GedError::InvalidPath(format!("source node {u} edited twice"))),
            }
        }
        if let Some(v) = op.target() {
            match self.target.get(v) {
                None => return Err(GedError::InvalidPath(format!("target node {v} out of range"))),
                Some(TargetSlot::Open) => {}
                Some(_) => return Err(GedError::InvalidPath(format!("target node {v} edited twice"))),
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, op: EditOp) -> Result<()> {
        self.check(op)?;
        self.apply_unchecked(op);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, op: EditOp) {
        match op {
            EditOp::Sub { source, target } => {
                self.source[source] = SourceSlot::Sub(target);
                self.target[target] = TargetSlot::Sub(source);
                self.open_sources -= 1;
                self.open_targets -= 1;
            }
            EditOp::Del { source } => {
                self.source[source] = SourceSlot::Del;
                self.open_sources -= 1;
            }
            EditOp::Ins { target } => {
                self.target[target] = TargetSlot::Ins;
                self.open_targets -= 1;
            }
        }
    }

    /// The fixed edits in canonical order: sources by index, then insertions.
    pub fn to_ops(&self) -> Vec<EditOp> {
        let mut ops: Vec<EditOp> = self
            .source
            .iter()
            .enumerate()
            .filter_map(|(u, slot)| match *slot {
                SourceSlot::Open => None,
                SourceSlot::Sub(v) => Some(EditOp::Sub { source: u, target: v }),
                SourceSlot::Del => Some(EditOp::Del { source: u }),
            })
            .collect();
        ops.extend(
            self.target
                .iter()
                .enumerate()
                .filter(|(_, t)| **t == TargetSlot::Ins)
                .map(|(v, _)| EditOp::Ins { target: v }),
        );
        ops
    }
}

/// Cost added by applying `op` on top of `mapping`; `op` must already be checked.
pub(crate) fn delta_cost(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    mapping: &PartialMapping,
    op: EditOp,
) -> f64 {
    match op {
        EditOp::Sub { source: u, target: v } => {
            let mut c = cost.node_sub(g1.label(u), g2.label(v));
            for &u2 in g1.neighbors(u) {
                let w1 = g1.weight(u, u2).unwrap_or_default();
                match mapping.source[u2] {
                    SourceSlot::Open => {}
                    SourceSlot::Del => c += cost.edge_del(w1),
                    SourceSlot::Sub(v2) => match g2.weight(v, v2) {
                        Some(w2) => c += cost.edge_sub(w1, w2),
                        None => c += cost.edge_del(w1),
                    },
                }
            }
            for &v2 in g2.neighbors(v) {
                let w2 = g2.weight(v, v2).unwrap_or_default();
                match mapping.target[v2] {
                    TargetSlot::Open => {}
                    TargetSlot::Ins => c += cost.edge_ins(w2),
                    // Edges present on both sides were charged as substitutions above.
                    TargetSlot::Sub(u2) if !g1.has_edge(u, u2) => c += cost.edge_ins(w2),
                    TargetSlot::Sub(_) => {}
                }
            }
            c
        }
        EditOp::Del { source: u } => {
            let mut c = cost.node_del();
            for &u2 in g1.neighbors(u) {
                if mapping.source[u2] != SourceSlot::Open {
                    c += cost.edge_del(g1.weight(u, u2).unwrap_or_default());
                }
            }
            c
        }
        EditOp::Ins { target: v } => {
            let mut c = cost.node_ins();
            for &v2 in g2.neighbors(v) {
                if mapping.target[v2] != TargetSlot::Open {
                    c += cost.edge_ins(g2.weight(v, v2).unwrap_or_default());
                }
            }
            c
        }
    }
}

/// Cost increase of appending `op` to the partial mapping `prefix`.
pub fn incremental_cost(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    prefix: &PartialMapping,
    op: EditOp,
) -> Result<f64> {
    if prefix.source_count() != g1.node_count() || prefix.target_count() != g2.node_count() {
        return Err(GedError::InvalidPath("mapping does not match graph sizes".into()));
    }
    prefix.check(op)?;
    Ok(delta_cost(g1, g2, cost, prefix, op))
}

/// Exact cost g(p) of a (partial or complete) edit path, node and induced edge edits.
pub fn path_cost(g1: &Graph, g2: &Graph, cost: &CostModel, path: &EditPath) -> Result<f64> {
    let mut mapping = PartialMapping::new(g1.node_count(), g2.node_count());
    let mut total = 0.0;
    for &op in &path.ops {
        total += incremental_cost(g1, g2, cost, &mapping, op)?;
        mapping.apply_unchecked(op);
    }
    Ok(total)
}

/// Exact cost of a partial mapping (same value as `path_cost` of its ops).
pub fn mapping_cost(g1: &Graph, g2: &Graph, cost: &CostModel, mapping: &PartialMapping) -> Result<f64> {
    path_cost(g1, g2, cost, &EditPath::new(mapping.to_ops()))
}

/// Remaining cost when one side has no open nodes, so every completion is forced.
///
/// Returns `None` while both sides still have open nodes.
pub fn forced_completion_cost(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    mapping: &PartialMapping,
) -> Option<f64> {
    if mapping.open_target_count() == 0 {
        let mut c = 0.0;
        for u in mapping.open_sources() {
            c += cost.node_del();
            for &u2 in g1.neighbors(u) {
                // Edges between two open nodes are counted from the lower index.
                if mapping.source[u2] != SourceSlot::Open || u2 > u {
                    c += cost.edge_del(g1.weight(u, u2).unwrap_or_default());
                }
            }
        }
        Some(c)
    } else if mapping.open_source_count() == 0 {
        let mut c = 0.0;
        for v in mapping.open_targets() {
            c += cost.node_ins();
            for &v2 in g2.neighbors(v) {
                if mapping.target[v2] != TargetSlot::Open || v2 > v {
                    c += cost.edge_ins(g2.weight(v, v2).unwrap_or_default());
                }
            }
        }
        Some(c)
    } else {
        None
    }
}

/// An induced subgraph together with the original index of each of its nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    pub original: Vec<usize>,
}

/// Induced subgraphs on the nodes not yet edited by `mapping`.
pub fn unmatched_subgraphs(g1: &Graph, g2: &Graph, mapping: &PartialMapping) -> (Subgraph, Subgraph) {
    let keep1: Vec<usize> = mapping.open_sources().collect();
    let keep2: Vec<usize> = mapping.open_targets().collect();
    (
        Subgraph { graph: g1.induced_subgraph(&keep1), original: keep1 },
        Subgraph { graph: g2.induced_subgraph(&keep2), original: keep2 },
    )
}
