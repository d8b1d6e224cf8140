//! Learning-free heuristics: the plain zero estimate and the bipartite
//! (Hungarian) lower bound on the unmatched subgraphs.

use crate::assignment::{lap_hungarian, CostMatrix};
use crate::cost::{CostModel, INFINITE_COST};
use crate::edit::{PartialMapping, SourceSlot, TargetSlot};
use crate::error::{GedError, Result};
use crate::graph::{Edge, Graph};
use crate::search::{Heuristic, HeuristicSession};

/// `h = 0` everywhere. Plain A* with this heuristic is uniform-cost search.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn name(&self) -> &str {
        "zero"
    }

    fn admissible(&self) -> bool {
        true
    }

    fn prepare<'a>(&'a self, _: &'a Graph, _: &'a Graph, _: &'a CostModel) -> Result<Box<dyn HeuristicSession + 'a>> {
        Ok(Box::new(ZeroSession))
    }
}

struct ZeroSession;

impl HeuristicSession for ZeroSession {
    fn estimate(&mut self, _: &PartialMapping) -> f64 {
        0.0
    }
}

/// Lower bound from two independent assignment problems on the unmatched
/// subgraphs: one over nodes, one over edges (each undirected edge is one item).
///
/// Any completion edits every open node once and every edge between open
/// nodes at most once, at no less than the assignment cost, so the sum of the
/// two optima never exceeds the optimal remaining cost.
#[derive(Clone, Copy, Debug, Default)]
pub struct HungarianHeuristic;

impl Heuristic for HungarianHeuristic {
    fn name(&self) -> &str {
        "hungarian"
    }

    fn admissible(&self) -> bool {
        true
    }

    fn prepare<'a>(
        &'a self,
        g1: &'a Graph,
        g2: &'a Graph,
        cost: &'a CostModel,
    ) -> Result<Box<dyn HeuristicSession + 'a>> {
        Ok(Box::new(HungarianSession { g1, g2, cost }))
    }
}

pub struct HungarianSession<'a> {
    g1: &'a Graph,
    g2: &'a Graph,
    cost: &'a CostModel,
}

impl HeuristicSession for HungarianSession<'_> {
    fn estimate(&mut self, mapping: &PartialMapping) -> f64 {
        hungarian_bound(self.g1, self.g2, self.cost, mapping)
    }
}

/// The bipartite lower bound for the state `mapping`; `+inf` when no finite completion exists.
pub fn hungarian_bound(g1: &Graph, g2: &Graph, cost: &CostModel, mapping: &PartialMapping) -> f64 {
    let sources: Vec<usize> = mapping.open_sources().collect();
    let targets: Vec<usize> = mapping.open_targets().collect();
    if sources.is_empty() && targets.is_empty() {
        return 0.0;
    }

    let nodes = block_matrix(
        sources.len(),
        targets.len(),
        |i, j| cost.node_sub(g1.label(sources[i]), g2.label(targets[j])),
        |_| cost.node_del(),
        |_| cost.node_ins(),
    );

    let open_edges = |g: &Graph, open: &dyn Fn(usize) -> bool| -> Vec<Edge> {
        g.edges().iter().filter(|e| open(e.u) && open(e.v)).copied().collect()
    };
    let e1 = open_edges(g1, &|u| mapping.source(u) == SourceSlot::Open);
    let e2 = open_edges(g2, &|v| mapping.target(v) == TargetSlot::Open);
    let edges = block_matrix(
        e1.len(),
        e2.len(),
        |i, j| cost.edge_sub(e1[i].weight, e2[j].weight),
        |i| cost.edge_del(e1[i].weight),
        |j| cost.edge_ins(e2[j].weight),
    );

    solve_or_inf(&nodes) + solve_or_inf(&edges)
}

fn solve_or_inf(m: &CostMatrix) -> f64 {
    match lap_hungarian(m) {
        Ok(a) => a.total_cost,
        Err(GedError::Infeasible) => INFINITE_COST,
        Err(e) => unreachable!("assignment on a well-formed matrix failed: {e}"),
    }
}

/// The square `(a + b)` matrix `[sub | del-diagonal ; ins-diagonal | 0]`,
/// with `+inf` off the deletion and insertion diagonals.
pub(crate) fn block_matrix(
    a: usize,
    b: usize,
    sub: impl Fn(usize, usize) -> f64,
    del: impl Fn(usize) -> f64,
    ins: impl Fn(usize) -> f64,
) -> CostMatrix {
    CostMatrix::from_fn(a + b, |i, j| match (i < a, j < b) {
        (true, true) => sub(i, j),
        (true, false) => {
            if j - b == i {
                del(i)
            } else {
                INFINITE_COST
            }
        }
        (false, true) => {
            if i - a == j {
                ins(j)
            } else {
                INFINITE_COST
            }
        }
        (false, false) => 0.0,
    })
    .expect("block matrix entries are nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::EditOp;

    #[test]
    fn zero_everywhere() {
        let g = Graph::unlabeled("g", 2, &[(0, 1)]).unwrap();
        let cost = CostModel::unlabeled();
        let mut s = ZeroHeuristic.prepare(&g, &g, &cost).unwrap();
        assert_eq!(s.estimate(&PartialMapping::new(2, 2)), 0.0);
        let goal = PartialMapping::from_ops(2, 2, &[EditOp::Sub { source: 0, target: 0 }, EditOp::Sub { source: 1, target: 1 }]).unwrap();
        assert_eq!(s.estimate(&goal), 0.0);
        assert!(ZeroHeuristic.admissible());
    }

    #[test]
    fn empty_subgraphs_give_zero() {
        let g = Graph::unlabeled("g", 1, &[]).unwrap();
        let goal = PartialMapping::from_ops(1, 1, &[EditOp::Sub { source: 0, target: 0 }]).unwrap();
        assert_eq!(hungarian_bound(&g, &g, &CostModel::unlabeled(), &goal), 0.0);
    }

    #[test]
    fn substitution_beats_delete_insert() {
        let g1 = Graph::labeled("a", &["C"], &[]).unwrap();
        let g2 = Graph::labeled("b", &["N"], &[]).unwrap();
        let h = hungarian_bound(&g1, &g2, &CostModel::uniform_label(), &PartialMapping::new(1, 1));
        assert_eq!(h, 1.0);
    }

    #[test]
    fn counts_unmatched_edges() {
        // triangle vs single edge: one node deletion, two edge deletions
        let g1 = Graph::unlabeled("a", 3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let g2 = Graph::unlabeled("b", 2, &[(0, 1)]).unwrap();
        let h = hungarian_bound(&g1, &g2, &CostModel::unlabeled(), &PartialMapping::new(3, 2));
        assert_eq!(h, 3.0);
    }

    #[test]
    fn geometric_imbalance_is_infinite() {
        let g1 = Graph::new("a", vec![None; 2], [(0, 1, 0.5)]).unwrap();
        let g2 = Graph::new("b", vec![None; 1], []).unwrap();
        assert!(hungarian_bound(&g1, &g2, &CostModel::geometric(), &PartialMapping::new(2, 1)).is_infinite());
        let g3 = Graph::new("c", vec![None; 2], [(0, 1, 0.25)]).unwrap();
        let h = hungarian_bound(&g1, &g3, &CostModel::geometric(), &PartialMapping::new(2, 2));
        assert_eq!(h, 0.25);
    }

    #[test]
    fn block_layout() {
        let m = block_matrix(2, 1, |_, _| 5.0, |i| i as f64 + 1.0, |_| 7.0);
        assert_eq!(m.size(), 3);
        assert_eq!(m.get(0, 0), 5.0);
        assert_eq!(m.get(0, 1), 1.0);
        assert!(m.get(0, 2).is_infinite());
        assert_eq!(m.get(1, 2), 2.0);
        assert_eq!(m.get(2, 0), 7.0);
        assert_eq!(m.get(2, 1), 0.0);
    }
}
