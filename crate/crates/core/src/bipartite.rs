//! Bipartite GED approximations: fold local edge costs into a node assignment
//! problem, solve one LAP, and read off a complete edit path.

use serde::{Deserialize, Serialize};

use crate::assignment::{lap_hungarian, lap_jv, Assignment, CostMatrix};
use crate::cost::{CostModel, INFINITE_COST};
use crate::edit::{path_cost, EditOp, EditPath};
use crate::error::Result;
use crate::graph::Graph;
use crate::heuristics::block_matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteGedResult {
    pub path: EditPath,
    /// Exact induced cost of `path`; an upper bound on GED.
    pub ged_upper: f64,
    /// Optimum of the assignment problem (not a GED value).
    pub lap_cost: f64,
}

/// The `(n1 + n2)` square node cost matrix with local edge structure folded in.
///
/// Substitution entries add the optimal assignment between the incident edges
/// of the two nodes; deletion and insertion entries add the cost of removing
/// (inserting) every incident edge.
pub fn build_node_edge_cost_matrix(g1: &Graph, g2: &Graph, cost: &CostModel) -> CostMatrix {
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let incident = |g: &Graph, u: usize| -> Vec<f64> {
        g.neighbors(u).iter().map(|&x| g.weight(u, x).unwrap_or_default()).collect()
    };
    let incident1: Vec<Vec<f64>> = (0..n1).map(|u| incident(g1, u)).collect();
    let incident2: Vec<Vec<f64>> = (0..n2).map(|v| incident(g2, v)).collect();

    let mut sub = vec![0.0; n1 * n2];
    for u in 0..n1 {
        for v in 0..n2 {
            let (a, b) = (&incident1[u], &incident2[v]);
            let local = block_matrix(
                a.len(),
                b.len(),
                |i, j| cost.edge_sub(a[i], b[j]),
                |i| cost.edge_del(a[i]),
                |j| cost.edge_ins(b[j]),
            );
            let edge_part = lap_hungarian(&local).map(|x| x.total_cost).unwrap_or(INFINITE_COST);
            sub[u * n2 + v] = cost.node_sub(g1.label(u), g2.label(v)) + edge_part;
        }
    }

    block_matrix(
        n1,
        n2,
        |u, v| sub[u * n2 + v],
        |u| cost.node_del() + incident1[u].iter().map(|&w| cost.edge_del(w)).sum::<f64>(),
        |v| cost.node_ins() + incident2[v].iter().map(|&w| cost.edge_ins(w)).sum::<f64>(),
    )
}

/// Bipartite approximation solved with the Hungarian method.
pub fn hungarian_ged(g1: &Graph, g2: &Graph, cost: &CostModel) -> Result<BipartiteGedResult> {
    solve_with(g1, g2, cost, lap_hungarian)
}

/// Bipartite approximation solved with Jonker-Volgenant.
pub fn vj_ged(g1: &Graph, g2: &Graph, cost: &CostModel) -> Result<BipartiteGedResult> {
    solve_with(g1, g2, cost, lap_jv)
}

fn solve_with(
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    solver: fn(&CostMatrix) -> Result<Assignment>,
) -> Result<BipartiteGedResult> {
    let matrix = build_node_edge_cost_matrix(g1, g2, cost);
    let assignment = solver(&matrix)?;
    let path = assignment_to_path(g1.node_count(), g2.node_count(), &assignment.perm);
    let ged_upper = path_cost(g1, g2, cost, &path)?;
    Ok(BipartiteGedResult { path, ged_upper, lap_cost: assignment.total_cost })
}

/// Rows `< n1` are source nodes, columns `< n2` target nodes; the remaining
/// slots stand for deletion and insertion.
fn assignment_to_path(n1: usize, n2: usize, perm: &[usize]) -> EditPath {
    let mut ops = Vec::with_capacity(n1 + n2);
    for (source, &col) in perm.iter().enumerate().take(n1) {
        if col < n2 {
            ops.push(EditOp::Sub { source, target: col });
        } else {
            ops.push(EditOp::Del { source });
        }
    }
    for &col in &perm[n1..] {
        if col < n2 {
            ops.push(EditOp::Ins { target: col });
        }
    }
    EditPath::new(ops)
}
