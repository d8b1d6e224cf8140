//! Oracles shared by the integration tests. Costs here are counted directly
//! from node and edge correspondences, without the library's edit-path code.

#![allow(dead_code)]

use gedforge_core::edit::{EditOp, PartialMapping, SourceSlot, TargetSlot};
use gedforge_core::{CostModel, Graph};
use rand::Rng;

pub fn random_graph(rng: &mut impl Rng, n: usize, edge_prob: f64, labels: Option<&[&str]>) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v, 1.0));
            }
        }
    }
    let labels = (0..n)
        .map(|_| labels.map(|ls| ls[rng.gen_range(0..ls.len())].to_string()))
        .collect();
    Graph::new("r", labels, edges).unwrap()
}

/// Cost of the complete node correspondence `map` (`map[u] = Some(v)` or deletion).
pub fn correspondence_cost(g1: &Graph, g2: &Graph, cost: &CostModel, map: &[Option<usize>]) -> f64 {
    let n2 = g2.node_count();
    let mut image = vec![None; n2];
    for (u, m) in map.iter().enumerate() {
        if let Some(v) = *m {
            image[v] = Some(u);
        }
    }
    let mut total = 0.0;
    for (u, m) in map.iter().enumerate() {
        total += match *m {
            Some(v) => cost.node_sub(g1.label(u), g2.label(v)),
            None => cost.node_del(),
        };
    }
    total += image.iter().filter(|i| i.is_none()).count() as f64 * cost.node_ins();
    for e in g1.edges() {
        match (map[e.u], map[e.v]) {
            (Some(a), Some(b)) => match g2.weight(a, b) {
                Some(w2) => total += cost.edge_sub(e.weight, w2),
                None => total += cost.edge_del(e.weight),
            },
            _ => total += cost.edge_del(e.weight),
        }
    }
    for e in g2.edges() {
        let covered = matches!((image[e.u], image[e.v]), (Some(a), Some(b)) if g1.has_edge(a, b));
        if !covered {
            total += cost.edge_ins(e.weight);
        }
    }
    total
}

/// Minimum over every correspondence that agrees with `fixed` (`None` entries are free).
pub fn brute_force_completion(g1: &Graph, g2: &Graph, cost: &CostModel, fixed: &[Option<Option<usize>>], fixed_targets: &[bool]) -> f64 {
    let n1 = g1.node_count();
    let mut used = fixed_targets.to_vec();
    let mut map: Vec<Option<usize>> = vec![None; n1];
    let mut best = f64::INFINITY;
    fn rec(
        u: usize,
        g1: &Graph,
        g2: &Graph,
        cost: &CostModel,
        fixed: &[Option<Option<usize>>],
        used: &mut Vec<bool>,
        map: &mut Vec<Option<usize>>,
        best: &mut f64,
    ) {
        if u == g1.node_count() {
            *best = best.min(correspondence_cost(g1, g2, cost, map));
            return;
        }
        if let Some(choice) = fixed[u] {
            map[u] = choice;
            rec(u + 1, g1, g2, cost, fixed, used, map, best);
            return;
        }
        map[u] = None;
        rec(u + 1, g1, g2, cost, fixed, used, map, best);
        for v in 0..g2.node_count() {
            if !used[v] {
                used[v] = true;
                map[u] = Some(v);
                rec(u + 1, g1, g2, cost, fixed, used, map, best);
                used[v] = false;
            }
        }
    }
    rec(0, g1, g2, cost, fixed, &mut used, &mut map, &mut best);
    best
}

/// Exact GED by enumerating every ε-padded node mapping.
pub fn brute_force_ged(g1: &Graph, g2: &Graph, cost: &CostModel) -> f64 {
    brute_force_completion(g1, g2, cost, &vec![None; g1.node_count()], &vec![false; g2.node_count()])
}

/// Optimal cost of completing `mapping`, including edges that cross from
/// edited to unedited nodes. Includes the cost already fixed by `mapping`.
pub fn brute_force_total_following(g1: &Graph, g2: &Graph, cost: &CostModel, mapping: &PartialMapping) -> f64 {
    let fixed: Vec<Option<Option<usize>>> = (0..g1.node_count())
        .map(|u| match mapping.source(u) {
            SourceSlot::Open => None,
            SourceSlot::Sub(v) => Some(Some(v)),
            SourceSlot::Del => Some(None),
        })
        .collect();
    // inserted targets stay unmatched: mark them used so no source can take them
    let fixed_targets: Vec<bool> = (0..g2.node_count())
        .map(|v| matches!(mapping.target(v), TargetSlot::Ins | TargetSlot::Sub(_)))
        .collect();
    brute_force_completion(g1, g2, cost, &fixed, &fixed_targets)
}

/// Exact GED between the subgraphs induced by the unedited nodes.
pub fn brute_force_unmatched_ged(g1: &Graph, g2: &Graph, cost: &CostModel, mapping: &PartialMapping) -> f64 {
    let keep1: Vec<usize> = mapping.open_sources().collect();
    let keep2: Vec<usize> = mapping.open_targets().collect();
    brute_force_ged(&g1.induced_subgraph(&keep1), &g2.induced_subgraph(&keep2), cost)
}

/// Every state of the search tree in the library's expansion order: sources
/// are edited in index order, and once all are edited one step inserts the
/// remaining targets.
pub fn search_tree_states(n1: usize, n2: usize) -> Vec<PartialMapping> {
    let mut out = Vec::new();
    let mut stack = vec![PartialMapping::new(n1, n2)];
    while let Some(m) = stack.pop() {
        match m.next_open_source() {
            Some(u) => {
                let mut del = m.clone();
                del.apply(EditOp::Del { source: u }).unwrap();
                stack.push(del);
                for v in m.open_targets().collect::<Vec<_>>() {
                    let mut sub = m.clone();
                    sub.apply(EditOp::Sub { source: u, target: v }).unwrap();
                    stack.push(sub);
                }
            }
            None if m.open_target_count() > 0 => {
                let mut done = m.clone();
                for v in m.open_targets().collect::<Vec<_>>() {
                    done.apply(EditOp::Ins { target: v }).unwrap();
                }
                stack.push(done);
            }
            None => {}
        }
        out.push(m);
    }
    out
}

/// Exact cost of the edits in `mapping` counted from correspondences:
/// node edits plus every edge whose endpoints are both edited.
pub fn fixed_cost(g1: &Graph, g2: &Graph, cost: &CostModel, mapping: &PartialMapping) -> f64 {
    let mut total = 0.0;
    for u in 0..g1.node_count() {
        total += match mapping.source(u) {
            SourceSlot::Open => 0.0,
            SourceSlot::Sub(v) => cost.node_sub(g1.label(u), g2.label(v)),
            SourceSlot::Del => cost.node_del(),
        };
    }
    for v in 0..g2.node_count() {
        if mapping.target(v) == TargetSlot::Ins {
            total += cost.node_ins();
        }
    }
    let image = |u: usize| match mapping.source(u) {
        SourceSlot::Sub(v) => Some(v),
        _ => None,
    };
    for e in g1.edges() {
        if mapping.source(e.u) == SourceSlot::Open || mapping.source(e.v) == SourceSlot::Open {
            continue;
        }
        match (image(e.u), image(e.v)) {
            (Some(a), Some(b)) if g2.has_edge(a, b) => total += cost.edge_sub(e.weight, g2.weight(a, b).unwrap()),
            _ => total += cost.edge_del(e.weight),
        }
    }
    for e in g2.edges() {
        if mapping.target(e.u) == TargetSlot::Open || mapping.target(e.v) == TargetSlot::Open {
            continue;
        }
        let pre = |v: usize| match mapping.target(v) {
            TargetSlot::Sub(u) => Some(u),
            _ => None,
        };
        let covered = matches!((pre(e.u), pre(e.v)), (Some(a), Some(b)) if g1.has_edge(a, b));
        if !covered {
            total += cost.edge_ins(e.weight);
        }
    }
    total
}

/// `random_graph` with a node count drawn from `sizes`.
pub fn random_graph_sized(
    rng: &mut impl Rng,
    sizes: std::ops::RangeInclusive<usize>,
    edge_prob: f64,
    labels: Option<&[&str]>,
) -> Graph {
    let n = rng.gen_range(sizes);
    random_graph(rng, n, edge_prob, labels)
}
