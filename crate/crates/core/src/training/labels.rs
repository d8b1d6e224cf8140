//! Supervision for partial edit paths taken from an optimal path.

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::edit::{path_cost, EditOp, EditPath, PartialMapping};
use crate::error::{GedError, Result};
use crate::genn::network::ged_to_similarity;
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialPathLabel {
    pub pair_id: usize,
    /// The edits of this partial path, in the order they appear in the optimal path.
    pub ops: Vec<EditOp>,
    /// Source nodes edited by `ops`, ascending.
    pub masked1: Vec<usize>,
    /// Target nodes edited by `ops`, ascending.
    pub masked2: Vec<usize>,
    pub open1: usize,
    pub open2: usize,
    /// Exact cost of `ops`.
    pub g: f64,
    /// Optimal remaining cost `ged - g`.
    pub h_opt: f64,
    /// `exp(-2 h_opt / (open1 + open2))`, and 1 when nothing is left open.
    pub s_opt: f64,
}

fn tolerance(ged: f64) -> f64 {
    1e-9 * ged.abs().max(1.0)
}

/// Every sub-edition of `optimal` when it has at most `subset_limit` edits
/// (`2^m - 1` labels), otherwise its `m` nonempty prefixes.
///
/// Fails when `optimal` does not cost `ged`.
pub fn generate_partial_labels(
    pair_id: usize,
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    optimal: &EditPath,
    ged: f64,
    subset_limit: usize,
) -> Result<Vec<PartialPathLabel>> {
    let full = path_cost(g1, g2, cost, optimal)?;
    if !optimal.is_complete(g1, g2) || (full - ged).abs() > tolerance(ged) {
        return Err(GedError::InvalidPath(format!(
            "inconsistent optimal path: cost {full} but ged {ged}"
        )));
    }
    let m = optimal.len();
    let label = |ops: Vec<EditOp>| -> Result<PartialPathLabel> { make_label(pair_id, g1, g2, cost, ops, ged) };
    if m <= subset_limit && m < usize::BITS as usize {
        (1usize..1 << m)
            .map(|mask| label((0..m).filter(|i| mask >> i & 1 == 1).map(|i| optimal.ops[i]).collect()))
            .collect()
    } else {
        (1..=m).map(|k| label(optimal.ops[..k].to_vec())).collect()
    }
}

fn make_label(pair_id: usize, g1: &Graph, g2: &Graph, cost: &CostModel, ops: Vec<EditOp>, ged: f64) -> Result<PartialPathLabel> {
    let mapping = PartialMapping::from_ops(g1.node_count(), g2.node_count(), &ops)?;
    let g = path_cost(g1, g2, cost, &EditPath::new(ops.clone()))?;
    let mut h_opt = ged - g;
    if h_opt < 0.0 {
        if h_opt < -tolerance(ged) {
            return Err(GedError::InvalidPath(format!("partial cost {g} exceeds ged {ged}")));
        }
        h_opt = 0.0;
    }
    let (open1, open2) = (mapping.open_source_count(), mapping.open_target_count());
    let s_opt = if open1 + open2 == 0 { 1.0 } else { ged_to_similarity(h_opt, open1, open2)? };
    Ok(PartialPathLabel {
        pair_id,
        masked1: mapping.edited_sources().collect(),
        masked2: mapping.edited_targets().collect(),
        ops,
        open1,
        open2,
        g,
        h_opt,
        s_opt,
    })
}
