//! Undirected labeled graphs with optional scalar edge weights.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GedError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// A validated undirected graph.
///
/// Node indices are `0..n`. Edges are stored once with `u < v`, sorted, and
/// mirrored into a dense weight matrix for constant-time lookups.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    id: String,
    labels: Vec<Option<String>>,
    edges: Vec<Edge>,
    weights: Vec<Option<f64>>,
    neighbors: Vec<Vec<usize>>,
}

/// One invariant violation found while validating graph input.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphIssue {
    SelfLoop { node: i64 },
    DuplicateEdge { u: i64, v: i64 },
    DanglingEndpoint { u: i64, v: i64, missing: i64 },
    NonContiguousIndices { expected: usize },
    InvalidWeight { u: i64, v: i64, weight: f64 },
    Directed,
}

impl fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphIssue::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            GraphIssue::DuplicateEdge { u, v } => write!(f, "duplicate edge ({u}, {v})"),
            GraphIssue::DanglingEndpoint { u, v, missing } => {
                write!(f, "dangling endpoint: edge ({u}, {v}) references missing node {missing}")
            }
            GraphIssue::NonContiguousIndices { expected } => {
                write!(f, "non-contiguous node indices: expected exactly 0..{expected}")
            }
            GraphIssue::InvalidWeight { u, v, weight } => {
                write!(f, "edge ({u}, {v}) has invalid weight {weight}")
            }
            GraphIssue::Directed => write!(f, "directed graphs are not supported"),
        }
    }
}

fn default_weight() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: i64,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: i64,
    pub v: i64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

/// Wire format of a graph file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub id: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub directed: bool,
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<EdgeJson>,
}

/// Checks every structural invariant and reports all violations at once.
pub fn validate_graph(raw: &GraphJson) -> std::result::Result<(), Vec<GraphIssue>> {
    let mut issues = Vec::new();
    let n = raw.nodes.len();
    if raw.directed {
        issues.push(GraphIssue::Directed);
    }

    let ids: HashSet<i64> = raw.nodes.iter().map(|node| node.id).collect();
    if ids.len() != n || !(0..n as i64).all(|i| ids.contains(&i)) {
        issues.push(GraphIssue::NonContiguousIndices { expected: n });
    }

    let mut seen = HashSet::new();
    for e in &raw.edges {
        if e.u == e.v {
            issues.push(GraphIssue::SelfLoop { node: e.u });
            continue;
        }
        for endpoint in [e.u, e.v] {
            if !ids.contains(&endpoint) {
                issues.push(GraphIssue::DanglingEndpoint { u: e.u, v: e.v, missing: endpoint });
            }
        }
        if !(e.weight.is_finite() && e.weight >= 0.0) {
            issues.push(GraphIssue::InvalidWeight { u: e.u, v: e.v, weight: e.weight });
        }
        if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
            issues.push(GraphIssue::DuplicateEdge { u: e.u, v: e.v });
        }
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

impl Graph {
    /// Builds a graph from node labels and `(u, v, weight)` triples.
    pub fn new(
        id: impl Into<String>,
        labels: Vec<Option<String>>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let raw = GraphJson {
            id: id.into(),
            directed: false,
            nodes: labels
                .into_iter()
                .enumerate()
                .map(|(i, label)| NodeJson { id: i as i64, label })
                .collect(),
            edges: edges
                .into_iter()
                .map(|(u, v, weight)| EdgeJson { u: u as i64, v: v as i64, weight })
                .collect(),
        };
        Self::from_json(raw)
    }

    /// Unlabeled graph with unit edge weights.
    pub fn unlabeled(id: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(id, vec![None; n], edges.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    /// Labeled graph with unit edge weights.
    pub fn labeled(id: impl Into<String>, labels: &[&str], edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            id,
            labels.iter().map(|l| Some(l.to_string())).collect(),
            edges.iter().map(|&(u, v)| (u, v, 1.0)),
        )
    }

    pub fn from_json(raw: GraphJson) -> Result<Self> {
        validate_graph(&raw).map_err(GedError::InvalidGraph)?;
        let n = raw.nodes.len();
        let mut labels = vec![None; n];
        for node in raw.nodes {
            labels[node.id as usize] = node.label;
        }
        let edges = raw
            .edges
            .iter()
            .map(|e| Edge {
                u: e.u.min(e.v) as usize,
                v: e.u.max(e.v) as usize,
                weight: e.weight,
            })
            .collect();
        Ok(Self::assemble(raw.id, labels, edges))
    }

    fn assemble(id: String, labels: Vec<Option<String>>, mut edges: Vec<Edge>) -> Self {
        let n = labels.len();
        edges.sort_by_key(|e| (e.u, e.v));
        let mut weights = vec![None; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            weights[e.u * n + e.v] = Some(e.weight);
            weights[e.v * n + e.u] = Some(e.weight);
            neighbors[e.u].push(e.v);
            neighbors[e.v].push(e.u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { id, labels, edges, weights, neighbors }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical wire form: nodes by index, edges sorted with `u < v`.
    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            id: self.id.clone(),
            directed: false,
            nodes: self
                .labels
                .iter()
                .enumerate()
                .map(|(i, label)| NodeJson { id: i as i64, label: label.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson { u: e.u as i64, v: e.v as i64, weight: e.weight })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serialization cannot fail")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.labels[node].as_deref()
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.weights[u * self.labels.len() + v]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    /// Subgraph induced by `keep`, re-indexed in the order given.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Graph {
        let mut new_index = vec![usize::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let labels = keep.iter().map(|&old| self.labels[old].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| new_index[e.u] != usize::MAX && new_index[e.v] != usize::MAX)
            .map(|e| {
                let (a, b) = (new_index[e.u], new_index[e.v]);
                Edge { u: a.min(b), v: a.max(b), weight: e.weight }
            })
            .collect();
        Self::assemble(self.id.clone(), labels, edges)
    }

    /// Same graph with every edge weight divided by `normalizer`.
    pub fn scale_weights(&self, normalizer: f64) -> Graph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { weight: e.weight / normalizer, ..*e })
            .collect();
        Self::assemble(self.id.clone(), self.labels.clone(), edges)
    }

    /// Connected in the undirected sense. The empty graph counts as connected.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(n: i64, edges: &[(i64, i64)]) -> GraphJson {
        GraphJson {
            id: "t".into(),
            directed: false,
            nodes: (0..n).map(|id| NodeJson { id, label: None }).collect(),
            edges: edges.iter().map(|&(u, v)| EdgeJson { u, v, weight: 1.0 }).collect(),
        }
    }

    #[test]
    fn triangle_is_valid() {
        assert!(validate_graph(&raw(3, &[(0, 1), (1, 2), (0, 2)])).is_ok());
    }

    #[test]
    fn self_loop_reported() {
        let issues = validate_graph(&raw(3, &[(0, 0)])).unwrap_err();
        assert_eq!(issues, vec![GraphIssue::SelfLoop { node: 0 }]);
        assert!(issues[0].to_string().contains("self-loop"));
    }

    #[test]
    fn dangling_endpoint_reported() {
        let issues = validate_graph(&raw(3, &[(0, 5)])).unwrap_err();
        assert_eq!(issues, vec![GraphIssue::DanglingEndpoint { u: 0, v: 5, missing: 5 }]);
        assert!(issues[0].to_string().contains("dangling endpoint"));
    }

    #[test]
    fn duplicate_and_noncontiguous_reported_together() {
        let mut g = raw(3, &[(0, 1), (1, 0)]);
        g.nodes[2].id = 7;
        let issues = validate_graph(&g).unwrap_err();
        assert!(issues.contains(&GraphIssue::DuplicateEdge { u: 1, v: 0 }));
        assert!(issues.contains(&GraphIssue::NonContiguousIndices { expected: 3 }));
    }

    #[test]
    fn directed_input_rejected() {
        let mut g = raw(2, &[(0, 1)]);
        g.directed = true;
        assert_eq!(validate_graph(&g).unwrap_err(), vec![GraphIssue::Directed]);
    }

    #[test]
    fn negative_weight_rejected() {
        let mut g = raw(2, &[(0, 1)]);
        g.edges[0].weight = -1.0;
        assert!(matches!(
            validate_graph(&g).unwrap_err()[0],
            GraphIssue::InvalidWeight { .. }
        ));
    }

    #[test]
    fn nodes_may_be_listed_out_of_order() {
        let text = r#"{"id":"g","nodes":[{"id":1,"label":"N"},{"id":0,"label":"C"}],"edges":[{"u":1,"v":0}]}"#;
        let g = Graph::parse(text).unwrap();
        assert_eq!(g.label(0), Some("C"));
        assert_eq!(g.label(1), Some("N"));
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, weight: 1.0 });
    }

    #[test]
    fn canonical_json_round_trip() {
        let text = r#"{"id":"g","nodes":[{"id":1,"label":null},{"id":0,"label":"C"},{"id":2,"label":"O"}],"edges":[{"u":2,"v":0,"weight":0.5},{"u":1,"v":0}]}"#;
        let g = Graph::parse(text).unwrap();
        let canonical = g.to_json_string();
        let again = Graph::parse(&canonical).unwrap();
        assert_eq!(again, g);
        assert_eq!(again.to_json_string(), canonical);
    }

    #[test]
    fn induced_subgraph_of_triangle() {
        let g = Graph::unlabeled("tri", 3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sub = g.induced_subgraph(&[1, 2]);
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        assert!(sub.has_edge(0, 1));
    }

    #[test]
    fn connectivity() {
        assert!(Graph::unlabeled("p", 3, &[(0, 1), (1, 2)]).unwrap().is_connected());
        assert!(!Graph::unlabeled("p", 3, &[(0, 1)]).unwrap().is_connected());
    }
}
