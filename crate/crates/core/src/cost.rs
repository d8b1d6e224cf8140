//! Edit cost models.
//!
//! Three variants cover the usual benchmark settings: categorical node labels
//! with unit costs, unlabeled graphs, and geometric graphs whose edge weights
//! are lengths and whose node insertions/deletions are forbidden.

use serde::{Deserialize, Serialize};

use crate::error::{GedError, Result};

/// Infinite edit cost. Absorbing under addition and greater than every finite cost.
pub const INFINITE_COST: f64 = f64::INFINITY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    UniformLabel,
    Unlabeled,
    Geometric,
}

fn one() -> f64 {
    1.0
}

/// Pluggable edit costs.
///
/// The unit fields are overrides for the variant defaults. For `Geometric`
/// the edge deletion/insertion units scale the edge weight and the node
/// deletion/insertion units are ignored (always infinite).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub variant: CostVariant,
    /// Cost of substituting two nodes with different labels (`UniformLabel` only).
    #[serde(default = "one")]
    pub node_sub: f64,
    #[serde(default = "one")]
    pub node_del: f64,
    #[serde(default = "one")]
    pub node_ins: f64,
    #[serde(default = "one")]
    pub edge_del: f64,
    #[serde(default = "one")]
    pub edge_ins: f64,
}

impl CostModel {
    pub fn new(variant: CostVariant) -> Self {
        Self {
            variant,
            node_sub: 1.0,
            node_del: 1.0,
            node_ins: 1.0,
            edge_del: 1.0,
            edge_ins: 1.0,
        }
    }

    pub fn uniform_label() -> Self {
        Self::new(CostVariant::UniformLabel)
    }

    pub fn unlabeled() -> Self {
        Self::new(CostVariant::Unlabeled)
    }

    pub fn geometric() -> Self {
        Self::new(CostVariant::Geometric)
    }

    pub fn validate(&self) -> Result<()> {
        let units = [
            ("node_sub", self.node_sub),
            ("node_del", self.node_del),
            ("node_ins", self.node_ins),
            ("edge_del", self.edge_del),
            ("edge_ins", self.edge_ins),
        ];
        for (name, value) in units {
            if !(value.is_finite() && value >= 0.0) {
                return Err(GedError::InvalidArgument(format!(
                    "cost override {name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CostModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    /// True when node labels influence costs (and network features).
    pub fn uses_labels(&self) -> bool {
        self.variant == CostVariant::UniformLabel
    }

    #[inline]
    pub fn node_sub(&self, a: Option<&str>, b: Option<&str>) -> f64 {
        match self.variant {
            CostVariant::UniformLabel if a != b => self.node_sub,
            _ => 0.0,
        }
    }

    #[inline]
    pub fn node_del(&self) -> f64 {
        match self.variant {
            CostVariant::Geometric => INFINITE_COST,
            _ => self.node_del,
        }
    }

    #[inline]
    pub fn node_ins(&self) -> f64 {
        match self.variant {
            CostVariant::Geometric => INFINITE_COST,
            _ => self.node_ins,
        }
    }

    #[inline]
    pub fn edge_sub(&self, w1: f64, w2: f64) -> f64 {
        match self.variant {
            CostVariant::Geometric => (w1 - w2).abs(),
            _ => 0.0,
        }
    }

    #[inline]
    pub fn edge_del(&self, w: f64) -> f64 {
        match self.variant {
            CostVariant::Geometric => self.edge_del * w,
            _ => self.edge_del,
        }
    }

    #[inline]
    pub fn edge_ins(&self, w: f64) -> f64 {
        match self.variant {
            CostVariant::Geometric => self.edge_ins * w,
            _ => self.edge_ins,
        }
    }

    /// Symmetric when swapping source and target leaves every cost unchanged.
    pub fn is_symmetric(&self) -> bool {
        self.node_del() == self.node_ins() && self.edge_del == self.edge_ins
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::uniform_label()
    }
}
