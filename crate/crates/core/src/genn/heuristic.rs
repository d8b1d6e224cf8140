//! Learned heuristic: predicted similarity of the unmatched subgraphs turned
//! back into a cost estimate.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use super::dynamic::{build_cache, masked_similarity, EmbeddingCache, EmbeddingStrategy, LayerCache};
use super::model::GennModel;
use super::network::{clamp_similarity, gcn_forward, init_features, score_embeddings, similarity_to_h};
use crate::cost::CostModel;
use crate::edit::{forced_completion_cost, PartialMapping};
use crate::error::Result;
use crate::graph::Graph;
use crate::search::{Heuristic, HeuristicSession};

/// Not admissible: the network may overestimate.
#[derive(Clone, Debug)]
pub struct GennHeuristic {
    model: Arc<GennModel>,
    strategy: EmbeddingStrategy,
}

impl GennHeuristic {
    pub fn new(model: Arc<GennModel>) -> Self {
        Self { model, strategy: EmbeddingStrategy::Genn }
    }

    pub fn with_strategy(model: Arc<GennModel>, strategy: EmbeddingStrategy) -> Self {
        Self { model, strategy }
    }

    pub fn model(&self) -> &GennModel {
        &self.model
    }

    pub fn strategy(&self) -> EmbeddingStrategy {
        self.strategy
    }
}

impl Heuristic for GennHeuristic {
    fn name(&self) -> &str {
        match self.strategy {
            EmbeddingStrategy::Genn => "genn",
            EmbeddingStrategy::Vanilla => "genn_vanilla",
            EmbeddingStrategy::ExactDynamic => "genn_exact_dynamic",
        }
    }

    fn admissible(&self) -> bool {
        false
    }

    fn prepare<'a>(&'a self, g1: &'a Graph, g2: &'a Graph, cost: &'a CostModel) -> Result<Box<dyn HeuristicSession + 'a>> {
        let model = &*self.model;
        let embeddings: Box<dyn MaskedScorer + 'a> = match self.strategy {
            EmbeddingStrategy::Genn => Box::new(CachedScorer {
                model,
                cache1: build_cache(model, g1),
                cache2: build_cache(model, g2),
            }),
            EmbeddingStrategy::Vanilla => Box::new(VanillaScorer { model, g1, g2 }),
            EmbeddingStrategy::ExactDynamic => Box::new(DynamicScorer {
                model,
                side1: DynamicSide::new(model, g1),
                side2: DynamicSide::new(model, g2),
            }),
        };
        Ok(Box::new(GennSession { g1, g2, cost, scorer: embeddings, masked1: Vec::new(), masked2: Vec::new() }))
    }
}

trait MaskedScorer {
    /// Similarity with both masks nonempty-complement; masks sorted ascending.
    fn score(&mut self, masked1: &[usize], masked2: &[usize]) -> Result<f64>;
}

struct CachedScorer<'a> {
    model: &'a GennModel,
    cache1: EmbeddingCache,
    cache2: EmbeddingCache,
}

impl MaskedScorer for CachedScorer<'_> {
    fn score(&mut self, masked1: &[usize], masked2: &[usize]) -> Result<f64> {
        masked_similarity(self.model, &self.cache1, &self.cache2, masked1, masked2)
    }
}

struct VanillaScorer<'a> {
    model: &'a GennModel,
    g1: &'a Graph,
    g2: &'a Graph,
}

fn complement(n: usize, masked: &[usize]) -> Vec<usize> {
    let mut drop = vec![false; n];
    for &m in masked {
        drop[m] = true;
    }
    (0..n).filter(|&i| !drop[i]).collect()
}

impl MaskedScorer for VanillaScorer<'_> {
    fn score(&mut self, masked1: &[usize], masked2: &[usize]) -> Result<f64> {
        let s1 = self.g1.induced_subgraph(&complement(self.g1.node_count(), masked1));
        let s2 = self.g2.induced_subgraph(&complement(self.g2.node_count(), masked2));
        let x1 = gcn_forward(self.model, &s1, &init_features(&s1, &self.model.feature_config));
        let x2 = gcn_forward(self.model, &s2, &init_features(&s2, &self.model.feature_config));
        score_embeddings(self.model, x1.view(), x2.view())
    }
}

/// Layer caches keyed by the sorted masked set; each is derived from the
/// cache of its mask minus the largest element.
struct DynamicSide<'a> {
    model: &'a GennModel,
    caches: HashMap<Vec<usize>, Rc<LayerCache>>,
}

impl<'a> DynamicSide<'a> {
    fn new(model: &'a GennModel, g: &Graph) -> Self {
        let mut caches = HashMap::new();
        caches.insert(Vec::new(), Rc::new(LayerCache::build(model, g)));
        Self { model, caches }
    }

    fn get(&mut self, masked: &[usize]) -> Rc<LayerCache> {
        if let Some(c) = self.caches.get(masked) {
            return Rc::clone(c);
        }
        let (&last, rest) = masked.split_last().expect("root cache is always present");
        let parent = self.get(rest);
        let child = Rc::new(parent.delete_original(self.model, last).expect("masked node present in parent"));
        self.caches.insert(masked.to_vec(), Rc::clone(&child));
        child
    }
}

struct DynamicScorer<'a> {
    model: &'a GennModel,
    side1: DynamicSide<'a>,
    side2: DynamicSide<'a>,
}

impl MaskedScorer for DynamicScorer<'_> {
    fn score(&mut self, masked1: &[usize], masked2: &[usize]) -> Result<f64> {
        let c1 = self.side1.get(masked1);
        let c2 = self.side2.get(masked2);
        score_embeddings(self.model, c1.embeddings().view(), c2.embeddings().view())
    }
}

struct GennSession<'a> {
    g1: &'a Graph,
    g2: &'a Graph,
    cost: &'a CostModel,
    scorer: Box<dyn MaskedScorer + 'a>,
    masked1: Vec<usize>,
    masked2: Vec<usize>,
}

impl HeuristicSession for GennSession<'_> {
    fn estimate(&mut self, mapping: &PartialMapping) -> f64 {
        if let Some(forced) = forced_completion_cost(self.g1, self.g2, self.cost, mapping) {
            return forced;
        }
        self.masked1.clear();
        self.masked1.extend(mapping.edited_sources());
        self.masked2.clear();
        self.masked2.extend(mapping.edited_targets());
        let s = self
            .scorer
            .score(&self.masked1, &self.masked2)
            .expect("both unmatched sides are nonempty");
        similarity_to_h(clamp_similarity(s), mapping.open_source_count(), mapping.open_target_count())
            .expect("clamped similarity is in range")
    }
}
