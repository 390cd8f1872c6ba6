//! Graph discrepancy analysis: node matching, the three similarity
//! components, and the combined score used by the failure detectors.
//!
//! Matching is greedy maximum-cosine restricted to same-category pairs with
//! deterministic tie-breaks. The subtask node, when both graphs carry one and
//! the toggle is on, participates as one matched pair: its text cosine enters
//! the node score, it counts one union element, and it contributes a zero
//! degree difference to the structure score. Cross-category pairs are never
//! matched, even when state labels overlap.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbedError, EmbeddingProvider};
use crate::graph::{Edge, NodeId, SceneGraph};

/// Ablation switches for the similarity components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchToggles {
    pub use_node: bool,
    pub use_edge: bool,
    pub use_struc: bool,
    pub use_subtask_node: bool,
}

impl Default for MatchToggles {
    fn default() -> Self {
        MatchToggles {
            use_node: true,
            use_edge: true,
            use_struc: true,
            use_subtask_node: true,
        }
    }
}

impl MatchToggles {
    /// At least one of the three component flags must stay on.
    pub fn is_valid(&self) -> bool {
        self.use_node || self.use_edge || self.use_struc
    }

    pub fn without_node() -> Self {
        MatchToggles {
            use_node: false,
            ..Default::default()
        }
    }

    pub fn without_edge() -> Self {
        MatchToggles {
            use_edge: false,
            ..Default::default()
        }
    }

    pub fn without_struc() -> Self {
        MatchToggles {
            use_struc: false,
            ..Default::default()
        }
    }

    pub fn without_subtask_node() -> Self {
        MatchToggles {
            use_subtask_node: false,
            ..Default::default()
        }
    }
}

/// Pairing between observed and expected nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMatching {
    /// `(observed id, expected id)`; nodes appear in at most one pair and
    /// paired nodes share a category.
    pub pairs: Vec<(NodeId, NodeId)>,
    pub unmatched_obs: Vec<NodeId>,
    pub unmatched_exp: Vec<NodeId>,
    /// Whether the detached subtask nodes were paired as well.
    pub subtask_pair_included: bool,
}

impl NodeMatching {
    pub fn expected_for(&self, obs: &NodeId) -> Option<&NodeId> {
        self.pairs.iter().find(|(o, _)| o == obs).map(|(_, e)| e)
    }
}

/// Full similarity breakdown for one (observed, expected) graph pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Node component (average matched cosine over the node union).
    pub node_score: f64,
    /// Edge component (matched edges over the edge union).
    pub edge_score: f64,
    /// Structure component (one minus normalized degree differences).
    pub structure_score: f64,
    /// Mean of the enabled components.
    pub score: f64,
    pub toggles: MatchToggles,
    pub matching: NodeMatching,
    /// Observed-side triples that found an expected counterpart.
    pub matched_edges: Vec<Edge>,
    /// Degree normalizer used by the structure component.
    pub degree_normalizer: usize,
    /// Matched pair count used by the structure component.
    pub matched_pair_count: usize,
}

fn node_cosine(
    obs: &SceneGraph,
    exp: &SceneGraph,
    pair: &(NodeId, NodeId),
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbedError> {
    let o = obs.node(&pair.0).expect("matching refers to observed node");
    let e = exp.node(&pair.1).expect("matching refers to expected node");
    cosine(
        &provider.node(&o.category, &o.state)?,
        &provider.node(&e.category, &e.state)?,
    )
}

fn subtask_cosine(
    obs: &SceneGraph,
    exp: &SceneGraph,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbedError> {
    let o = obs
        .subtask
        .as_ref()
        .expect("subtask pair requires observed subtask");
    let e = exp
        .subtask
        .as_ref()
        .expect("subtask pair requires expected subtask");
    cosine(&provider.text(&o.tokens())?, &provider.text(&e.tokens())?)
}

/// Greedy maximum-cosine matching restricted to same-category pairs.
/// Candidates are ranked by (cosine desc, observed id asc, expected id asc)
/// and accepted while both endpoints are free.
pub fn match_nodes(
    g_obs: &SceneGraph,
    g_exp: &SceneGraph,
    toggles: &MatchToggles,
    provider: &dyn EmbeddingProvider,
) -> Result<NodeMatching, EmbedError> {
    let mut candidates: Vec<(f64, &NodeId, &NodeId)> = Vec::new();
    for o in &g_obs.nodes {
        for e in &g_exp.nodes {
            if o.category != e.category {
                continue;
            }
            let c = cosine(
                &provider.node(&o.category, &o.state)?,
                &provider.node(&e.category, &e.state)?,
            )?;
            candidates.push((c, &o.id, &e.id));
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(b.2))
    });

    let mut pairs = Vec::new();
    let mut used_obs: Vec<&NodeId> = Vec::new();
    let mut used_exp: Vec<&NodeId> = Vec::new();
    for (_, o, e) in candidates {
        if used_obs.contains(&o) || used_exp.contains(&e) {
            continue;
        }
        used_obs.push(o);
        used_exp.push(e);
        pairs.push((o.clone(), e.clone()));
    }

    let unmatched_obs = g_obs
        .nodes
        .iter()
        .map(|n| n.id.clone())
        .filter(|id| !used_obs.contains(&id))
        .collect();
    let unmatched_exp = g_exp
        .nodes
        .iter()
        .map(|n| n.id.clone())
        .filter(|id| !used_exp.contains(&id))
        .collect();

    Ok(NodeMatching {
        pairs,
        unmatched_obs,
        unmatched_exp,
        subtask_pair_included: toggles.use_subtask_node
            && g_obs.subtask.is_some()
            && g_exp.subtask.is_some(),
    })
}

/// Node similarity: sum of matched cosines (plus the subtask pair cosine when
/// included) over the size of the node union, where a matched pair counts
/// once and every unmatched node counts once. Defined as 1.0 when the union
/// is empty.
pub fn node_similarity(
    matching: &NodeMatching,
    g_obs: &SceneGraph,
    g_exp: &SceneGraph,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbedError> {
    let mut union =
        matching.pairs.len() + matching.unmatched_obs.len() + matching.unmatched_exp.len();
    let mut total = 0.0;
    for pair in &matching.pairs {
        total += node_cosine(g_obs, g_exp, pair, provider)?;
    }
    if matching.subtask_pair_included {
        total += subtask_cosine(g_obs, g_exp, provider)?;
        union += 1;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(total / union as f64)
}

fn matched_edge_list(matching: &NodeMatching, g_obs: &SceneGraph, g_exp: &SceneGraph) -> Vec<Edge> {
    g_obs
        .edges
        .iter()
        .filter(|oe| {
            let (Some(subject), Some(object)) = (
                matching.expected_for(&oe.subject),
                matching.expected_for(&oe.object),
            ) else {
                return false;
            };
            g_exp.edges.iter().any(|ee| {
                &ee.subject == subject && ee.predicate == oe.predicate && &ee.object == object
            })
        })
        .cloned()
        .collect()
}

/// Edge similarity: ratio of matched edges to the edge union (matched edges
/// count once, every unmatched edge counts once). 1.0 when both edge sets are
/// empty.
pub fn edge_similarity(matching: &NodeMatching, g_obs: &SceneGraph, g_exp: &SceneGraph) -> f64 {
    let matched = matched_edge_list(matching, g_obs, g_exp).len();
    let union = matched + (g_obs.edges.len() - matched) + (g_exp.edges.len() - matched);
    if union == 0 {
        return 1.0;
    }
    matched as f64 / union as f64
}

/// Structure similarity: one minus the average normalized degree difference
/// across matched pairs. The subtask pair contributes a zero difference. The
/// normalizer is `max(1, max degree over both graphs)`. Returns 0.0 when
/// nothing is matched and either graph has object nodes; 1.0 when both are
/// empty of object nodes and no subtask pair exists.
pub fn structural_similarity(
    matching: &NodeMatching,
    g_obs: &SceneGraph,
    g_exp: &SceneGraph,
) -> f64 {
    let pair_count = matching.pairs.len() + usize::from(matching.subtask_pair_included);
    if pair_count == 0 {
        return if g_obs.nodes.is_empty() && g_exp.nodes.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let normalizer = core::cmp::max(1, core::cmp::max(g_obs.max_degree(), g_exp.max_degree()));
    let mut total = 0.0;
    for (o, e) in &matching.pairs {
        let diff = g_obs.degree(o).abs_diff(g_exp.degree(e));
        total += diff as f64 / normalizer as f64;
    }
    // Subtask pair: degree 0 on both sides by construction, adds nothing.
    1.0 - total / pair_count as f64
}

/// Compute the enabled components on one shared matching and average them.
pub fn graph_similarity(
    g_obs: &SceneGraph,
    g_exp: &SceneGraph,
    toggles: &MatchToggles,
    provider: &dyn EmbeddingProvider,
) -> Result<SimilarityReport, EmbedError> {
    debug_assert!(
        toggles.is_valid(),
        "at least one similarity component must stay enabled"
    );
    let matching = match_nodes(g_obs, g_exp, toggles, provider)?;
    let node_score = node_similarity(&matching, g_obs, g_exp, provider)?;
    let edge_score = edge_similarity(&matching, g_obs, g_exp);
    let structure_score = structural_similarity(&matching, g_obs, g_exp);

    let mut sum = 0.0;
    let mut enabled = 0usize;
    if toggles.use_node {
        sum += node_score;
        enabled += 1;
    }
    if toggles.use_edge {
        sum += edge_score;
        enabled += 1;
    }
    if toggles.use_struc {
        sum += structure_score;
        enabled += 1;
    }
    let score = sum / enabled as f64;

    let matched_edges = matched_edge_list(&matching, g_obs, g_exp);
    let normalizer = core::cmp::max(1, core::cmp::max(g_obs.max_degree(), g_exp.max_degree()));
    let matched_pair_count = matching.pairs.len() + usize::from(matching.subtask_pair_included);
    Ok(SimilarityReport {
        node_score,
        edge_score,
        structure_score,
        score,
        toggles: *toggles,
        matching,
        matched_edges,
        degree_normalizer: normalizer,
        matched_pair_count,
    })
}
