//! Failure-detection policies: the proactive scene-graph check, the
//! object-count baseline, and the post-hoc verifier.
//!
//! All policies share the trigger rule: retrieve references for the graph's
//! subtask, score the graph against each, trigger when every reference falls
//! below the threshold (no sufficiently similar match exists). When retrieval
//! returns nothing the policy proceeds without triggering and reports
//! `NoReferences` so the episode trace shows the gap.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbedError, EmbeddingProvider, TextEmbedConfig};
use crate::graph::SceneGraph;
use crate::membank::{retrieve_references, Buffer, RetrievalConfig};
use crate::simmatch::{graph_similarity, MatchToggles, SimilarityReport};

/// Which comparison backs the check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    SceneGraph,
    ObjectCount,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::SceneGraph => "scene_graph",
            DetectorKind::ObjectCount => "object_count",
        }
    }
}

/// Detector parameters; the threshold lives in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub toggles: MatchToggles,
    pub retrieval: RetrievalConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            threshold: 0.9,
            toggles: MatchToggles::default(),
            retrieval: RetrievalConfig::default(),
        }
    }
}

impl DetectorConfig {
    pub fn is_valid(&self) -> bool {
        self.threshold > 0.0 && self.threshold <= 1.0 && self.toggles.is_valid()
    }
}

/// Whether references existed for the checked subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Covered,
    NoReferences,
}

/// Score against one retrieved reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScore {
    pub demo_id: String,
    pub step_index: usize,
    pub score: f64,
    /// Full breakdown for the scene-graph detector; absent for baselines
    /// that do not produce one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SimilarityReport>,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDecision {
    pub triggered: bool,
    /// Max over references; -1.0 when no references exist.
    pub best_score: f64,
    /// Index into `per_reference` of the best-scoring reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_index: Option<usize>,
    pub per_reference: Vec<ReferenceScore>,
    pub reason_hint: String,
    pub coverage: Coverage,
}

impl DetectionDecision {
    fn no_references(hint: &str) -> Self {
        DetectionDecision {
            triggered: false,
            best_score: -1.0,
            best_index: None,
            per_reference: Vec::new(),
            reason_hint: hint.to_string(),
            coverage: Coverage::NoReferences,
        }
    }

    fn from_scores(scores: Vec<ReferenceScore>, threshold: f64) -> Self {
        let mut best_index = 0usize;
        for (i, s) in scores.iter().enumerate() {
            if s.score > scores[best_index].score {
                best_index = i;
            }
        }
        let best_score = scores[best_index].score;
        let triggered = best_score < threshold;
        let reason_hint = if triggered {
            format!(
                "no reference reached threshold {threshold}: best {:.4} from {} step {}",
                best_score, scores[best_index].demo_id, scores[best_index].step_index
            )
        } else {
            format!(
                "matched {} step {} at {:.4}",
                scores[best_index].demo_id, scores[best_index].step_index, best_score
            )
        };
        DetectionDecision {
            triggered,
            best_score,
            best_index: Some(best_index),
            per_reference: scores,
            reason_hint,
            coverage: Coverage::Covered,
        }
    }

    /// The best reference's full report, when available.
    pub fn best_report(&self) -> Option<&SimilarityReport> {
        self.per_reference
            .get(self.best_index?)
            .and_then(|r| r.report.as_ref())
    }

    /// The best reference's graph must be looked up again via these keys.
    pub fn best_reference_key(&self) -> Option<(&str, usize)> {
        let r = self.per_reference.get(self.best_index?)?;
        Some((r.demo_id.as_str(), r.step_index))
    }
}

/// The proactive scene-graph check, run before executing the subtask the
/// graph carries.
pub fn proactive_check(
    g_obs: &SceneGraph,
    buffer: &Buffer,
    cfg: &DetectorConfig,
    provider: &dyn EmbeddingProvider,
    text_cfg: &TextEmbedConfig,
) -> Result<DetectionDecision, EmbedError> {
    let Some(subtask) = &g_obs.subtask else {
        return Ok(DetectionDecision::no_references(
            "graph carries no subtask node to retrieve for",
        ));
    };
    let references = retrieve_references(buffer, subtask, &cfg.retrieval, text_cfg);
    if references.is_empty() {
        return Ok(DetectionDecision::no_references(&format!(
            "no references for subtask `{}`",
            subtask.canonical_string()
        )));
    }
    let mut scores = Vec::with_capacity(references.len());
    for r in references {
        let report = graph_similarity(g_obs, &r.graph, &cfg.toggles, provider)?;
        scores.push(ReferenceScore {
            demo_id: r.demo_id.clone(),
            step_index: r.step_index,
            score: report.score,
            report: Some(report),
        });
    }
    Ok(DetectionDecision::from_scores(scores, cfg.threshold))
}

/// Category-count similarity between two graphs: one minus the summed
/// per-category count differences over the total object count of both
/// graphs. States and edges are ignored; 1.0 when both graphs are empty.
pub fn object_count_similarity(g_obs: &SceneGraph, g_exp: &SceneGraph) -> f64 {
    let obs_counts = g_obs.category_counts();
    let exp_counts = g_exp.category_counts();
    let total = g_obs.nodes.len() + g_exp.nodes.len();
    if total == 0 {
        return 1.0;
    }
    let mut diff = 0usize;
    let mut categories: Vec<&str> = obs_counts
        .iter()
        .map(|(c, _)| *c)
        .chain(exp_counts.iter().map(|(c, _)| *c))
        .collect();
    categories.sort_unstable();
    categories.dedup();
    for c in categories {
        let o = obs_counts
            .iter()
            .find(|(n, _)| *n == c)
            .map_or(0, |(_, k)| *k);
        let e = exp_counts
            .iter()
            .find(|(n, _)| *n == c)
            .map_or(0, |(_, k)| *k);
        diff += o.abs_diff(e);
    }
    1.0 - diff as f64 / total as f64
}

/// The object-count baseline: same retrieval and threshold rule, but scores
/// are category-count similarities.
pub fn object_count_check(
    g_obs: &SceneGraph,
    buffer: &Buffer,
    cfg: &DetectorConfig,
    text_cfg: &TextEmbedConfig,
) -> Result<DetectionDecision, EmbedError> {
    let Some(subtask) = &g_obs.subtask else {
        return Ok(DetectionDecision::no_references(
            "graph carries no subtask node to retrieve for",
        ));
    };
    let references = retrieve_references(buffer, subtask, &cfg.retrieval, text_cfg);
    if references.is_empty() {
        return Ok(DetectionDecision::no_references(&format!(
            "no references for subtask `{}`",
            subtask.canonical_string()
        )));
    }
    let scores = references
        .into_iter()
        .map(|r| ReferenceScore {
            demo_id: r.demo_id.clone(),
            step_index: r.step_index,
            score: object_count_similarity(g_obs, &r.graph),
            report: None,
        })
        .collect();
    Ok(DetectionDecision::from_scores(scores, cfg.threshold))
}

/// Post-hoc verification after a subtask executed: the graph carries the
/// *successor* subtask, so retrieval fetches the pre-execution references of
/// step i+1, which describe the expected post-state of step i.
pub fn posthoc_verify(
    g_post: &SceneGraph,
    buffer: &Buffer,
    cfg: &DetectorConfig,
    detector: DetectorKind,
    provider: &dyn EmbeddingProvider,
    text_cfg: &TextEmbedConfig,
) -> Result<DetectionDecision, EmbedError> {
    match detector {
        DetectorKind::SceneGraph => proactive_check(g_post, buffer, cfg, provider, text_cfg),
        DetectorKind::ObjectCount => object_count_check(g_post, buffer, cfg, text_cfg),
    }
}

/// End-of-episode goal verification; `false` is what sends the offline
/// replanning strategy into its analysis cycle.
pub fn goal_verify(
    world: &crate::simworld::WorldState,
    goal: &crate::task::GoalCondition,
    params: &crate::graphbuild::GeometryParams,
    vocab: &crate::vocab::Vocabulary,
) -> bool {
    crate::simworld::check_goal(world, goal, params, vocab)
}
