//! Scene-graph based failure anticipation for long-horizon household tasks.
//!
//! The crate bundles three things that are usually scattered across a robot
//! stack:
//!
//! - a closed-vocabulary scene-graph data model ([`graph`], [`vocab`], [`task`])
//!   with deterministic embeddings ([`embed`]) and a graph discrepancy engine
//!   ([`simmatch`]) that scores an observed scene against reference scenes,
//! - a demonstration buffer ([`membank`]), detection policies ([`detect`]) and
//!   a diagnose/recover pipeline ([`replan`]) that splices corrective actions
//!   into a running plan,
//! - a deterministic symbolic kitchen world ([`simworld`]), a scenario suite
//!   ([`scenarios`]) and a benchmark runner ([`harness`]) that compares
//!   replanning strategies under seeded, reproducible conditions.
//!
//! Everything here is `no_std`-compatible (alloc required); file IO, the CLI
//! and HTTP clients live in the companion `presage` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod detect;
pub mod embed;
pub mod graph;
pub mod graphbuild;
pub mod harness;
pub mod membank;
pub mod replan;
pub mod rng;
pub mod scenarios;
pub mod simmatch;
pub mod simworld;
pub mod synth;
pub mod task;
pub mod vocab;

pub use detect::{DetectionDecision, DetectorConfig, DetectorKind};
pub use embed::{EmbeddingProvider, EmbeddingVector, OneHotProvider, TextEmbedConfig};
pub use graph::{Edge, NodeId, ObjectNode, Predicate, SceneGraph, ValidationReport};
pub use graphbuild::{build_scene_graph, GeometryParams, Observation, ObservedObject};
pub use harness::{EpisodeResult, HarnessConfig, Report, Strategy, StrategyKind};
pub use membank::{Buffer, DemonstrationRecord, RetrievalConfig};
pub use replan::{Diagnosis, DiagnosisKind, ReasonRequest, Reasoner, RecoveryPlan, RuleReasoner};
pub use rng::SplitMix64;
pub use simmatch::{MatchToggles, NodeMatching, SimilarityReport};
pub use simworld::{ScenarioSpec, StepOutcome, TimeModel, WorldState};
pub use task::{GoalAtom, GoalCondition, Plan, Subtask, TaskSpec};
pub use vocab::Vocabulary;

/// `sqrt` that works without `std` (the float intrinsics live in `std`).
pub(crate) fn sqrt(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.sqrt()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::sqrt(x)
    }
}
