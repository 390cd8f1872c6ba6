//! Benchmark runner: executes episodes under four strategies, computes
//! success rate, failure detection rate and total execution time, and runs
//! threshold sweeps and ablations.
//!
//! Strategies:
//! - `none`: execute the nominal plan, check the goal at the end.
//! - `posthoc_end`: execute everything, then run one diagnose/repair cycle
//!   over the first failed step and re-execute the remainder (unless the
//!   world is irreversibly damaged).
//! - `posthoc_online`: verify the scene after each step against the next
//!   step's references; on a mismatch, repair and retry the step.
//! - `proactive`: check the scene before each step against that step's
//!   references; on a mismatch, repair before executing anything.
//!
//! FDR counts a detection only when it fires strictly before the scripted
//! failing subtask executes; `dr_any` separately reports detections at any
//! point. Episodes are deterministic given (suite, config, seed).

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::detect::{
    object_count_check, proactive_check, Coverage, DetectionDecision, DetectorConfig, DetectorKind,
};
use crate::embed::{EmbedError, OneHotProvider, TextEmbedConfig};
use crate::graph::{to_canonical_json, SceneGraph};
use crate::graphbuild::{build_scene_graph, GeometryParams, ObservationError};
use crate::membank::{record_demonstration, retrieve_references, Buffer, RetrievalConfig};
use crate::replan::{
    splice_plan, validate_reason_response, Diagnosis, DiagnosisKind, InsertMode, ReasonRequest,
    ReasonResponse, Reasoner, RecoveryPlan, RuleReasoner,
};
use crate::rng::{fnv1a, SplitMix64};
use crate::simmatch::{match_nodes, MatchToggles, NodeMatching};
use crate::simworld::{
    apply_perturbation, check_goal, init_scenario, observe, record_demo, step, ApplyAt,
    NoiseConfig, ScenarioSpec, StepOutcome, TimeModel, WorldError, WorldState,
};
use crate::task::{Plan, Subtask};
use crate::vocab::Vocabulary;

/// Which replanning strategy drives an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    None,
    PosthocEnd,
    PosthocOnline,
    Proactive,
}

/// Strategy plus the detector backing it (for the strategies that check
/// scenes at all).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorKind>,
}

impl Strategy {
    pub fn none() -> Self {
        Strategy {
            kind: StrategyKind::None,
            detector: None,
        }
    }

    pub fn posthoc_end() -> Self {
        Strategy {
            kind: StrategyKind::PosthocEnd,
            detector: None,
        }
    }

    pub fn posthoc_online(detector: DetectorKind) -> Self {
        Strategy {
            kind: StrategyKind::PosthocOnline,
            detector: Some(detector),
        }
    }

    pub fn proactive(detector: DetectorKind) -> Self {
        Strategy {
            kind: StrategyKind::Proactive,
            detector: Some(detector),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self.kind {
            StrategyKind::None | StrategyKind::PosthocEnd => self.detector.is_none(),
            StrategyKind::PosthocOnline | StrategyKind::Proactive => self.detector.is_some(),
        }
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            StrategyKind::None => "none",
            StrategyKind::PosthocEnd => "posthoc_end",
            StrategyKind::PosthocOnline => "posthoc_online",
            StrategyKind::Proactive => "proactive",
        };
        match self.detector {
            Some(d) => format!("{base}+{}", d.as_str()),
            None => base.to_owned(),
        }
    }

    /// Parse a label like `proactive+scene_graph` or `none`.
    pub fn parse(text: &str) -> Option<Self> {
        let (base, detector) = match text.split_once('+') {
            Some((b, d)) => (b, Some(d)),
            None => (text, None),
        };
        let detector = match detector {
            None => None,
            Some("scene_graph") => Some(DetectorKind::SceneGraph),
            Some("object_count") => Some(DetectorKind::ObjectCount),
            Some(_) => return None,
        };
        let strategy = match base {
            "none" => Strategy {
                kind: StrategyKind::None,
                detector,
            },
            "posthoc_end" => Strategy {
                kind: StrategyKind::PosthocEnd,
                detector,
            },
            "posthoc_online" => Strategy {
                kind: StrategyKind::PosthocOnline,
                detector: detector.or(Some(DetectorKind::SceneGraph)),
            },
            "proactive" => Strategy {
                kind: StrategyKind::Proactive,
                detector: detector.or(Some(DetectorKind::SceneGraph)),
            },
            _ => return None,
        };
        strategy.is_valid().then_some(strategy)
    }
}

/// Whether recovery actions come from the reasoner or from a blind retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningMode {
    RuleBased,
    /// Skip diagnosis; insert a generic `wait` and retry the subtask.
    Blind,
}

/// Everything an episode run needs beyond the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub detector: DetectorConfig,
    pub time: TimeModel,
    pub geometry: GeometryParams,
    pub noise: NoiseConfig,
    pub text: TextEmbedConfig,
    pub max_replans_per_step: usize,
    pub max_replans_per_episode: usize,
    pub reasoning: ReasoningMode,
    /// Consult the remote reasoner before the rule table instead of only on
    /// escalation.
    pub remote_first: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            detector: DetectorConfig {
                threshold: 0.9,
                toggles: MatchToggles::default(),
                // Wide enough that cross-task references can never crowd out
                // a task's own demonstrations (worst case in the built-in
                // suite: a subtask text shared by two tasks appearing twice
                // per plan over four demos each = 16 records). The
                // max-over-references trigger rule makes extra references
                // harmless; the cap only bounds per-check cost.
                retrieval: RetrievalConfig {
                    k: 24,
                    min_similarity: 0.8,
                },
            },
            time: TimeModel::default(),
            geometry: GeometryParams::default(),
            noise: NoiseConfig::off(),
            text: TextEmbedConfig::default(),
            max_replans_per_step: 3,
            max_replans_per_episode: 8,
            reasoning: ReasoningMode::RuleBased,
            remote_first: false,
        }
    }
}

/// Faults that abort a run (never in-world failures, which are results).
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    World(WorldError),
    Embed(EmbedError),
    Observation(ObservationError),
    Config(String),
}

impl core::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HarnessError::World(e) => write!(f, "{e}"),
            HarnessError::Embed(e) => write!(f, "{e}"),
            HarnessError::Observation(e) => write!(f, "{e}"),
            HarnessError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HarnessError {}

impl From<WorldError> for HarnessError {
    fn from(e: WorldError) -> Self {
        HarnessError::World(e)
    }
}

impl From<EmbedError> for HarnessError {
    fn from(e: EmbedError) -> Self {
        HarnessError::Embed(e)
    }
}

impl From<ObservationError> for HarnessError {
    fn from(e: ObservationError) -> Self {
        HarnessError::Observation(e)
    }
}

/// One entry of an episode's audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Perturbation {
        before_nominal_step: usize,
        clock: f64,
    },
    Check {
        /// `before` (proactive) or `after` (post-hoc verification).
        phase: String,
        nominal_step: Option<usize>,
        subtask: String,
        observation_hash: String,
        triggered: bool,
        best_score: f64,
        covered: bool,
        clock: f64,
    },
    Replan {
        nominal_step: Option<usize>,
        diagnosis: String,
        focus: Option<String>,
        actions: Vec<String>,
        used_remote: bool,
        clock: f64,
    },
    Action {
        subtask: String,
        nominal_step: Option<usize>,
        outcome: String,
        clock: f64,
    },
    Analysis {
        clock: f64,
    },
    Goal {
        satisfied: bool,
        clock: f64,
    },
}

/// Outcome of one (scenario, strategy) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub strategy: String,
    pub success: bool,
    pub detected_before_failure: bool,
    pub detection_step: Option<usize>,
    pub any_detection: bool,
    pub replans: usize,
    pub tet: f64,
    pub damaged: bool,
    pub coverage_gaps: usize,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone)]
struct PlanItem {
    subtask: Subtask,
    /// Index into the nominal plan; `None` for spliced recovery actions.
    nominal: Option<usize>,
}

fn outcome_label(outcome: &StepOutcome) -> String {
    match outcome {
        StepOutcome::Ok => "ok".to_owned(),
        StepOutcome::PreconditionFailed(reason) => format!("precondition_failed: {reason}"),
        StepOutcome::IrreversibleDamage(reason) => format!("irreversible_damage: {reason}"),
    }
}

fn graph_hash(graph: &SceneGraph, vocab: &Vocabulary) -> String {
    format!(
        "{:016x}",
        fnv1a(to_canonical_json(graph, &vocab.version).as_bytes())
    )
}

/// Build the demonstration buffer for a suite: four demos per unique task.
pub fn build_suite_buffer(
    suite: &[ScenarioSpec],
    cfg: &HarnessConfig,
    vocab: &Vocabulary,
    created_at: &str,
) -> Result<Buffer, HarnessError> {
    let mut buffer = Buffer::new(&vocab.version, created_at);
    let mut seen: Vec<&str> = Vec::new();
    for spec in suite {
        if seen.contains(&spec.task.name.as_str()) {
            continue;
        }
        seen.push(&spec.task.name);
        for (k, layout) in spec.demo_layouts.iter().enumerate() {
            let trajectory = record_demo(&spec.task, layout, &cfg.geometry, &cfg.time, vocab)?;
            let outcome = record_demonstration(
                &trajectory,
                &spec.task.name,
                &format!("{}-d{k}", spec.task.name),
                &cfg.geometry,
                vocab,
                &cfg.text,
            );
            if let Some((step_index, reason)) = outcome.skipped.first() {
                return Err(HarnessError::Config(format!(
                    "demo for `{}` produced an invalid observation at step {step_index}: {reason}",
                    spec.task.name
                )));
            }
            buffer.records.extend(outcome.records);
        }
    }
    Ok(buffer)
}

struct EpisodeRunner<'a, 'r, R: Reasoner + ?Sized> {
    spec: &'a ScenarioSpec,
    strategy: Strategy,
    cfg: &'a HarnessConfig,
    buffer: &'a Buffer,
    vocab: &'a Vocabulary,
    provider: OneHotProvider<'a>,
    remote: Option<&'r mut R>,
    rule: RuleReasoner,

    world: WorldState,
    items: Vec<PlanItem>,
    cursor: usize,
    rng: SplitMix64,
    trace: Vec<TraceEvent>,
    replans: usize,
    replans_per_step: BTreeMap<usize, usize>,
    /// Signatures of recoveries already attempted this episode; repeating
    /// one verbatim means it did not work, so give up instead of looping.
    attempted_recoveries: Vec<String>,
    /// Set once a recovery avenue is exhausted; later triggers are logged
    /// without further reasoning.
    resigned: bool,
    pending_perturbation: Option<(usize, crate::simworld::PerturbationKind)>,
    failing_executed: bool,
    detection_step: Option<usize>,
    detected_before_failure: bool,
    any_detection: bool,
    coverage_gaps: usize,
}

impl<'a, 'r, R: Reasoner + ?Sized> EpisodeRunner<'a, 'r, R> {
    fn new(
        spec: &'a ScenarioSpec,
        strategy: Strategy,
        cfg: &'a HarnessConfig,
        buffer: &'a Buffer,
        vocab: &'a Vocabulary,
        remote: Option<&'r mut R>,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let world = init_scenario(spec, vocab)?;
        let pending_perturbation = spec.perturbation.as_ref().and_then(|p| match p.apply_at {
            ApplyAt::T0 => None,
            ApplyAt::BeforeStep(k) => Some((k, p.kind.clone())),
        });
        let items = spec
            .task
            .nominal_plan
            .subtasks
            .iter()
            .enumerate()
            .map(|(i, s)| PlanItem {
                subtask: s.clone(),
                nominal: Some(i),
            })
            .collect();
        Ok(EpisodeRunner {
            spec,
            strategy,
            cfg,
            buffer,
            vocab,
            provider: OneHotProvider::new(vocab, cfg.text.clone()),
            remote,
            rule: RuleReasoner::with_park_location(vocab, &spec.park_location),
            world,
            items,
            cursor: 0,
            rng: SplitMix64::stream(seed, fnv1a(spec.name.as_bytes())),
            trace: Vec::new(),
            replans: 0,
            replans_per_step: BTreeMap::new(),
            attempted_recoveries: Vec::new(),
            resigned: false,
            pending_perturbation,
            failing_executed: false,
            detection_step: None,
            detected_before_failure: false,
            any_detection: false,
            coverage_gaps: 0,
        })
    }

    fn observe_graph(&mut self, subtask: &Subtask) -> Result<SceneGraph, HarnessError> {
        let obs = observe(&self.world, &self.cfg.noise, &mut self.rng, self.vocab);
        Ok(build_scene_graph(&obs, subtask, &self.cfg.geometry)?)
    }

    fn run_detector(&self, graph: &SceneGraph) -> Result<DetectionDecision, HarnessError> {
        let detector = self
            .strategy
            .detector
            .expect("checking strategies carry a detector");
        Ok(match detector {
            DetectorKind::SceneGraph => proactive_check(
                graph,
                self.buffer,
                &self.cfg.detector,
                &self.provider,
                &self.cfg.text,
            )?,
            DetectorKind::ObjectCount => {
                object_count_check(graph, self.buffer, &self.cfg.detector, &self.cfg.text)?
            }
        })
    }

    fn note_detection(&mut self, nominal: Option<usize>) {
        self.any_detection = true;
        if self.detection_step.is_none() {
            self.detection_step = nominal;
            self.detected_before_failure = !self.failing_executed;
        }
    }

    fn trace_check(
        &mut self,
        phase: &str,
        nominal: Option<usize>,
        subtask: &Subtask,
        hash: String,
        decision: &DetectionDecision,
    ) {
        self.trace.push(TraceEvent::Check {
            phase: phase.to_owned(),
            nominal_step: nominal,
            subtask: subtask.canonical_string(),
            observation_hash: hash,
            triggered: decision.triggered,
            best_score: decision.best_score,
            covered: decision.coverage == Coverage::Covered,
            clock: self.world.clock,
        });
    }

    /// Diagnose and propose; rule table first with remote escalation, or
    /// remote first when configured. Remote responses pass the schema gate
    /// or are discarded in favor of the rule result.
    fn reason(&mut self, req: &ReasonRequest) -> (Diagnosis, RecoveryPlan, bool) {
        if self.cfg.remote_first {
            if let Some(remote) = self.remote.as_deref_mut() {
                if let Ok((diag, recovery)) = remote.reason(req) {
                    let resp = ReasonResponse {
                        diagnosis: diag.clone(),
                        recovery: recovery.clone(),
                    };
                    if validate_reason_response(&resp, self.vocab).is_ok() {
                        return (diag, recovery, true);
                    }
                }
            }
        }
        let (diag, recovery) = match self.rule.reason(req) {
            Ok(pair) => pair,
            Err(_) => (
                Diagnosis {
                    kind: DiagnosisKind::Unknown,
                    focus: None,
                    receptacle: None,
                    explanation: "rule reasoner failed".to_owned(),
                },
                RecoveryPlan::escalation(),
            ),
        };
        if recovery.is_escalation() && !self.cfg.remote_first {
            if let Some(remote) = self.remote.as_deref_mut() {
                if let Ok((rd, rr)) = remote.reason(req) {
                    let resp = ReasonResponse {
                        diagnosis: rd.clone(),
                        recovery: rr.clone(),
                    };
                    if validate_reason_response(&resp, self.vocab).is_ok() {
                        return (rd, rr, true);
                    }
                }
            }
        }
        (diag, recovery, false)
    }

    fn build_request(
        &self,
        subtask: &Subtask,
        graph: &SceneGraph,
        decision: &DetectionDecision,
    ) -> Result<Option<(ReasonRequest, NodeMatching)>, HarnessError> {
        let Some((demo_id, step_index)) = decision.best_reference_key() else {
            return Ok(None);
        };
        let Some(reference) = self
            .buffer
            .records
            .iter()
            .find(|r| r.demo_id == demo_id && r.step_index == step_index)
        else {
            return Ok(None);
        };
        let matching = match decision.best_report() {
            Some(report) => report.matching.clone(),
            None => match_nodes(
                graph,
                &reference.graph,
                &self.cfg.detector.toggles,
                &self.provider,
            )?,
        };
        let req = ReasonRequest::build(
            &self.spec.task.goal,
            subtask,
            graph,
            &reference.graph,
            &matching,
            self.vocab,
        );
        Ok(Some((req, matching)))
    }

    /// Handle one trigger: produce recovery actions (reasoned or blind),
    /// splice them, and account for costs. Returns true when a splice
    /// happened, meaning the caller should re-enter the loop.
    fn replan_at(
        &mut self,
        nominal: Option<usize>,
        subtask: &Subtask,
        graph: &SceneGraph,
        decision: &DetectionDecision,
        retry: Option<&Subtask>,
    ) -> Result<bool, HarnessError> {
        if self.resigned {
            self.trace.push(TraceEvent::Replan {
                nominal_step: nominal,
                diagnosis: "recovery exhausted earlier; proceeding".to_owned(),
                focus: None,
                actions: Vec::new(),
                used_remote: false,
                clock: self.world.clock,
            });
            return Ok(false);
        }
        let step_key = nominal.unwrap_or(usize::MAX);
        let per_step = self.replans_per_step.get(&step_key).copied().unwrap_or(0);
        if per_step >= self.cfg.max_replans_per_step
            || self.replans >= self.cfg.max_replans_per_episode
        {
            self.resigned = true;
            self.trace.push(TraceEvent::Replan {
                nominal_step: nominal,
                diagnosis: "replan budget exhausted; proceeding".to_owned(),
                focus: None,
                actions: Vec::new(),
                used_remote: false,
                clock: self.world.clock,
            });
            return Ok(false);
        }

        let (label, focus, mut actions, used_remote) = match self.cfg.reasoning {
            ReasoningMode::Blind => {
                // Generic retry: wait, then replay the subtask (which, under
                // prepend splicing, simply runs next).
                (
                    String::from("blind"),
                    None,
                    alloc::vec![Subtask::new("wait", &[])],
                    false,
                )
            }
            ReasoningMode::RuleBased => {
                self.world.clock += self.cfg.time.reason_cost;
                let Some((req, _)) = self.build_request(subtask, graph, decision)? else {
                    return Ok(false);
                };
                let (diag, recovery, used_remote) = self.reason(&req);
                if recovery.is_escalation() {
                    self.trace.push(TraceEvent::Replan {
                        nominal_step: nominal,
                        diagnosis: format!("{} (no recovery; proceeding)", diag.kind.as_str()),
                        focus: diag.focus.clone(),
                        actions: Vec::new(),
                        used_remote,
                        clock: self.world.clock,
                    });
                    return Ok(false);
                }
                if recovery.insert_mode == InsertMode::ReplaceRemainder {
                    // Remote reasoners may replace the remainder outright.
                    let plan = Plan {
                        subtasks: self.items.iter().map(|i| i.subtask.clone()).collect(),
                        cursor: self.cursor,
                    };
                    let new_plan = splice_plan(&plan, &recovery);
                    self.items.truncate(self.cursor);
                    self.items
                        .extend(new_plan.subtasks[self.cursor..].iter().map(|s| PlanItem {
                            subtask: s.clone(),
                            nominal: None,
                        }));
                    self.replans += 1;
                    *self.replans_per_step.entry(step_key).or_insert(0) += 1;
                    self.trace.push(TraceEvent::Replan {
                        nominal_step: nominal,
                        diagnosis: diag.kind.as_str().to_owned(),
                        focus: diag.focus.clone(),
                        actions: recovery
                            .actions
                            .iter()
                            .map(|a| a.canonical_string())
                            .collect(),
                        used_remote,
                        clock: self.world.clock,
                    });
                    return Ok(true);
                }
                (
                    diag.kind.as_str().to_owned(),
                    diag.focus.clone(),
                    recovery.actions,
                    used_remote,
                )
            }
        };

        if let Some(retry_subtask) = retry {
            // Re-establish the retried action's grip precondition when the
            // recovery parked the object it manipulates.
            if matches!(retry_subtask.verb.as_str(), "put_in" | "put_on") {
                if let Some(target) = retry_subtask.args.first() {
                    let parked = actions.iter().any(|a| {
                        matches!(a.verb.as_str(), "put_on" | "put_in")
                            && a.args.first() == Some(target)
                    });
                    if parked {
                        actions.push(Subtask::new("pick_up", &[target]));
                    }
                }
            }
            if actions.last() != Some(retry_subtask) {
                actions.push(retry_subtask.clone());
            }
        }

        let action_labels: Vec<String> = actions.iter().map(|a| a.canonical_string()).collect();
        let signature = format!("{label}:{}", action_labels.join(";"));
        if self.attempted_recoveries.contains(&signature) {
            self.resigned = true;
            self.trace.push(TraceEvent::Replan {
                nominal_step: nominal,
                diagnosis: format!("{label} (recovery already attempted; proceeding)"),
                focus,
                actions: Vec::new(),
                used_remote,
                clock: self.world.clock,
            });
            return Ok(false);
        }
        self.attempted_recoveries.push(signature);
        for (i, action) in actions.into_iter().enumerate() {
            self.items.insert(
                self.cursor + i,
                PlanItem {
                    subtask: action,
                    nominal: None,
                },
            );
        }
        self.replans += 1;
        *self.replans_per_step.entry(step_key).or_insert(0) += 1;
        self.trace.push(TraceEvent::Replan {
            nominal_step: nominal,
            diagnosis: label,
            focus,
            actions: action_labels,
            used_remote,
            clock: self.world.clock,
        });
        Ok(true)
    }

    fn execute_current(&mut self) -> Result<(), HarnessError> {
        let item = self.items[self.cursor].clone();
        let outcome = step(&mut self.world, &item.subtask, &self.cfg.time, self.vocab)?;
        self.trace.push(TraceEvent::Action {
            subtask: item.subtask.canonical_string(),
            nominal_step: item.nominal,
            outcome: outcome_label(&outcome),
            clock: self.world.clock,
        });
        if item.nominal.is_some() && item.nominal == self.spec.failing_step {
            self.failing_executed = true;
        }
        self.cursor += 1;
        Ok(())
    }

    fn apply_pending_perturbation(
        &mut self,
        next_nominal: Option<usize>,
    ) -> Result<(), HarnessError> {
        if let Some((at, kind)) = &self.pending_perturbation {
            if next_nominal == Some(*at) {
                apply_perturbation(&mut self.world, &kind.clone(), self.vocab)?;
                self.trace.push(TraceEvent::Perturbation {
                    before_nominal_step: *at,
                    clock: self.world.clock,
                });
                self.pending_perturbation = None;
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<EpisodeResult, HarnessError> {
        match self.strategy.kind {
            StrategyKind::None => {
                while self.cursor < self.items.len() {
                    let next_nominal = self.items[self.cursor].nominal;
                    self.apply_pending_perturbation(next_nominal)?;
                    self.execute_current()?;
                }
            }
            StrategyKind::Proactive => {
                while self.cursor < self.items.len() {
                    let item = self.items[self.cursor].clone();
                    self.apply_pending_perturbation(item.nominal)?;
                    if item.nominal.is_some() {
                        let graph = self.observe_graph(&item.subtask)?;
                        self.world.clock += self.cfg.time.check_cost;
                        let decision = self.run_detector(&graph)?;
                        let hash = graph_hash(&graph, self.vocab);
                        self.trace_check("before", item.nominal, &item.subtask, hash, &decision);
                        if decision.coverage == Coverage::NoReferences {
                            self.coverage_gaps += 1;
                        }
                        if decision.triggered {
                            self.note_detection(item.nominal);
                            if self.replan_at(
                                item.nominal,
                                &item.subtask,
                                &graph,
                                &decision,
                                None,
                            )? {
                                continue;
                            }
                        }
                    }
                    self.execute_current()?;
                }
            }
            StrategyKind::PosthocOnline => {
                while self.cursor < self.items.len() {
                    let item = self.items[self.cursor].clone();
                    self.apply_pending_perturbation(item.nominal)?;
                    self.execute_current()?;
                    // Verify every executed step against the references of
                    // the next nominal subtask; its pre-execution scenes
                    // describe the expected post-state of what just ran. On
                    // the final step there is no successor and the goal
                    // check takes over.
                    let Some(upcoming) = self.items[self.cursor..]
                        .iter()
                        .find(|it| it.nominal.is_some())
                        .map(|it| (it.subtask.clone(), it.nominal))
                    else {
                        continue;
                    };
                    let graph = self.observe_graph(&upcoming.0)?;
                    self.world.clock += self.cfg.time.check_cost;
                    let decision = self.run_detector(&graph)?;
                    let hash = graph_hash(&graph, self.vocab);
                    self.trace_check("after", item.nominal, &item.subtask, hash, &decision);
                    if decision.coverage == Coverage::NoReferences {
                        self.coverage_gaps += 1;
                    }
                    if decision.triggered {
                        self.note_detection(item.nominal.or(upcoming.1));
                        // Repair and retry only off nominal steps; mid-recovery
                        // scenes legitimately deviate until the retry lands.
                        if item.nominal.is_some() {
                            let retry = item.subtask.clone();
                            self.replan_at(
                                item.nominal,
                                &item.subtask,
                                &graph,
                                &decision,
                                Some(&retry),
                            )?;
                        }
                    }
                }
            }
            StrategyKind::PosthocEnd => {
                while self.cursor < self.items.len() {
                    let next_nominal = self.items[self.cursor].nominal;
                    self.apply_pending_perturbation(next_nominal)?;
                    self.execute_current()?;
                }
                let satisfied = check_goal(
                    &self.world,
                    &self.spec.task.goal,
                    &self.cfg.geometry,
                    self.vocab,
                );
                self.trace.push(TraceEvent::Goal {
                    satisfied,
                    clock: self.world.clock,
                });
                if !satisfied {
                    self.world.clock += self.cfg.time.posthoc_analysis_cost;
                    self.trace.push(TraceEvent::Analysis {
                        clock: self.world.clock,
                    });
                    if !self.world.irreversibly_damaged {
                        self.end_of_task_repair()?;
                    }
                }
            }
        }

        let success = check_goal(
            &self.world,
            &self.spec.task.goal,
            &self.cfg.geometry,
            self.vocab,
        );
        self.trace.push(TraceEvent::Goal {
            satisfied: success,
            clock: self.world.clock,
        });
        Ok(EpisodeResult {
            scenario: self.spec.name.clone(),
            strategy: self.strategy.label(),
            success,
            detected_before_failure: self.detected_before_failure,
            detection_step: self.detection_step,
            any_detection: self.any_detection,
            replans: self.replans,
            tet: self.world.clock,
            damaged: self.world.irreversibly_damaged,
            coverage_gaps: self.coverage_gaps,
            trace: self.trace,
        })
    }

    /// One end-of-task diagnose/repair cycle: rewind to the first failed
    /// step, fix what the diff implicates, re-execute the remainder.
    fn end_of_task_repair(&mut self) -> Result<(), HarnessError> {
        let failed_step = self
            .trace
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Action {
                    nominal_step: Some(i),
                    outcome,
                    ..
                } if outcome.starts_with("precondition_failed") => Some(*i),
                _ => None,
            })
            .next()
            .unwrap_or(0);
        let subtask = self.spec.task.nominal_plan.subtasks[failed_step].clone();
        let graph = self.observe_graph(&subtask)?;
        let references = retrieve_references(
            self.buffer,
            &subtask,
            &self.cfg.detector.retrieval,
            &self.cfg.text,
        );
        if references.is_empty() {
            self.coverage_gaps += 1;
            return Ok(());
        }
        // Score against each reference to diff against the closest one.
        let mut best: Option<(f64, &crate::membank::DemonstrationRecord)> = None;
        for r in references {
            let report = crate::simmatch::graph_similarity(
                &graph,
                &r.graph,
                &self.cfg.detector.toggles,
                &self.provider,
            )?;
            if best
                .as_ref()
                .map(|(s, _)| report.score > *s)
                .unwrap_or(true)
            {
                best = Some((report.score, r));
            }
        }
        let (_, reference) = best.expect("non-empty references yield a best");
        let matching = match_nodes(
            &graph,
            &reference.graph,
            &self.cfg.detector.toggles,
            &self.provider,
        )?;
        let req = ReasonRequest::build(
            &self.spec.task.goal,
            &subtask,
            &graph,
            &reference.graph,
            &matching,
            self.vocab,
        );
        let (diag, recovery, used_remote) = self.reason(&req);
        self.trace.push(TraceEvent::Replan {
            nominal_step: Some(failed_step),
            diagnosis: diag.kind.as_str().to_owned(),
            focus: diag.focus.clone(),
            actions: recovery
                .actions
                .iter()
                .map(|a| a.canonical_string())
                .collect(),
            used_remote,
            clock: self.world.clock,
        });
        if recovery.is_escalation() {
            return Ok(());
        }
        self.replans += 1;
        let remainder: Vec<Subtask> = recovery
            .actions
            .iter()
            .cloned()
            .chain(
                self.spec.task.nominal_plan.subtasks[failed_step..]
                    .iter()
                    .cloned(),
            )
            .collect();
        for action in remainder {
            let outcome = step(&mut self.world, &action, &self.cfg.time, self.vocab)?;
            self.trace.push(TraceEvent::Action {
                subtask: action.canonical_string(),
                nominal_step: None,
                outcome: outcome_label(&outcome),
                clock: self.world.clock,
            });
        }
        Ok(())
    }
}

/// Run one episode. Failures are results; `Err` means a fault (bad scenario
/// or configuration).
pub fn run_episode<R: Reasoner + ?Sized>(
    spec: &ScenarioSpec,
    strategy: Strategy,
    cfg: &HarnessConfig,
    buffer: &Buffer,
    vocab: &Vocabulary,
    seed: u64,
    remote: Option<&mut R>,
) -> Result<EpisodeResult, HarnessError> {
    if !strategy.is_valid() {
        return Err(HarnessError::Config(format!(
            "strategy {:?} has an inconsistent detector setting",
            strategy.kind
        )));
    }
    if !cfg.detector.is_valid() {
        return Err(HarnessError::Config(
            "detector threshold must lie in (0, 1] and at least one component must stay enabled"
                .to_owned(),
        ));
    }
    EpisodeRunner::new(spec, strategy, cfg, buffer, vocab, remote, seed)?.run()
}

/// `None` with a concrete reasoner type, for call sites without a remote.
pub const NO_REMOTE: Option<&mut RuleReasoner> = None;

/// Aggregates for one strategy across the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy: String,
    pub sr_percent: f64,
    /// Fired strictly before the scripted failing subtask executed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr_percent: Option<f64>,
    /// Fired at any point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dr_any_percent: Option<f64>,
    pub mean_tet: f64,
    pub episodes: Vec<EpisodeResult>,
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub detector: String,
    pub fdr_percent: f64,
    pub sr_percent: f64,
    pub mean_tet: f64,
}

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr_percent: Option<f64>,
}

/// Echo of the configuration a report was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub threshold: f64,
    pub toggles: MatchToggles,
    pub retrieval_k: usize,
    pub retrieval_min_similarity: f64,
    pub time: TimeModel,
    pub noise: NoiseConfig,
    pub reasoning: ReasoningMode,
}

impl ReportConfig {
    fn from(cfg: &HarnessConfig) -> Self {
        ReportConfig {
            threshold: cfg.detector.threshold,
            toggles: cfg.detector.toggles,
            retrieval_k: cfg.detector.retrieval.k,
            retrieval_min_similarity: cfg.detector.retrieval.min_similarity,
            time: cfg.time.clone(),
            noise: cfg.noise,
            reasoning: cfg.reasoning,
        }
    }
}

/// Machine-readable benchmark report. Aggregates are recomputable from the
/// embedded episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub scenario_count: usize,
    pub config: ReportConfig,
    pub strategies: Vec<StrategyAggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ablations: Vec<AblationRow>,
}

fn aggregate(strategy: Strategy, episodes: Vec<EpisodeResult>) -> StrategyAggregate {
    let n = episodes.len().max(1) as f64;
    let sr = episodes.iter().filter(|e| e.success).count() as f64 / n * 100.0;
    let mean_tet = episodes.iter().map(|e| e.tet).sum::<f64>() / n;
    let has_detector = strategy.detector.is_some();
    let fdr = has_detector.then(|| {
        episodes
            .iter()
            .filter(|e| e.detected_before_failure)
            .count() as f64
            / n
            * 100.0
    });
    let dr_any = has_detector
        .then(|| episodes.iter().filter(|e| e.any_detection).count() as f64 / n * 100.0);
    StrategyAggregate {
        strategy: strategy.label(),
        sr_percent: sr,
        fdr_percent: fdr,
        dr_any_percent: dr_any,
        mean_tet,
        episodes,
    }
}

fn episode_seed(seed: u64, scenario: &str, strategy: &Strategy) -> u64 {
    seed ^ fnv1a(scenario.as_bytes()) ^ fnv1a(strategy.label().as_bytes())
}

/// Run every (scenario, strategy) pair and aggregate.
pub fn run_benchmark(
    suite: &[ScenarioSpec],
    strategies: &[Strategy],
    cfg: &HarnessConfig,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<Report, HarnessError> {
    if suite.is_empty() {
        return Err(HarnessError::Config("benchmark suite is empty".to_owned()));
    }
    let buffer = build_suite_buffer(suite, cfg, vocab, "builtin")?;
    run_benchmark_with(suite, strategies, cfg, vocab, seed, &buffer, NO_REMOTE)
}

/// [`run_benchmark`] against a pre-built buffer, optionally with a remote
/// reasoner serving escalations.
pub fn run_benchmark_with<R: Reasoner + ?Sized>(
    suite: &[ScenarioSpec],
    strategies: &[Strategy],
    cfg: &HarnessConfig,
    vocab: &Vocabulary,
    seed: u64,
    buffer: &Buffer,
    mut remote: Option<&mut R>,
) -> Result<Report, HarnessError> {
    if suite.is_empty() {
        return Err(HarnessError::Config("benchmark suite is empty".to_owned()));
    }
    let mut rows = Vec::new();
    for strategy in strategies {
        let mut episodes = Vec::new();
        for spec in suite {
            episodes.push(run_episode(
                spec,
                *strategy,
                cfg,
                buffer,
                vocab,
                episode_seed(seed, &spec.name, strategy),
                remote.as_deref_mut(),
            )?);
        }
        rows.push(aggregate(*strategy, episodes));
    }
    Ok(Report {
        seed,
        scenario_count: suite.len(),
        config: ReportConfig::from(cfg),
        strategies: rows,
        sweep: Vec::new(),
        ablations: Vec::new(),
    })
}

/// The default threshold sweep from the experiments: 0.90, 0.85, 0.80.
pub const DEFAULT_SWEEP: [f64; 3] = [0.90, 0.85, 0.80];

/// Sweep thresholds for both detectors under the proactive strategy.
pub fn run_sweep(
    suite: &[ScenarioSpec],
    thresholds: &[f64],
    cfg: &HarnessConfig,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<Report, HarnessError> {
    let mut sweep = Vec::new();
    for &threshold in thresholds {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(HarnessError::Config(format!(
                "sweep threshold {threshold} outside (0, 1]"
            )));
        }
        for detector in [DetectorKind::SceneGraph, DetectorKind::ObjectCount] {
            let mut swept = cfg.clone();
            swept.detector.threshold = threshold;
            let report =
                run_benchmark(suite, &[Strategy::proactive(detector)], &swept, vocab, seed)?;
            let row = &report.strategies[0];
            sweep.push(SweepRow {
                threshold,
                detector: detector.as_str().to_owned(),
                fdr_percent: row.fdr_percent.unwrap_or(0.0),
                sr_percent: row.sr_percent,
                mean_tet: row.mean_tet,
            });
        }
    }
    Ok(Report {
        seed,
        scenario_count: suite.len(),
        config: ReportConfig::from(cfg),
        strategies: Vec::new(),
        sweep,
        ablations: Vec::new(),
    })
}

/// Component ablations for FDR, and the reasoner-vs-blind comparison for SR
/// on the occupied/blocker subset.
pub fn run_ablations(
    suite: &[ScenarioSpec],
    cfg: &HarnessConfig,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<Report, HarnessError> {
    let toggle_sets: [(&str, MatchToggles); 5] = [
        ("full", MatchToggles::default()),
        ("no_subtask_node", MatchToggles::without_subtask_node()),
        ("no_structural", MatchToggles::without_struc()),
        ("no_node", MatchToggles::without_node()),
        ("no_edge", MatchToggles::without_edge()),
    ];
    let mut ablations = Vec::new();
    for (label, toggles) in toggle_sets {
        if !toggles.is_valid() {
            return Err(HarnessError::Config(format!(
                "toggle set `{label}` disables everything"
            )));
        }
        let mut ablated = cfg.clone();
        ablated.detector.toggles = toggles;
        let report = run_benchmark(
            suite,
            &[Strategy::proactive(DetectorKind::SceneGraph)],
            &ablated,
            vocab,
            seed,
        )?;
        ablations.push(AblationRow {
            label: label.to_owned(),
            scope: "detection".to_owned(),
            fdr_percent: report.strategies[0].fdr_percent,
            sr_percent: None,
        });
    }

    let subset: Vec<ScenarioSpec> = suite
        .iter()
        .filter(|s| {
            matches!(
                s.failure_category,
                crate::simworld::FailureCategory::Occupied
                    | crate::simworld::FailureCategory::Blocker
            )
        })
        .cloned()
        .collect();
    for (label, reasoning) in [
        ("with_reasoner", ReasoningMode::RuleBased),
        ("blind_replan", ReasoningMode::Blind),
    ] {
        let mut varied = cfg.clone();
        varied.reasoning = reasoning;
        let report = run_benchmark(
            &subset,
            &[Strategy::proactive(DetectorKind::SceneGraph)],
            &varied,
            vocab,
            seed,
        )?;
        ablations.push(AblationRow {
            label: label.to_owned(),
            scope: "recovery/occupied+blocker".to_owned(),
            fdr_percent: None,
            sr_percent: Some(report.strategies[0].sr_percent),
        });
    }

    Ok(Report {
        seed,
        scenario_count: suite.len(),
        config: ReportConfig::from(cfg),
        strategies: Vec::new(),
        sweep: Vec::new(),
        ablations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin_suite;

    fn setup() -> (Vec<ScenarioSpec>, HarnessConfig, Vocabulary) {
        (
            builtin_suite(),
            HarnessConfig::default(),
            Vocabulary::builtin(),
        )
    }

    #[test]
    fn clean_scenarios_run_green_under_proactive() {
        let (suite, cfg, vocab) = setup();
        let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
        // Strip perturbations: nominal plans must pass proactive checks
        // without a single trigger.
        for spec in suite.iter().take(8) {
            let mut clean = spec.clone();
            clean.perturbation = None;
            let result = run_episode(
                &clean,
                Strategy::proactive(DetectorKind::SceneGraph),
                &cfg,
                &buffer,
                &vocab,
                7,
                NO_REMOTE,
            )
            .unwrap();
            assert!(
                result.success,
                "{} failed clean: {:?}",
                spec.name, result.trace
            );
            assert!(
                !result.any_detection,
                "{} false-triggered: {:?}",
                spec.name, result.trace
            );
        }
    }

    #[test]
    fn occupied_microwave_episode_under_all_strategies() {
        let (suite, cfg, vocab) = setup();
        let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
        let spec = suite
            .iter()
            .find(|s| s.name == "heat_potato/occupied-microwave-bowl")
            .unwrap();

        let none =
            run_episode(spec, Strategy::none(), &cfg, &buffer, &vocab, 7, NO_REMOTE).unwrap();
        assert!(!none.success);
        assert_eq!(none.replans, 0);

        let proactive = run_episode(
            spec,
            Strategy::proactive(DetectorKind::SceneGraph),
            &cfg,
            &buffer,
            &vocab,
            7,
            NO_REMOTE,
        )
        .unwrap();
        assert!(proactive.success, "proactive trace: {:?}", proactive.trace);
        assert!(proactive.detected_before_failure);
        assert!(proactive.detection_step.unwrap() < spec.failing_step.unwrap());
        assert!(proactive.replans >= 1);
        assert!(none.tet < proactive.tet);

        let online = run_episode(
            spec,
            Strategy::posthoc_online(DetectorKind::SceneGraph),
            &cfg,
            &buffer,
            &vocab,
            7,
            NO_REMOTE,
        )
        .unwrap();
        assert!(online.success, "online trace: {:?}", online.trace);
        assert!(proactive.tet < online.tet);
    }

    #[test]
    fn blocker_is_proactive_only() {
        let (suite, cfg, vocab) = setup();
        let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
        // The damaging cook is the very first subtask: post-hoc strategies
        // get their first look only after the damage.
        let spec = suite
            .iter()
            .find(|s| s.name == "resume_cook/blocker-potato-pan")
            .unwrap();

        let proactive = run_episode(
            spec,
            Strategy::proactive(DetectorKind::SceneGraph),
            &cfg,
            &buffer,
            &vocab,
            7,
            NO_REMOTE,
        )
        .unwrap();
        assert!(proactive.success, "proactive trace: {:?}", proactive.trace);
        assert!(!proactive.damaged);

        let online = run_episode(
            spec,
            Strategy::posthoc_online(DetectorKind::SceneGraph),
            &cfg,
            &buffer,
            &vocab,
            7,
            NO_REMOTE,
        )
        .unwrap();
        assert!(!online.success);
        assert!(online.damaged);

        let end = run_episode(
            spec,
            Strategy::posthoc_end(),
            &cfg,
            &buffer,
            &vocab,
            7,
            NO_REMOTE,
        )
        .unwrap();
        assert!(!end.success);
        assert!(end.damaged);
    }

    #[test]
    fn config_errors_are_rejected() {
        let (suite, cfg, vocab) = setup();
        let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
        let mut bad = cfg.clone();
        bad.detector.threshold = 0.0;
        assert!(matches!(
            run_episode(
                &suite[0],
                Strategy::none(),
                &bad,
                &buffer,
                &vocab,
                1,
                NO_REMOTE
            ),
            Err(HarnessError::Config(_))
        ));
        let mut all_off = cfg.clone();
        all_off.detector.toggles = MatchToggles {
            use_node: false,
            use_edge: false,
            use_struc: false,
            use_subtask_node: true,
        };
        assert!(matches!(
            run_episode(
                &suite[0],
                Strategy::none(),
                &all_off,
                &buffer,
                &vocab,
                1,
                NO_REMOTE
            ),
            Err(HarnessError::Config(_))
        ));
        assert!(matches!(
            run_benchmark(&[], &[Strategy::none()], &cfg, &vocab, 1),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn reports_are_reproducible() {
        let (suite, cfg, vocab) = setup();
        let small: Vec<ScenarioSpec> = suite.into_iter().take(6).collect();
        let strategies = [
            Strategy::none(),
            Strategy::proactive(DetectorKind::SceneGraph),
        ];
        let a = run_benchmark(&small, &strategies, &cfg, &vocab, 42).unwrap();
        let b = run_benchmark(&small, &strategies, &cfg, &vocab, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn strategy_labels_roundtrip() {
        for s in [
            Strategy::none(),
            Strategy::posthoc_end(),
            Strategy::posthoc_online(DetectorKind::SceneGraph),
            Strategy::proactive(DetectorKind::ObjectCount),
        ] {
            assert_eq!(Strategy::parse(&s.label()), Some(s));
        }
        assert_eq!(Strategy::parse("nonsense"), None);
        assert_eq!(Strategy::parse("none+scene_graph"), None);
    }
}
