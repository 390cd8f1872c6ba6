//! Two-stage recovery: diagnose why the observed scene mismatches the
//! reference, then propose corrective actions to splice into the plan.
//!
//! The rule-based reasoner is the reference implementation; a remote
//! language-model reasoner can be layered on top through the [`Reasoner`]
//! trait and the wire documents defined here. Remote responses pass a schema
//! and vocabulary gate before they are accepted, and any rejection falls back
//! to the rule-based path, so the pipeline always makes progress.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{graph_to_text, Predicate, SceneGraph};
use crate::simmatch::NodeMatching;
use crate::task::{GoalCondition, Plan, Subtask};
use crate::vocab::{VerbDef, Vocabulary};

/// Category-level edge rendering used inside diffs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoryEdge {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

/// An observed node with no expected counterpart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtraObject {
    pub category: String,
    pub state: String,
    pub edges: Vec<CategoryEdge>,
}

/// A matched pair whose states disagree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateMismatch {
    pub category: String,
    pub expected: String,
    pub observed: String,
}

/// Which graph an unmatched edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffSide {
    Expected,
    Observed,
}

/// An edge present on one side only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeMismatch {
    pub side: DiffSide,
    pub edge: CategoryEdge,
}

/// Structured difference between the observed graph and the best reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSummary {
    /// `(category, state)` of expected nodes with no observed counterpart.
    pub missing_in_obs: Vec<(String, String)>,
    pub extra_in_obs: Vec<ExtraObject>,
    pub state_mismatches: Vec<StateMismatch>,
    pub edge_mismatches: Vec<EdgeMismatch>,
}

impl DiffSummary {
    pub fn is_empty(&self) -> bool {
        self.missing_in_obs.is_empty()
            && self.extra_in_obs.is_empty()
            && self.state_mismatches.is_empty()
            && self.edge_mismatches.is_empty()
    }

    /// Observed-side mismatched edges whose subject is `category`.
    fn observed_edges_of<'a>(
        &'a self,
        category: &'a str,
    ) -> impl Iterator<Item = &'a CategoryEdge> + 'a {
        self.edge_mismatches
            .iter()
            .filter(move |m| m.side == DiffSide::Observed && m.edge.subject == category)
            .map(|m| &m.edge)
    }

    /// Expected-side mismatched edges whose subject is `category`.
    fn expected_edges_of<'a>(
        &'a self,
        category: &'a str,
    ) -> impl Iterator<Item = &'a CategoryEdge> + 'a {
        self.edge_mismatches
            .iter()
            .filter(move |m| m.side == DiffSide::Expected && m.edge.subject == category)
            .map(|m| &m.edge)
    }
}

fn category_edge(graph: &SceneGraph, edge: &crate::graph::Edge) -> Option<CategoryEdge> {
    Some(CategoryEdge {
        subject: graph.node(&edge.subject)?.category.clone(),
        predicate: edge.predicate,
        object: graph.node(&edge.object)?.category.clone(),
    })
}

/// Structured diff between `g_obs` and `g_ref`, derived from `matching`.
pub fn graph_diff(g_obs: &SceneGraph, g_ref: &SceneGraph, matching: &NodeMatching) -> DiffSummary {
    let mut diff = DiffSummary::default();

    for id in &matching.unmatched_exp {
        if let Some(n) = g_ref.node(id) {
            diff.missing_in_obs
                .push((n.category.clone(), n.state.clone()));
        }
    }
    diff.missing_in_obs.sort();

    for id in &matching.unmatched_obs {
        let Some(n) = g_obs.node(id) else { continue };
        let mut edges: Vec<CategoryEdge> = g_obs
            .edges
            .iter()
            .filter(|e| &e.subject == id || &e.object == id)
            .filter_map(|e| category_edge(g_obs, e))
            .collect();
        edges.sort();
        diff.extra_in_obs.push(ExtraObject {
            category: n.category.clone(),
            state: n.state.clone(),
            edges,
        });
    }
    diff.extra_in_obs.sort();

    for (obs_id, exp_id) in &matching.pairs {
        let (Some(o), Some(e)) = (g_obs.node(obs_id), g_ref.node(exp_id)) else {
            continue;
        };
        if o.state != e.state {
            diff.state_mismatches.push(StateMismatch {
                category: o.category.clone(),
                expected: e.state.clone(),
                observed: o.state.clone(),
            });
        }
    }
    diff.state_mismatches.sort();

    let obs_to_exp = |id: &crate::graph::NodeId| matching.expected_for(id);
    let edge_matched = |obs_edge: &crate::graph::Edge| -> bool {
        let (Some(s), Some(o)) = (obs_to_exp(&obs_edge.subject), obs_to_exp(&obs_edge.object))
        else {
            return false;
        };
        g_ref
            .edges
            .iter()
            .any(|re| &re.subject == s && re.predicate == obs_edge.predicate && &re.object == o)
    };
    for e in &g_obs.edges {
        if !edge_matched(e) {
            if let Some(ce) = category_edge(g_obs, e) {
                diff.edge_mismatches.push(EdgeMismatch {
                    side: DiffSide::Observed,
                    edge: ce,
                });
            }
        }
    }
    for re in &g_ref.edges {
        let covered = g_obs.edges.iter().any(|oe| {
            oe.predicate == re.predicate
                && obs_to_exp(&oe.subject) == Some(&re.subject)
                && obs_to_exp(&oe.object) == Some(&re.object)
        });
        if !covered {
            if let Some(ce) = category_edge(g_ref, re) {
                diff.edge_mismatches.push(EdgeMismatch {
                    side: DiffSide::Expected,
                    edge: ce,
                });
            }
        }
    }
    diff.edge_mismatches.sort();
    diff.edge_mismatches.dedup();

    diff
}

/// Classified failure cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosisKind {
    MissingObject,
    UnexpectedBlocker,
    WrongState,
    MisplacedObject,
    OccupiedReceptacle,
    Unknown,
}

impl DiagnosisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosisKind::MissingObject => "MissingObject",
            DiagnosisKind::UnexpectedBlocker => "UnexpectedBlocker",
            DiagnosisKind::WrongState => "WrongState",
            DiagnosisKind::MisplacedObject => "MisplacedObject",
            DiagnosisKind::OccupiedReceptacle => "OccupiedReceptacle",
            DiagnosisKind::Unknown => "Unknown",
        }
    }
}

/// Diagnosis: the kind, the object it centers on, and a templated
/// explanation. `focus` is always set when the kind is not `Unknown`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub kind: DiagnosisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle: Option<String>,
    pub explanation: String,
}

/// Where recovery actions go relative to the plan cursor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertMode {
    PrependBeforeCurrent,
    ReplaceRemainder,
}

/// Corrective action sequence. An empty action list with
/// `ReplaceRemainder` signals escalation (no templated recovery found).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryPlan {
    pub actions: Vec<Subtask>,
    pub insert_mode: InsertMode,
}

impl RecoveryPlan {
    pub fn escalation() -> Self {
        RecoveryPlan {
            actions: Vec::new(),
            insert_mode: InsertMode::ReplaceRemainder,
        }
    }

    pub fn is_escalation(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Everything the reasoning step sees: task context, rendered scenes, the
/// structured diff, and the robot's current state (held object, visible
/// objects, available verbs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonRequest {
    pub goal: String,
    /// Canonical subtask string the check ran for.
    pub subtask: String,
    pub observed_text: String,
    pub reference_text: String,
    pub diff: DiffSummary,
    pub available_actions: Vec<VerbDef>,
    pub visible_objects: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_object: Option<String>,
}

impl ReasonRequest {
    /// Assemble a request from the graphs and the matching that scored them.
    pub fn build(
        goal: &GoalCondition,
        subtask: &Subtask,
        g_obs: &SceneGraph,
        g_ref: &SceneGraph,
        matching: &NodeMatching,
        vocab: &Vocabulary,
    ) -> Self {
        let mut visible: Vec<String> = g_obs
            .nodes
            .iter()
            .filter(|n| n.category != crate::vocab::GRIPPER_CATEGORY)
            .map(|n| n.category.clone())
            .collect();
        visible.sort();
        visible.dedup();
        let held_object = g_obs
            .edges
            .iter()
            .find(|e| e.predicate == Predicate::HeldByRobot)
            .and_then(|e| g_obs.node(&e.subject))
            .map(|n| n.category.clone());
        ReasonRequest {
            goal: goal.render(),
            subtask: subtask.canonical_string(),
            observed_text: graph_to_text(g_obs),
            reference_text: graph_to_text(g_ref),
            diff: graph_diff(g_obs, g_ref, matching),
            available_actions: vocab.verbs.clone(),
            visible_objects: visible,
            held_object,
        }
    }
}

/// Roles the subtask's arguments play for the rule table.
struct SubtaskRoles {
    /// Receptacle/surface argument: `put_in`/`put_on` target, the door or
    /// device of `open`/`close`/`toggle`, the pour destination.
    receptacle: Option<String>,
    /// Manipulated object arguments, including the cook vessel.
    objects: Vec<String>,
}

fn subtask_roles(subtask: &Subtask) -> SubtaskRoles {
    let args = &subtask.args;
    match subtask.verb.as_str() {
        "put_in" | "put_on" | "pour" => SubtaskRoles {
            receptacle: args.get(1).cloned(),
            objects: args.first().cloned().into_iter().collect(),
        },
        "open" | "close" | "toggle" => SubtaskRoles {
            receptacle: args.first().cloned(),
            objects: Vec::new(),
        },
        _ => SubtaskRoles {
            receptacle: None,
            objects: args.clone(),
        },
    }
}

fn intrudes(edge: &CategoryEdge, target: &str) -> bool {
    (edge.predicate == Predicate::Inside || edge.predicate == Predicate::OnTopOf)
        && edge.object == target
}

/// Rule-table diagnosis, first match wins:
/// an extra or relocated node sitting in/on the subtask's receptacle, the
/// same into a manipulated object (blocker), a state mismatch on a subtask
/// argument, a missing subtask argument, an edge mismatch relocating a
/// subtask argument, an edge mismatch relocating any matched object, else
/// Unknown.
pub fn diagnose(req: &ReasonRequest) -> Diagnosis {
    let subtask = Subtask::parse(&req.subtask).unwrap_or(Subtask {
        verb: String::new(),
        args: Vec::new(),
    });
    let roles = subtask_roles(&subtask);
    let diff = &req.diff;

    // Candidate intruders: extras with their incident edges, plus matched
    // nodes whose observed-side placement moved.
    let mut intruders: Vec<(&str, &CategoryEdge)> = Vec::new();
    for extra in &diff.extra_in_obs {
        for e in &extra.edges {
            if e.subject == extra.category {
                intruders.push((&extra.category, e));
            }
        }
    }
    for m in &diff.edge_mismatches {
        if m.side == DiffSide::Observed {
            intruders.push((&m.edge.subject, &m.edge));
        }
    }

    if let Some(receptacle) = &roles.receptacle {
        for (category, edge) in &intruders {
            if !roles.objects.iter().any(|o| o == category)
                && *category != receptacle.as_str()
                && intrudes(edge, receptacle)
            {
                return Diagnosis {
                    kind: DiagnosisKind::OccupiedReceptacle,
                    focus: Some((*category).to_owned()),
                    receptacle: Some(receptacle.clone()),
                    explanation: format!(
                        "{category} occupies {receptacle}, which `{}` needs clear",
                        req.subtask
                    ),
                };
            }
        }
    }
    for target in &roles.objects {
        for (category, edge) in &intruders {
            if *category != target.as_str() && intrudes(edge, target) {
                return Diagnosis {
                    kind: DiagnosisKind::UnexpectedBlocker,
                    focus: Some((*category).to_owned()),
                    receptacle: Some(target.clone()),
                    explanation: format!(
                        "{category} sits on {target} and would interfere with `{}`",
                        req.subtask
                    ),
                };
            }
        }
    }

    for m in &diff.state_mismatches {
        if subtask.args.iter().any(|a| a == &m.category) {
            return Diagnosis {
                kind: DiagnosisKind::WrongState,
                focus: Some(m.category.clone()),
                receptacle: None,
                explanation: format!(
                    "{} is {} but references expect {} before `{}`",
                    m.category, m.observed, m.expected, req.subtask
                ),
            };
        }
    }

    for (category, _) in &diff.missing_in_obs {
        if subtask.args.iter().any(|a| a == category) {
            return Diagnosis {
                kind: DiagnosisKind::MissingObject,
                focus: Some(category.clone()),
                receptacle: None,
                explanation: format!(
                    "{category} is missing from the scene but `{}` needs it",
                    req.subtask
                ),
            };
        }
    }

    // Only placement edges count as relocation evidence; lateral and `near`
    // edges shift whenever some *other* object moves.
    let placement = |e: &&CategoryEdge| -> bool {
        matches!(
            e.predicate,
            Predicate::Inside | Predicate::OnTopOf | Predicate::HeldByRobot
        )
    };
    let relocated = |category: &str| -> bool {
        diff.observed_edges_of(category).find(placement).is_some()
            || diff.expected_edges_of(category).find(placement).is_some()
    };
    for arg in &subtask.args {
        if relocated(arg) {
            return Diagnosis {
                kind: DiagnosisKind::MisplacedObject,
                focus: Some(arg.clone()),
                receptacle: None,
                explanation: format!(
                    "{arg} is not where references expect it for `{}`",
                    req.subtask
                ),
            };
        }
    }
    // Fallback: any matched object whose placement moved.
    for m in &diff.edge_mismatches {
        let category = &m.edge.subject;
        let is_extra = diff.extra_in_obs.iter().any(|x| &x.category == category);
        let is_missing = diff.missing_in_obs.iter().any(|(c, _)| c == category);
        if !is_extra && !is_missing && relocated(category) {
            return Diagnosis {
                kind: DiagnosisKind::MisplacedObject,
                focus: Some(category.clone()),
                receptacle: None,
                explanation: format!("{category} is not where references expect it"),
            };
        }
    }

    Diagnosis {
        kind: DiagnosisKind::Unknown,
        focus: None,
        receptacle: None,
        explanation: "scene deviates from references but no rule explains how".to_owned(),
    }
}

/// Failure to produce or accept a recovery.
#[derive(Debug, Clone, PartialEq)]
pub enum ReasonerError {
    /// Template would need an action outside the vocabulary.
    Template(String),
    /// No templated recovery exists for this diagnosis.
    NoRecovery(String),
    /// Remote reasoner failed: transport, timeout, schema or vocabulary.
    Remote(String),
}

impl core::fmt::Display for ReasonerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReasonerError::Template(m) => write!(f, "recovery template error: {m}"),
            ReasonerError::NoRecovery(m) => write!(f, "no recovery available: {m}"),
            ReasonerError::Remote(m) => write!(f, "remote reasoner error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReasonerError {}

/// Where the expected side of the diff wants `category` to be.
fn expected_placement(diff: &DiffSummary, category: &str) -> Option<CategoryEdge> {
    let mut candidates: Vec<&CategoryEdge> = diff
        .expected_edges_of(category)
        .filter(|e| {
            matches!(
                e.predicate,
                Predicate::Inside | Predicate::OnTopOf | Predicate::HeldByRobot
            )
        })
        .collect();
    candidates.sort();
    candidates.first().map(|e| (*e).clone())
}

/// Placement action realizing an expected edge; `None` for `held_by_robot`,
/// where picking the object up is the whole relocation.
fn placement_action(edge: &CategoryEdge) -> Option<Subtask> {
    match edge.predicate {
        Predicate::Inside => Some(Subtask::new("put_in", &[&edge.subject, &edge.object])),
        Predicate::OnTopOf => Some(Subtask::new("put_on", &[&edge.subject, &edge.object])),
        _ => None,
    }
}

/// `open` prefix when the object to fetch sits inside an openable
/// receptacle. Issued unconditionally: the references may show the door
/// closed too, and an `open` on an already-open door fails harmlessly.
fn open_container_prefix(
    diff: &DiffSummary,
    category: &str,
    vocab: &Vocabulary,
    actions: &mut Vec<Subtask>,
) {
    let container = diff
        .observed_edges_of(category)
        .find(|e| e.predicate == Predicate::Inside)
        .map(|e| e.object.clone());
    if let Some(container) = container {
        let openable = vocab
            .category(&container)
            .map(|c| c.traits.openable)
            .unwrap_or(false);
        if openable {
            actions.push(Subtask::new("open", &[&container]));
        }
    }
}

/// Templated recovery for a diagnosis. Displaced blockers go back to where
/// the references keep them when that is known, else to the configured park
/// surface. Unknown diagnoses yield the escalation marker; diagnoses with no
/// reversible template return `NoRecovery`.
pub fn propose_recovery(
    diag: &Diagnosis,
    req: &ReasonRequest,
    park_location: &str,
    vocab: &Vocabulary,
) -> Result<RecoveryPlan, ReasonerError> {
    let mut actions: Vec<Subtask> = Vec::new();

    let park_held_if_other = |focus: &str, actions: &mut Vec<Subtask>| {
        if let Some(held) = &req.held_object {
            if held != focus {
                actions.push(Subtask::new("put_on", &[held, park_location]));
            }
        }
    };

    match diag.kind {
        DiagnosisKind::OccupiedReceptacle
        | DiagnosisKind::UnexpectedBlocker
        | DiagnosisKind::MissingObject => {
            let focus = diag
                .focus
                .as_deref()
                .expect("non-unknown diagnosis carries a focus");
            park_held_if_other(focus, &mut actions);
            open_container_prefix(&req.diff, focus, vocab, &mut actions);
            actions.push(Subtask::new("pick_up", &[focus]));
            match expected_placement(&req.diff, focus).and_then(|e| placement_action(&e)) {
                Some(p) => actions.push(p),
                None => actions.push(Subtask::new("put_on", &[focus, park_location])),
            }
        }
        DiagnosisKind::WrongState => {
            let focus = diag
                .focus
                .as_deref()
                .expect("non-unknown diagnosis carries a focus");
            let mismatch = req
                .diff
                .state_mismatches
                .iter()
                .find(|m| m.category == focus)
                .ok_or_else(|| {
                    ReasonerError::NoRecovery(format!("no state mismatch recorded for {focus}"))
                })?;
            match (mismatch.expected.as_str(), mismatch.observed.as_str()) {
                ("clean", _) => actions.push(Subtask::new("clean", &[focus])),
                ("empty", "filled") => actions.push(Subtask::new("pour", &[focus, "faucet"])),
                ("empty", "dirty") => actions.push(Subtask::new("clean", &[focus])),
                ("open", _) => actions.push(Subtask::new("open", &[focus])),
                ("closed", _) => actions.push(Subtask::new("close", &[focus])),
                ("off", _) | ("on", _) => actions.push(Subtask::new("toggle", &[focus])),
                (expected, observed) => {
                    return Err(ReasonerError::NoRecovery(format!(
                        "cannot restore {focus} from `{observed}` to `{expected}`"
                    )))
                }
            }
        }
        DiagnosisKind::MisplacedObject => {
            let focus = diag
                .focus
                .as_deref()
                .expect("non-unknown diagnosis carries a focus");
            let placement = expected_placement(&req.diff, focus);
            let already_held = req.held_object.as_deref() == Some(focus);
            match placement {
                Some(edge) if edge.predicate == Predicate::HeldByRobot => {
                    open_container_prefix(&req.diff, focus, vocab, &mut actions);
                    if !already_held {
                        park_held_if_other(focus, &mut actions);
                        actions.push(Subtask::new("pick_up", &[focus]));
                    }
                }
                Some(edge) => {
                    let place = placement_action(&edge).ok_or_else(|| {
                        ReasonerError::NoRecovery("unplaceable expected edge".into())
                    })?;
                    if already_held {
                        actions.push(place);
                    } else {
                        open_container_prefix(&req.diff, focus, vocab, &mut actions);
                        park_held_if_other(focus, &mut actions);
                        actions.push(Subtask::new("pick_up", &[focus]));
                        actions.push(place);
                    }
                }
                None => {
                    return Err(ReasonerError::NoRecovery(format!(
                        "references give no placement for {focus}"
                    )))
                }
            }
        }
        DiagnosisKind::Unknown => return Ok(RecoveryPlan::escalation()),
    }

    for a in &actions {
        a.check(vocab)
            .map_err(|e| ReasonerError::Template(e.to_string()))?;
    }
    Ok(RecoveryPlan {
        actions,
        insert_mode: InsertMode::PrependBeforeCurrent,
    })
}

/// Splice recovery actions into the plan at the cursor. Prepend keeps the
/// current subtask after the recovery; replace-remainder swaps everything
/// from the cursor. The cursor itself never moves.
pub fn splice_plan(plan: &Plan, recovery: &RecoveryPlan) -> Plan {
    let mut subtasks = plan.subtasks.clone();
    match recovery.insert_mode {
        InsertMode::PrependBeforeCurrent => {
            for (i, action) in recovery.actions.iter().enumerate() {
                subtasks.insert(plan.cursor + i, action.clone());
            }
        }
        InsertMode::ReplaceRemainder => {
            subtasks.truncate(plan.cursor);
            subtasks.extend(recovery.actions.iter().cloned());
        }
    }
    Plan {
        subtasks,
        cursor: plan.cursor,
    }
}

/// A reasoning backend: turns a request into a diagnosis and recovery.
pub trait Reasoner {
    fn reason(&mut self, req: &ReasonRequest) -> Result<(Diagnosis, RecoveryPlan), ReasonerError>;
}

/// The deterministic rule-based reasoner.
#[derive(Debug, Clone)]
pub struct RuleReasoner {
    pub park_location: String,
    pub vocab: Vocabulary,
}

impl RuleReasoner {
    pub fn new(vocab: &Vocabulary) -> Self {
        RuleReasoner {
            park_location: "counter".to_owned(),
            vocab: vocab.clone(),
        }
    }

    pub fn with_park_location(vocab: &Vocabulary, park_location: &str) -> Self {
        RuleReasoner {
            park_location: park_location.to_owned(),
            vocab: vocab.clone(),
        }
    }
}

impl Reasoner for RuleReasoner {
    fn reason(&mut self, req: &ReasonRequest) -> Result<(Diagnosis, RecoveryPlan), ReasonerError> {
        let diagnosis = diagnose(req);
        match propose_recovery(&diagnosis, req, &self.park_location, &self.vocab) {
            Ok(plan) => Ok((diagnosis, plan)),
            // No reversible template: surface as an escalation, not a fault.
            Err(ReasonerError::NoRecovery(_)) => Ok((diagnosis, RecoveryPlan::escalation())),
            Err(e) => Err(e),
        }
    }
}

/// Wire response document of the remote reasoner protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonResponse {
    pub diagnosis: Diagnosis,
    pub recovery: RecoveryPlan,
}

/// Schema/vocabulary gate applied to remote responses before acceptance:
/// actions must use vocabulary verbs with valid arity and categories, and a
/// non-Unknown diagnosis must carry a focus and a non-empty recovery.
pub fn validate_reason_response(
    resp: &ReasonResponse,
    vocab: &Vocabulary,
) -> Result<(), ReasonerError> {
    if resp.diagnosis.kind != DiagnosisKind::Unknown {
        if resp.diagnosis.focus.is_none() {
            return Err(ReasonerError::Remote(
                "diagnosis lacks a focus object".to_owned(),
            ));
        }
        if resp.recovery.actions.is_empty() {
            return Err(ReasonerError::Remote(
                "non-Unknown diagnosis with empty recovery".to_owned(),
            ));
        }
    }
    for action in &resp.recovery.actions {
        action
            .check(vocab)
            .map_err(|e| ReasonerError::Remote(e.to_string()))?;
    }
    Ok(())
}
