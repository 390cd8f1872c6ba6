//! Scene graphs: object nodes with states, labeled spatial edges, and one
//! detached subtask node carrying task context.
//!
//! Graphs are immutable value objects once built. The canonical JSON document
//! (sorted keys, nodes sorted by id, edges sorted by triple) is byte-stable,
//! so identical graphs always serialize to identical bytes.

use alloc::borrow::ToOwned;
use alloc::fmt;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::task::Subtask;
use crate::vocab::Vocabulary;

/// Reserved id under which the subtask node can be (incorrectly) referenced
/// by edges; used only to express the `ConnectedSubtaskNode` violation.
pub const SUBTASK_NODE_ID: &str = "@subtask";

/// Opaque node identity within one graph. Category+state is not an identity:
/// two mugs may coexist.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Fixed closed set of spatial/functional relations. Declared in canonical
/// (alphabetical) order so the derived `Ord` matches string order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    HeldByRobot,
    Inside,
    LeftOf,
    Near,
    OnTopOf,
    RightOf,
}

impl Predicate {
    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::HeldByRobot => "held_by_robot",
            Predicate::Inside => "inside",
            Predicate::LeftOf => "left_of",
            Predicate::Near => "near",
            Predicate::OnTopOf => "on_top_of",
            Predicate::RightOf => "right_of",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "held_by_robot" => Predicate::HeldByRobot,
            "inside" => Predicate::Inside,
            "left_of" => Predicate::LeftOf,
            "near" => Predicate::Near,
            "on_top_of" => Predicate::OnTopOf,
            "right_of" => Predicate::RightOf,
            _ => return None,
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An object node: opaque id, closed-vocabulary category, one state label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: NodeId,
    pub category: String,
    pub state: String,
}

impl ObjectNode {
    pub fn new(id: &str, category: &str, state: &str) -> Self {
        ObjectNode {
            id: id.into(),
            category: category.to_owned(),
            state: state.to_owned(),
        }
    }
}

/// Directed labeled edge between two object nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub subject: NodeId,
    pub predicate: Predicate,
    pub object: NodeId,
}

impl Edge {
    pub fn new(subject: &str, predicate: Predicate, object: &str) -> Self {
        Edge {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }
}

/// Scene graph: object nodes, directed labeled edges, optional detached
/// subtask node. The subtask node is held apart from the id space, which
/// structurally enforces "at most one per graph"; zero incident edges is
/// checked by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub nodes: Vec<ObjectNode>,
    pub edges: Vec<Edge>,
    pub subtask: Option<Subtask>,
}

impl SceneGraph {
    /// Build a graph in canonical order (nodes by id, edges by triple).
    /// Duplicates are preserved so that validation can report them.
    pub fn build(
        mut nodes: Vec<ObjectNode>,
        mut edges: Vec<Edge>,
        subtask: Option<Subtask>,
    ) -> Self {
        nodes.sort();
        edges.sort();
        SceneGraph {
            nodes,
            edges,
            subtask,
        }
    }

    pub fn empty() -> Self {
        SceneGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            subtask: None,
        }
    }

    pub fn node(&self, id: &NodeId) -> Option<&ObjectNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Total degree (in + out) of an object node.
    pub fn degree(&self, id: &NodeId) -> usize {
        self.edges
            .iter()
            .filter(|e| &e.subject == id || &e.object == id)
            .count()
    }

    pub fn max_degree(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| self.degree(&n.id))
            .max()
            .unwrap_or(0)
    }

    /// Count of object nodes per category, sorted by category.
    pub fn category_counts(&self) -> Vec<(&str, usize)> {
        let mut counts: Vec<(&str, usize)> = Vec::new();
        for n in &self.nodes {
            match counts.binary_search_by(|(c, _)| (*c).cmp(n.category.as_str())) {
                Ok(i) => counts[i].1 += 1,
                Err(i) => counts.insert(i, (n.category.as_str(), 1)),
            }
        }
        counts
    }
}

/// One rule violation found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DanglingEdge {
        edge: String,
    },
    DuplicateNodeId {
        id: String,
    },
    DuplicateEdge {
        edge: String,
    },
    SelfEdge {
        edge: String,
    },
    ReservedNodeId {
        id: String,
    },
    UnknownCategory {
        id: String,
        category: String,
    },
    InadmissibleState {
        id: String,
        category: String,
        state: String,
    },
    ConnectedSubtaskNode {
        edge: String,
    },
    BadSubtask {
        reason: String,
    },
    GripperEdgeTarget {
        edge: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEdge { edge } => {
                write!(f, "edge `{edge}` references an absent node")
            }
            Violation::DuplicateNodeId { id } => write!(f, "duplicate node id `{id}`"),
            Violation::DuplicateEdge { edge } => write!(f, "duplicate edge `{edge}`"),
            Violation::SelfEdge { edge } => write!(f, "self edge `{edge}`"),
            Violation::ReservedNodeId { id } => write!(f, "node id `{id}` is reserved"),
            Violation::UnknownCategory { id, category } => {
                write!(f, "node `{id}` has unknown category `{category}`")
            }
            Violation::InadmissibleState {
                id,
                category,
                state,
            } => {
                write!(
                    f,
                    "node `{id}`: state `{state}` not admissible for `{category}`"
                )
            }
            Violation::ConnectedSubtaskNode { edge } => {
                write!(
                    f,
                    "subtask node must stay detached, but edge `{edge}` touches it"
                )
            }
            Violation::BadSubtask { reason } => write!(f, "bad subtask node: {reason}"),
            Violation::GripperEdgeTarget { edge } => {
                write!(
                    f,
                    "held_by_robot edge `{edge}` must terminate at the gripper node"
                )
            }
        }
    }
}

/// Outcome of validation; violations are data, not faults.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn edge_label(e: &Edge) -> String {
    let mut s = String::new();
    s.push_str(e.subject.as_str());
    s.push(' ');
    s.push_str(e.predicate.as_str());
    s.push(' ');
    s.push_str(e.object.as_str());
    s
}

/// Check a graph against the structural rules and the vocabulary. Never
/// mutates its input.
pub fn validate_graph(graph: &SceneGraph, vocab: &Vocabulary) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut ids: Vec<&NodeId> = Vec::new();
    for n in &graph.nodes {
        if n.id.as_str() == SUBTASK_NODE_ID {
            report.violations.push(Violation::ReservedNodeId {
                id: n.id.to_string(),
            });
        }
        if ids.contains(&&n.id) {
            report.violations.push(Violation::DuplicateNodeId {
                id: n.id.to_string(),
            });
        } else {
            ids.push(&n.id);
        }
        match vocab.category(&n.category) {
            Err(_) => report.violations.push(Violation::UnknownCategory {
                id: n.id.to_string(),
                category: n.category.clone(),
            }),
            Ok(_) => {
                if vocab.check_state(&n.category, &n.state).is_err() {
                    report.violations.push(Violation::InadmissibleState {
                        id: n.id.to_string(),
                        category: n.category.clone(),
                        state: n.state.clone(),
                    });
                }
            }
        }
    }

    let mut seen_edges: Vec<&Edge> = Vec::new();
    for e in &graph.edges {
        let label = edge_label(e);
        if e.subject.as_str() == SUBTASK_NODE_ID || e.object.as_str() == SUBTASK_NODE_ID {
            report
                .violations
                .push(Violation::ConnectedSubtaskNode { edge: label });
            continue;
        }
        if e.subject == e.object {
            report.violations.push(Violation::SelfEdge {
                edge: label.clone(),
            });
        }
        if seen_edges.contains(&e) {
            report.violations.push(Violation::DuplicateEdge {
                edge: label.clone(),
            });
        } else {
            seen_edges.push(e);
        }
        let subject_node = graph.node(&e.subject);
        let object_node = graph.node(&e.object);
        if subject_node.is_none() || object_node.is_none() {
            report.violations.push(Violation::DanglingEdge {
                edge: label.clone(),
            });
        }
        if e.predicate == Predicate::HeldByRobot {
            if let Some(obj) = object_node {
                if obj.category != crate::vocab::GRIPPER_CATEGORY {
                    report
                        .violations
                        .push(Violation::GripperEdgeTarget { edge: label });
                }
            }
        }
    }

    if let Some(subtask) = &graph.subtask {
        if let Err(e) = subtask.check(vocab) {
            report.violations.push(Violation::BadSubtask {
                reason: e.to_string(),
            });
        }
    }

    report
}

/// Deterministic natural-language rendering of a graph: optional
/// `subtask: ...` header, then `<category> is <state>` node lines, then
/// `<category> <predicate> <category>` edge lines, each section sorted.
pub fn graph_to_text(graph: &SceneGraph) -> String {
    let mut lines: Vec<String> = Vec::new();
    if let Some(subtask) = &graph.subtask {
        let mut line = String::from("subtask: ");
        line.push_str(&subtask.canonical_string());
        lines.push(line);
    }

    let mut node_lines: Vec<String> = graph
        .nodes
        .iter()
        .map(|n| {
            let mut s = String::new();
            s.push_str(&n.category);
            s.push_str(" is ");
            s.push_str(&n.state);
            s
        })
        .collect();
    node_lines.sort();
    lines.extend(node_lines);

    let mut edge_lines: Vec<String> = graph
        .edges
        .iter()
        .filter_map(|e| {
            let subject = graph.node(&e.subject)?;
            let object = graph.node(&e.object)?;
            let mut s = String::new();
            s.push_str(&subject.category);
            s.push(' ');
            s.push_str(e.predicate.as_str());
            s.push(' ');
            s.push_str(&object.category);
            Some(s)
        })
        .collect();
    edge_lines.sort();
    lines.extend(edge_lines);

    lines.join("\n")
}

// Document types: field names declared in alphabetical order so serde_json
// emits canonical (sorted-key) objects.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeDoc {
    category: String,
    id: String,
    state: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeDoc {
    object: String,
    predicate: String,
    subject: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubtaskDoc {
    args: Vec<String>,
    verb: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphDoc {
    edges: Vec<EdgeDoc>,
    nodes: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subtask: Option<SubtaskDoc>,
    vocab_version: String,
}

/// Error decoding a scene-graph document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphCodecError {
    Json(String),
    UnknownPredicate(String),
}

impl fmt::Display for GraphCodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphCodecError::Json(msg) => write!(f, "malformed graph document: {msg}"),
            GraphCodecError::UnknownPredicate(p) => write!(f, "unknown predicate `{p}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphCodecError {}

/// Encode to the canonical single-line JSON document (sorted keys, nodes
/// sorted by id, edges sorted by triple). Byte-stable across runs.
pub fn to_canonical_json(graph: &SceneGraph, vocab_version: &str) -> String {
    let mut nodes: Vec<NodeDoc> = graph
        .nodes
        .iter()
        .map(|n| NodeDoc {
            category: n.category.clone(),
            id: n.id.to_string(),
            state: n.state.clone(),
        })
        .collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<EdgeDoc> = graph
        .edges
        .iter()
        .map(|e| EdgeDoc {
            object: e.object.to_string(),
            predicate: e.predicate.as_str().to_owned(),
            subject: e.subject.to_string(),
        })
        .collect();
    edges.sort_by(|a, b| {
        (&a.subject, &a.predicate, &a.object).cmp(&(&b.subject, &b.predicate, &b.object))
    });
    let doc = GraphDoc {
        edges,
        nodes,
        subtask: graph.subtask.as_ref().map(|s| SubtaskDoc {
            args: s.args.clone(),
            verb: s.verb.clone(),
        }),
        vocab_version: vocab_version.to_owned(),
    };
    serde_json::to_string(&doc).expect("graph document serialization cannot fail")
}

/// Decode a canonical document; returns the graph and its vocabulary version.
pub fn from_canonical_json(text: &str) -> Result<(SceneGraph, String), GraphCodecError> {
    let doc: GraphDoc =
        serde_json::from_str(text).map_err(|e| GraphCodecError::Json(e.to_string()))?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| ObjectNode {
            id: NodeId(n.id),
            category: n.category,
            state: n.state,
        })
        .collect();
    let edges = doc
        .edges
        .into_iter()
        .map(|e| {
            let predicate = Predicate::parse(&e.predicate)
                .ok_or(GraphCodecError::UnknownPredicate(e.predicate))?;
            Ok(Edge {
                subject: NodeId(e.subject),
                predicate,
                object: NodeId(e.object),
            })
        })
        .collect::<Result<Vec<_>, GraphCodecError>>()?;
    let subtask = doc.subtask.map(|s| Subtask {
        verb: s.verb,
        args: s.args,
    });
    Ok((SceneGraph::build(nodes, edges, subtask), doc.vocab_version))
}
