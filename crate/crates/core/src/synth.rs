//! Seeded synthesis of valid scene graphs, used by property tests and the
//! acceptance suite. Not part of the runtime pipeline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{Edge, NodeId, ObjectNode, Predicate, SceneGraph};
use crate::rng::SplitMix64;
use crate::task::Subtask;
use crate::vocab::Vocabulary;

/// Options for [`random_graph`].
#[derive(Debug, Clone, Copy)]
pub struct GraphGenOptions {
    pub max_nodes: usize,
    /// Each category appears at most once per graph.
    pub category_unique: bool,
    /// Attach a subtask node (always, rather than coin-flip, when true).
    pub with_subtask: bool,
}

impl Default for GraphGenOptions {
    fn default() -> Self {
        GraphGenOptions {
            max_nodes: 10,
            category_unique: false,
            with_subtask: true,
        }
    }
}

const EDGE_PREDICATES: [Predicate; 5] = [
    Predicate::Inside,
    Predicate::LeftOf,
    Predicate::Near,
    Predicate::OnTopOf,
    Predicate::RightOf,
];

fn non_gripper_categories(vocab: &Vocabulary) -> Vec<&str> {
    vocab
        .categories
        .iter()
        .map(|c| c.name.as_str())
        .filter(|c| *c != crate::vocab::GRIPPER_CATEGORY)
        .collect()
}

/// Generate a valid scene graph: vocabulary-admissible nodes, non-duplicate
/// non-self edges, optional subtask node.
pub fn random_graph(
    rng: &mut SplitMix64,
    vocab: &Vocabulary,
    opts: &GraphGenOptions,
) -> SceneGraph {
    let categories = non_gripper_categories(vocab);
    let n = rng.next_below(opts.max_nodes + 1);

    let mut picked: Vec<&str> = Vec::new();
    let mut nodes = Vec::new();
    for i in 0..n {
        let cat = if opts.category_unique {
            let remaining: Vec<&&str> =
                categories.iter().filter(|c| !picked.contains(*c)).collect();
            if remaining.is_empty() {
                break;
            }
            *remaining[rng.next_below(remaining.len())]
        } else {
            categories[rng.next_below(categories.len())]
        };
        picked.push(cat);
        let states = &vocab.category(cat).unwrap().states;
        let state = &states[rng.next_below(states.len())];
        nodes.push(ObjectNode::new(&format!("n{i}"), cat, state));
    }

    let mut edges: Vec<Edge> = Vec::new();
    if nodes.len() >= 2 {
        let edge_budget = rng.next_below(nodes.len() + 1);
        for _ in 0..edge_budget {
            let a = rng.next_below(nodes.len());
            let mut b = rng.next_below(nodes.len());
            if a == b {
                b = (b + 1) % nodes.len();
            }
            let edge = Edge {
                subject: nodes[a].id.clone(),
                predicate: EDGE_PREDICATES[rng.next_below(EDGE_PREDICATES.len())],
                object: nodes[b].id.clone(),
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }
        }
    }

    let subtask = if opts.with_subtask {
        Some(random_subtask(rng, vocab))
    } else {
        None
    };
    SceneGraph::build(nodes, edges, subtask)
}

/// Generate a vocabulary-valid subtask.
pub fn random_subtask(rng: &mut SplitMix64, vocab: &Vocabulary) -> Subtask {
    let categories = non_gripper_categories(vocab);
    let verb = &vocab.verbs[rng.next_below(vocab.verbs.len())];
    let arity = verb.min_args + rng.next_below(verb.max_args - verb.min_args + 1);
    let args: Vec<String> = (0..arity)
        .map(|_| String::from(categories[rng.next_below(categories.len())]))
        .collect();
    Subtask {
        verb: verb.name.clone(),
        args,
    }
}

/// Catalog perturbation for sensitivity properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphPerturbation {
    FlipOneState,
    DeleteOneNode,
    AddNodeWithEdge,
}

/// Apply a perturbation; returns `None` when the graph cannot support it
/// (for example flipping a state when every category has one admissible
/// state). The result is always a valid graph.
pub fn perturb_graph(
    graph: &SceneGraph,
    kind: GraphPerturbation,
    rng: &mut SplitMix64,
    vocab: &Vocabulary,
) -> Option<SceneGraph> {
    let mut g = graph.clone();
    match kind {
        GraphPerturbation::FlipOneState => {
            let flippable: Vec<usize> = g
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| vocab.category(&n.category).unwrap().states.len() > 1)
                .map(|(i, _)| i)
                .collect();
            let &i = flippable.get(rng.next_below(flippable.len().max(1)))?;
            let node = &mut g.nodes[i];
            let states = &vocab.category(&node.category).unwrap().states;
            let current = node.state.clone();
            let alternatives: Vec<&String> = states.iter().filter(|s| **s != current).collect();
            node.state = alternatives[rng.next_below(alternatives.len())].clone();
        }
        GraphPerturbation::DeleteOneNode => {
            if g.nodes.is_empty() {
                return None;
            }
            let i = rng.next_below(g.nodes.len());
            let id = g.nodes[i].id.clone();
            g.nodes.remove(i);
            g.edges.retain(|e| e.subject != id && e.object != id);
        }
        GraphPerturbation::AddNodeWithEdge => {
            if g.nodes.is_empty() {
                return None;
            }
            let categories = non_gripper_categories(vocab);
            let cat = categories[rng.next_below(categories.len())];
            let state = vocab.category(cat).unwrap().states[0].clone();
            let id = NodeId::from("extra_synth");
            if g.node(&id).is_some() {
                return None;
            }
            let anchor = g.nodes[rng.next_below(g.nodes.len())].id.clone();
            g.nodes.push(ObjectNode {
                id: id.clone(),
                category: cat.into(),
                state,
            });
            g.edges.push(Edge {
                subject: id,
                predicate: Predicate::Near,
                object: anchor,
            });
        }
    }
    Some(SceneGraph::build(g.nodes, g.edges, g.subtask))
}
