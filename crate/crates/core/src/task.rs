//! Subtasks, plans, task specifications and goal conditions.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::SceneGraph;
use crate::vocab::{VocabError, Vocabulary};

/// One high-level action: a verb plus 0-2 category arguments.
///
/// The canonical token string (`verb arg1 arg2`, lowercase, space separated)
/// is used for retrieval embeddings, logs and the wire protocol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subtask {
    pub verb: String,
    pub args: Vec<String>,
}

impl Subtask {
    pub fn new(verb: &str, args: &[&str]) -> Self {
        Subtask {
            verb: verb.to_owned(),
            args: args.iter().map(|a| (*a).to_owned()).collect(),
        }
    }

    pub fn canonical_string(&self) -> String {
        let mut s = self.verb.clone();
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }

    /// Tokens of the canonical string, for text embedding.
    pub fn tokens(&self) -> Vec<&str> {
        core::iter::once(self.verb.as_str())
            .chain(self.args.iter().map(|a| a.as_str()))
            .collect()
    }

    /// Parse a canonical token string back into a subtask.
    pub fn parse(text: &str) -> Option<Self> {
        let mut parts = text.split_whitespace();
        let verb = parts.next()?;
        Some(Subtask {
            verb: verb.to_owned(),
            args: parts.map(|p| p.to_owned()).collect(),
        })
    }

    /// Verb known, arity in range, arguments are vocabulary categories.
    pub fn check(&self, vocab: &Vocabulary) -> Result<(), VocabError> {
        vocab.check_verb(&self.verb, self.args.len())?;
        for a in &self.args {
            vocab.category(a)?;
        }
        Ok(())
    }
}

/// Ordered subtask sequence plus the index of the next subtask to execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub subtasks: Vec<Subtask>,
    pub cursor: usize,
}

impl Plan {
    pub fn new(subtasks: Vec<Subtask>) -> Self {
        Plan {
            subtasks,
            cursor: 0,
        }
    }

    pub fn current(&self) -> Option<&Subtask> {
        self.subtasks.get(self.cursor)
    }

    pub fn finished(&self) -> bool {
        self.cursor >= self.subtasks.len()
    }
}

/// One conjunct of a goal condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalAtom {
    /// Some object of `category` has `state`.
    State { category: String, state: String },
    /// Some edge instantiates `(subject_category, predicate, object_category)`.
    Relation {
        subject: String,
        predicate: crate::graph::Predicate,
        object: String,
    },
}

impl GoalAtom {
    pub fn state(category: &str, state: &str) -> Self {
        GoalAtom::State {
            category: category.to_owned(),
            state: state.to_owned(),
        }
    }

    pub fn relation(subject: &str, predicate: crate::graph::Predicate, object: &str) -> Self {
        GoalAtom::Relation {
            subject: subject.to_owned(),
            predicate,
            object: object.to_owned(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            GoalAtom::State { category, state } => {
                let mut s = category.clone();
                s.push_str(" is ");
                s.push_str(state);
                s
            }
            GoalAtom::Relation {
                subject,
                predicate,
                object,
            } => {
                let mut s = subject.clone();
                s.push(' ');
                s.push_str(predicate.as_str());
                s.push(' ');
                s.push_str(object);
                s
            }
        }
    }
}

/// Conjunction of goal atoms; non-empty by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalCondition {
    pub clauses: Vec<GoalAtom>,
}

/// Error evaluating or constructing a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalError {
    Empty,
    UnknownCategory(String),
}

impl core::fmt::Display for GoalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GoalError::Empty => write!(f, "goal condition must not be empty"),
            GoalError::UnknownCategory(c) => write!(f, "goal references unknown category `{c}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GoalError {}

impl GoalCondition {
    pub fn new(clauses: Vec<GoalAtom>) -> Result<Self, GoalError> {
        if clauses.is_empty() {
            return Err(GoalError::Empty);
        }
        Ok(GoalCondition { clauses })
    }

    pub fn check(&self, vocab: &Vocabulary) -> Result<(), GoalError> {
        if self.clauses.is_empty() {
            return Err(GoalError::Empty);
        }
        for clause in &self.clauses {
            let cats: Vec<&str> = match clause {
                GoalAtom::State { category, .. } => alloc::vec![category.as_str()],
                GoalAtom::Relation {
                    subject, object, ..
                } => {
                    alloc::vec![subject.as_str(), object.as_str()]
                }
            };
            for c in cats {
                vocab
                    .category(c)
                    .map_err(|_| GoalError::UnknownCategory(c.to_owned()))?;
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self.clauses.iter().map(|c| c.render()).collect();
        parts.join(" and ")
    }

    /// True iff every clause holds in the graph. An empty graph satisfies no
    /// atom.
    pub fn eval_graph(&self, graph: &SceneGraph) -> bool {
        self.clauses.iter().all(|clause| match clause {
            GoalAtom::State { category, state } => graph
                .nodes
                .iter()
                .any(|n| &n.category == category && &n.state == state),
            GoalAtom::Relation {
                subject,
                predicate,
                object,
            } => graph.edges.iter().any(|e| {
                e.predicate == *predicate
                    && graph
                        .node(&e.subject)
                        .is_some_and(|n| &n.category == subject)
                    && graph.node(&e.object).is_some_and(|n| &n.category == object)
            }),
        })
    }
}

/// A named task: goal condition plus the nominal plan that achieves it under
/// expected conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub goal: GoalCondition,
    pub nominal_plan: Plan,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, ObjectNode, Predicate, SceneGraph};

    #[test]
    fn canonical_string_is_lowercase_space_separated() {
        let s = Subtask::new("put_in", &["plate", "microwave"]);
        assert_eq!(s.canonical_string(), "put_in plate microwave");
        assert_eq!(Subtask::parse("put_in plate microwave").unwrap(), s);
    }

    #[test]
    fn subtask_arity_checked() {
        let vocab = Vocabulary::builtin();
        assert!(Subtask::new("pick_up", &["mug"]).check(&vocab).is_ok());
        assert!(Subtask::new("pick_up", &["mug", "pan"])
            .check(&vocab)
            .is_err());
        assert!(Subtask::new("pick_up", &["unicorn"]).check(&vocab).is_err());
    }

    #[test]
    fn goal_eval_on_graph() {
        let goal = GoalCondition::new(alloc::vec![
            GoalAtom::state("egg", "cooked"),
            GoalAtom::state("potato", "raw"),
        ])
        .unwrap();
        let both_cooked = SceneGraph::build(
            alloc::vec![
                ObjectNode::new("egg_1", "egg", "cooked"),
                ObjectNode::new("potato_1", "potato", "cooked"),
            ],
            alloc::vec![],
            None,
        );
        assert!(!goal.eval_graph(&both_cooked));

        let intended = SceneGraph::build(
            alloc::vec![
                ObjectNode::new("egg_1", "egg", "cooked"),
                ObjectNode::new("potato_1", "potato", "raw"),
            ],
            alloc::vec![],
            None,
        );
        assert!(goal.eval_graph(&intended));
    }

    #[test]
    fn relation_atom_requires_matching_edge() {
        let goal = GoalCondition::new(alloc::vec![GoalAtom::relation(
            "mug",
            Predicate::OnTopOf,
            "table",
        )])
        .unwrap();
        let g = SceneGraph::build(
            alloc::vec![
                ObjectNode::new("mug_1", "mug", "filled"),
                ObjectNode::new("table_1", "table", "default"),
            ],
            alloc::vec![Edge::new("mug_1", Predicate::OnTopOf, "table_1")],
            None,
        );
        assert!(goal.eval_graph(&g));
        assert!(!goal.eval_graph(&SceneGraph::empty()));
    }

    #[test]
    fn empty_goal_rejected() {
        assert_eq!(GoalCondition::new(alloc::vec![]), Err(GoalError::Empty));
    }
}
