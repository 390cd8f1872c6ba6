//! Closed vocabularies: object categories, per-category state sets, verbs.
//!
//! Open-world perception is out of scope here; every category, state and verb
//! is validated against a versioned vocabulary so that similarity scores and
//! simulator runs are exactly reproducible. Buffer files record the
//! vocabulary version they were built with and refuse to load under another.

use alloc::borrow::ToOwned;
use alloc::fmt;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Version tag of the built-in vocabulary.
pub const VOCAB_VERSION: &str = "household-v1";

/// Category of the robot gripper node; `held_by_robot` edges terminate here.
pub const GRIPPER_CATEGORY: &str = "robot_gripper";

/// What the simulator is allowed to do with instances of a category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryTraits {
    /// Objects can be placed *inside* (via `put_in`); value is the capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle_capacity: Option<usize>,
    /// Objects can be placed *on top* (via `put_on`); value is the capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_capacity: Option<usize>,
    /// Has an open/closed door that gates access to its contents.
    #[serde(default)]
    pub openable: bool,
    /// Can be carried by the gripper.
    #[serde(default)]
    pub portable: bool,
    /// Raw food that `cook` turns into `cooked`.
    #[serde(default)]
    pub cookable: bool,
    /// Whole food that `slice` turns into `sliced`.
    #[serde(default)]
    pub sliceable: bool,
    /// Empty container the faucet can fill.
    #[serde(default)]
    pub fillable: bool,
    /// Pan or pot: the vessel `cook` operates in.
    #[serde(default)]
    pub heat_vessel: bool,
}

/// One category with its admissible state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDef {
    pub name: String,
    /// Non-empty; categories with no meaningful state carry just `default`.
    pub states: Vec<String>,
    #[serde(default)]
    pub traits: CategoryTraits,
}

/// Verb signature: name plus argument-count range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbDef {
    pub name: String,
    pub min_args: usize,
    pub max_args: usize,
}

/// The closed, versioned vocabulary shared by graphs, plans and the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub version: String,
    /// Sorted by name.
    pub categories: Vec<CategoryDef>,
    /// Sorted by name.
    pub verbs: Vec<VerbDef>,
}

/// Violation of the closed-vocabulary contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabError {
    UnknownCategory(String),
    InadmissibleState {
        category: String,
        state: String,
    },
    UnknownVerb(String),
    BadArity {
        verb: String,
        got: usize,
        min: usize,
        max: usize,
    },
}

impl fmt::Display for VocabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabError::UnknownCategory(c) => write!(f, "unknown category `{c}`"),
            VocabError::InadmissibleState { category, state } => {
                write!(
                    f,
                    "state `{state}` is not admissible for category `{category}`"
                )
            }
            VocabError::UnknownVerb(v) => write!(f, "unknown verb `{v}`"),
            VocabError::BadArity {
                verb,
                got,
                min,
                max,
            } => {
                write!(f, "verb `{verb}` takes {min}..={max} arguments, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for VocabError {}

impl Vocabulary {
    /// The built-in household vocabulary.
    pub fn builtin() -> Self {
        fn cat(name: &str, states: &[&str], traits: CategoryTraits) -> CategoryDef {
            CategoryDef {
                name: name.to_owned(),
                states: states.iter().map(|s| (*s).to_owned()).collect(),
                traits,
            }
        }
        let t = CategoryTraits::default;
        let mut categories = vec![
            cat(
                "apple",
                &["whole", "sliced"],
                CategoryTraits {
                    portable: true,
                    sliceable: true,
                    ..t()
                },
            ),
            cat(
                "bowl",
                &["empty", "filled", "dirty"],
                CategoryTraits {
                    receptacle_capacity: Some(1),
                    portable: true,
                    fillable: true,
                    ..t()
                },
            ),
            cat(
                "coffee_machine",
                &["off", "on"],
                CategoryTraits {
                    surface_capacity: Some(1),
                    ..t()
                },
            ),
            cat(
                "counter",
                &["default"],
                CategoryTraits {
                    surface_capacity: Some(8),
                    ..t()
                },
            ),
            cat(
                "cupboard",
                &["closed", "open"],
                CategoryTraits {
                    receptacle_capacity: Some(4),
                    openable: true,
                    ..t()
                },
            ),
            cat(
                "drawer",
                &["closed", "open"],
                CategoryTraits {
                    receptacle_capacity: Some(4),
                    openable: true,
                    ..t()
                },
            ),
            cat(
                "egg",
                &["raw", "cooked", "ruined"],
                CategoryTraits {
                    portable: true,
                    cookable: true,
                    ..t()
                },
            ),
            cat("faucet", &["off", "on"], t()),
            cat(
                "fridge",
                &["closed", "open"],
                CategoryTraits {
                    receptacle_capacity: Some(8),
                    openable: true,
                    ..t()
                },
            ),
            cat(
                "knife",
                &["default"],
                CategoryTraits {
                    portable: true,
                    ..t()
                },
            ),
            cat(
                "lettuce",
                &["whole", "sliced", "ruined"],
                CategoryTraits {
                    portable: true,
                    sliceable: true,
                    cookable: true,
                    ..t()
                },
            ),
            cat(
                "microwave",
                &["closed", "open"],
                CategoryTraits {
                    receptacle_capacity: Some(1),
                    openable: true,
                    ..t()
                },
            ),
            cat(
                "mug",
                &["empty", "filled", "dirty"],
                CategoryTraits {
                    portable: true,
                    fillable: true,
                    ..t()
                },
            ),
            cat(
                "pan",
                &["clean", "dirty"],
                CategoryTraits {
                    surface_capacity: Some(2),
                    portable: true,
                    heat_vessel: true,
                    ..t()
                },
            ),
            cat(
                "plate",
                &["clean", "dirty"],
                CategoryTraits {
                    surface_capacity: Some(1),
                    portable: true,
                    ..t()
                },
            ),
            cat(
                "pot",
                &["empty", "filled", "dirty"],
                CategoryTraits {
                    receptacle_capacity: Some(1),
                    portable: true,
                    fillable: true,
                    heat_vessel: true,
                    ..t()
                },
            ),
            cat(
                "potato",
                &["raw", "cooked", "ruined"],
                CategoryTraits {
                    portable: true,
                    cookable: true,
                    ..t()
                },
            ),
            cat(GRIPPER_CATEGORY, &["default"], t()),
            cat(
                "stove",
                &["off", "on"],
                CategoryTraits {
                    surface_capacity: Some(4),
                    ..t()
                },
            ),
            cat(
                "table",
                &["default"],
                CategoryTraits {
                    surface_capacity: Some(8),
                    ..t()
                },
            ),
            cat(
                "tomato",
                &["whole", "sliced", "ruined"],
                CategoryTraits {
                    portable: true,
                    sliceable: true,
                    cookable: true,
                    ..t()
                },
            ),
        ];
        categories.sort_by(|a, b| a.name.cmp(&b.name));

        fn verb(name: &str, min_args: usize, max_args: usize) -> VerbDef {
            VerbDef {
                name: name.to_owned(),
                min_args,
                max_args,
            }
        }
        let mut verbs = vec![
            verb("clean", 1, 1),
            verb("close", 1, 1),
            verb("cook", 1, 2),
            verb("open", 1, 1),
            verb("pick_up", 1, 1),
            verb("pour", 2, 2),
            verb("put_in", 2, 2),
            verb("put_on", 2, 2),
            verb("slice", 1, 1),
            verb("toggle", 1, 1),
            verb("wait", 0, 0),
        ];
        verbs.sort_by(|a, b| a.name.cmp(&b.name));

        Vocabulary {
            version: VOCAB_VERSION.to_owned(),
            categories,
            verbs,
        }
    }

    pub fn category(&self, name: &str) -> Result<&CategoryDef, VocabError> {
        self.categories
            .binary_search_by(|c| c.name.as_str().cmp(name))
            .map(|i| &self.categories[i])
            .map_err(|_| VocabError::UnknownCategory(name.to_owned()))
    }

    /// Index of a category in the sorted category list.
    pub fn category_index(&self, name: &str) -> Result<usize, VocabError> {
        self.categories
            .binary_search_by(|c| c.name.as_str().cmp(name))
            .map_err(|_| VocabError::UnknownCategory(name.to_owned()))
    }

    /// All distinct state labels across categories, sorted.
    pub fn state_labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = self
            .categories
            .iter()
            .flat_map(|c| c.states.iter().map(|s| s.as_str()))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Check that `(category, state)` is admissible.
    pub fn check_state(&self, category: &str, state: &str) -> Result<(), VocabError> {
        let def = self.category(category)?;
        if def.states.iter().any(|s| s == state) {
            Ok(())
        } else {
            Err(VocabError::InadmissibleState {
                category: category.to_owned(),
                state: state.to_owned(),
            })
        }
    }

    pub fn verb(&self, name: &str) -> Result<&VerbDef, VocabError> {
        self.verbs
            .binary_search_by(|v| v.name.as_str().cmp(name))
            .map(|i| &self.verbs[i])
            .map_err(|_| VocabError::UnknownVerb(name.to_owned()))
    }

    /// Check verb name and arity.
    pub fn check_verb(&self, name: &str, arg_count: usize) -> Result<(), VocabError> {
        let def = self.verb(name)?;
        if arg_count < def.min_args || arg_count > def.max_args {
            return Err(VocabError::BadArity {
                verb: name.to_owned(),
                got: arg_count,
                min: def.min_args,
                max: def.max_args,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_sorted_and_self_consistent() {
        let v = Vocabulary::builtin();
        assert!(v.categories.windows(2).all(|w| w[0].name < w[1].name));
        assert!(v.verbs.windows(2).all(|w| w[0].name < w[1].name));
        for c in &v.categories {
            assert!(!c.states.is_empty(), "category {} has no states", c.name);
        }
        assert!(v.category(GRIPPER_CATEGORY).is_ok());
    }

    #[test]
    fn state_checks() {
        let v = Vocabulary::builtin();
        assert!(v.check_state("pan", "dirty").is_ok());
        assert_eq!(
            v.check_state("pan", "open"),
            Err(VocabError::InadmissibleState {
                category: "pan".into(),
                state: "open".into()
            })
        );
        assert!(matches!(
            v.check_state("ghost", "default"),
            Err(VocabError::UnknownCategory(_))
        ));
    }

    #[test]
    fn verb_arity() {
        let v = Vocabulary::builtin();
        assert!(v.check_verb("pick_up", 1).is_ok());
        assert!(v.check_verb("cook", 2).is_ok());
        assert!(matches!(
            v.check_verb("pick_up", 2),
            Err(VocabError::BadArity { .. })
        ));
        assert!(matches!(
            v.check_verb("teleport", 1),
            Err(VocabError::UnknownVerb(_))
        ));
    }
}
