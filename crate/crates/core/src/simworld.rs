//! Deterministic household world: object state, action semantics with
//! irreversible effects, perturbation injection, demonstration recording and
//! a simulated clock.
//!
//! The world is symbolic with real geometry: every object carries an
//! axis-aligned box, and moving an object moves whatever sits in or on it.
//! Observations are full-visibility snapshots (optionally noised), so the
//! scene-graph builder's spatial heuristics run against honest boxes rather
//! than hand-written edges. (scenario, seed, action sequence) fully
//! determines the final world, every observation and the clock.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, SceneGraph};
use crate::graphbuild::{
    extract_spatial_relations, gripper_relation, Aabb, GeometryParams, Observation, ObservedObject,
};
use crate::rng::SplitMix64;
use crate::task::{GoalCondition, Subtask, TaskSpec};
use crate::vocab::Vocabulary;

/// Where held objects live geometrically: a zone far from every layout
/// surface so they produce no spurious spatial edges.
const HELD_ZONE: [f64; 3] = [9.0, 9.0, 1.2];

/// Simulated-time costs charged by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    /// Seconds per primitive action attempt.
    pub action_cost: f64,
    /// Seconds per scene-graph (or baseline) check.
    pub check_cost: f64,
    /// Seconds per diagnose/replan cycle.
    pub reason_cost: f64,
    /// Seconds per end-of-task trajectory analysis.
    pub posthoc_analysis_cost: f64,
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel {
            action_cost: 3.0,
            check_cost: 0.5,
            reason_cost: 5.0,
            posthoc_analysis_cost: 20.0,
        }
    }
}

/// Observation noise: independent per-object drop, plus state flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub drop_prob: f64,
    pub flip_prob: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            drop_prob: 0.0,
            flip_prob: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn is_off(&self) -> bool {
        self.drop_prob == 0.0 && self.flip_prob == 0.0
    }
}

/// One simulated object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub category: String,
    pub state: String,
    pub aabb: Aabb,
    /// Receptacle this object is inside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<NodeId>,
    /// Surface this object rests on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<NodeId>,
}

/// Ground-truth world state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub objects: BTreeMap<NodeId, WorldObject>,
    pub gripper: Option<NodeId>,
    pub clock: f64,
    pub irreversibly_damaged: bool,
    /// Layout poses before perturbation; displaced objects return here.
    home_poses: BTreeMap<NodeId, Aabb>,
}

/// Outcome of attempting one action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    Ok,
    PreconditionFailed(String),
    IrreversibleDamage(String),
}

impl StepOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, StepOutcome::Ok)
    }
}

/// Faults distinct from in-world failures.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldError {
    BadAction(String),
    Scenario(String),
}

impl core::fmt::Display for WorldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WorldError::BadAction(m) => write!(f, "bad action: {m}"),
            WorldError::Scenario(m) => write!(f, "scenario error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WorldError {}

/// Declarative description of one verb's semantics, for introspection and
/// documentation; dispatch itself lives in [`step`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRule {
    pub verb: String,
    pub preconditions: Vec<String>,
    pub effects: Vec<String>,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irreversible_on_violation: Option<String>,
}

/// The verb semantics table.
pub fn action_rules(time: &TimeModel) -> Vec<ActionRule> {
    let rule = |verb: &str, pre: &[&str], eff: &[&str], bad: Option<&str>| ActionRule {
        verb: verb.to_owned(),
        preconditions: pre.iter().map(|s| (*s).to_owned()).collect(),
        effects: eff.iter().map(|s| (*s).to_owned()).collect(),
        duration: time.action_cost,
        irreversible_on_violation: bad.map(|s| s.to_owned()),
    };
    alloc::vec![
        rule(
            "pick_up",
            &["gripper empty", "object exists and is portable", "object not inside a closed receptacle"],
            &["gripper holds object", "object leaves its container/support"],
            None,
        ),
        rule(
            "put_in",
            &["gripper holds the object", "receptacle exists, is open, not filled, has free capacity"],
            &["object inside receptacle", "gripper empty"],
            None,
        ),
        rule(
            "put_on",
            &["gripper holds the object", "surface exists and has free capacity"],
            &["object rests on surface (home slot when free)", "gripper empty"],
            None,
        ),
        rule("open", &["target is openable and closed"], &["target open"], None),
        rule("close", &["target is openable and open"], &["target closed"], None),
        rule("clean", &["target is dirty"], &["target clean (or empty, for containers)"], None),
        rule(
            "slice",
            &["target is whole, resting on a counter or table", "a knife is present"],
            &["target sliced"],
            None,
        ),
        rule(
            "toggle",
            &["device-specific: faucet/stove flip; microwave door closed; coffee machine off with an empty mug on it"],
            &["faucet fills empty containers near it", "microwave cooks raw contents", "coffee machine fills the mug"],
            Some("turning the faucet on over an already-filled container overflows it"),
        ),
        rule(
            "pour",
            &["source is filled", "destination is the faucet sink or an empty container"],
            &["source empty", "destination filled (when a container)"],
            Some("pouring into an already-filled container spoils it"),
        ),
        rule(
            "cook",
            &["item is raw and sits on/in a clean heat vessel", "the vessel rests on the stove", "no other food shares the vessel"],
            &["item cooked"],
            Some("a dirty vessel ruins the item; foreign food on the vessel gets cooked along with it"),
        ),
        rule("wait", &[], &[], None),
    ]
}

// --- scenarios ---------------------------------------------------------------

/// Failure category a scenario belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    Blocker,
    WrongState,
    Missing,
    Misplaced,
    Occupied,
    None,
}

impl FailureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::Blocker => "blocker",
            FailureCategory::WrongState => "wrong_state",
            FailureCategory::Missing => "missing",
            FailureCategory::Misplaced => "misplaced",
            FailureCategory::Occupied => "occupied",
            FailureCategory::None => "none",
        }
    }
}

/// One object in a layout description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutObject {
    pub id: String,
    pub category: String,
    pub state: String,
    pub aabb: Aabb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<String>,
}

/// When a perturbation applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyAt {
    T0,
    BeforeStep(usize),
}

/// What the perturbation does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Spawn a new object inside/on `into`.
    AddObject {
        id: String,
        category: String,
        state: String,
        into: String,
    },
    SetState {
        object: String,
        state: String,
    },
    RemoveObject {
        object: String,
    },
    /// Move an existing object inside/on `target`.
    Relocate {
        object: String,
        target: String,
    },
}

/// A single scripted deviation from the clean layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    pub apply_at: ApplyAt,
}

/// A full evaluation scenario: the task, the (perturbed) evaluation layout,
/// the demonstration layouts the buffer is built from, and bookkeeping for
/// the benchmark metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub task: TaskSpec,
    pub layout: Vec<LayoutObject>,
    pub demo_layouts: Vec<Vec<LayoutObject>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    pub failure_category: FailureCategory,
    /// Nominal-plan index of the subtask the perturbation is scripted to
    /// break; detection before this executes counts toward FDR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failing_step: Option<usize>,
    /// Hand-verified: the proactive strategy's templated recovery restores a
    /// matching scene and the episode reaches the goal.
    #[serde(default)]
    pub golden: bool,
    /// Where recoveries park displaced objects.
    pub park_location: String,
}

fn build_objects(
    layout: &[LayoutObject],
    vocab: &Vocabulary,
) -> Result<BTreeMap<NodeId, WorldObject>, WorldError> {
    let mut objects = BTreeMap::new();
    for o in layout {
        vocab
            .check_state(&o.category, &o.state)
            .map_err(|e| WorldError::Scenario(format!("layout object `{}`: {e}", o.id)))?;
        if o.aabb.is_degenerate() {
            return Err(WorldError::Scenario(format!(
                "layout object `{}` has a degenerate box",
                o.id
            )));
        }
        let prev = objects.insert(
            NodeId(o.id.clone()),
            WorldObject {
                category: o.category.clone(),
                state: o.state.clone(),
                aabb: o.aabb,
                container: o.container.clone().map(NodeId),
                support: o.support.clone().map(NodeId),
            },
        );
        if prev.is_some() {
            return Err(WorldError::Scenario(format!(
                "duplicate layout id `{}`",
                o.id
            )));
        }
    }
    // References resolve and containment is acyclic.
    for (id, obj) in &objects {
        for reference in [&obj.container, &obj.support].into_iter().flatten() {
            if !objects.contains_key(reference) {
                return Err(WorldError::Scenario(format!(
                    "object `{id}` references absent `{reference}`"
                )));
            }
        }
        let mut seen = alloc::vec![id.clone()];
        let mut cursor = obj.container.clone();
        while let Some(c) = cursor {
            if seen.contains(&c) {
                return Err(WorldError::Scenario(format!(
                    "containment cycle through `{c}`"
                )));
            }
            seen.push(c.clone());
            cursor = objects.get(&c).and_then(|o| o.container.clone());
        }
    }
    Ok(objects)
}

impl WorldState {
    /// Instantiate a clean (unperturbed) layout.
    pub fn from_layout(layout: &[LayoutObject], vocab: &Vocabulary) -> Result<Self, WorldError> {
        let objects = build_objects(layout, vocab)?;
        let home_poses = objects.iter().map(|(id, o)| (id.clone(), o.aabb)).collect();
        Ok(WorldState {
            objects,
            gripper: None,
            clock: 0.0,
            irreversibly_damaged: false,
            home_poses,
        })
    }

    fn object(&self, id: &NodeId) -> Result<&WorldObject, WorldError> {
        self.objects
            .get(id)
            .ok_or_else(|| WorldError::Scenario(format!("unknown object `{id}`")))
    }

    /// Lowest-id instance of a category.
    pub fn resolve_category(&self, category: &str) -> Option<NodeId> {
        self.objects
            .iter()
            .find(|(_, o)| o.category == category)
            .map(|(id, _)| id.clone())
    }

    fn contents_of(&self, id: &NodeId) -> Vec<NodeId> {
        self.objects
            .iter()
            .filter(|(_, o)| o.container.as_ref() == Some(id))
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn supported_by(&self, id: &NodeId) -> Vec<NodeId> {
        self.objects
            .iter()
            .filter(|(_, o)| o.support.as_ref() == Some(id))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Move an object to a new pose, dragging along whatever sits in or on
    /// it so geometry stays consistent with the containment fields.
    fn move_object(&mut self, id: &NodeId, new_aabb: Aabb) {
        let old = self.objects.get(id).expect("move target exists").aabb;
        let delta = [
            new_aabb.centroid()[0] - old.centroid()[0],
            new_aabb.centroid()[1] - old.centroid()[1],
            new_aabb.centroid()[2] - old.centroid()[2],
        ];
        self.translate_tree(id, delta);
    }

    fn translate_tree(&mut self, id: &NodeId, delta: [f64; 3]) {
        let obj = self.objects.get_mut(id).expect("translate target exists");
        let c = obj.aabb.centroid();
        obj.aabb = obj
            .aabb
            .recentered([c[0] + delta[0], c[1] + delta[1], c[2] + delta[2]]);
        let dependents: Vec<NodeId> = self
            .objects
            .iter()
            .filter(|(_, o)| o.container.as_ref() == Some(id) || o.support.as_ref() == Some(id))
            .map(|(k, _)| k.clone())
            .collect();
        for d in dependents {
            self.translate_tree(&d, delta);
        }
    }

    /// Pose for placing `obj` inside `target`: centered, resting on the
    /// target's floor, spread along x by the occupancy index.
    fn inside_pose(&self, obj_id: &NodeId, target_id: &NodeId) -> Aabb {
        let target = &self.objects[target_id];
        let obj = &self.objects[obj_id];
        let index = self
            .contents_of(target_id)
            .iter()
            .filter(|c| *c != obj_id)
            .count();
        let tc = target.aabb.centroid();
        let dz = obj.aabb.extent(2);
        let x = tc[0] + index as f64 * 0.02;
        Aabb::centered(
            [x, tc[1], target.aabb.min[2] + dz / 2.0 + 0.005],
            [obj.aabb.extent(0), obj.aabb.extent(1), dz],
        )
    }

    /// Pose for placing `obj` on `target`: its home pose when that sits on
    /// the target and is unoccupied, else the first free slot along the
    /// target's top surface. Slot spacing scales with the surface extent so
    /// small surfaces (a pan, a plate) still spread their items.
    fn on_top_pose(&self, obj_id: &NodeId, target_id: &NodeId) -> Aabb {
        let target = &self.objects[target_id];
        let obj = &self.objects[obj_id];
        let top = target.aabb.max[2];
        let exts = [obj.aabb.extent(0), obj.aabb.extent(1), obj.aabb.extent(2)];
        let x_extent = target.aabb.extent(0);
        let clearance = (x_extent * 0.25).min(0.2);

        let occupied_spots: Vec<[f64; 3]> = self
            .supported_by(target_id)
            .iter()
            .filter(|o| *o != obj_id)
            .map(|o| self.objects[o].aabb.centroid())
            .collect();
        let free = |candidate: [f64; 3]| -> bool {
            occupied_spots.iter().all(|spot| {
                let dx = spot[0] - candidate[0];
                let dy = spot[1] - candidate[1];
                crate::sqrt(dx * dx + dy * dy) > clearance
            })
        };

        if let Some(home) = self.home_poses.get(obj_id) {
            let home_bottom_on_target = (home.min[2] - top).abs() < 0.05
                && home.centroid()[0] > target.aabb.min[0]
                && home.centroid()[0] < target.aabb.max[0]
                && home.centroid()[1] > target.aabb.min[1]
                && home.centroid()[1] < target.aabb.max[1];
            let hc = home.centroid();
            if home_bottom_on_target && free(hc) {
                return Aabb::centered([hc[0], hc[1], top + exts[2] / 2.0 + 0.005], exts);
            }
        }
        let tc = target.aabb.centroid();
        const SLOT_FRACTIONS: [f64; 7] = [0.5, 0.2, 0.8, 0.35, 0.65, 0.1, 0.9];
        let mut fallback = None;
        for fraction in SLOT_FRACTIONS {
            let x = target.aabb.min[0] + fraction * x_extent;
            let candidate = [x, tc[1], top + exts[2] / 2.0 + 0.005];
            if free(candidate) {
                return Aabb::centered(candidate, exts);
            }
            fallback.get_or_insert(candidate);
        }
        Aabb::centered(fallback.expect("slot fractions are non-empty"), exts)
    }
}

/// Apply one perturbation to a world.
pub fn apply_perturbation(
    world: &mut WorldState,
    kind: &PerturbationKind,
    vocab: &Vocabulary,
) -> Result<(), WorldError> {
    match kind {
        PerturbationKind::AddObject {
            id,
            category,
            state,
            into,
        } => {
            vocab
                .check_state(category, state)
                .map_err(|e| WorldError::Scenario(e.to_string()))?;
            let new_id = NodeId(id.clone());
            if world.objects.contains_key(&new_id) {
                return Err(WorldError::Scenario(format!(
                    "perturbation reuses id `{id}`"
                )));
            }
            let target = NodeId(into.clone());
            let target_traits = vocab
                .category(&world.object(&target)?.category)
                .map_err(|e| WorldError::Scenario(e.to_string()))?
                .traits
                .clone();
            // Provisional pose; fixed up below once the object exists.
            let pose = world.objects[&target].aabb;
            world.objects.insert(
                new_id.clone(),
                WorldObject {
                    category: category.clone(),
                    state: state.clone(),
                    aabb: Aabb::centered(pose.centroid(), [0.15, 0.15, 0.1]),
                    container: None,
                    support: None,
                },
            );
            place(world, &new_id, &target, &target_traits)?;
            world
                .home_poses
                .insert(new_id.clone(), world.objects[&new_id].aabb);
            Ok(())
        }
        PerturbationKind::SetState { object, state } => {
            let id = NodeId(object.clone());
            let category = world.object(&id)?.category.clone();
            vocab
                .check_state(&category, state)
                .map_err(|e| WorldError::Scenario(e.to_string()))?;
            world.objects.get_mut(&id).expect("checked above").state = state.clone();
            Ok(())
        }
        PerturbationKind::RemoveObject { object } => {
            let id = NodeId(object.clone());
            world.object(&id)?;
            let dependents = world.contents_of(&id).len() + world.supported_by(&id).len();
            if dependents > 0 {
                return Err(WorldError::Scenario(format!(
                    "cannot remove `{object}`: {dependents} objects rest in or on it"
                )));
            }
            world.objects.remove(&id);
            Ok(())
        }
        PerturbationKind::Relocate { object, target } => {
            let id = NodeId(object.clone());
            let target_id = NodeId(target.clone());
            world.object(&id)?;
            let target_traits = vocab
                .category(&world.object(&target_id)?.category)
                .map_err(|e| WorldError::Scenario(e.to_string()))?
                .traits
                .clone();
            place(world, &id, &target_id, &target_traits)
        }
    }
}

/// Put `id` inside a receptacle or on a surface, whichever the target
/// supports (receptacles win).
fn place(
    world: &mut WorldState,
    id: &NodeId,
    target: &NodeId,
    target_traits: &crate::vocab::CategoryTraits,
) -> Result<(), WorldError> {
    if target_traits.receptacle_capacity.is_some() {
        let pose = world.inside_pose(id, target);
        world.move_object(id, pose);
        let obj = world.objects.get_mut(id).expect("placed object exists");
        obj.container = Some(target.clone());
        obj.support = None;
        Ok(())
    } else if target_traits.surface_capacity.is_some() {
        let pose = world.on_top_pose(id, target);
        world.move_object(id, pose);
        let obj = world.objects.get_mut(id).expect("placed object exists");
        obj.container = None;
        obj.support = Some(target.clone());
        Ok(())
    } else {
        Err(WorldError::Scenario(format!(
            "`{target}` is neither receptacle nor surface"
        )))
    }
}

/// Instantiate a scenario: layout, then any t0 perturbation. `before_step`
/// perturbations are the episode runner's job.
pub fn init_scenario(spec: &ScenarioSpec, vocab: &Vocabulary) -> Result<WorldState, WorldError> {
    let mut world = WorldState::from_layout(&spec.layout, vocab)?;
    if let Some(p) = &spec.perturbation {
        if p.apply_at == ApplyAt::T0 {
            apply_perturbation(&mut world, &p.kind, vocab)?;
        }
    }
    Ok(world)
}

/// Full-visibility symbolic/geometric snapshot, with optional seeded noise.
/// The held object is never dropped (its absence would contradict the
/// gripper state).
pub fn observe(
    world: &WorldState,
    noise: &NoiseConfig,
    rng: &mut SplitMix64,
    vocab: &Vocabulary,
) -> Observation {
    let mut objects = Vec::new();
    for (id, o) in &world.objects {
        let held = world.gripper.as_ref() == Some(id);
        if !held && noise.drop_prob > 0.0 && rng.chance(noise.drop_prob) {
            continue;
        }
        let mut state = o.state.clone();
        if noise.flip_prob > 0.0 && rng.chance(noise.flip_prob) {
            if let Ok(def) = vocab.category(&o.category) {
                let alternatives: Vec<&String> =
                    def.states.iter().filter(|s| **s != state).collect();
                if !alternatives.is_empty() {
                    state = alternatives[rng.next_below(alternatives.len())].clone();
                }
            }
        }
        objects.push(ObservedObject {
            id: id.clone(),
            category: o.category.clone(),
            state,
            aabb: o.aabb,
            container: o.container.clone(),
        });
    }
    // A dropped container leaves its contents without an attributable
    // enclosure: the agent still sees them, but not what holds them.
    let seen: Vec<NodeId> = objects.iter().map(|o| o.id.clone()).collect();
    for o in &mut objects {
        if o.container.as_ref().is_some_and(|c| !seen.contains(c)) {
            o.container = None;
        }
    }
    Observation {
        objects,
        gripper_holding: world.gripper.clone(),
        timestamp: world.clock,
    }
}

fn resolve_or_fail(world: &WorldState, category: &str) -> Result<NodeId, StepOutcome> {
    world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))
}

fn traits_of<'v>(
    vocab: &'v Vocabulary,
    world: &WorldState,
    id: &NodeId,
) -> &'v crate::vocab::CategoryTraits {
    &vocab
        .category(&world.objects[id].category)
        .expect("world objects carry valid categories")
        .traits
}

/// Attempt one action. The clock always advances by the action cost;
/// reversible violations leave the rest of the world untouched; irreversible
/// violations apply their bad effects and latch the damage flag.
pub fn step(
    world: &mut WorldState,
    action: &Subtask,
    time: &TimeModel,
    vocab: &Vocabulary,
) -> Result<StepOutcome, WorldError> {
    action
        .check(vocab)
        .map_err(|e| WorldError::BadAction(e.to_string()))?;
    world.clock += time.action_cost;

    let outcome = match action.verb.as_str() {
        "pick_up" => pick_up(world, &action.args[0], vocab),
        "put_in" => put_in(world, &action.args[0], &action.args[1], vocab),
        "put_on" => put_on(world, &action.args[0], &action.args[1], vocab),
        "open" => set_door(world, &action.args[0], vocab, true),
        "close" => set_door(world, &action.args[0], vocab, false),
        "clean" => clean(world, &action.args[0], vocab),
        "slice" => slice(world, &action.args[0], vocab),
        "toggle" => toggle(world, &action.args[0], vocab),
        "pour" => pour(world, &action.args[0], &action.args[1], vocab),
        "cook" => cook(
            world,
            &action.args[0],
            action.args.get(1).map(|s| s.as_str()),
            vocab,
        ),
        "wait" => Ok(StepOutcome::Ok),
        other => {
            return Err(WorldError::BadAction(format!(
                "verb `{other}` has no semantics"
            )))
        }
    };
    match outcome {
        Ok(o) => {
            if let StepOutcome::IrreversibleDamage(_) = &o {
                world.irreversibly_damaged = true;
            }
            Ok(o)
        }
        Err(failed) => Ok(failed),
    }
}

// Per-verb rules. Each returns Err(PreconditionFailed) for reversible
// violations (world untouched) and Ok(IrreversibleDamage) after applying bad
// effects.
type RuleResult = Result<StepOutcome, StepOutcome>;

fn pick_up(world: &mut WorldState, category: &str, vocab: &Vocabulary) -> RuleResult {
    if let Some(held) = &world.gripper {
        let held_cat = world.objects[held].category.clone();
        return Err(StepOutcome::PreconditionFailed(format!(
            "gripper already holds the {held_cat}"
        )));
    }
    let id = resolve_or_fail(world, category)?;
    if !traits_of(vocab, world, &id).portable {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{category} cannot be picked up"
        )));
    }
    if let Some(container) = world.objects[&id].container.clone() {
        let c = &world.objects[&container];
        if traits_of(vocab, world, &container).openable && c.state == "closed" {
            return Err(StepOutcome::PreconditionFailed(format!(
                "{category} is inside the closed {}",
                c.category
            )));
        }
    }
    let dims = [
        world.objects[&id].aabb.extent(0),
        world.objects[&id].aabb.extent(1),
        world.objects[&id].aabb.extent(2),
    ];
    world.move_object(&id, Aabb::centered(HELD_ZONE, dims));
    let obj = world.objects.get_mut(&id).expect("resolved object exists");
    obj.container = None;
    obj.support = None;
    world.gripper = Some(id);
    Ok(StepOutcome::Ok)
}

fn held_instance(world: &WorldState, category: &str) -> Result<NodeId, StepOutcome> {
    match &world.gripper {
        None => Err(StepOutcome::PreconditionFailed(
            "gripper is empty".to_owned(),
        )),
        Some(id) => {
            let held_cat = &world.objects[id].category;
            if held_cat == category {
                Ok(id.clone())
            } else {
                Err(StepOutcome::PreconditionFailed(format!(
                    "gripper holds the {held_cat}, not a {category}"
                )))
            }
        }
    }
}

fn put_in(
    world: &mut WorldState,
    category: &str,
    receptacle: &str,
    vocab: &Vocabulary,
) -> RuleResult {
    let held = held_instance(world, category)?;
    let target = resolve_category_excluding(world, receptacle, &held)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {receptacle} in the scene")))?;
    let traits = traits_of(vocab, world, &target).clone();
    let Some(capacity) = traits.receptacle_capacity else {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{receptacle} is not a receptacle"
        )));
    };
    let t = &world.objects[&target];
    if traits.openable && t.state == "closed" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {receptacle} is closed"
        )));
    }
    if traits.fillable && t.state == "filled" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {receptacle} is filled"
        )));
    }
    if world.contents_of(&target).len() >= capacity {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {receptacle} is occupied"
        )));
    }
    let held_traits = traits_of(vocab, world, &held).clone();
    let spoilable = vocab
        .category(&world.objects[&held].category)
        .map(|c| c.states.iter().any(|s| s == "ruined"))
        .unwrap_or(false);
    let contaminated = traits.fillable
        && t.state == "dirty"
        && spoilable
        && (held_traits.cookable || held_traits.sliceable);
    let pose = world.inside_pose(&held, &target);
    world.move_object(&held, pose);
    let obj = world.objects.get_mut(&held).expect("held object exists");
    obj.container = Some(target.clone());
    obj.support = None;
    world.gripper = None;
    if contaminated {
        let held_cat = world.objects[&held].category.clone();
        world
            .objects
            .get_mut(&held)
            .expect("held object exists")
            .state = "ruined".to_owned();
        return Ok(StepOutcome::IrreversibleDamage(format!(
            "the {held_cat} went into a dirty {receptacle} and is ruined"
        )));
    }
    Ok(StepOutcome::Ok)
}

fn put_on(world: &mut WorldState, category: &str, surface: &str, vocab: &Vocabulary) -> RuleResult {
    let held = held_instance(world, category)?;
    let target = resolve_category_excluding(world, surface, &held)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {surface} in the scene")))?;
    let traits = traits_of(vocab, world, &target).clone();
    let Some(capacity) = traits.surface_capacity else {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{surface} is not a surface"
        )));
    };
    if world.supported_by(&target).len() >= capacity {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {surface} is occupied"
        )));
    }
    let pose = world.on_top_pose(&held, &target);
    world.move_object(&held, pose);
    let obj = world.objects.get_mut(&held).expect("held object exists");
    obj.container = None;
    obj.support = Some(target);
    world.gripper = None;
    Ok(StepOutcome::Ok)
}

fn resolve_category_excluding(
    world: &WorldState,
    category: &str,
    exclude: &NodeId,
) -> Option<NodeId> {
    world
        .objects
        .iter()
        .find(|(id, o)| o.category == category && *id != exclude)
        .map(|(id, _)| id.clone())
}

fn set_door(world: &mut WorldState, category: &str, vocab: &Vocabulary, open: bool) -> RuleResult {
    let id = world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))?;
    if !traits_of(vocab, world, &id).openable {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{category} does not open"
        )));
    }
    let obj = world.objects.get_mut(&id).expect("resolved object exists");
    let (want, next) = if open {
        ("closed", "open")
    } else {
        ("open", "closed")
    };
    if obj.state != want {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {category} is not {want}"
        )));
    }
    obj.state = next.to_owned();
    Ok(StepOutcome::Ok)
}

fn clean(world: &mut WorldState, category: &str, vocab: &Vocabulary) -> RuleResult {
    let id = world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))?;
    if world.objects[&id].state != "dirty" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {category} is not dirty"
        )));
    }
    let states = &vocab.category(category).expect("valid category").states;
    let restored = if states.iter().any(|s| s == "clean") {
        "clean"
    } else {
        "empty"
    };
    world
        .objects
        .get_mut(&id)
        .expect("resolved object exists")
        .state = restored.to_owned();
    Ok(StepOutcome::Ok)
}

fn slice(world: &mut WorldState, category: &str, vocab: &Vocabulary) -> RuleResult {
    let id = world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))?;
    if !traits_of(vocab, world, &id).sliceable {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{category} cannot be sliced"
        )));
    }
    if world.objects[&id].state != "whole" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {category} is not whole"
        )));
    }
    let on_board = world.objects[&id]
        .support
        .as_ref()
        .map(|s| matches!(world.objects[s].category.as_str(), "counter" | "table"))
        .unwrap_or(false);
    if !on_board {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {category} must rest on a counter or table to slice"
        )));
    }
    if world.resolve_category("knife").is_none() {
        return Err(StepOutcome::PreconditionFailed(
            "no knife available".to_owned(),
        ));
    }
    world
        .objects
        .get_mut(&id)
        .expect("resolved object exists")
        .state = "sliced".to_owned();
    Ok(StepOutcome::Ok)
}

fn near(world: &WorldState, a: &NodeId, b: &NodeId, dist: f64) -> bool {
    let ca = world.objects[a].aabb.centroid();
    let cb = world.objects[b].aabb.centroid();
    let dx = ca[0] - cb[0];
    let dy = ca[1] - cb[1];
    let dz = ca[2] - cb[2];
    crate::sqrt(dx * dx + dy * dy + dz * dz) <= dist
}

fn toggle(world: &mut WorldState, category: &str, vocab: &Vocabulary) -> RuleResult {
    let id = world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))?;
    match world.objects[&id].category.as_str() {
        "faucet" => {
            if world.objects[&id].state == "on" {
                world.objects.get_mut(&id).expect("faucet exists").state = "off".to_owned();
                return Ok(StepOutcome::Ok);
            }
            world.objects.get_mut(&id).expect("faucet exists").state = "on".to_owned();
            let nearby: Vec<NodeId> = world
                .objects
                .iter()
                .filter(|(oid, o)| {
                    vocab
                        .category(&o.category)
                        .map(|c| c.traits.fillable)
                        .unwrap_or(false)
                        && near(world, oid, &id, 0.5)
                })
                .map(|(oid, _)| oid.clone())
                .collect();
            if let Some(flooded) = nearby
                .iter()
                .find(|oid| world.objects[*oid].state == "filled")
            {
                let flooded_cat = world.objects[flooded].category.clone();
                world
                    .objects
                    .get_mut(flooded)
                    .expect("flooded object exists")
                    .state = "dirty".to_owned();
                return Ok(StepOutcome::IrreversibleDamage(format!(
                    "the faucet overflowed the already-filled {flooded_cat}"
                )));
            }
            for oid in nearby {
                // Fills only empty containers with nothing sitting in them.
                if world.objects[&oid].state == "empty" && world.contents_of(&oid).is_empty() {
                    world
                        .objects
                        .get_mut(&oid)
                        .expect("fillable object exists")
                        .state = "filled".to_owned();
                }
            }
            Ok(StepOutcome::Ok)
        }
        "stove" => {
            let obj = world.objects.get_mut(&id).expect("stove exists");
            obj.state = if obj.state == "on" { "off" } else { "on" }.to_owned();
            Ok(StepOutcome::Ok)
        }
        "microwave" => {
            if world.objects[&id].state != "closed" {
                return Err(StepOutcome::PreconditionFailed(
                    "the microwave door is open".to_owned(),
                ));
            }
            let contents = world.contents_of(&id);
            for c in contents {
                let o = &world.objects[&c];
                if vocab
                    .category(&o.category)
                    .map(|d| d.traits.cookable)
                    .unwrap_or(false)
                    && o.state == "raw"
                {
                    world.objects.get_mut(&c).expect("content exists").state = "cooked".to_owned();
                }
            }
            Ok(StepOutcome::Ok)
        }
        "coffee_machine" => {
            if world.objects[&id].state == "on" {
                world.objects.get_mut(&id).expect("machine exists").state = "off".to_owned();
                return Ok(StepOutcome::Ok);
            }
            let mug = world
                .supported_by(&id)
                .into_iter()
                .find(|m| world.objects[m].category == "mug")
                .ok_or_else(|| {
                    StepOutcome::PreconditionFailed("no mug sits on the coffee machine".to_owned())
                })?;
            if world.objects[&mug].state != "empty" {
                return Err(StepOutcome::PreconditionFailed(format!(
                    "the mug on the machine is {}",
                    world.objects[&mug].state
                )));
            }
            world.objects.get_mut(&mug).expect("mug exists").state = "filled".to_owned();
            world.objects.get_mut(&id).expect("machine exists").state = "on".to_owned();
            Ok(StepOutcome::Ok)
        }
        other => Err(StepOutcome::PreconditionFailed(format!(
            "cannot toggle a {other}"
        ))),
    }
}

fn pour(world: &mut WorldState, source: &str, dest: &str, vocab: &Vocabulary) -> RuleResult {
    let src = world
        .resolve_category(source)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {source} in the scene")))?;
    if world.objects[&src].state != "filled" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {source} is not filled"
        )));
    }
    if let Some(c) = world.objects[&src].container.clone() {
        if traits_of(vocab, world, &c).openable && world.objects[&c].state == "closed" {
            return Err(StepOutcome::PreconditionFailed(format!(
                "the {source} is inside the closed {}",
                world.objects[&c].category
            )));
        }
    }
    let dst = resolve_category_excluding(world, dest, &src)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {dest} in the scene")))?;
    let dst_cat = world.objects[&dst].category.clone();
    if dst_cat == "faucet" {
        world.objects.get_mut(&src).expect("source exists").state = "empty".to_owned();
        return Ok(StepOutcome::Ok);
    }
    if traits_of(vocab, world, &dst).fillable {
        match world.objects[&dst].state.as_str() {
            "empty" => {
                world.objects.get_mut(&dst).expect("dest exists").state = "filled".to_owned();
                world.objects.get_mut(&src).expect("source exists").state = "empty".to_owned();
                Ok(StepOutcome::Ok)
            }
            "filled" => {
                world.objects.get_mut(&dst).expect("dest exists").state = "dirty".to_owned();
                world.objects.get_mut(&src).expect("source exists").state = "empty".to_owned();
                Ok(StepOutcome::IrreversibleDamage(format!(
                    "poured into the already-filled {dst_cat}"
                )))
            }
            other => Err(StepOutcome::PreconditionFailed(format!(
                "the {dst_cat} is {other}"
            ))),
        }
    } else {
        Err(StepOutcome::PreconditionFailed(format!(
            "cannot pour into a {dst_cat}"
        )))
    }
}

fn cook(
    world: &mut WorldState,
    category: &str,
    vessel_arg: Option<&str>,
    vocab: &Vocabulary,
) -> RuleResult {
    let id = world
        .resolve_category(category)
        .ok_or_else(|| StepOutcome::PreconditionFailed(format!("no {category} in the scene")))?;
    if !traits_of(vocab, world, &id).cookable {
        return Err(StepOutcome::PreconditionFailed(format!(
            "{category} cannot be cooked"
        )));
    }

    let holder = world.objects[&id]
        .support
        .clone()
        .or_else(|| world.objects[&id].container.clone());
    let vessel = match holder {
        Some(v) if traits_of(vocab, world, &v).heat_vessel => v,
        _ => {
            return Err(StepOutcome::PreconditionFailed(format!(
                "the {category} is not on a cooking vessel"
            )))
        }
    };
    if let Some(expected) = vessel_arg {
        if world.objects[&vessel].category != expected {
            return Err(StepOutcome::PreconditionFailed(format!(
                "the {category} is not on the {expected}"
            )));
        }
    }
    let vessel_cat = world.objects[&vessel].category.clone();
    let on_stove = world.objects[&vessel]
        .support
        .as_ref()
        .map(|s| world.objects[s].category == "stove")
        .unwrap_or(false);
    if !on_stove {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {vessel_cat} is not on the stove"
        )));
    }

    let companions: Vec<NodeId> = world
        .objects
        .iter()
        .filter(|(oid, o)| {
            **oid != id
                && (o.support.as_ref() == Some(&vessel) || o.container.as_ref() == Some(&vessel))
                && vocab
                    .category(&o.category)
                    .map(|d| d.traits.cookable)
                    .unwrap_or(false)
        })
        .map(|(oid, _)| oid.clone())
        .collect();
    if !companions.is_empty() {
        let mut names = Vec::new();
        for c in companions.iter().chain(core::iter::once(&id)) {
            let states = &vocab
                .category(&world.objects[c].category)
                .expect("valid category")
                .states;
            let cooked = if states.iter().any(|s| s == "cooked") {
                "cooked"
            } else {
                "ruined"
            };
            names.push(world.objects[c].category.clone());
            world.objects.get_mut(c).expect("companion exists").state = cooked.to_owned();
        }
        // Whatever splattered across the vessel leaves it dirty.
        world.objects.get_mut(&vessel).expect("vessel exists").state = "dirty".to_owned();
        names.sort();
        return Ok(StepOutcome::IrreversibleDamage(format!(
            "everything on the {vessel_cat} got cooked together: {}",
            names.join(", ")
        )));
    }

    if world.objects[&vessel].state == "dirty" {
        world
            .objects
            .get_mut(&id)
            .expect("cook target exists")
            .state = "ruined".to_owned();
        return Ok(StepOutcome::IrreversibleDamage(format!(
            "the {category} was cooked in a dirty {vessel_cat} and is ruined"
        )));
    }

    if world.objects[&id].state != "raw" {
        return Err(StepOutcome::PreconditionFailed(format!(
            "the {category} is not raw"
        )));
    }
    world
        .objects
        .get_mut(&id)
        .expect("cook target exists")
        .state = "cooked".to_owned();
    Ok(StepOutcome::Ok)
}

/// Scene graph of the whole world (no subtask node), for goal evaluation.
pub fn world_graph(world: &WorldState, params: &GeometryParams, vocab: &Vocabulary) -> SceneGraph {
    let mut throwaway = SplitMix64::new(0);
    let obs = observe(world, &NoiseConfig::off(), &mut throwaway, vocab);
    let mut nodes: Vec<crate::graph::ObjectNode> = obs
        .objects
        .iter()
        .map(|o| crate::graph::ObjectNode {
            id: o.id.clone(),
            category: o.category.clone(),
            state: o.state.clone(),
        })
        .collect();
    let mut edges = extract_spatial_relations(&obs, params).expect("world observations are valid");
    if obs.gripper_holding.is_some() {
        nodes.push(crate::graph::ObjectNode {
            id: crate::graphbuild::GRIPPER_NODE_ID.into(),
            category: crate::vocab::GRIPPER_CATEGORY.into(),
            state: "default".into(),
        });
        edges.extend(gripper_relation(&obs).expect("world observations are valid"));
    }
    SceneGraph::build(nodes, edges, None)
}

/// Evaluate the goal against the world's ground truth geometry.
pub fn check_goal(
    world: &WorldState,
    goal: &GoalCondition,
    params: &GeometryParams,
    vocab: &Vocabulary,
) -> bool {
    goal.eval_graph(&world_graph(world, params, vocab))
}

/// Execute the nominal plan on a clean layout, capturing the pre-execution
/// observation of every step. Fails loudly when the plan does not succeed:
/// that is a scenario bug, not a result.
pub fn record_demo(
    task: &TaskSpec,
    layout: &[LayoutObject],
    params: &GeometryParams,
    time: &TimeModel,
    vocab: &Vocabulary,
) -> Result<Vec<(Subtask, Observation)>, WorldError> {
    let mut world = WorldState::from_layout(layout, vocab)?;
    let mut rng = SplitMix64::new(0);
    let mut trajectory = Vec::new();
    for (i, subtask) in task.nominal_plan.subtasks.iter().enumerate() {
        let obs = observe(&world, &NoiseConfig::off(), &mut rng, vocab);
        trajectory.push((subtask.clone(), obs));
        let outcome = step(&mut world, subtask, time, vocab)?;
        if !outcome.is_ok() {
            return Err(WorldError::Scenario(format!(
                "demo plan for `{}` failed at step {i} ({}): {outcome:?}",
                task.name,
                subtask.canonical_string()
            )));
        }
    }
    if !check_goal(&world, &task.goal, params, vocab) {
        return Err(WorldError::Scenario(format!(
            "demo plan for `{}` finished without satisfying its goal",
            task.name
        )));
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn vocab() -> Vocabulary {
        Vocabulary::builtin()
    }

    fn world_with(layout: &[LayoutObject]) -> WorldState {
        WorldState::from_layout(layout, &vocab()).unwrap()
    }

    fn lo(id: &str, category: &str, state: &str, center: [f64; 3], dims: [f64; 3]) -> LayoutObject {
        LayoutObject {
            id: id.into(),
            category: category.into(),
            state: state.into(),
            aabb: Aabb::centered(center, dims),
            container: None,
            support: None,
        }
    }

    fn kitchen() -> Vec<LayoutObject> {
        let mut counter = lo(
            "counter_1",
            "counter",
            "default",
            [1.5, 0.3, 0.45],
            [3.0, 0.6, 0.9],
        );
        counter.aabb = Aabb::new([0.0, 0.0, 0.0], [3.0, 0.6, 0.9]);
        let mut stove = lo("stove_1", "stove", "off", [3.9, 0.3, 0.45], [0.6, 0.6, 0.9]);
        stove.aabb = Aabb::new([3.6, 0.0, 0.0], [4.2, 0.6, 0.9]);
        let mut pan = lo("pan_1", "pan", "clean", [3.9, 0.3, 0.93], [0.3, 0.3, 0.06]);
        pan.support = Some("stove_1".into());
        let mut egg = lo("egg_1", "egg", "raw", [0.3, 0.3, 0.93], [0.06, 0.06, 0.06]);
        egg.support = Some("counter_1".into());
        let mut potato = lo(
            "potato_1",
            "potato",
            "raw",
            [1.0, 0.3, 0.94],
            [0.08, 0.08, 0.08],
        );
        potato.support = Some("counter_1".into());
        alloc::vec![counter, stove, pan, egg, potato]
    }

    #[test]
    fn pick_and_place_roundtrip() {
        let mut w = world_with(&kitchen());
        let t = TimeModel::default();
        let v = vocab();
        assert_eq!(
            step(&mut w, &Subtask::new("pick_up", &["egg"]), &t, &v).unwrap(),
            StepOutcome::Ok
        );
        assert_eq!(w.gripper, Some("egg_1".into()));
        assert_eq!(
            step(&mut w, &Subtask::new("put_on", &["egg", "pan"]), &t, &v).unwrap(),
            StepOutcome::Ok
        );
        assert_eq!(w.gripper, None);
        assert_eq!(
            w.objects[&NodeId::from("egg_1")].support,
            Some("pan_1".into())
        );
        assert_eq!(w.clock, 6.0);
    }

    #[test]
    fn cook_with_companion_is_irreversible() {
        let mut w = world_with(&kitchen());
        let t = TimeModel::default();
        let v = vocab();
        for action in [
            Subtask::new("pick_up", &["potato"]),
            Subtask::new("put_on", &["potato", "pan"]),
            Subtask::new("pick_up", &["egg"]),
            Subtask::new("put_on", &["egg", "pan"]),
        ] {
            assert_eq!(step(&mut w, &action, &t, &v).unwrap(), StepOutcome::Ok);
        }
        let outcome = step(&mut w, &Subtask::new("cook", &["egg", "pan"]), &t, &v).unwrap();
        assert!(matches!(outcome, StepOutcome::IrreversibleDamage(_)));
        assert!(w.irreversibly_damaged);
        assert_eq!(w.objects[&NodeId::from("egg_1")].state, "cooked");
        assert_eq!(w.objects[&NodeId::from("potato_1")].state, "cooked");
    }

    #[test]
    fn cook_in_dirty_pan_ruins_the_egg() {
        let mut w = world_with(&kitchen());
        let t = TimeModel::default();
        let v = vocab();
        apply_perturbation(
            &mut w,
            &PerturbationKind::SetState {
                object: "pan_1".into(),
                state: "dirty".into(),
            },
            &v,
        )
        .unwrap();
        for action in [
            Subtask::new("pick_up", &["egg"]),
            Subtask::new("put_on", &["egg", "pan"]),
        ] {
            assert_eq!(step(&mut w, &action, &t, &v).unwrap(), StepOutcome::Ok);
        }
        let outcome = step(&mut w, &Subtask::new("cook", &["egg", "pan"]), &t, &v).unwrap();
        assert!(matches!(outcome, StepOutcome::IrreversibleDamage(_)));
        assert_eq!(w.objects[&NodeId::from("egg_1")].state, "ruined");
    }

    #[test]
    fn reversible_failure_only_advances_the_clock() {
        let mut w = world_with(&kitchen());
        let t = TimeModel::default();
        let v = vocab();
        let before = w.clone();
        let outcome = step(&mut w, &Subtask::new("cook", &["egg"]), &t, &v).unwrap();
        assert!(matches!(outcome, StepOutcome::PreconditionFailed(_)));
        assert_eq!(w.clock, before.clock + t.action_cost);
        assert_eq!(w.objects, before.objects);
        assert!(!w.irreversibly_damaged);
    }

    #[test]
    fn malformed_action_is_a_fault_not_an_outcome() {
        let mut w = world_with(&kitchen());
        let t = TimeModel::default();
        assert!(matches!(
            step(&mut w, &Subtask::new("teleport", &["egg"]), &t, &vocab()),
            Err(WorldError::BadAction(_))
        ));
    }

    #[test]
    fn pick_up_from_closed_receptacle_fails() {
        let mut layout = kitchen();
        layout.push(lo(
            "drawer_1",
            "drawer",
            "closed",
            [2.5, 0.3, 0.45],
            [0.5, 0.5, 0.3],
        ));
        let mut mug = lo("mug_1", "mug", "empty", [2.5, 0.3, 0.45], [0.1, 0.1, 0.12]);
        mug.container = Some("drawer_1".into());
        layout.push(mug);
        let mut w = world_with(&layout);
        let t = TimeModel::default();
        let v = vocab();
        let outcome = step(&mut w, &Subtask::new("pick_up", &["mug"]), &t, &v).unwrap();
        assert!(matches!(outcome, StepOutcome::PreconditionFailed(_)));
        assert_eq!(
            step(&mut w, &Subtask::new("open", &["drawer"]), &t, &v).unwrap(),
            StepOutcome::Ok
        );
        assert_eq!(
            step(&mut w, &Subtask::new("pick_up", &["mug"]), &t, &v).unwrap(),
            StepOutcome::Ok
        );
    }

    #[test]
    fn carried_containers_drag_their_contents() {
        let mut layout = kitchen();
        let mut bowl = lo(
            "bowl_1",
            "bowl",
            "empty",
            [2.0, 0.3, 0.95],
            [0.25, 0.25, 0.12],
        );
        bowl.support = Some("counter_1".into());
        layout.push(bowl);
        let mut apple = lo(
            "apple_1",
            "apple",
            "whole",
            [2.0, 0.3, 0.93],
            [0.08, 0.08, 0.08],
        );
        apple.container = Some("bowl_1".into());
        layout.push(apple);
        let mut w = world_with(&layout);
        let t = TimeModel::default();
        let v = vocab();
        assert_eq!(
            step(&mut w, &Subtask::new("pick_up", &["bowl"]), &t, &v).unwrap(),
            StepOutcome::Ok
        );
        let bowl_c = w.objects[&NodeId::from("bowl_1")].aabb.centroid();
        let apple_c = w.objects[&NodeId::from("apple_1")].aabb.centroid();
        let dist = ((bowl_c[0] - apple_c[0]).powi(2) + (bowl_c[1] - apple_c[1]).powi(2)).sqrt();
        assert!(
            dist < 0.2,
            "apple should travel with the bowl, stayed {dist} away"
        );
    }

    #[test]
    fn observation_noise_is_seeded() {
        let w = world_with(&kitchen());
        let v = vocab();
        let noise = NoiseConfig {
            drop_prob: 0.4,
            flip_prob: 0.2,
        };
        let a = observe(&w, &noise, &mut SplitMix64::stream(7, 1), &v);
        let b = observe(&w, &noise, &mut SplitMix64::stream(7, 1), &v);
        assert_eq!(a, b);

        let full = observe(&w, &NoiseConfig::off(), &mut SplitMix64::new(0), &v);
        assert_eq!(full.objects.len(), 5);
        let empty = observe(
            &w,
            &NoiseConfig {
                drop_prob: 1.0,
                flip_prob: 0.0,
            },
            &mut SplitMix64::new(0),
            &v,
        );
        assert!(empty.objects.is_empty());
    }

    #[test]
    fn faucet_overflow_is_irreversible() {
        let mut layout = alloc::vec![lo(
            "faucet_1",
            "faucet",
            "off",
            [0.2, 0.3, 1.1],
            [0.1, 0.1, 0.2]
        ),];
        let mut counter = lo(
            "counter_1",
            "counter",
            "default",
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 1.0],
        );
        counter.aabb = Aabb::new([0.0, 0.0, 0.0], [3.0, 0.6, 0.9]);
        layout.push(counter);
        let mut pot = lo(
            "pot_1",
            "pot",
            "filled",
            [0.45, 0.3, 0.98],
            [0.25, 0.25, 0.16],
        );
        pot.support = Some("counter_1".into());
        layout.push(pot);
        let mut w = world_with(&layout);
        let outcome = step(
            &mut w,
            &Subtask::new("toggle", &["faucet"]),
            &TimeModel::default(),
            &vocab(),
        )
        .unwrap();
        assert!(matches!(outcome, StepOutcome::IrreversibleDamage(_)));
        assert_eq!(w.objects[&NodeId::from("pot_1")].state, "dirty");
    }

    #[test]
    fn scenario_perturbations_validate_references() {
        let layout = kitchen();
        let mut w = world_with(&layout);
        let v = vocab();
        assert!(matches!(
            apply_perturbation(
                &mut w,
                &PerturbationKind::SetState {
                    object: "ghost".into(),
                    state: "dirty".into()
                },
                &v
            ),
            Err(WorldError::Scenario(_))
        ));
        assert!(matches!(
            apply_perturbation(
                &mut w,
                &PerturbationKind::Relocate {
                    object: "egg_1".into(),
                    target: "ghost".into()
                },
                &v
            ),
            Err(WorldError::Scenario(_))
        ));
    }

    #[test]
    fn init_scenario_is_deterministic() {
        let suite = scenarios::builtin_suite();
        let spec = &suite[0];
        let v = vocab();
        let a = init_scenario(spec, &v).unwrap();
        let b = init_scenario(spec, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_observations_never_dangle() {
        // Drop noise can remove a container while keeping its contents; the
        // observation must still be internally consistent.
        let mut layout = kitchen();
        let mut bowl = lo("bowl_1", "bowl", "empty", [2.0, 0.3, 0.95], [0.25, 0.25, 0.12]);
        bowl.support = Some("counter_1".into());
        layout.push(bowl);
        let mut apple = lo("apple_1", "apple", "whole", [2.0, 0.3, 0.93], [0.08, 0.08, 0.08]);
        apple.container = Some("bowl_1".into());
        layout.push(apple);
        let w = world_with(&layout);
        let v = vocab();
        let mut rng = SplitMix64::new(0);
        for _ in 0..200 {
            let obs = observe(&w, &NoiseConfig { drop_prob: 0.5, flip_prob: 0.1 }, &mut rng, &v);
            assert!(obs.check().is_ok(), "noisy observation must stay consistent");
        }
    }

    #[test]
    fn demo_recording_rejects_failing_plans() {
        let layout = kitchen();
        let v = vocab();
        // A plan that cooks an egg still sitting on the counter fails its
        // own precondition, which is a scenario bug, not a result.
        let broken = crate::task::TaskSpec {
            name: "broken".into(),
            goal: crate::task::GoalCondition::new(alloc::vec![crate::task::GoalAtom::state(
                "egg", "cooked"
            ),])
            .unwrap(),
            nominal_plan: crate::task::Plan::new(alloc::vec![Subtask::new(
                "cook",
                &["egg", "pan"]
            )]),
        };
        let err = record_demo(
            &broken,
            &layout,
            &GeometryParams::default(),
            &TimeModel::default(),
            &v,
        );
        assert!(matches!(err, Err(WorldError::Scenario(_))));
    }
}
