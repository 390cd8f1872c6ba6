//! The built-in evaluation suite: eleven household tasks (eight full plans
//! plus three single-step fetch tasks), each with a nominal plan, four
//! demonstration layouts, and one perturbed evaluation layout per scenario,
//! spread over five failure categories.
//!
//! Layout conventions keep the geometry analyzable: counter slots sit 0.7 m
//! apart (past the 0.5 m `near` threshold, so counter items relate only to
//! the counter), furniture stands more than 0.5 m from everything else, and
//! the pot's slot next to the faucet is the one deliberate `near`/lateral
//! pair. Demonstration layouts jitter portable item positions without
//! changing any relation, so a clean evaluation scene always matches at
//! least one reference exactly.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::graphbuild::Aabb;
use crate::simworld::{
    ApplyAt, FailureCategory, LayoutObject, Perturbation, PerturbationKind, ScenarioSpec,
};
use crate::task::{GoalAtom, GoalCondition, Plan, Subtask, TaskSpec};

fn obj(id: &str, category: &str, state: &str, aabb: Aabb) -> LayoutObject {
    LayoutObject {
        id: id.into(),
        category: category.into(),
        state: state.into(),
        aabb,
        container: None,
        support: None,
    }
}

fn on(mut o: LayoutObject, support: &str) -> LayoutObject {
    o.support = Some(support.into());
    o
}

fn inside(mut o: LayoutObject, container: &str) -> LayoutObject {
    o.container = Some(container.into());
    o
}

// Fixed furniture. Every piece keeps > 0.5 m centroid distance from the
// others so no incidental `near` edges appear.
fn counter() -> LayoutObject {
    obj(
        "counter_1",
        "counter",
        "default",
        Aabb::new([0.0, 0.0, 0.0], [3.0, 0.6, 0.9]),
    )
}

fn stove() -> LayoutObject {
    obj(
        "stove_1",
        "stove",
        "off",
        Aabb::new([3.6, 0.0, 0.0], [4.2, 0.6, 0.9]),
    )
}

fn table() -> LayoutObject {
    obj(
        "table_1",
        "table",
        "default",
        Aabb::new([0.0, 2.0, 0.0], [1.2, 2.8, 0.75]),
    )
}

fn microwave() -> LayoutObject {
    obj(
        "microwave_1",
        "microwave",
        "closed",
        Aabb::new([4.6, 0.0, 0.6], [5.2, 0.6, 1.1]),
    )
}

fn fridge() -> LayoutObject {
    obj(
        "fridge_1",
        "fridge",
        "closed",
        Aabb::new([5.6, 0.0, 0.0], [6.4, 0.8, 1.8]),
    )
}

fn drawer() -> LayoutObject {
    obj(
        "drawer_1",
        "drawer",
        "closed",
        Aabb::new([2.2, 1.4, 0.3], [2.7, 1.9, 0.6]),
    )
}

fn cupboard() -> LayoutObject {
    obj(
        "cupboard_1",
        "cupboard",
        "closed",
        Aabb::new([0.0, 1.2, 1.4], [0.6, 1.8, 2.0]),
    )
}

fn faucet() -> LayoutObject {
    obj(
        "faucet_1",
        "faucet",
        "off",
        Aabb::new([0.08, 0.48, 0.95], [0.22, 0.62, 1.15]),
    )
}

/// Counter slot centers; slot 0 is the one within faucet reach.
fn slot_x(i: usize) -> f64 {
    0.35 + i as f64 * 0.7
}

fn counter_item(
    id: &str,
    category: &str,
    state: &str,
    slot: usize,
    dims: [f64; 3],
    dx: f64,
) -> LayoutObject {
    let center = [slot_x(slot) + dx, 0.3, 0.9 + dims[2] / 2.0 + 0.005];
    on(
        obj(id, category, state, Aabb::centered(center, dims)),
        "counter_1",
    )
}

const MUG: [f64; 3] = [0.1, 0.1, 0.12];
const POT: [f64; 3] = [0.25, 0.25, 0.16];
const PAN: [f64; 3] = [0.3, 0.3, 0.06];
const PLATE: [f64; 3] = [0.24, 0.24, 0.03];
const BOWL: [f64; 3] = [0.22, 0.22, 0.12];
const FOOD: [f64; 3] = [0.08, 0.08, 0.08];
const KNIFE: [f64; 3] = [0.2, 0.04, 0.02];
const MACHINE: [f64; 3] = [0.3, 0.3, 0.35];

fn goal(atoms: Vec<GoalAtom>) -> GoalCondition {
    GoalCondition::new(atoms).expect("suite goals are non-empty")
}

fn plan(steps: &[(&str, &[&str])]) -> Plan {
    Plan::new(steps.iter().map(|(v, a)| Subtask::new(v, a)).collect())
}

/// Jitter offsets applied to portable items per demonstration layout; small
/// enough to keep every spatial relation intact.
const DEMO_JITTER: [f64; 4] = [0.0, 0.02, -0.02, 0.04];

struct TaskDef {
    name: &'static str,
    goal: GoalCondition,
    plan: Plan,
    /// Builds a layout with the given x-jitter on portable items.
    layout: fn(f64) -> Vec<LayoutObject>,
}

impl TaskDef {
    fn task_spec(&self) -> TaskSpec {
        TaskSpec {
            name: self.name.to_string(),
            goal: self.goal.clone(),
            nominal_plan: self.plan.clone(),
        }
    }

    fn demo_layouts(&self) -> Vec<Vec<LayoutObject>> {
        DEMO_JITTER.iter().map(|dx| (self.layout)(*dx)).collect()
    }

    fn scenario(
        &self,
        label: &str,
        category: FailureCategory,
        failing_step: usize,
        golden: bool,
        kind: PerturbationKind,
    ) -> ScenarioSpec {
        ScenarioSpec {
            name: format!("{}/{}", self.name, label),
            task: self.task_spec(),
            layout: (self.layout)(0.0),
            demo_layouts: self.demo_layouts(),
            perturbation: Some(Perturbation {
                kind,
                apply_at: ApplyAt::T0,
            }),
            failure_category: category,
            failing_step: Some(failing_step),
            golden,
            park_location: "counter".into(),
        }
    }
}

fn relocate(object: &str, target: &str) -> PerturbationKind {
    PerturbationKind::Relocate {
        object: object.into(),
        target: target.into(),
    }
}

fn set_state(object: &str, state: &str) -> PerturbationKind {
    PerturbationKind::SetState {
        object: object.into(),
        state: state.into(),
    }
}

fn remove(object: &str) -> PerturbationKind {
    PerturbationKind::RemoveObject {
        object: object.into(),
    }
}

fn add(id: &str, category: &str, state: &str, into: &str) -> PerturbationKind {
    PerturbationKind::AddObject {
        id: id.into(),
        category: category.into(),
        state: state.into(),
        into: into.into(),
    }
}

// --- task definitions --------------------------------------------------------

/// Single-object micro-task: pick the item up off the floor. Scenes this
/// sparse make node-level discrepancies carry the whole score.
fn fetch_task(category: &'static str, state: &'static str) -> TaskDef {
    fn layout_knife(dx: f64) -> Vec<LayoutObject> {
        vec![obj(
            "knife_1",
            "knife",
            "default",
            Aabb::centered([0.5 + dx, 1.5, 0.06], KNIFE),
        )]
    }
    fn layout_tomato(dx: f64) -> Vec<LayoutObject> {
        vec![obj(
            "tomato_1",
            "tomato",
            "whole",
            Aabb::centered([0.5 + dx, 1.5, 0.04], FOOD),
        )]
    }
    fn layout_plate(dx: f64) -> Vec<LayoutObject> {
        vec![obj(
            "plate_1",
            "plate",
            "clean",
            Aabb::centered([0.5 + dx, 1.5, 0.02], PLATE),
        )]
    }
    let layout: fn(f64) -> Vec<LayoutObject> = match category {
        "knife" => layout_knife,
        "tomato" => layout_tomato,
        "plate" => layout_plate,
        _ => unreachable!("fetch tasks cover knife, tomato, plate"),
    };
    let _ = state;
    TaskDef {
        name: match category {
            "knife" => "fetch_knife",
            "tomato" => "fetch_tomato",
            _ => "fetch_plate",
        },
        goal: goal(vec![GoalAtom::relation(
            category,
            crate::graph::Predicate::HeldByRobot,
            "robot_gripper",
        )]),
        plan: plan(&[("pick_up", &[category])]),
        layout,
    }
}

fn make_coffee() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        vec![
            counter(),
            table(),
            cupboard(),
            counter_item("coffee_machine_1", "coffee_machine", "off", 3, MACHINE, 0.0),
            counter_item("mug_1", "mug", "empty", 1, MUG, dx),
            counter_item("apple_1", "apple", "whole", 0, FOOD, dx),
        ]
    }
    TaskDef {
        name: "make_coffee",
        goal: goal(vec![
            GoalAtom::state("mug", "filled"),
            GoalAtom::relation("mug", crate::graph::Predicate::OnTopOf, "table"),
        ]),
        plan: plan(&[
            ("pick_up", &["mug"]),
            ("put_on", &["mug", "coffee_machine"]),
            ("toggle", &["coffee_machine"]),
            ("pick_up", &["mug"]),
            ("put_on", &["mug", "table"]),
        ]),
        layout,
    }
}

/// Variant layout with the mug stored inside an open drawer.
fn make_coffee_drawer() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        let mut drawer_open = drawer();
        drawer_open.state = "open".into();
        let mug = inside(
            obj(
                "mug_1",
                "mug",
                "empty",
                Aabb::centered([2.45 + dx, 1.65, 0.38], MUG),
            ),
            "drawer_1",
        );
        vec![
            counter(),
            table(),
            drawer_open,
            counter_item("coffee_machine_1", "coffee_machine", "off", 3, MACHINE, 0.0),
            mug,
        ]
    }
    TaskDef {
        name: "make_coffee_drawer",
        goal: goal(vec![
            GoalAtom::state("mug", "filled"),
            GoalAtom::relation("mug", crate::graph::Predicate::OnTopOf, "table"),
        ]),
        plan: plan(&[
            ("pick_up", &["mug"]),
            ("put_on", &["mug", "coffee_machine"]),
            ("toggle", &["coffee_machine"]),
            ("pick_up", &["mug"]),
            ("put_on", &["mug", "table"]),
        ]),
        layout,
    }
}

fn boil_water() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        vec![
            counter(),
            stove(),
            faucet(),
            table(),
            counter_item("pot_1", "pot", "empty", 0, POT, dx),
            counter_item("mug_1", "mug", "empty", 2, MUG, dx),
        ]
    }
    TaskDef {
        name: "boil_water",
        goal: goal(vec![
            GoalAtom::state("pot", "filled"),
            GoalAtom::relation("pot", crate::graph::Predicate::OnTopOf, "stove"),
            GoalAtom::state("stove", "on"),
        ]),
        plan: plan(&[
            ("toggle", &["faucet"]),
            ("pick_up", &["pot"]),
            ("put_on", &["pot", "stove"]),
            ("toggle", &["stove"]),
        ]),
        layout,
    }
}

fn heat_potato() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        vec![
            counter(),
            microwave(),
            cupboard(),
            counter_item("potato_1", "potato", "raw", 1, FOOD, dx),
            counter_item("plate_1", "plate", "clean", 2, PLATE, dx),
            counter_item("bowl_1", "bowl", "empty", 3, BOWL, dx),
        ]
    }
    TaskDef {
        name: "heat_potato",
        goal: goal(vec![
            GoalAtom::state("potato", "cooked"),
            GoalAtom::relation("potato", crate::graph::Predicate::OnTopOf, "plate"),
        ]),
        plan: plan(&[
            ("open", &["microwave"]),
            ("pick_up", &["potato"]),
            ("put_in", &["potato", "microwave"]),
            ("close", &["microwave"]),
            ("toggle", &["microwave"]),
            ("open", &["microwave"]),
            ("pick_up", &["potato"]),
            ("put_on", &["potato", "plate"]),
        ]),
        layout,
    }
}

fn cook_egg() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        let pan = on(
            obj(
                "pan_1",
                "pan",
                "clean",
                Aabb::centered([3.9, 0.3, 0.9 + PAN[2] / 2.0 + 0.005], PAN),
            ),
            "stove_1",
        );
        vec![
            counter(),
            stove(),
            pan,
            counter_item("egg_1", "egg", "raw", 1, FOOD, dx),
            counter_item("potato_1", "potato", "raw", 2, FOOD, dx),
            counter_item("plate_1", "plate", "clean", 3, PLATE, dx),
            counter_item("tomato_1", "tomato", "whole", 0, FOOD, dx),
        ]
    }
    TaskDef {
        name: "cook_egg",
        goal: goal(vec![
            GoalAtom::state("egg", "cooked"),
            GoalAtom::relation("egg", crate::graph::Predicate::OnTopOf, "plate"),
            GoalAtom::state("potato", "raw"),
            GoalAtom::state("tomato", "whole"),
            GoalAtom::state("pan", "clean"),
        ]),
        plan: plan(&[
            ("pick_up", &["egg"]),
            ("put_on", &["egg", "pan"]),
            ("cook", &["egg", "pan"]),
            ("pick_up", &["egg"]),
            ("put_on", &["egg", "plate"]),
        ]),
        layout,
    }
}

/// Mid-task resumption: the egg already sits on the pan and the very first
/// subtask is the irreversible `cook`. A blocker here separates proactive
/// from post-hoc replanning cleanly: the first post-hoc verification runs
/// only after the damage is done.
fn resume_cook() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        let pan = on(
            obj(
                "pan_1",
                "pan",
                "clean",
                Aabb::centered([3.9, 0.3, 0.9 + PAN[2] / 2.0 + 0.005], PAN),
            ),
            "stove_1",
        );
        let egg = on(
            obj(
                "egg_1",
                "egg",
                "raw",
                Aabb::centered([3.9 + dx, 0.3, 0.93 + PAN[2] + FOOD[2] / 2.0], FOOD),
            ),
            "pan_1",
        );
        vec![
            counter(),
            stove(),
            pan,
            egg,
            counter_item("potato_1", "potato", "raw", 1, FOOD, dx),
            counter_item("tomato_1", "tomato", "whole", 0, FOOD, dx),
            counter_item("plate_1", "plate", "clean", 2, PLATE, dx),
        ]
    }
    TaskDef {
        name: "resume_cook",
        goal: goal(vec![
            GoalAtom::state("egg", "cooked"),
            GoalAtom::relation("egg", crate::graph::Predicate::OnTopOf, "plate"),
            GoalAtom::state("potato", "raw"),
            GoalAtom::state("tomato", "whole"),
            GoalAtom::state("pan", "clean"),
        ]),
        plan: plan(&[
            ("cook", &["egg", "pan"]),
            ("pick_up", &["egg"]),
            ("put_on", &["egg", "plate"]),
        ]),
        layout,
    }
}

fn make_salad() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        vec![
            counter(),
            table(),
            faucet(),
            counter_item("lettuce_1", "lettuce", "whole", 1, FOOD, dx),
            counter_item("bowl_1", "bowl", "empty", 2, BOWL, dx),
            counter_item("knife_1", "knife", "default", 3, KNIFE, dx),
        ]
    }
    TaskDef {
        name: "make_salad",
        goal: goal(vec![
            GoalAtom::state("lettuce", "sliced"),
            GoalAtom::relation("lettuce", crate::graph::Predicate::Inside, "bowl"),
            GoalAtom::relation("bowl", crate::graph::Predicate::OnTopOf, "table"),
        ]),
        plan: plan(&[
            ("slice", &["lettuce"]),
            ("pick_up", &["lettuce"]),
            ("put_in", &["lettuce", "bowl"]),
            ("pick_up", &["bowl"]),
            ("put_on", &["bowl", "table"]),
        ]),
        layout,
    }
}

fn store_groceries() -> TaskDef {
    fn layout(dx: f64) -> Vec<LayoutObject> {
        vec![
            counter(),
            fridge(),
            cupboard(),
            counter_item("apple_1", "apple", "whole", 1, FOOD, dx),
            counter_item("potato_1", "potato", "raw", 2, FOOD, dx),
        ]
    }
    TaskDef {
        name: "store_groceries",
        goal: goal(vec![
            GoalAtom::relation("apple", crate::graph::Predicate::Inside, "fridge"),
            GoalAtom::relation("potato", crate::graph::Predicate::Inside, "fridge"),
            GoalAtom::state("fridge", "closed"),
        ]),
        plan: plan(&[
            ("open", &["fridge"]),
            ("pick_up", &["apple"]),
            ("put_in", &["apple", "fridge"]),
            ("pick_up", &["potato"]),
            ("put_in", &["potato", "fridge"]),
            ("close", &["fridge"]),
        ]),
        layout,
    }
}

/// Build the full built-in suite.
pub fn builtin_suite() -> Vec<ScenarioSpec> {
    let mut suite = Vec::new();

    // Micro fetch tasks: a deleted target in a one-object scene is the purest
    // node-level discrepancy (edge and structure components stay at 1.0).
    for (category, state) in [
        ("knife", "default"),
        ("tomato", "whole"),
        ("plate", "clean"),
    ] {
        let task = fetch_task(category, state);
        suite.push(task.scenario(
            "missing-target",
            FailureCategory::Missing,
            0,
            false,
            remove(&format!("{category}_1")),
        ));
    }

    let coffee = make_coffee();
    suite.push(coffee.scenario(
        "occupied-machine",
        FailureCategory::Occupied,
        1,
        true,
        relocate("apple_1", "coffee_machine_1"),
    ));
    suite.push(coffee.scenario(
        "occupied-machine-foreign",
        FailureCategory::Occupied,
        1,
        false,
        add("apple_x", "apple", "whole", "coffee_machine_1"),
    ));
    suite.push(coffee.scenario(
        "misplaced-mug-cupboard",
        FailureCategory::Misplaced,
        0,
        true,
        relocate("mug_1", "cupboard_1"),
    ));
    suite.push(coffee.scenario(
        "missing-mug",
        FailureCategory::Missing,
        0,
        false,
        remove("mug_1"),
    ));
    suite.push(coffee.scenario(
        "missing-machine",
        FailureCategory::Missing,
        1,
        false,
        remove("coffee_machine_1"),
    ));
    suite.push(coffee.scenario(
        "missing-table",
        FailureCategory::Missing,
        4,
        false,
        remove("table_1"),
    ));
    suite.push(coffee.scenario(
        "wrong-state-mug-dirty",
        FailureCategory::WrongState,
        2,
        false,
        set_state("mug_1", "dirty"),
    ));

    let coffee_drawer = make_coffee_drawer();
    suite.push(coffee_drawer.scenario(
        "wrong-state-drawer-shut",
        FailureCategory::WrongState,
        0,
        true,
        set_state("drawer_1", "closed"),
    ));

    let boil = boil_water();
    suite.push(boil.scenario(
        "wrong-state-pot-prefilled",
        FailureCategory::WrongState,
        0,
        false,
        set_state("pot_1", "filled"),
    ));
    suite.push(boil.scenario(
        "wrong-state-pot-dirty",
        FailureCategory::WrongState,
        0,
        false,
        set_state("pot_1", "dirty"),
    ));
    suite.push(boil.scenario(
        "misplaced-pot-stove",
        FailureCategory::Misplaced,
        0,
        true,
        relocate("pot_1", "stove_1"),
    ));
    suite.push(boil.scenario(
        "misplaced-pot-table",
        FailureCategory::Misplaced,
        0,
        true,
        relocate("pot_1", "table_1"),
    ));
    suite.push(boil.scenario(
        "occupied-pot-mug",
        FailureCategory::Occupied,
        0,
        true,
        relocate("mug_1", "pot_1"),
    ));
    suite.push(boil.scenario(
        "occupied-pot-foreign",
        FailureCategory::Occupied,
        0,
        false,
        add("mug_x", "mug", "empty", "pot_1"),
    ));
    suite.push(boil.scenario(
        "missing-pot",
        FailureCategory::Missing,
        0,
        false,
        remove("pot_1"),
    ));
    suite.push(boil.scenario(
        "missing-faucet",
        FailureCategory::Missing,
        0,
        false,
        remove("faucet_1"),
    ));

    let heat = heat_potato();
    suite.push(heat.scenario(
        "occupied-microwave-bowl",
        FailureCategory::Occupied,
        2,
        true,
        relocate("bowl_1", "microwave_1"),
    ));
    suite.push(heat.scenario(
        "occupied-microwave-foreign",
        FailureCategory::Occupied,
        2,
        false,
        add("bowl_x", "bowl", "empty", "microwave_1"),
    ));
    suite.push(heat.scenario(
        "misplaced-plate-microwave",
        FailureCategory::Misplaced,
        2,
        true,
        relocate("plate_1", "microwave_1"),
    ));
    suite.push(heat.scenario(
        "misplaced-potato-cupboard",
        FailureCategory::Misplaced,
        1,
        true,
        relocate("potato_1", "cupboard_1"),
    ));
    suite.push(heat.scenario(
        "missing-potato",
        FailureCategory::Missing,
        1,
        false,
        remove("potato_1"),
    ));
    suite.push(heat.scenario(
        "missing-plate",
        FailureCategory::Missing,
        7,
        false,
        remove("plate_1"),
    ));
    suite.push(heat.scenario(
        "missing-microwave",
        FailureCategory::Missing,
        0,
        false,
        remove("microwave_1"),
    ));
    suite.push(heat.scenario(
        "occupied-plate-bowl",
        FailureCategory::Occupied,
        7,
        true,
        relocate("bowl_1", "plate_1"),
    ));
    suite.push(heat.scenario(
        "wrong-state-potato-spoiled",
        FailureCategory::WrongState,
        4,
        false,
        set_state("potato_1", "ruined"),
    ));

    let egg = cook_egg();
    suite.push(egg.scenario(
        "blocker-potato-pan",
        FailureCategory::Blocker,
        2,
        true,
        relocate("potato_1", "pan_1"),
    ));
    suite.push(egg.scenario(
        "blocker-tomato-pan",
        FailureCategory::Blocker,
        2,
        true,
        relocate("tomato_1", "pan_1"),
    ));
    suite.push(egg.scenario(
        "blocker-foreign-tomato",
        FailureCategory::Blocker,
        2,
        false,
        add("tomato_x", "tomato", "whole", "pan_1"),
    ));
    suite.push(egg.scenario(
        "wrong-state-dirty-pan",
        FailureCategory::WrongState,
        2,
        false,
        set_state("pan_1", "dirty"),
    ));
    suite.push(egg.scenario(
        "occupied-plate-potato",
        FailureCategory::Occupied,
        4,
        true,
        relocate("potato_1", "plate_1"),
    ));
    suite.push(egg.scenario(
        "misplaced-pan-counter",
        FailureCategory::Misplaced,
        2,
        true,
        relocate("pan_1", "counter_1"),
    ));
    suite.push(egg.scenario(
        "missing-egg",
        FailureCategory::Missing,
        0,
        false,
        remove("egg_1"),
    ));
    suite.push(egg.scenario(
        "missing-pan",
        FailureCategory::Missing,
        1,
        false,
        remove("pan_1"),
    ));

    let resume = resume_cook();
    suite.push(resume.scenario(
        "blocker-potato-pan",
        FailureCategory::Blocker,
        0,
        true,
        relocate("potato_1", "pan_1"),
    ));
    suite.push(resume.scenario(
        "blocker-tomato-pan",
        FailureCategory::Blocker,
        0,
        true,
        relocate("tomato_1", "pan_1"),
    ));
    suite.push(resume.scenario(
        "blocker-foreign-potato",
        FailureCategory::Blocker,
        0,
        false,
        add("potato_x", "potato", "raw", "pan_1"),
    ));
    suite.push(resume.scenario(
        "wrong-state-dirty-pan",
        FailureCategory::WrongState,
        0,
        false,
        set_state("pan_1", "dirty"),
    ));

    let salad = make_salad();
    suite.push(salad.scenario(
        "wrong-state-bowl-wine",
        FailureCategory::WrongState,
        2,
        true,
        set_state("bowl_1", "filled"),
    ));
    suite.push(salad.scenario(
        "wrong-state-bowl-dirty",
        FailureCategory::WrongState,
        2,
        false,
        set_state("bowl_1", "dirty"),
    ));
    suite.push(salad.scenario(
        "wrong-state-lettuce-wilted",
        FailureCategory::WrongState,
        0,
        false,
        set_state("lettuce_1", "ruined"),
    ));
    suite.push(salad.scenario(
        "misplaced-lettuce-bowl",
        FailureCategory::Misplaced,
        0,
        true,
        relocate("lettuce_1", "bowl_1"),
    ));
    suite.push(salad.scenario(
        "occupied-bowl-knife",
        FailureCategory::Occupied,
        2,
        true,
        relocate("knife_1", "bowl_1"),
    ));
    suite.push(salad.scenario(
        "occupied-bowl-foreign",
        FailureCategory::Occupied,
        2,
        false,
        add("apple_x", "apple", "whole", "bowl_1"),
    ));
    suite.push(salad.scenario(
        "missing-lettuce",
        FailureCategory::Missing,
        0,
        false,
        remove("lettuce_1"),
    ));
    suite.push(salad.scenario(
        "missing-knife",
        FailureCategory::Missing,
        0,
        false,
        remove("knife_1"),
    ));
    suite.push(salad.scenario(
        "missing-bowl",
        FailureCategory::Missing,
        2,
        false,
        remove("bowl_1"),
    ));
    suite.push(salad.scenario(
        "missing-table",
        FailureCategory::Missing,
        4,
        false,
        remove("table_1"),
    ));

    let store = store_groceries();
    suite.push(store.scenario(
        "misplaced-apple-cupboard",
        FailureCategory::Misplaced,
        1,
        true,
        relocate("apple_1", "cupboard_1"),
    ));
    suite.push(store.scenario(
        "misplaced-potato-cupboard",
        FailureCategory::Misplaced,
        3,
        true,
        relocate("potato_1", "cupboard_1"),
    ));
    suite.push(store.scenario(
        "missing-apple",
        FailureCategory::Missing,
        1,
        false,
        remove("apple_1"),
    ));
    suite.push(store.scenario(
        "missing-potato",
        FailureCategory::Missing,
        3,
        false,
        remove("potato_1"),
    ));
    suite.push(store.scenario(
        "missing-fridge",
        FailureCategory::Missing,
        0,
        false,
        remove("fridge_1"),
    ));

    suite
}

/// Golden subset: scenarios whose proactive recovery is hand-verified to
/// restore a matching scene and finish the task.
pub fn golden_suite() -> Vec<ScenarioSpec> {
    builtin_suite().into_iter().filter(|s| s.golden).collect()
}
