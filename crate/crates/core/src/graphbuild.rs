//! Building scene graphs from agent observations.
//!
//! An [`Observation`] is the symbolic/geometric slice the agent sees: object
//! ids, categories, states and axis-aligned boxes in the world frame. Spatial
//! predicates are derived from the boxes with explicit, configurable
//! thresholds ([`GeometryParams`]); the gripper contributes `held_by_robot`
//! edges; the current subtask is attached as the detached context node.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{Edge, NodeId, ObjectNode, Predicate, SceneGraph};
use crate::task::Subtask;

/// Axis-aligned box, meters, world frame. `min < max` per axis when valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Aabb { min, max }
    }

    /// Box centered at `(x, y, z)` with extents `(dx, dy, dz)`.
    pub fn centered(center: [f64; 3], extents: [f64; 3]) -> Self {
        Aabb {
            min: [
                center[0] - extents[0] / 2.0,
                center[1] - extents[1] / 2.0,
                center[2] - extents[2] / 2.0,
            ],
            max: [
                center[0] + extents[0] / 2.0,
                center[1] + extents[1] / 2.0,
                center[2] + extents[2] / 2.0,
            ],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|a| self.min[a] >= self.max[a])
    }

    pub fn centroid(&self) -> [f64; 3] {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Move the box so its centroid lands on `center`, keeping extents.
    pub fn recentered(&self, center: [f64; 3]) -> Aabb {
        Aabb::centered(center, [self.extent(0), self.extent(1), self.extent(2)])
    }

    fn centroid_distance(&self, other: &Aabb) -> f64 {
        let a = self.centroid();
        let b = other.centroid();
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        crate::sqrt(dx * dx + dy * dy + dz * dz)
    }

    /// Fraction of `self`'s horizontal footprint overlapped by `other`'s.
    fn footprint_overlap(&self, other: &Aabb) -> f64 {
        let ox = overlap_1d(self.min[0], self.max[0], other.min[0], other.max[0]);
        let oy = overlap_1d(self.min[1], self.max[1], other.min[1], other.max[1]);
        let area = self.extent(0) * self.extent(1);
        if area <= 0.0 {
            return 0.0;
        }
        (ox * oy) / area
    }
}

fn overlap_1d(a_min: f64, a_max: f64, b_min: f64, b_max: f64) -> f64 {
    let lo = if a_min > b_min { a_min } else { b_min };
    let hi = if a_max < b_max { a_max } else { b_max };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

/// One object as the agent perceives it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedObject {
    pub id: NodeId,
    pub category: String,
    pub state: String,
    pub aabb: Aabb,
    /// Id of the enclosing receptacle, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<NodeId>,
}

/// The agent-visible snapshot taken immediately before a subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub objects: Vec<ObservedObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gripper_holding: Option<NodeId>,
    /// Simulated seconds at capture time.
    pub timestamp: f64,
}

/// Thresholds of the spatial heuristics. Defaults target kitchen-scale
/// scenes; these are configuration, not constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    /// Max gap between A's bottom face and B's top face for `on_top_of`.
    pub on_top_gap_max: f64,
    /// Min fraction of A's footprint overlapping B's for `on_top_of`.
    pub overlap_min: f64,
    /// Min fraction of A's sample points inside B's box for `inside`.
    pub containment_min: f64,
    /// Max centroid distance for `near`.
    pub near_dist_max: f64,
    /// World axis used for left/right; 0 = +x points right.
    pub lateral_axis: usize,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            on_top_gap_max: 0.03,
            overlap_min: 0.5,
            containment_min: 0.8,
            near_dist_max: 0.5,
            lateral_axis: 0,
        }
    }
}

/// Problems with an observation that make graph construction unsound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservationError {
    DuplicateId(String),
    DanglingHeldReference(String),
    HeldObjectInContainer { held: String, container: String },
    DanglingContainer { object: String, container: String },
    BadArgument(String),
}

impl core::fmt::Display for ObservationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ObservationError::DuplicateId(id) => write!(f, "duplicate observed id `{id}`"),
            ObservationError::DanglingHeldReference(id) => {
                write!(f, "gripper reports holding absent object `{id}`")
            }
            ObservationError::HeldObjectInContainer { held, container } => {
                write!(
                    f,
                    "held object `{held}` cannot also sit inside `{container}`"
                )
            }
            ObservationError::DanglingContainer { object, container } => {
                write!(
                    f,
                    "object `{object}` references absent container `{container}`"
                )
            }
            ObservationError::BadArgument(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ObservationError {}

impl Observation {
    pub fn object(&self, id: &NodeId) -> Option<&ObservedObject> {
        self.objects.iter().find(|o| &o.id == id)
    }

    /// Structural validity: unique ids, resolvable references.
    pub fn check(&self) -> Result<(), ObservationError> {
        for (i, o) in self.objects.iter().enumerate() {
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(ObservationError::DuplicateId(o.id.to_string()));
            }
            if let Some(c) = &o.container {
                if self.object(c).is_none() {
                    return Err(ObservationError::DanglingContainer {
                        object: o.id.to_string(),
                        container: c.to_string(),
                    });
                }
            }
        }
        if let Some(held) = &self.gripper_holding {
            match self.object(held) {
                None => return Err(ObservationError::DanglingHeldReference(held.to_string())),
                Some(o) => {
                    if let Some(c) = &o.container {
                        return Err(ObservationError::HeldObjectInContainer {
                            held: held.to_string(),
                            container: c.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A sample point labeled with the object it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub id: NodeId,
    pub point: [f64; 3],
}

/// Deterministic lattice of at least `samples_per_object` points inside each
/// object's box (n³ points with the smallest n where n³ ≥ samples). Boxes
/// with non-positive extent are skipped and reported in the warning list.
pub fn project_points(
    obs: &Observation,
    samples_per_object: usize,
) -> Result<(Vec<LabeledPoint>, Vec<String>), ObservationError> {
    if samples_per_object < 8 {
        return Err(ObservationError::BadArgument(format!(
            "samples_per_object must be at least 8, got {samples_per_object}"
        )));
    }
    let mut n = 2usize;
    while n * n * n < samples_per_object {
        n += 1;
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for o in &obs.objects {
        if o.aabb.is_degenerate() {
            warnings.push(format!("object `{}` has a degenerate box; skipped", o.id));
            continue;
        }
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let t = |i: usize, axis: usize| {
                        o.aabb.min[axis]
                            + (o.aabb.max[axis] - o.aabb.min[axis]) * i as f64 / (n - 1) as f64
                    };
                    points.push(LabeledPoint {
                        id: o.id.clone(),
                        point: [t(ix, 0), t(iy, 1), t(iz, 2)],
                    });
                }
            }
        }
    }
    Ok((points, warnings))
}

fn fraction_inside(inner: &Aabb, outer: &Aabb, lattice: usize) -> f64 {
    let n = lattice;
    let total = (n * n * n) as f64;
    let mut hit = 0usize;
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let t = |i: usize, axis: usize| {
                    inner.min[axis]
                        + (inner.max[axis] - inner.min[axis]) * i as f64 / (n - 1) as f64
                };
                if outer.contains_point([t(ix, 0), t(iy, 1), t(iz, 2)]) {
                    hit += 1;
                }
            }
        }
    }
    hit as f64 / total
}

const CONTAINMENT_LATTICE: usize = 3;

/// Derive spatial edges from geometry. Per ordered pair at most one
/// predicate, chosen by the priority inside > on_top_of > left/right > near.
/// A containment or support relation claims its unordered pair exclusively
/// (no mirrored edge); lateral and near relations are emitted in both
/// directions so the graph is invariant under node-id renaming. Containment
/// dominates globally: an object sitting inside some receptacle relates to
/// the rest of the scene only through its `inside` edges, never via
/// support or proximity (a lettuce in a bowl is not also "on" the counter).
pub fn extract_spatial_relations(
    obs: &Observation,
    params: &GeometryParams,
) -> Result<Vec<Edge>, ObservationError> {
    obs.check()?;
    let mut edges = Vec::new();
    let objs = &obs.objects;

    let inside = |a: &ObservedObject, b: &ObservedObject| -> bool {
        if a.container.as_ref() == Some(&b.id) {
            return true;
        }
        if a.aabb.is_degenerate() || b.aabb.is_degenerate() {
            return false;
        }
        fraction_inside(&a.aabb, &b.aabb, CONTAINMENT_LATTICE) >= params.containment_min
    };
    let on_top = |a: &ObservedObject, b: &ObservedObject| -> bool {
        let gap = a.aabb.min[2] - b.aabb.max[2];
        gap >= 0.0
            && gap <= params.on_top_gap_max
            && a.aabb.footprint_overlap(&b.aabb) >= params.overlap_min
    };
    let contained: Vec<bool> = objs
        .iter()
        .map(|a| objs.iter().any(|b| a.id != b.id && inside(a, b)))
        .collect();

    for i in 0..objs.len() {
        for j in (i + 1)..objs.len() {
            let (a, b) = (&objs[i], &objs[j]);
            if inside(a, b) {
                edges.push(Edge {
                    subject: a.id.clone(),
                    predicate: Predicate::Inside,
                    object: b.id.clone(),
                });
                continue;
            }
            if inside(b, a) {
                edges.push(Edge {
                    subject: b.id.clone(),
                    predicate: Predicate::Inside,
                    object: a.id.clone(),
                });
                continue;
            }
            if contained[i] || contained[j] {
                continue;
            }
            if on_top(a, b) {
                edges.push(Edge {
                    subject: a.id.clone(),
                    predicate: Predicate::OnTopOf,
                    object: b.id.clone(),
                });
                continue;
            }
            if on_top(b, a) {
                edges.push(Edge {
                    subject: b.id.clone(),
                    predicate: Predicate::OnTopOf,
                    object: a.id.clone(),
                });
                continue;
            }
            if a.aabb.centroid_distance(&b.aabb) <= params.near_dist_max {
                let axis = params.lateral_axis;
                let offset = b.aabb.centroid()[axis] - a.aabb.centroid()[axis];
                let half_mean_width = (a.aabb.extent(axis) + b.aabb.extent(axis)) / 4.0;
                if offset > half_mean_width {
                    edges.push(Edge {
                        subject: a.id.clone(),
                        predicate: Predicate::LeftOf,
                        object: b.id.clone(),
                    });
                    edges.push(Edge {
                        subject: b.id.clone(),
                        predicate: Predicate::RightOf,
                        object: a.id.clone(),
                    });
                } else if -offset > half_mean_width {
                    edges.push(Edge {
                        subject: a.id.clone(),
                        predicate: Predicate::RightOf,
                        object: b.id.clone(),
                    });
                    edges.push(Edge {
                        subject: b.id.clone(),
                        predicate: Predicate::LeftOf,
                        object: a.id.clone(),
                    });
                } else {
                    edges.push(Edge {
                        subject: a.id.clone(),
                        predicate: Predicate::Near,
                        object: b.id.clone(),
                    });
                    edges.push(Edge {
                        subject: b.id.clone(),
                        predicate: Predicate::Near,
                        object: a.id.clone(),
                    });
                }
            }
        }
    }
    edges.sort();
    Ok(edges)
}

/// Id of the synthetic gripper node.
pub const GRIPPER_NODE_ID: &str = "gripper";

/// `held_by_robot` edge when the gripper holds something.
pub fn gripper_relation(obs: &Observation) -> Result<Vec<Edge>, ObservationError> {
    obs.check()?;
    Ok(match &obs.gripper_holding {
        Some(held) => alloc::vec![Edge {
            subject: held.clone(),
            predicate: Predicate::HeldByRobot,
            object: GRIPPER_NODE_ID.into(),
        }],
        None => Vec::new(),
    })
}

/// Assemble the full scene graph for one pre-subtask observation. The result
/// always passes `validate_graph` for valid observations.
pub fn build_scene_graph(
    obs: &Observation,
    subtask: &Subtask,
    params: &GeometryParams,
) -> Result<SceneGraph, ObservationError> {
    obs.check()?;
    let mut nodes: Vec<ObjectNode> = obs
        .objects
        .iter()
        .map(|o| ObjectNode {
            id: o.id.clone(),
            category: o.category.clone(),
            state: o.state.clone(),
        })
        .collect();
    let mut edges = extract_spatial_relations(obs, params)?;
    if obs.gripper_holding.is_some() {
        nodes.push(ObjectNode {
            id: GRIPPER_NODE_ID.into(),
            category: crate::vocab::GRIPPER_CATEGORY.into(),
            state: "default".into(),
        });
        edges.extend(gripper_relation(obs)?);
    }
    Ok(SceneGraph::build(nodes, edges, Some(subtask.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;
    use crate::vocab::Vocabulary;

    fn obj(id: &str, category: &str, state: &str, aabb: Aabb) -> ObservedObject {
        ObservedObject {
            id: id.into(),
            category: category.into(),
            state: state.into(),
            aabb,
            container: None,
        }
    }

    #[test]
    fn lattice_points_stay_inside() {
        let cube = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let obs = Observation {
            objects: alloc::vec![obj("c", "bowl", "empty", cube)],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let (points, warnings) = project_points(&obs, 8).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(points.len(), 8);
        assert!(points.iter().all(|p| cube.contains_point(p.point)));
    }

    #[test]
    fn point_labels_partition_by_box() {
        let a = Aabb::new([0.0, 0.0, 0.0], [0.2, 0.2, 0.2]);
        let b = Aabb::new([5.0, 5.0, 5.0], [5.2, 5.2, 5.2]);
        let obs = Observation {
            objects: alloc::vec![obj("a", "mug", "empty", a), obj("b", "mug", "empty", b)],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let (points, _) = project_points(&obs, 8).unwrap();
        for p in &points {
            let own = if p.id.as_str() == "a" { a } else { b };
            let other = if p.id.as_str() == "a" { b } else { a };
            assert!(own.contains_point(p.point));
            assert!(!other.contains_point(p.point));
        }
    }

    #[test]
    fn nested_boxes_give_inside_edge() {
        let bowl = Aabb::new([0.05, 0.05, 0.05], [0.25, 0.25, 0.2]);
        let micro = Aabb::new([0.0, 0.0, 0.0], [0.5, 0.5, 0.4]);
        let obs = Observation {
            objects: alloc::vec![
                obj("bowl_1", "bowl", "empty", bowl),
                obj("micro_1", "microwave", "open", micro)
            ],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let edges = extract_spatial_relations(&obs, &GeometryParams::default()).unwrap();
        assert_eq!(
            edges,
            alloc::vec![Edge::new("bowl_1", Predicate::Inside, "micro_1")]
        );
    }

    #[test]
    fn resting_pan_is_on_top_of_stove() {
        let stove = Aabb::new([0.0, 0.0, 0.0], [0.6, 0.6, 0.9]);
        let pan = Aabb::new([0.1, 0.1, 0.91], [0.5, 0.5, 1.0]);
        let obs = Observation {
            objects: alloc::vec![
                obj("pan_1", "pan", "clean", pan),
                obj("stove_1", "stove", "off", stove)
            ],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let edges = extract_spatial_relations(&obs, &GeometryParams::default()).unwrap();
        assert_eq!(
            edges,
            alloc::vec![Edge::new("pan_1", Predicate::OnTopOf, "stove_1")]
        );
    }

    #[test]
    fn distant_objects_have_no_edge() {
        let a = Aabb::centered([0.0, 0.0, 1.0], [0.1, 0.1, 0.1]);
        let b = Aabb::centered([2.0, 0.0, 1.0], [0.1, 0.1, 0.1]);
        let obs = Observation {
            objects: alloc::vec![obj("a", "mug", "empty", a), obj("b", "mug", "empty", b)],
            gripper_holding: None,
            timestamp: 0.0,
        };
        assert!(extract_spatial_relations(&obs, &GeometryParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn lateral_pair_is_mirrored() {
        let a = Aabb::centered([0.0, 0.0, 1.0], [0.1, 0.1, 0.1]);
        let b = Aabb::centered([0.3, 0.0, 1.0], [0.1, 0.1, 0.1]);
        let obs = Observation {
            objects: alloc::vec![obj("a", "mug", "empty", a), obj("b", "mug", "empty", b)],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let edges = extract_spatial_relations(&obs, &GeometryParams::default()).unwrap();
        assert_eq!(
            edges,
            alloc::vec![
                Edge::new("a", Predicate::LeftOf, "b"),
                Edge::new("b", Predicate::RightOf, "a"),
            ]
        );
    }

    #[test]
    fn gripper_relation_cases() {
        let mug = Aabb::centered([9.0, 9.0, 1.0], [0.1, 0.1, 0.1]);
        let mut obs = Observation {
            objects: alloc::vec![obj("mug_1", "mug", "empty", mug)],
            gripper_holding: Some("mug_1".into()),
            timestamp: 0.0,
        };
        assert_eq!(
            gripper_relation(&obs).unwrap(),
            alloc::vec![Edge::new("mug_1", Predicate::HeldByRobot, GRIPPER_NODE_ID)]
        );
        obs.gripper_holding = None;
        assert!(gripper_relation(&obs).unwrap().is_empty());
        obs.gripper_holding = Some("ghost".into());
        assert!(matches!(
            gripper_relation(&obs),
            Err(ObservationError::DanglingHeldReference(_))
        ));
    }

    #[test]
    fn held_object_in_container_is_contradictory() {
        let box_a = Aabb::centered([0.0, 0.0, 1.0], [0.1, 0.1, 0.1]);
        let box_f = Aabb::centered([0.0, 0.0, 1.0], [1.0, 1.0, 2.0]);
        let mut mug = obj("mug_1", "mug", "empty", box_a);
        mug.container = Some("fridge_1".into());
        let obs = Observation {
            objects: alloc::vec![mug, obj("fridge_1", "fridge", "open", box_f)],
            gripper_holding: Some("mug_1".into()),
            timestamp: 0.0,
        };
        assert!(matches!(
            obs.check(),
            Err(ObservationError::HeldObjectInContainer { .. })
        ));
    }

    #[test]
    fn built_graph_validates_and_is_deterministic() {
        let micro = Aabb::new([0.0, 0.0, 0.0], [0.5, 0.5, 0.4]);
        let bowl = Aabb::new([0.1, 0.1, 0.05], [0.3, 0.3, 0.2]);
        let obs = Observation {
            objects: alloc::vec![
                obj("micro_1", "microwave", "open", micro),
                obj("bowl_1", "bowl", "empty", bowl)
            ],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let subtask = Subtask::new("put_in", &["plate", "microwave"]);
        let g = build_scene_graph(&obs, &subtask, &GeometryParams::default()).unwrap();
        assert!(validate_graph(&g, &Vocabulary::builtin()).ok());
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(
            g.edges,
            alloc::vec![Edge::new("bowl_1", Predicate::Inside, "micro_1")]
        );
        assert_eq!(g.subtask, Some(subtask.clone()));

        let again = build_scene_graph(&obs, &subtask, &GeometryParams::default()).unwrap();
        assert_eq!(
            crate::graph::to_canonical_json(&g, "v"),
            crate::graph::to_canonical_json(&again, "v")
        );
    }

    #[test]
    fn empty_observation_gives_subtask_only_graph() {
        let obs = Observation {
            objects: alloc::vec![],
            gripper_holding: None,
            timestamp: 0.0,
        };
        let g = build_scene_graph(&obs, &Subtask::new("wait", &[]), &GeometryParams::default())
            .unwrap();
        assert!(g.nodes.is_empty());
        assert!(g.edges.is_empty());
        assert!(g.subtask.is_some());
    }

    #[test]
    fn shrinking_near_threshold_never_adds_edges() {
        let mut objects = Vec::new();
        let mut rng = crate::rng::SplitMix64::new(99);
        for i in 0..6 {
            let c = [
                rng.next_f64() * 2.0,
                rng.next_f64() * 2.0,
                1.0 + rng.next_f64() * 0.2,
            ];
            objects.push(obj(
                &format!("o{i}"),
                "mug",
                "empty",
                Aabb::centered(c, [0.1, 0.1, 0.1]),
            ));
        }
        let obs = Observation {
            objects,
            gripper_holding: None,
            timestamp: 0.0,
        };
        let wide = GeometryParams {
            near_dist_max: 0.8,
            ..GeometryParams::default()
        };
        let narrow = GeometryParams {
            near_dist_max: 0.3,
            ..GeometryParams::default()
        };
        let wide_edges = extract_spatial_relations(&obs, &wide).unwrap();
        let narrow_edges = extract_spatial_relations(&obs, &narrow).unwrap();
        for e in &narrow_edges {
            assert!(
                wide_edges.contains(e),
                "edge {e:?} appeared when shrinking near_dist_max"
            );
        }
    }
}
