//! Property tests over the similarity engine, retrieval and the simulator:
//! seeded random inputs, exact or 1e-12 assertions, and brute-force oracles
//! that stay independent of the implementation code paths they check.

use presage_core::embed::{cosine, embed_node, embed_text, OneHotProvider, TextEmbedConfig};
use presage_core::graph::{from_canonical_json, to_canonical_json, validate_graph, SceneGraph};
use presage_core::membank::{retrieve_references, Buffer, DemonstrationRecord, RetrievalConfig};
use presage_core::rng::SplitMix64;
use presage_core::simmatch::{
    edge_similarity, graph_similarity, match_nodes, node_similarity, structural_similarity,
    MatchToggles, NodeMatching,
};
use presage_core::synth::{
    perturb_graph, random_graph, random_subtask, GraphGenOptions, GraphPerturbation,
};
use presage_core::vocab::Vocabulary;

const TOLERANCE: f64 = 1e-12;

/// Brute-force matching oracle: enumerate every same-category matching
/// (including partial ones) and keep the one maximizing the node score.
/// Independent of the greedy matcher.
fn brute_force_best_matching(
    obs: &SceneGraph,
    exp: &SceneGraph,
    toggles: &MatchToggles,
    provider: &OneHotProvider<'_>,
) -> (NodeMatching, f64) {
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (i, o) in obs.nodes.iter().enumerate() {
        for (j, e) in exp.nodes.iter().enumerate() {
            if o.category == e.category {
                candidates.push((i, j));
            }
        }
    }

    let mut best: Option<(NodeMatching, f64)> = None;
    let mut chosen: Vec<(usize, usize)> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        idx: usize,
        candidates: &[(usize, usize)],
        chosen: &mut Vec<(usize, usize)>,
        obs: &SceneGraph,
        exp: &SceneGraph,
        toggles: &MatchToggles,
        provider: &OneHotProvider<'_>,
        best: &mut Option<(NodeMatching, f64)>,
    ) {
        if idx == candidates.len() {
            let pairs: Vec<_> = chosen
                .iter()
                .map(|(i, j)| (obs.nodes[*i].id.clone(), exp.nodes[*j].id.clone()))
                .collect();
            let unmatched_obs = obs
                .nodes
                .iter()
                .enumerate()
                .filter(|(i, _)| !chosen.iter().any(|(ci, _)| ci == i))
                .map(|(_, n)| n.id.clone())
                .collect();
            let unmatched_exp = exp
                .nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| !chosen.iter().any(|(_, cj)| cj == j))
                .map(|(_, n)| n.id.clone())
                .collect();
            let matching = NodeMatching {
                pairs,
                unmatched_obs,
                unmatched_exp,
                subtask_pair_included: toggles.use_subtask_node
                    && obs.subtask.is_some()
                    && exp.subtask.is_some(),
            };
            let score = node_similarity(&matching, obs, exp, provider).unwrap();
            if best.as_ref().map(|(_, s)| score > *s).unwrap_or(true) {
                *best = Some((matching, score));
            }
            return;
        }
        // Skip candidate idx.
        recurse(
            idx + 1,
            candidates,
            chosen,
            obs,
            exp,
            toggles,
            provider,
            best,
        );
        // Take candidate idx when both endpoints are free.
        let (i, j) = candidates[idx];
        if !chosen.iter().any(|(ci, cj)| *ci == i || *cj == j) {
            chosen.push((i, j));
            recurse(
                idx + 1,
                candidates,
                chosen,
                obs,
                exp,
                toggles,
                provider,
                best,
            );
            chosen.pop();
        }
    }

    recurse(
        0,
        &candidates,
        &mut chosen,
        obs,
        exp,
        toggles,
        provider,
        &mut best,
    );
    best.expect("the empty matching is always a candidate")
}

fn combined_score(
    matching: &NodeMatching,
    obs: &SceneGraph,
    exp: &SceneGraph,
    provider: &OneHotProvider<'_>,
) -> f64 {
    let n = node_similarity(matching, obs, exp, provider).unwrap();
    let e = edge_similarity(matching, obs, exp);
    let s = structural_similarity(matching, obs, exp);
    (n + e + s) / 3.0
}

#[test]
fn identity_and_bounds_on_random_graphs() {
    let vocab = Vocabulary::builtin();
    let provider = OneHotProvider::with_defaults(&vocab);
    let toggles = MatchToggles::default();
    let mut rng = SplitMix64::new(101);
    for _ in 0..300 {
        let g = random_graph(&mut rng, &vocab, &GraphGenOptions::default());
        let report = graph_similarity(&g, &g, &toggles, &provider).unwrap();
        assert_eq!(report.score, 1.0, "identity must be exact");
        for value in [
            report.node_score,
            report.edge_score,
            report.structure_score,
            report.score,
        ] {
            assert!((0.0..=1.0).contains(&value));
        }
    }
}

#[test]
fn greedy_matches_brute_force_on_category_unique_graphs() {
    let vocab = Vocabulary::builtin();
    let provider = OneHotProvider::with_defaults(&vocab);
    let toggles = MatchToggles::default();
    let opts = GraphGenOptions {
        max_nodes: 6,
        category_unique: true,
        with_subtask: true,
    };
    let mut rng = SplitMix64::new(202);
    for _ in 0..120 {
        let obs = random_graph(&mut rng, &vocab, &opts);
        let exp = random_graph(&mut rng, &vocab, &opts);
        let greedy = match_nodes(&obs, &exp, &toggles, &provider).unwrap();
        let greedy_node = node_similarity(&greedy, &obs, &exp, &provider).unwrap();
        let (oracle_matching, oracle_node) =
            brute_force_best_matching(&obs, &exp, &toggles, &provider);
        assert!(
            (greedy_node - oracle_node).abs() < TOLERANCE,
            "greedy node score {greedy_node} vs oracle {oracle_node}"
        );
        let greedy_combined = combined_score(&greedy, &obs, &exp, &provider);
        let oracle_combined = combined_score(&oracle_matching, &obs, &exp, &provider);
        assert!((greedy_combined - oracle_combined).abs() < TOLERANCE);
    }
}

#[test]
fn symmetry_on_category_unique_graphs() {
    let vocab = Vocabulary::builtin();
    let provider = OneHotProvider::with_defaults(&vocab);
    let toggles = MatchToggles::default();
    let opts = GraphGenOptions {
        max_nodes: 6,
        category_unique: true,
        with_subtask: true,
    };
    let mut rng = SplitMix64::new(303);
    for _ in 0..150 {
        let a = random_graph(&mut rng, &vocab, &opts);
        let b = random_graph(&mut rng, &vocab, &opts);
        let ab = graph_similarity(&a, &b, &toggles, &provider).unwrap();
        let ba = graph_similarity(&b, &a, &toggles, &provider).unwrap();
        assert!((ab.node_score - ba.node_score).abs() < TOLERANCE);
        assert!((ab.edge_score - ba.edge_score).abs() < TOLERANCE);
        assert!((ab.structure_score - ba.structure_score).abs() < TOLERANCE);
        assert!((ab.score - ba.score).abs() < TOLERANCE);
    }
}

#[test]
fn every_catalog_perturbation_lowers_similarity() {
    let vocab = Vocabulary::builtin();
    let provider = OneHotProvider::with_defaults(&vocab);
    let toggles = MatchToggles::default();
    let mut rng = SplitMix64::new(404);
    let mut exercised = 0;
    for _ in 0..200 {
        let g = random_graph(&mut rng, &vocab, &GraphGenOptions::default());
        if g.nodes.is_empty() {
            continue;
        }
        for kind in [
            GraphPerturbation::FlipOneState,
            GraphPerturbation::DeleteOneNode,
            GraphPerturbation::AddNodeWithEdge,
        ] {
            let Some(p) = perturb_graph(&g, kind, &mut rng, &vocab) else {
                continue;
            };
            let report = graph_similarity(&p, &g, &toggles, &provider).unwrap();
            assert!(report.score < 1.0, "{kind:?} left the score at 1.0");
            exercised += 1;
        }
    }
    assert!(
        exercised > 300,
        "perturbation catalog barely exercised: {exercised}"
    );
}

#[test]
fn union_accounting() {
    let vocab = Vocabulary::builtin();
    let provider = OneHotProvider::with_defaults(&vocab);
    let toggles = MatchToggles::default();
    let mut rng = SplitMix64::new(505);
    for _ in 0..200 {
        let obs = random_graph(&mut rng, &vocab, &GraphGenOptions::default());
        let exp = random_graph(&mut rng, &vocab, &GraphGenOptions::default());
        let m = match_nodes(&obs, &exp, &toggles, &provider).unwrap();
        let pair_count = m.pairs.len() + usize::from(m.subtask_pair_included);
        let union = pair_count + m.unmatched_obs.len() + m.unmatched_exp.len();
        assert!(pair_count <= union);
        if m.unmatched_obs.is_empty() && m.unmatched_exp.is_empty() {
            assert_eq!(pair_count, union);
        }
        // Partition covers all nodes of both graphs.
        assert_eq!(m.pairs.len() + m.unmatched_obs.len(), obs.nodes.len());
        assert_eq!(m.pairs.len() + m.unmatched_exp.len(), exp.nodes.len());
    }
}

#[test]
fn canonical_serialization_roundtrips_bit_exactly() {
    let vocab = Vocabulary::builtin();
    let mut rng = SplitMix64::new(606);
    for _ in 0..200 {
        let g = random_graph(&mut rng, &vocab, &GraphGenOptions::default());
        assert!(validate_graph(&g, &vocab).ok());
        let text = to_canonical_json(&g, &vocab.version);
        let (back, version) = from_canonical_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(to_canonical_json(&back, &version), text);
    }
}

#[test]
fn rendering_respects_category_state_multisets() {
    // Two graphs with the same category/state/edge multisets but different
    // node ids render identically; a changed multiset renders differently.
    use presage_core::graph::{graph_to_text, Edge, ObjectNode, Predicate};
    let a = SceneGraph::build(
        vec![
            ObjectNode::new("x1", "mug", "empty"),
            ObjectNode::new("x2", "counter", "default"),
        ],
        vec![Edge::new("x1", Predicate::OnTopOf, "x2")],
        None,
    );
    let b = SceneGraph::build(
        vec![
            ObjectNode::new("q9", "mug", "empty"),
            ObjectNode::new("q5", "counter", "default"),
        ],
        vec![Edge::new("q9", Predicate::OnTopOf, "q5")],
        None,
    );
    assert_eq!(graph_to_text(&a), graph_to_text(&b));

    let c = SceneGraph::build(
        vec![
            ObjectNode::new("x1", "mug", "dirty"),
            ObjectNode::new("x2", "counter", "default"),
        ],
        vec![Edge::new("x1", Predicate::OnTopOf, "x2")],
        None,
    );
    assert_ne!(graph_to_text(&a), graph_to_text(&c));
}

fn synthetic_buffer(rng: &mut SplitMix64, vocab: &Vocabulary, records: usize) -> Buffer {
    let text_cfg = TextEmbedConfig::default();
    let mut buffer = Buffer::new(&vocab.version, "t0");
    for i in 0..records {
        let subtask = random_subtask(rng, vocab);
        let graph = random_graph(
            rng,
            vocab,
            &GraphGenOptions {
                max_nodes: 4,
                category_unique: true,
                with_subtask: false,
            },
        );
        let graph = SceneGraph::build(graph.nodes, graph.edges, Some(subtask.clone()));
        buffer.records.push(DemonstrationRecord {
            demo_id: format!("demo-{}", i / 3),
            task_name: format!("task-{}", i % 4),
            step_index: i % 5,
            precondition_tag: String::new(),
            subtask_embedding: embed_text(&subtask.tokens(), &text_cfg).unwrap(),
            subtask,
            graph,
        });
    }
    buffer
}

#[test]
fn retrieval_monotonicity_and_floor() {
    let vocab = Vocabulary::builtin();
    let text_cfg = TextEmbedConfig::default();
    let mut rng = SplitMix64::new(707);
    let buffer = synthetic_buffer(&mut rng, &vocab, 60);
    for _ in 0..40 {
        let query = random_subtask(&mut rng, &vocab);
        let base = RetrievalConfig {
            k: 5,
            min_similarity: 0.5,
        };
        let hits = retrieve_references(&buffer, &query, &base, &text_cfg);

        // Every returned record clears the floor.
        let query_vec = embed_text(&query.tokens(), &text_cfg).unwrap();
        for hit in &hits {
            let sim = cosine(&query_vec, &hit.subtask_embedding).unwrap();
            assert!(sim >= base.min_similarity);
        }

        // Raising the floor never grows the result set.
        let stricter = retrieve_references(
            &buffer,
            &query,
            &RetrievalConfig {
                k: 5,
                min_similarity: 0.9,
            },
            &text_cfg,
        );
        assert!(stricter.len() <= hits.len());
        // Raising k never shrinks it.
        let wider = retrieve_references(
            &buffer,
            &query,
            &RetrievalConfig {
                k: 10,
                min_similarity: 0.5,
            },
            &text_cfg,
        );
        assert!(wider.len() >= hits.len());
        for (a, b) in hits.iter().zip(wider.iter()) {
            assert_eq!(a, b, "widening k must not reorder the prefix");
        }
    }
}

#[test]
fn node_embedding_cosine_structure() {
    let vocab = Vocabulary::builtin();
    let mut rng = SplitMix64::new(808);
    let categories: Vec<&str> = vocab.categories.iter().map(|c| c.name.as_str()).collect();
    for _ in 0..200 {
        let ca = categories[rng.next_below(categories.len())];
        let cb = categories[rng.next_below(categories.len())];
        let sa = &vocab.category(ca).unwrap().states;
        let sb = &vocab.category(cb).unwrap().states;
        let a_state = &sa[rng.next_below(sa.len())];
        let b_state = &sb[rng.next_below(sb.len())];
        let a = embed_node(&vocab, ca, a_state).unwrap();
        let b = embed_node(&vocab, cb, b_state).unwrap();
        let c = cosine(&a, &b).unwrap();
        if ca == cb {
            assert!(c == 1.0 || c == 0.5, "same category cosine was {c}");
            assert_eq!(c == 1.0, a_state == b_state);
        } else {
            assert!(c == 0.5 || c == 0.0, "cross category cosine was {c}");
            assert_eq!(c == 0.5, a_state == b_state);
        }
    }
}

#[test]
fn goal_agrees_between_world_and_graph_view() {
    use presage_core::graphbuild::GeometryParams;
    use presage_core::scenarios::builtin_suite;
    use presage_core::simworld::{check_goal, init_scenario, world_graph};

    let vocab = Vocabulary::builtin();
    let params = GeometryParams::default();
    for spec in builtin_suite().iter().take(12) {
        let world = init_scenario(spec, &vocab).unwrap();
        let graph = world_graph(&world, &params, &vocab);
        assert_eq!(
            check_goal(&world, &spec.task.goal, &params, &vocab),
            spec.task.goal.eval_graph(&graph),
            "{}",
            spec.name
        );
    }
}

#[test]
fn none_strategy_clock_is_exactly_action_costs() {
    use presage_core::harness::{build_suite_buffer, run_episode, HarnessConfig, Strategy};
    use presage_core::scenarios::builtin_suite;

    let vocab = Vocabulary::builtin();
    let cfg = HarnessConfig::default();
    let suite = builtin_suite();
    let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
    for spec in suite.iter().take(10) {
        let r = run_episode(
            spec,
            Strategy::none(),
            &cfg,
            &buffer,
            &vocab,
            3,
            presage_core::harness::NO_REMOTE,
        )
        .unwrap();
        let expected = spec.task.nominal_plan.subtasks.len() as f64 * cfg.time.action_cost;
        assert!(
            (r.tet - expected).abs() < TOLERANCE,
            "{}: tet {} vs {} expected",
            spec.name,
            r.tet,
            expected
        );
    }
}

#[test]
fn episode_clock_matches_trace_recomputation() {
    use presage_core::detect::DetectorKind;
    use presage_core::harness::{
        build_suite_buffer, run_episode, HarnessConfig, Strategy, TraceEvent,
    };
    use presage_core::scenarios::builtin_suite;

    let vocab = Vocabulary::builtin();
    let cfg = HarnessConfig::default();
    let suite = builtin_suite();
    let buffer = build_suite_buffer(&suite, &cfg, &vocab, "t").unwrap();
    for spec in suite.iter().take(16) {
        for strategy in [
            Strategy::proactive(DetectorKind::SceneGraph),
            Strategy::posthoc_online(DetectorKind::SceneGraph),
            Strategy::posthoc_end(),
        ] {
            let r = run_episode(
                spec,
                strategy,
                &cfg,
                &buffer,
                &vocab,
                5,
                presage_core::harness::NO_REMOTE,
            )
            .unwrap();
            let mut clock = 0.0;
            let mut analysis_seen = false;
            for event in &r.trace {
                match event {
                    TraceEvent::Action { .. } => clock += cfg.time.action_cost,
                    TraceEvent::Check { .. } => clock += cfg.time.check_cost,
                    TraceEvent::Analysis { .. } => {
                        clock += cfg.time.posthoc_analysis_cost;
                        analysis_seen = true;
                    }
                    TraceEvent::Replan { diagnosis, .. } => {
                        // Reasoned replans charge the reasoning cost; the
                        // budget/resignation short-circuits do not reason,
                        // and the end-of-task cycle's reasoning is covered
                        // by the analysis cost.
                        let skipped_before_reasoning = diagnosis
                            .starts_with("replan budget exhausted")
                            || diagnosis.starts_with("recovery exhausted earlier")
                            || diagnosis.starts_with("blind");
                        if !skipped_before_reasoning && !analysis_seen {
                            clock += cfg.time.reason_cost;
                        }
                    }
                    TraceEvent::Perturbation { .. } | TraceEvent::Goal { .. } => {}
                }
            }
            assert!(
                (clock - r.tet).abs() < TOLERANCE,
                "{} {}: trace recomputation {} vs tet {}",
                spec.name,
                r.strategy,
                clock,
                r.tet
            );
        }
    }
}

#[test]
fn ruined_state_is_unreachable_to_repair() {
    use presage_core::graphbuild::Aabb;
    use presage_core::simworld::{step, LayoutObject, TimeModel, WorldState};
    use presage_core::task::Subtask;

    let vocab = Vocabulary::builtin();
    let time = TimeModel::default();
    let layout = vec![
        LayoutObject {
            id: "counter_1".into(),
            category: "counter".into(),
            state: "default".into(),
            aabb: Aabb::new([0.0, 0.0, 0.0], [3.0, 0.6, 0.9]),
            container: None,
            support: None,
        },
        LayoutObject {
            id: "stove_1".into(),
            category: "stove".into(),
            state: "off".into(),
            aabb: Aabb::new([3.6, 0.0, 0.0], [4.2, 0.6, 0.9]),
            container: None,
            support: None,
        },
        LayoutObject {
            id: "pan_1".into(),
            category: "pan".into(),
            state: "dirty".into(),
            aabb: Aabb::centered([3.9, 0.3, 0.93], [0.3, 0.3, 0.06]),
            container: None,
            support: Some("stove_1".into()),
        },
        LayoutObject {
            id: "egg_1".into(),
            category: "egg".into(),
            state: "raw".into(),
            aabb: Aabb::centered([3.9, 0.3, 0.99], [0.06, 0.06, 0.06]),
            container: None,
            support: Some("pan_1".into()),
        },
        LayoutObject {
            id: "faucet_1".into(),
            category: "faucet".into(),
            state: "off".into(),
            aabb: Aabb::new([0.08, 0.48, 0.95], [0.22, 0.62, 1.15]),
            container: None,
            support: None,
        },
    ];
    let mut world = WorldState::from_layout(&layout, &vocab).unwrap();
    let outcome = step(&mut world, &Subtask::new("cook", &["egg", "pan"]), &time, &vocab).unwrap();
    assert!(matches!(outcome, presage_core::simworld::StepOutcome::IrreversibleDamage(_)));
    let egg: presage_core::graph::NodeId = "egg_1".into();
    assert_eq!(world.objects[&egg].state, "ruined");
    assert!(world.irreversibly_damaged);

    // No single action over any argument combination un-ruins the egg, and
    // the damage flag never clears. (No verb's effect table produces `raw`
    // or clears `ruined`, so induction extends this to sequences.)
    let categories: Vec<String> = vocab.categories.iter().map(|c| c.name.clone()).collect();
    for verb in vocab.verbs.iter().map(|v| v.name.clone()).collect::<Vec<_>>() {
        let def = vocab.verb(&verb).unwrap();
        let arg_sets: Vec<Vec<&str>> = match (def.min_args, def.max_args) {
            (0, 0) => vec![vec![]],
            _ => {
                let mut sets = Vec::new();
                for a in &categories {
                    if def.min_args <= 1 && def.max_args >= 1 {
                        sets.push(vec![a.as_str()]);
                    }
                    if def.max_args >= 2 {
                        for b in &categories {
                            sets.push(vec![a.as_str(), b.as_str()]);
                        }
                    }
                }
                sets
            }
        };
        for args in arg_sets {
            if args.len() < def.min_args || args.len() > def.max_args {
                continue;
            }
            let mut probe = world.clone();
            let action = Subtask { verb: verb.clone(), args: args.iter().map(|a| a.to_string()).collect() };
            let _ = step(&mut probe, &action, &time, &vocab);
            assert_eq!(probe.objects[&egg].state, "ruined", "{action:?} un-ruined the egg");
            assert!(probe.irreversibly_damaged, "{action:?} cleared the damage flag");
        }
    }
}

#[test]
fn report_aggregates_recompute_from_episodes() {
    use presage_core::detect::DetectorKind;
    use presage_core::harness::{run_benchmark, HarnessConfig, Strategy};
    use presage_core::scenarios::builtin_suite;

    let vocab = Vocabulary::builtin();
    let cfg = HarnessConfig::default();
    let suite: Vec<presage_core::simworld::ScenarioSpec> =
        builtin_suite().into_iter().take(12).collect();
    let strategies = [
        Strategy::none(),
        Strategy::proactive(DetectorKind::SceneGraph),
        Strategy::posthoc_online(DetectorKind::SceneGraph),
    ];
    let report = run_benchmark(&suite, &strategies, &cfg, &vocab, 9).unwrap();
    for row in &report.strategies {
        let n = row.episodes.len() as f64;
        let sr = row.episodes.iter().filter(|e| e.success).count() as f64 / n * 100.0;
        assert_eq!(row.sr_percent, sr, "{}: SR must equal recomputation", row.strategy);
        let tet = row.episodes.iter().map(|e| e.tet).sum::<f64>() / n;
        assert_eq!(row.mean_tet, tet, "{}: TET must equal recomputation", row.strategy);
        if let Some(fdr) = row.fdr_percent {
            let expected =
                row.episodes.iter().filter(|e| e.detected_before_failure).count() as f64 / n * 100.0;
            assert_eq!(fdr, expected, "{}: FDR must equal recomputation", row.strategy);
        }
    }

    // The unmonitored strategy is never charged check or reasoning costs,
    // so per scenario it is the cheapest run.
    let none = &report.strategies[0];
    for other in &report.strategies[1..] {
        for (a, b) in none.episodes.iter().zip(other.episodes.iter()) {
            assert_eq!(a.scenario, b.scenario);
            assert!(a.tet <= b.tet, "{}: none {} vs {} {}", a.scenario, a.tet, other.strategy, b.tet);
        }
    }
}
