//! Demonstration buffer: per-subtask precondition graphs recorded from
//! successful trajectories, retrievable by subtask-text similarity.
//!
//! Retrieval is keyed by the subtask's canonical text, not the stored
//! precondition tag: records from any task are eligible, so a `pick_up mug`
//! recorded while making coffee can back the same subtask in another task.
//! The text encoding (and the buffer line format) lives here; actual file IO
//! is a thin wrapper in the companion crate.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, embed_text, EmbeddingVector, TextEmbedConfig};
use crate::graph::{from_canonical_json, to_canonical_json, validate_graph, SceneGraph};
use crate::graphbuild::{build_scene_graph, GeometryParams, Observation};
use crate::task::Subtask;
use crate::vocab::Vocabulary;

/// One per-subtask snapshot from a successful trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationRecord {
    pub demo_id: String,
    pub task_name: String,
    pub step_index: usize,
    pub subtask: Subtask,
    /// Human-inspectable precondition tag rendered from the graph's
    /// subtask-relevant atoms.
    pub precondition_tag: String,
    /// Pre-execution scene graph, carrying this record's own subtask node.
    pub graph: SceneGraph,
    /// Cached `embed_text` of the canonical subtask string.
    pub subtask_embedding: EmbeddingVector,
}

/// The demonstration buffer; immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub vocab_version: String,
    pub created_at: String,
    pub records: Vec<DemonstrationRecord>,
}

impl Buffer {
    pub fn new(vocab_version: &str, created_at: &str) -> Self {
        Buffer {
            vocab_version: vocab_version.to_owned(),
            created_at: created_at.to_owned(),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Retrieval parameters: top-k and the similarity floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k: usize,
    pub min_similarity: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            k: 4,
            min_similarity: 0.8,
        }
    }
}

/// Render the precondition tag: states of the subtask's argument categories
/// plus edges touching them, sorted, joined by `; `.
pub fn precondition_tag(graph: &SceneGraph, subtask: &Subtask) -> String {
    let mut atoms: Vec<String> = Vec::new();
    for node in &graph.nodes {
        if subtask.args.iter().any(|a| a == &node.category) {
            atoms.push(format!("{} is {}", node.category, node.state));
        }
    }
    for edge in &graph.edges {
        let (Some(s), Some(o)) = (graph.node(&edge.subject), graph.node(&edge.object)) else {
            continue;
        };
        if subtask
            .args
            .iter()
            .any(|a| a == &s.category || a == &o.category)
        {
            atoms.push(format!(
                "{} {} {}",
                s.category,
                edge.predicate.as_str(),
                o.category
            ));
        }
    }
    atoms.sort();
    atoms.dedup();
    atoms.join("; ")
}

/// Outcome of recording one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingOutcome {
    pub records: Vec<DemonstrationRecord>,
    /// `(step_index, reason)` for steps skipped over invalid observations.
    pub skipped: Vec<(usize, String)>,
}

/// Build one record per trajectory step from the pre-execution observation.
/// The caller asserts the trajectory ended in goal satisfaction.
pub fn record_demonstration(
    trajectory: &[(Subtask, Observation)],
    task_name: &str,
    demo_id: &str,
    params: &GeometryParams,
    vocab: &Vocabulary,
    text_cfg: &TextEmbedConfig,
) -> RecordingOutcome {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (step_index, (subtask, observation)) in trajectory.iter().enumerate() {
        let graph = match build_scene_graph(observation, subtask, params) {
            Ok(g) => g,
            Err(e) => {
                skipped.push((step_index, e.to_string()));
                continue;
            }
        };
        let validation = validate_graph(&graph, vocab);
        if !validation.ok() {
            skipped.push((step_index, validation.violations[0].to_string()));
            continue;
        }
        let embedding = match embed_text(&subtask.tokens(), text_cfg) {
            Ok(e) => e,
            Err(e) => {
                skipped.push((step_index, e.to_string()));
                continue;
            }
        };
        records.push(DemonstrationRecord {
            demo_id: demo_id.to_owned(),
            task_name: task_name.to_owned(),
            step_index,
            precondition_tag: precondition_tag(&graph, subtask),
            subtask: subtask.clone(),
            graph,
            subtask_embedding: embedding,
        });
    }
    RecordingOutcome { records, skipped }
}

/// Rank records by cosine between the query subtask text and each record's
/// cached embedding; keep those at or above the floor; return up to `k`
/// ordered by (similarity desc, demo_id asc, step_index asc).
pub fn retrieve_references<'b>(
    buffer: &'b Buffer,
    query: &Subtask,
    cfg: &RetrievalConfig,
    text_cfg: &TextEmbedConfig,
) -> Vec<&'b DemonstrationRecord> {
    let Ok(query_vec) = embed_text(&query.tokens(), text_cfg) else {
        return Vec::new();
    };
    let mut scored: Vec<(f64, &DemonstrationRecord)> = buffer
        .records
        .iter()
        .filter_map(|r| {
            let sim = cosine(&query_vec, &r.subtask_embedding).ok()?;
            (sim >= cfg.min_similarity).then_some((sim, r))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.demo_id.cmp(&b.1.demo_id))
            .then_with(|| a.1.step_index.cmp(&b.1.step_index))
    });
    scored.into_iter().take(cfg.k).map(|(_, r)| r).collect()
}

// --- buffer line format -----------------------------------------------------
//
// Line-delimited: a header object followed by one record object per line.
// Key order is canonical (alphabetical) so the encoding is byte-stable.

#[derive(Debug, Serialize, Deserialize)]
struct BufferHeader {
    created_at: String,
    record_count: usize,
    vocab_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    demo_id: String,
    // The canonical scene-graph document, embedded as a JSON value.
    graph: serde_json::Value,
    precondition_tag: String,
    step_index: usize,
    subtask_args: Vec<String>,
    subtask_embedding: Vec<f64>,
    subtask_verb: String,
    task_name: String,
}

/// Errors decoding a buffer file.
#[derive(Debug, Clone, PartialEq)]
pub enum BufferCodecError {
    Empty,
    VersionMismatch { found: String, expected: String },
    Parse { line: usize, message: String },
}

impl core::fmt::Display for BufferCodecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BufferCodecError::Empty => write!(f, "buffer file has no header line"),
            BufferCodecError::VersionMismatch { found, expected } => {
                write!(f, "buffer was built with vocabulary `{found}` but this build expects `{expected}`")
            }
            BufferCodecError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BufferCodecError {}

/// Encode to the line-delimited format. Deterministic and byte-stable.
pub fn encode_buffer(buffer: &Buffer) -> String {
    let header = BufferHeader {
        created_at: buffer.created_at.clone(),
        record_count: buffer.records.len(),
        vocab_version: buffer.vocab_version.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serialization cannot fail");
    out.push('\n');
    for r in &buffer.records {
        let graph_doc = to_canonical_json(&r.graph, &buffer.vocab_version);
        let line = RecordLine {
            demo_id: r.demo_id.clone(),
            graph: serde_json::from_str(&graph_doc)
                .expect("canonical graph document is valid JSON"),
            precondition_tag: r.precondition_tag.clone(),
            step_index: r.step_index,
            subtask_args: r.subtask.args.clone(),
            subtask_embedding: r.subtask_embedding.values.clone(),
            subtask_verb: r.subtask.verb.clone(),
            task_name: r.task_name.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Decode a buffer, checking the vocabulary version and validating every
/// record (graph validity and the cached-embedding invariant).
pub fn decode_buffer(
    text: &str,
    vocab: &Vocabulary,
    text_cfg: &TextEmbedConfig,
) -> Result<Buffer, BufferCodecError> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(BufferCodecError::Empty)?;
    let header: BufferHeader =
        serde_json::from_str(header_line).map_err(|e| BufferCodecError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
    if header.vocab_version != vocab.version {
        return Err(BufferCodecError::VersionMismatch {
            found: header.vocab_version,
            expected: vocab.version.clone(),
        });
    }

    let mut buffer = Buffer::new(&header.vocab_version, &header.created_at);
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| BufferCodecError::Parse {
            line: line_no,
            message,
        };
        let record: RecordLine =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let graph_text =
            serde_json::to_string(&record.graph).map_err(|e| parse_err(e.to_string()))?;
        let (graph, graph_version) =
            from_canonical_json(&graph_text).map_err(|e| parse_err(e.to_string()))?;
        if graph_version != header.vocab_version {
            return Err(parse_err(format!(
                "record graph carries vocabulary `{graph_version}`, buffer is `{}`",
                header.vocab_version
            )));
        }
        let validation = validate_graph(&graph, vocab);
        if !validation.ok() {
            return Err(parse_err(format!(
                "invalid graph: {}",
                validation.violations[0]
            )));
        }
        let subtask = Subtask {
            verb: record.subtask_verb,
            args: record.subtask_args,
        };
        let expected_embedding =
            embed_text(&subtask.tokens(), text_cfg).map_err(|e| parse_err(e.to_string()))?;
        if expected_embedding.values != record.subtask_embedding {
            return Err(parse_err(
                "cached subtask embedding does not match its subtask".to_owned(),
            ));
        }
        buffer.records.push(DemonstrationRecord {
            demo_id: record.demo_id,
            task_name: record.task_name,
            step_index: record.step_index,
            subtask,
            precondition_tag: record.precondition_tag,
            graph,
            subtask_embedding: EmbeddingVector {
                values: record.subtask_embedding,
            },
        });
    }

    if buffer.records.len() != header.record_count {
        return Err(BufferCodecError::Parse {
            line: 1,
            message: format!(
                "header claims {} records, found {}",
                header.record_count,
                buffer.records.len()
            ),
        });
    }
    Ok(buffer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphbuild::{Aabb, ObservedObject};

    fn vocab() -> Vocabulary {
        Vocabulary::builtin()
    }

    fn simple_observation(mug_state: &str) -> Observation {
        Observation {
            objects: alloc::vec![
                ObservedObject {
                    id: "mug_1".into(),
                    category: "mug".into(),
                    state: mug_state.into(),
                    aabb: Aabb::centered([0.2, 0.3, 1.0], [0.1, 0.1, 0.12]),
                    container: None,
                },
                ObservedObject {
                    id: "counter_1".into(),
                    category: "counter".into(),
                    state: "default".into(),
                    aabb: Aabb::new([0.0, 0.0, 0.0], [3.0, 0.6, 0.94]),
                    container: None,
                },
            ],
            gripper_holding: None,
            timestamp: 0.0,
        }
    }

    fn sample_buffer() -> Buffer {
        let v = vocab();
        let text_cfg = TextEmbedConfig::default();
        let trajectory = alloc::vec![
            (
                Subtask::new("pick_up", &["mug"]),
                simple_observation("empty")
            ),
            (
                Subtask::new("put_on", &["mug", "table"]),
                simple_observation("empty")
            ),
        ];
        let mut buffer = Buffer::new(&v.version, "2026-01-01T00:00:00Z");
        for demo in 0..2 {
            let outcome = record_demonstration(
                &trajectory,
                "make_coffee",
                &format!("demo-{demo}"),
                &GeometryParams::default(),
                &v,
                &text_cfg,
            );
            assert!(outcome.skipped.is_empty());
            buffer.records.extend(outcome.records);
        }
        buffer
    }

    #[test]
    fn records_carry_their_own_subtask_node() {
        let buffer = sample_buffer();
        assert_eq!(buffer.len(), 4);
        for r in &buffer.records {
            assert_eq!(r.graph.subtask.as_ref(), Some(&r.subtask));
        }
    }

    #[test]
    fn recording_is_deterministic() {
        let a = sample_buffer();
        let b = sample_buffer();
        assert_eq!(a, b);
    }

    #[test]
    fn retrieval_ranks_and_filters() {
        let buffer = sample_buffer();
        let cfg = RetrievalConfig::default();
        let text_cfg = TextEmbedConfig::default();

        let hits =
            retrieve_references(&buffer, &Subtask::new("pick_up", &["mug"]), &cfg, &text_cfg);
        assert_eq!(hits.len(), 2);
        assert!(hits
            .iter()
            .all(|r| r.subtask.canonical_string() == "pick_up mug"));
        // Tie-break: demo id ascending.
        assert_eq!(hits[0].demo_id, "demo-0");
        assert_eq!(hits[1].demo_id, "demo-1");

        // Unrelated query retrieves nothing at the 0.8 floor.
        let misses =
            retrieve_references(&buffer, &Subtask::new("open", &["fridge"]), &cfg, &text_cfg);
        assert!(misses.is_empty());
    }

    #[test]
    fn retrieval_k_truncation_and_monotonicity() {
        let buffer = sample_buffer();
        let text_cfg = TextEmbedConfig::default();
        let query = Subtask::new("pick_up", &["mug"]);

        let k1 = retrieve_references(
            &buffer,
            &query,
            &RetrievalConfig {
                k: 1,
                ..Default::default()
            },
            &text_cfg,
        );
        let k4 = retrieve_references(
            &buffer,
            &query,
            &RetrievalConfig {
                k: 4,
                ..Default::default()
            },
            &text_cfg,
        );
        assert_eq!(k1.len(), 1);
        assert!(k4.len() >= k1.len());
        assert_eq!(k1[0], k4[0]);

        let strict = retrieve_references(
            &buffer,
            &query,
            &RetrievalConfig {
                k: 4,
                min_similarity: 0.99,
            },
            &text_cfg,
        );
        assert!(strict.len() <= k4.len());
    }

    #[test]
    fn buffer_roundtrip_is_exact_and_byte_stable() {
        let buffer = sample_buffer();
        let text = encode_buffer(&buffer);
        let back = decode_buffer(&text, &vocab(), &TextEmbedConfig::default()).unwrap();
        assert_eq!(back, buffer);
        assert_eq!(encode_buffer(&back), text);
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let mut buffer = sample_buffer();
        buffer.vocab_version = "household-v0".into();
        let text = encode_buffer(&buffer);
        match decode_buffer(&text, &vocab(), &TextEmbedConfig::default()) {
            Err(BufferCodecError::VersionMismatch { found, expected }) => {
                assert_eq!(found, "household-v0");
                assert_eq!(expected, "household-v1");
            }
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let buffer = sample_buffer();
        let text = encode_buffer(&buffer);
        let mut lines: Vec<&str> = text.lines().collect();
        let truncated = &lines[2][..lines[2].len() / 2];
        lines[2] = truncated;
        let broken = lines.join("\n");
        match decode_buffer(&broken, &vocab(), &TextEmbedConfig::default()) {
            Err(BufferCodecError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
