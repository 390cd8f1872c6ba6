//! On-disk formats: buffer files (line-delimited JSON), scenario suites
//! (pretty JSON), reports (JSON plus a CSV mirror of the result tables) and
//! per-episode trace files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use presage_core::embed::TextEmbedConfig;
use presage_core::harness::Report;
use presage_core::membank::{decode_buffer, encode_buffer, Buffer, BufferCodecError};
use presage_core::simworld::{init_scenario, ScenarioSpec, WorldState};
use presage_core::vocab::Vocabulary;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Buffer {
        path: String,
        #[source]
        source: BufferCodecError,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> FileError {
    FileError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_creating_parents(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), FileError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn format_err(path: &Path, message: impl Into<String>) -> FileError {
    FileError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Write a buffer in the line-delimited format. Byte-stable: saving the same
/// buffer twice yields identical files.
pub fn save_buffer(path: &Path, buffer: &Buffer) -> Result<(), FileError> {
    write_creating_parents(path, encode_buffer(buffer))
}

/// Load and validate a buffer file against the current vocabulary.
pub fn load_buffer(
    path: &Path,
    vocab: &Vocabulary,
    text_cfg: &TextEmbedConfig,
) -> Result<Buffer, FileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    decode_buffer(&text, vocab, text_cfg).map_err(|source| FileError::Buffer {
        path: path.display().to_string(),
        source,
    })
}

/// Write a scenario suite as pretty-printed JSON (human-editable).
pub fn save_suite(path: &Path, suite: &[ScenarioSpec]) -> Result<(), FileError> {
    let mut text =
        serde_json::to_string_pretty(suite).map_err(|e| format_err(path, e.to_string()))?;
    text.push('\n');
    write_creating_parents(path, text)
}

/// Load a scenario suite and validate it: layouts must instantiate, demo
/// layouts must instantiate, perturbations must apply cleanly, plans and
/// goals must pass the vocabulary.
pub fn load_suite(path: &Path, vocab: &Vocabulary) -> Result<Vec<ScenarioSpec>, FileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let suite: Vec<ScenarioSpec> =
        serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))?;
    for spec in &suite {
        init_scenario(spec, vocab)
            .map_err(|e| format_err(path, format!("scenario `{}`: {e}", spec.name)))?;
        for (i, layout) in spec.demo_layouts.iter().enumerate() {
            WorldState::from_layout(layout, vocab).map_err(|e| {
                format_err(
                    path,
                    format!("scenario `{}` demo layout {i}: {e}", spec.name),
                )
            })?;
        }
        for subtask in &spec.task.nominal_plan.subtasks {
            subtask
                .check(vocab)
                .map_err(|e| format_err(path, format!("scenario `{}`: {e}", spec.name)))?;
        }
        spec.task
            .goal
            .check(vocab)
            .map_err(|e| format_err(path, format!("scenario `{}`: {e}", spec.name)))?;
    }
    Ok(suite)
}

/// Write the full report as pretty JSON.
pub fn write_report_json(path: &Path, report: &Report) -> Result<(), FileError> {
    let mut text =
        serde_json::to_string_pretty(report).map_err(|e| format_err(path, e.to_string()))?;
    text.push('\n');
    write_creating_parents(path, text)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Write the CSV mirror of the result tables: one block per table
/// (strategies, sweep, ablations), each with its own header.
pub fn write_report_csv(path: &Path, report: &Report) -> Result<(), FileError> {
    let mut out = Vec::new();
    if !report.strategies.is_empty() {
        writeln!(
            out,
            "strategy,sr_percent,fdr_percent,dr_any_percent,mean_tet"
        )
        .unwrap();
        for row in &report.strategies {
            writeln!(
                out,
                "{},{:.4},{},{},{:.4}",
                row.strategy,
                row.sr_percent,
                fmt_opt(row.fdr_percent),
                fmt_opt(row.dr_any_percent),
                row.mean_tet
            )
            .unwrap();
        }
    }
    if !report.sweep.is_empty() {
        if !out.is_empty() {
            writeln!(out).unwrap();
        }
        writeln!(out, "threshold,detector,fdr_percent,sr_percent,mean_tet").unwrap();
        for row in &report.sweep {
            writeln!(
                out,
                "{:.2},{},{:.4},{:.4},{:.4}",
                row.threshold, row.detector, row.fdr_percent, row.sr_percent, row.mean_tet
            )
            .unwrap();
        }
    }
    if !report.ablations.is_empty() {
        if !out.is_empty() {
            writeln!(out).unwrap();
        }
        writeln!(out, "label,scope,fdr_percent,sr_percent").unwrap();
        for row in &report.ablations {
            writeln!(
                out,
                "{},{},{},{}",
                row.label,
                row.scope,
                fmt_opt(row.fdr_percent),
                fmt_opt(row.sr_percent)
            )
            .unwrap();
        }
    }
    write_creating_parents(path, out)
}

fn trace_file_name(scenario: &str, strategy: &str) -> String {
    let sanitized: String = format!("{scenario}__{strategy}")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{sanitized}.jsonl")
}

/// Write one JSONL trace file per episode into `dir`.
pub fn write_traces(dir: &Path, report: &Report) -> Result<(), FileError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for row in &report.strategies {
        for episode in &row.episodes {
            let file = dir.join(trace_file_name(&episode.scenario, &episode.strategy));
            let mut text = String::new();
            for event in &episode.trace {
                text.push_str(
                    &serde_json::to_string(event).map_err(|e| format_err(&file, e.to_string()))?,
                );
                text.push('\n');
            }
            fs::write(&file, text).map_err(|e| io_err(&file, e))?;
        }
    }
    Ok(())
}
