//! The `presage` command line: run the benchmark, export the built-in
//! scenario suite, and record demonstration buffers.
//!
//! Exit codes: 0 on completion (including runs full of in-world failures;
//! those are results), 2 on configuration errors (bad flags, unreadable or
//! invalid files).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use presage_core::harness::{
    build_suite_buffer, run_ablations, run_benchmark_with, run_sweep, HarnessConfig, Report,
    Strategy, DEFAULT_SWEEP,
};
use presage_core::membank::Buffer;
use presage_core::replan::Reasoner;
use presage_core::scenarios::builtin_suite;
use presage_core::simworld::{NoiseConfig, ScenarioSpec};
use presage_core::vocab::Vocabulary;

use crate::files;
use crate::remote::RemoteReasoner;

#[derive(Debug, Parser)]
#[command(
    name = "presage",
    version,
    about = "Scene-graph failure anticipation benchmark"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run episodes under the selected strategies and write a report.
    Run(RunArgs),
    /// Export the built-in scenario suite to a JSON file.
    Suite(SuiteArgs),
    /// Record demonstrations for a suite and save the buffer file.
    Demos(DemosArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario suite file; the built-in suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Comma-separated strategies, e.g. `none,proactive+scene_graph`.
    #[arg(
        long,
        default_value = "none,posthoc_end,posthoc_online+scene_graph,proactive+scene_graph"
    )]
    pub strategies: String,
    /// Detection threshold in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Also sweep thresholds 0.90/0.85/0.80 for both detectors.
    #[arg(long)]
    pub sweep: bool,
    /// Also run component and reasoning ablations.
    #[arg(long)]
    pub ablations: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Buffer file to use; demonstrations are recorded in memory when omitted.
    #[arg(long)]
    pub buffer: Option<PathBuf>,
    /// Report JSON path; a CSV mirror is written next to it.
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Directory for per-episode JSONL traces.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Remote reasoner endpoint (http://host:port/path).
    #[arg(long)]
    pub reasoner_endpoint: Option<String>,
    /// Consult the remote reasoner before the rule table.
    #[arg(long)]
    pub remote_first: bool,
    /// Observation drop probability in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Output path for the suite JSON.
    #[arg(long, default_value = "suite.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemosArgs {
    /// Scenario suite file; the built-in suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Output path for the buffer file.
    #[arg(long, default_value = "buffer.jsonl")]
    pub out: PathBuf,
    /// Timestamp recorded in the buffer header.
    #[arg(long, default_value = "unspecified")]
    pub created_at: String,
}

/// A configuration problem; mapped to exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

fn config_err(message: impl Into<String>) -> CliError {
    CliError(message.into())
}

fn load_or_builtin_suite(
    path: &Option<PathBuf>,
    vocab: &Vocabulary,
) -> Result<Vec<ScenarioSpec>, CliError> {
    match path {
        Some(p) => files::load_suite(p, vocab).map_err(|e| config_err(e.to_string())),
        None => Ok(builtin_suite()),
    }
}

fn parse_strategies(text: &str) -> Result<Vec<Strategy>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            Strategy::parse(s).ok_or_else(|| {
                config_err(format!(
                    "unknown strategy `{s}` (expected none, posthoc_end, \
                     posthoc_online[+detector], proactive[+detector])"
                ))
            })
        })
        .collect()
}

pub fn run(args: &RunArgs) -> Result<Report, CliError> {
    let vocab = Vocabulary::builtin();
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(config_err(format!(
            "threshold {} outside (0, 1]",
            args.threshold
        )));
    }
    if !(0.0..=1.0).contains(&args.noise) {
        return Err(config_err(format!("noise {} outside [0, 1]", args.noise)));
    }
    let strategies = parse_strategies(&args.strategies)?;
    if strategies.is_empty() {
        return Err(config_err("no strategies selected"));
    }
    let suite = load_or_builtin_suite(&args.suite, &vocab)?;

    let mut cfg = HarnessConfig::default();
    cfg.detector.threshold = args.threshold;
    cfg.noise = NoiseConfig {
        drop_prob: args.noise,
        flip_prob: 0.0,
    };
    cfg.remote_first = args.remote_first;

    let buffer: Buffer = match &args.buffer {
        Some(path) => {
            files::load_buffer(path, &vocab, &cfg.text).map_err(|e| config_err(e.to_string()))?
        }
        None => build_suite_buffer(&suite, &cfg, &vocab, "in-memory")
            .map_err(|e| config_err(e.to_string()))?,
    };

    let mut remote = args
        .reasoner_endpoint
        .as_deref()
        .map(|endpoint| RemoteReasoner::new(endpoint, &vocab));
    let remote_dyn: Option<&mut dyn Reasoner> = remote.as_mut().map(|r| r as &mut dyn Reasoner);

    let mut report = run_benchmark_with(
        &suite,
        &strategies,
        &cfg,
        &vocab,
        args.seed,
        &buffer,
        remote_dyn,
    )
    .map_err(|e| config_err(e.to_string()))?;
    if args.sweep {
        let sweep = run_sweep(&suite, &DEFAULT_SWEEP, &cfg, &vocab, args.seed)
            .map_err(|e| config_err(e.to_string()))?;
        report.sweep = sweep.sweep;
    }
    if args.ablations {
        let ablations = run_ablations(&suite, &cfg, &vocab, args.seed)
            .map_err(|e| config_err(e.to_string()))?;
        report.ablations = ablations.ablations;
    }

    files::write_report_json(&args.report, &report).map_err(|e| config_err(e.to_string()))?;
    files::write_report_csv(&csv_path(&args.report), &report)
        .map_err(|e| config_err(e.to_string()))?;
    if let Some(dir) = &args.traces {
        files::write_traces(dir, &report).map_err(|e| config_err(e.to_string()))?;
    }
    Ok(report)
}

fn csv_path(report: &Path) -> PathBuf {
    report.with_extension("csv")
}

pub fn suite(args: &SuiteArgs) -> Result<usize, CliError> {
    let suite = builtin_suite();
    files::save_suite(&args.out, &suite).map_err(|e| config_err(e.to_string()))?;
    Ok(suite.len())
}

pub fn demos(args: &DemosArgs) -> Result<usize, CliError> {
    let vocab = Vocabulary::builtin();
    let cfg = HarnessConfig::default();
    let suite = load_or_builtin_suite(&args.suite, &vocab)?;
    let buffer = build_suite_buffer(&suite, &cfg, &vocab, &args.created_at)
        .map_err(|e| config_err(e.to_string()))?;
    files::save_buffer(&args.out, &buffer).map_err(|e| config_err(e.to_string()))?;
    Ok(buffer.len())
}

/// Render the human summary printed after a run.
pub fn summarize(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "seed {} | {} scenarios | threshold {:.2}\n",
        report.seed, report.scenario_count, report.config.threshold
    ));
    if !report.strategies.is_empty() {
        out.push_str("strategy                         SR%     FDR%    DRany%  mean TET\n");
        for row in &report.strategies {
            out.push_str(&format!(
                "{:32} {:6.2}  {:>6}  {:>6}  {:8.2}\n",
                row.strategy,
                row.sr_percent,
                row.fdr_percent
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into()),
                row.dr_any_percent
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into()),
                row.mean_tet
            ));
        }
    }
    if !report.sweep.is_empty() {
        out.push_str("threshold  detector      FDR%     SR%\n");
        for row in &report.sweep {
            out.push_str(&format!(
                "{:9.2}  {:12} {:6.2}  {:6.2}\n",
                row.threshold, row.detector, row.fdr_percent, row.sr_percent
            ));
        }
    }
    if !report.ablations.is_empty() {
        out.push_str("ablation          scope                      FDR%    SR%\n");
        for row in &report.ablations {
            out.push_str(&format!(
                "{:17} {:26} {:>6}  {:>6}\n",
                row.label,
                row.scope,
                row.fdr_percent
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into()),
                row.sr_percent
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into()),
            ));
        }
    }
    out
}
