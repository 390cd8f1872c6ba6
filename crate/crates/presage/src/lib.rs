//! Companion crate for `presage-core`: file formats, HTTP clients for the
//! remote encoder/reasoner protocols, and the benchmark CLI.
//!
//! The core crate stays `no_std`-compatible and free of IO; everything that
//! touches a file descriptor or a socket lives here.

pub mod cli;
pub mod files;
pub mod remote;

pub use files::{
    load_buffer, load_suite, save_buffer, save_suite, write_report_csv, write_report_json,
    write_traces, FileError,
};
pub use remote::{FixtureReasoner, HttpConfig, RemoteEmbedder, RemoteReasoner};
