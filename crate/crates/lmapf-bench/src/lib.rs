//! Benchmark harness for the lmapf solvers: configuration files, suite
//! execution with resumable result tables, summaries with confidence
//! intervals, and episode traces with replay verification.

pub mod config;
pub mod runner;
pub mod summary;
pub mod trace;

pub use config::{RunConfig, SolverKind};
pub use runner::{read_rows, run_suite, write_rows, ResultRow, CSV_HEADER};
pub use summary::{ci95_half_width, summarize, write_summary, SummaryRow};
pub use trace::{read_trace, replay_check, write_trace};
