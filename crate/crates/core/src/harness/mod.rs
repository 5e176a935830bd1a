//! Experiment plumbing: datasets, configuration and the sweep runner.

mod config;
mod idx;
mod pgm;
mod run;
mod synth;

pub use config::{DatasetSpec, ExperimentConfig, SolverKind, SweepPoint};
pub use idx::{load_idx, parse_idx, IDX3_MAGIC};
pub use pgm::{pgm_bytes, write_pgm};
pub use run::{load_dataset, prepare_targets, run_experiment, run_on_targets, ResultRow, ResultsTable};
pub use synth::{foreground_coverage, synth_dataset};
