//! Benchmark harness for the `sketchla` operators and solvers.
//!
//! The `sketch`, `lsq` and `kappa-sweep` commands share one configuration
//! type and one CSV schema, documented in [`record`].

pub mod config;
pub mod cost;
pub mod record;
pub mod run;

pub use config::{BenchConfig, Command, ConfigError, Method};
pub use record::{read_csv, write_csv, BenchRecord, CsvSink, RecordStatus};
pub use run::{cmd_lsq, cmd_sketch, collect, run};
