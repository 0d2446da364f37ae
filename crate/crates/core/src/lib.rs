//! Trace-driven simulator for memory-side tiering telemetry.
//!
//! A workload generator emits a physical-address access trace. Hotness
//! trackers ([`telemetry`]) turn a warm-up prefix of it into ranked page
//! reports, [`tiering`] promotes the top K pages from CXL memory to host
//! DRAM, and [`perf`] replays the rest of the trace against the resulting
//! placement.
//!
//! ```
//! use memtier::tiering::{run_experiment, ExperimentConfig, TrackerKind};
//! use memtier::workload::{MmapBenchConfig, WorkloadConfig};
//!
//! let wl = MmapBenchConfig { n_accesses: 20_000, ..MmapBenchConfig::desk() };
//! let cfg = ExperimentConfig::new(WorkloadConfig::MmapBench(wl), TrackerKind::Hmu);
//! let r = run_experiment(&cfg).unwrap();
//! assert_eq!(r.pages_promoted, 256);
//! ```

pub mod address_space;
pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod perf;
pub mod report;
pub mod telemetry;
pub mod tiering;
pub mod trace;
pub mod workload;

pub use error::{Error, Result};
pub use trace::{AccessRecord, Op, PageId, PageSize, Trace};
