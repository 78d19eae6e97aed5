//! Frequent-pattern tree construction and mining on a simulated persistent
//! memory.
//!
//! The engine builds FP-trees against a byte-addressable NVM model that
//! accounts every bit flip, read, write, nanosecond and picojoule, fronted by
//! a set-associative LRU cache. Construction mechanisms are swappable
//! policies so that wear-leveling sliding counters, copy-free tree growth and
//! frequency-sorted child walks can be compared against the classical
//! baselines on identical workloads:
//!
//! * [`counter`] — regular binary and wear-leveling sliding counters.
//! * [`dataset`] — FIMI-format transaction loading and the first scan.
//! * [`fptree`] — header table and tree construction policies.
//! * [`mining`] — FP-growth plus a brute-force oracle for exact checking.
//! * [`nvmsim`] — the memory model: wear map, cache, latency/energy totals.
//! * [`runner`] — experiment driver, configs, comparison matrices.
//! * [`datagen`] — deterministic synthetic benchmark datasets.

pub mod counter;
pub mod datagen;
pub mod dataset;
pub mod fptree;
pub mod mining;
pub mod nvmsim;
pub mod runner;

pub use counter::{Counter, CounterError, CounterKind, COUNTER_CAPACITY};
pub use dataset::{
    load_transactions, scan_frequencies, Dataset, DatasetError, ItemId, Transaction,
};
pub use fptree::{
    build_header, build_tree, BuildPolicy, ChildIndexKind, CountingPolicy, FPTree, FpTreeError,
    HeaderTable, InsertionPolicy,
};
pub use mining::{apriori_oracle, fp_growth, MiningError, Pattern, PatternSet};
pub use nvmsim::{
    CacheConfig, MetricsReport, NvmCostParams, NvmError, NvmModel, Phase, PhaseMetrics, Region,
    WriteEnergyMode,
};
pub use runner::{
    run_experiment, run_matrix, MinSupport, OutputFormat, Preset, RunConfig, RunError, RunOutcome,
};
