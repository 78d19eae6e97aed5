//! Benchmark driver: configuration, single experiments, and side-by-side
//! comparison matrices.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::counter::CounterKind;
use crate::dataset::{load_transactions, Dataset, DatasetError};
use crate::fptree::{
    build_tree, BuildPolicy, ChildIndexKind, InsertionPolicy, DEFAULT_BUCKET_COUNT,
    DEFAULT_SLIDE_PERIOD,
};
use crate::mining::{apriori_oracle, fp_growth, MiningError, PatternSet};
use crate::nvmsim::{CacheConfig, MetricsReport, NvmCostParams, NvmModel, Phase, PhaseMetrics};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("pattern verification failed: {0}")]
    OracleMismatch(String),
    #[error("oracle capacity exceeded: {0}")]
    OracleGuard(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl RunError {
    /// Process exit code: 1 usage, 2 dataset error, 3 oracle mismatch.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Usage(_) | RunError::OracleGuard(_) | RunError::Internal(_) => 1,
            RunError::Dataset(_) => 2,
            RunError::OracleMismatch(_) => 3,
        }
    }
}

impl From<crate::fptree::FpTreeError> for RunError {
    fn from(e: crate::fptree::FpTreeError) -> Self {
        RunError::Internal(e.to_string())
    }
}

impl From<MiningError> for RunError {
    fn from(e: MiningError) -> Self {
        match e {
            MiningError::OracleGuard(msg) => RunError::OracleGuard(msg),
            MiningError::Tree(t) => RunError::Internal(t.to_string()),
        }
    }
}

/// Minimum support, absolute or as a fraction of the transaction count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MinSupport {
    Count(u64),
    Fraction(f64),
}

impl MinSupport {
    /// Absolute count: fractions are converted to the smallest count no
    /// lower than the fraction of the transaction total.
    pub fn resolve(&self, transactions: usize) -> Result<u64, RunError> {
        match *self {
            MinSupport::Count(c) if c >= 1 => Ok(c),
            MinSupport::Count(c) => Err(RunError::Usage(format!(
                "absolute min support must be at least 1, got {c}"
            ))),
            MinSupport::Fraction(f) if f > 0.0 && f <= 1.0 => {
                Ok(((f * transactions as f64).ceil() as u64).max(1))
            }
            MinSupport::Fraction(f) => Err(RunError::Usage(format!(
                "fractional min support must be in (0, 1], got {f}"
            ))),
        }
    }
}

impl FromStr for MinSupport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('.') {
            s.parse::<f64>()
                .map(MinSupport::Fraction)
                .map_err(|_| format!("invalid min support {s:?}"))
        } else {
            s.parse::<u64>()
                .map(MinSupport::Count)
                .map_err(|_| format!("invalid min support {s:?}"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Sort-then-insert, eager counting, regular counters, linear child scan.
    Classic,
    /// Sort-then-insert, lazy counting, regular counters, plain hash walk.
    Evfp,
    /// Copy-free growth, lazy counting, sliding counters, sorted hash walk.
    Wfpm,
}

impl Preset {
    pub fn policy(self) -> BuildPolicy {
        match self {
            Preset::Classic => BuildPolicy::classic(),
            Preset::Evfp => BuildPolicy::evfp(),
            Preset::Wfpm => BuildPolicy::wfpm(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Classic => "classic",
            Preset::Evfp => "evfp",
            Preset::Wfpm => "wfpm",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(Preset::Classic),
            "evfp" => Ok(Preset::Evfp),
            "wfpm" => Ok(Preset::Wfpm),
            other => Err(format!(
                "unknown preset {other:?} (expected classic, evfp or wfpm)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterChoice {
    Regular,
    Sliding,
}

impl FromStr for CounterChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regular" => Ok(CounterChoice::Regular),
            "sliding" => Ok(CounterChoice::Sliding),
            other => Err(format!("unknown counter {other:?}")),
        }
    }
}

pub fn parse_insertion(s: &str) -> Result<InsertionPolicy, String> {
    match s {
        "sorted" => Ok(InsertionPolicy::SortedBaseline),
        "copy-free" => Ok(InsertionPolicy::CopyFree),
        other => Err(format!("unknown insertion {other:?}")),
    }
}

pub fn parse_walk(s: &str) -> Result<ChildIndexKind, String> {
    match s {
        "linear" => Ok(ChildIndexKind::Linear),
        "hash" => Ok(ChildIndexKind::HashWalk),
        "sorted-hash" => Ok(ChildIndexKind::SortedHashWalk),
        other => Err(format!("unknown walk {other:?}")),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Table,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// One experiment: dataset, support threshold, policy knobs, memory-system
/// configuration, and output options. The JSON config file uses exactly
/// these field names.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub min_support: MinSupport,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub counter: Option<CounterChoice>,
    #[serde(default)]
    pub slide_period: Option<u64>,
    #[serde(default)]
    pub insertion: Option<InsertionPolicy>,
    #[serde(default)]
    pub walk: Option<ChildIndexKind>,
    #[serde(default)]
    pub buckets: Option<usize>,
    #[serde(default)]
    pub cache_kb: Option<usize>,
    #[serde(default)]
    pub assoc: Option<usize>,
    #[serde(default)]
    pub line_bytes: Option<usize>,
    #[serde(default)]
    pub cost: Option<NvmCostParams>,
    #[serde(default)]
    pub mine: bool,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub phases: Option<Vec<Phase>>,
    /// Write the per-bit wear dump of the watched header counters here.
    #[serde(default)]
    pub wear_dump: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset: PathBuf, min_support: MinSupport) -> Self {
        RunConfig {
            dataset,
            min_support,
            preset: None,
            counter: None,
            slide_period: None,
            insertion: None,
            walk: None,
            buckets: None,
            cache_kb: None,
            assoc: None,
            line_bytes: None,
            cost: None,
            mine: false,
            oracle: false,
            format: OutputFormat::Table,
            out: None,
            phases: None,
            wear_dump: None,
        }
    }

    /// Effective build policy: the preset (default wfpm) with any explicit
    /// knobs applied on top.
    pub fn build_policy(&self) -> BuildPolicy {
        let mut policy = self.preset.unwrap_or(Preset::Wfpm).policy();
        let period = self.slide_period.unwrap_or(DEFAULT_SLIDE_PERIOD);
        match self.counter {
            Some(CounterChoice::Regular) => policy.counter = CounterKind::Regular,
            Some(CounterChoice::Sliding) => {
                policy.counter = CounterKind::Sliding {
                    slide_period: period,
                }
            }
            None => {
                if let (CounterKind::Sliding { .. }, Some(_)) = (policy.counter, self.slide_period)
                {
                    policy.counter = CounterKind::Sliding {
                        slide_period: period,
                    };
                }
            }
        }
        if let Some(insertion) = self.insertion {
            policy.insertion = insertion;
        }
        if let Some(walk) = self.walk {
            policy.child_index = walk;
        }
        policy.bucket_count = self.buckets.unwrap_or(DEFAULT_BUCKET_COUNT);
        policy
    }

    pub fn cache_config(&self) -> CacheConfig {
        let defaults = CacheConfig::default();
        CacheConfig {
            capacity: self
                .cache_kb
                .map(|kb| kb * 1024)
                .unwrap_or(defaults.capacity),
            associativity: self.assoc.unwrap_or(defaults.associativity),
            line_size: self.line_bytes.unwrap_or(defaults.line_size),
        }
    }

    pub fn cost_params(&self) -> NvmCostParams {
        self.cost.clone().unwrap_or_default()
    }

    pub fn label(&self) -> String {
        match self.preset {
            Some(p)
                if self.counter.is_none() && self.insertion.is_none() && self.walk.is_none() =>
            {
                p.name().to_string()
            }
            _ => {
                let policy = self.build_policy();
                format!(
                    "{:?}/{:?}/{:?}/{:?}",
                    policy.insertion, policy.counting, policy.counter, policy.child_index
                )
                .to_lowercase()
            }
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub patterns: Option<PatternSet>,
    pub transactions: usize,
    pub min_support: u64,
    pub oracle_verified: bool,
    /// Per-bit flip counts of the watched words, when requested.
    pub wear_dump: Option<String>,
}

fn run_on_dataset(cfg: &RunConfig, dataset: &Dataset) -> Result<RunOutcome, RunError> {
    let min_support = cfg.min_support.resolve(dataset.len())?;
    let policy = cfg.build_policy();
    policy.validate().map_err(RunError::Usage)?;
    let cache = cfg.cache_config();
    let costs = cfg.cost_params();
    let mut mem = NvmModel::new(&costs, &cache).map_err(|e| RunError::Usage(e.to_string()))?;

    let (fptree, header, _) = build_tree(dataset, min_support, policy, &mut mem)?;

    let mut patterns = None;
    let mut oracle_verified = false;
    if cfg.mine || cfg.oracle {
        mem.set_phase(Phase::Mine);
        let mined = fp_growth(&fptree, &header, min_support, &mut mem)?;
        if cfg.oracle {
            let expected = apriori_oracle(dataset, min_support)?;
            if mined != expected {
                return Err(RunError::OracleMismatch(format!(
                    "{} mined vs {} expected itemsets",
                    mined.len(),
                    expected.len()
                )));
            }
            oracle_verified = true;
        }
        patterns = Some(mined);
    }

    Ok(RunOutcome {
        report: mem.report(),
        patterns: if cfg.mine { patterns } else { None },
        transactions: dataset.len(),
        min_support,
        oracle_verified,
        wear_dump: cfg.wear_dump.as_ref().map(|_| mem.wear_dump()),
    })
}

/// Loads the dataset and executes scan, build, finalize and (optionally)
/// mine, returning the metrics snapshot and any mined patterns. With the
/// oracle toggle the mined patterns are checked exactly against the
/// brute-force enumeration.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let dataset = load_transactions(&cfg.dataset)?;
    run_on_dataset(cfg, &dataset)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MatrixDeltas {
    pub write_reduction: f64,
    pub read_reduction: f64,
    pub time_reduction: f64,
    pub energy_reduction: f64,
    pub max_flip_reduction: f64,
}

pub struct MatrixRow {
    pub label: String,
    pub totals: PhaseMetrics,
    pub max_header_bit_flips: u64,
    pub deltas: MatrixDeltas,
}

pub struct MatrixReport {
    pub rows: Vec<MatrixRow>,
}

fn reduction(baseline: f64, candidate: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - candidate) / baseline
    }
}

/// Runs several configurations of the same dataset and support threshold and
/// tabulates each against the first (the baseline): reductions are
/// (baseline - candidate) / baseline.
pub fn run_matrix(configs: &[RunConfig]) -> Result<MatrixReport, RunError> {
    if configs.len() < 2 {
        return Err(RunError::Usage(
            "matrix comparison needs at least 2 configurations".into(),
        ));
    }
    let first = &configs[0];
    for cfg in &configs[1..] {
        if cfg.dataset != first.dataset || cfg.min_support != first.min_support {
            return Err(RunError::Usage(
                "matrix configurations must share dataset and min support".into(),
            ));
        }
    }

    let dataset = load_transactions(&first.dataset)?;
    let mut rows = Vec::new();
    let mut baseline: Option<(PhaseMetrics, u64)> = None;
    for cfg in configs {
        let outcome = run_on_dataset(cfg, &dataset)?;
        let totals = outcome.report.total();
        let max_flips = outcome.report.max_header_bit_flips;
        let deltas = match &baseline {
            None => {
                baseline = Some((totals, max_flips));
                MatrixDeltas::default()
            }
            Some((base, base_flips)) => MatrixDeltas {
                write_reduction: reduction(base.nvm_writes as f64, totals.nvm_writes as f64),
                read_reduction: reduction(base.nvm_reads as f64, totals.nvm_reads as f64),
                time_reduction: reduction(base.sim_time_ns(), totals.sim_time_ns()),
                energy_reduction: reduction(base.sim_energy_pj(), totals.sim_energy_pj()),
                max_flip_reduction: reduction(*base_flips as f64, max_flips as f64),
            },
        };
        rows.push(MatrixRow {
            label: cfg.label(),
            totals,
            max_header_bit_flips: max_flips,
            deltas,
        });
    }
    Ok(MatrixReport { rows })
}

impl MatrixReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,nvm_writes,nvm_reads,set_bits,reset_bits,max_header_bit_flips,\
sim_time_ns,sim_energy_pj,cache_hits,cache_misses,write_reduction,read_reduction,\
time_reduction,energy_reduction,max_flip_reduction\n",
        );
        for row in &self.rows {
            let t = &row.totals;
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.3},{:.3},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                row.label,
                t.nvm_writes,
                t.nvm_reads,
                t.set_bits,
                t.reset_bits,
                row.max_header_bit_flips,
                t.sim_time_ns(),
                t.sim_energy_pj(),
                t.cache_hits,
                t.cache_misses,
                row.deltas.write_reduction,
                row.deltas.read_reduction,
                row.deltas.time_reduction,
                row.deltas.energy_reduction,
                row.deltas.max_flip_reduction,
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!(self
            .rows
            .iter()
            .map(|row| {
                let t = &row.totals;
                json!({
                    "label": row.label,
                    "nvm_writes": t.nvm_writes,
                    "nvm_reads": t.nvm_reads,
                    "set_bits": t.set_bits,
                    "reset_bits": t.reset_bits,
                    "max_header_bit_flips": row.max_header_bit_flips,
                    "sim_time_ns": t.sim_time_ns(),
                    "sim_energy_pj": t.sim_energy_pj(),
                    "cache_hits": t.cache_hits,
                    "cache_misses": t.cache_misses,
                    "write_reduction": row.deltas.write_reduction,
                    "read_reduction": row.deltas.read_reduction,
                    "time_reduction": row.deltas.time_reduction,
                    "energy_reduction": row.deltas.energy_reduction,
                    "max_flip_reduction": row.deltas.max_flip_reduction,
                })
            })
            .collect::<Vec<_>>())
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<44} {:>12} {:>12} {:>14} {:>16} {:>16} {:>8} {:>8} {:>8} {:>8}\n",
            "config",
            "nvm_writes",
            "nvm_reads",
            "max_bit_flips",
            "sim_time_ns",
            "sim_energy_pj",
            "w.red",
            "r.red",
            "t.red",
            "e.red"
        );
        for row in &self.rows {
            let t = &row.totals;
            out.push_str(&format!(
                "{:<44} {:>12} {:>12} {:>14} {:>16.3} {:>16.3} {:>7.1}% {:>7.1}% {:>7.1}% {:>7.1}%\n",
                row.label,
                t.nvm_writes,
                t.nvm_reads,
                row.max_header_bit_flips,
                t.sim_time_ns(),
                t.sim_energy_pj(),
                row.deltas.write_reduction * 100.0,
                row.deltas.read_reduction * 100.0,
                row.deltas.time_reduction * 100.0,
                row.deltas.energy_reduction * 100.0,
            ));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => format!("{:#}\n", self.to_json()),
            OutputFormat::Table => self.to_table(),
        }
    }
}

/// Renders a single run's metrics in the configured format.
pub fn render_run(cfg: &RunConfig, outcome: &RunOutcome) -> String {
    let phases = cfg.phases.as_deref();
    match cfg.format {
        OutputFormat::Csv => outcome.report.to_csv(phases),
        OutputFormat::Json => {
            let mut value = outcome.report.to_json(phases);
            if let serde_json::Value::Object(map) = &mut value {
                map.insert("transactions".into(), json!(outcome.transactions));
                map.insert("min_support".into(), json!(outcome.min_support));
            }
            format!("{value:#}\n")
        }
        OutputFormat::Table => {
            let mut out = format!(
                "transactions: {}, min support: {}\n",
                outcome.transactions, outcome.min_support
            );
            out.push_str(&outcome.report.to_table(phases));
            out
        }
    }
}

impl fmt::Display for MatrixReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}
