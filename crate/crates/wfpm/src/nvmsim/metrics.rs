//! Accumulated cost metrics and their CSV/JSON/table serializations.
//!
//! Time and energy are accumulated as integer picoseconds and femtojoules so
//! that totals are exact and independent of summation order; they are exposed
//! as nanoseconds and picojoules.

use serde::{Deserialize, Serialize};
use serde_json::json;

/// Phase of an experiment, used to attribute costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Scan1,
    Build,
    Finalize,
    Mine,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Scan1, Phase::Build, Phase::Finalize, Phase::Mine];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Scan1 => "scan1",
            Phase::Build => "build",
            Phase::Finalize => "finalize",
            Phase::Mine => "mine",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Phase::Scan1 => 0,
            Phase::Build => 1,
            Phase::Finalize => 2,
            Phase::Mine => 3,
        }
    }
}

/// Additive counters for one phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseMetrics {
    /// Write operations that flipped at least one bit.
    pub nvm_writes: u64,
    /// Cache-missed line reads served by the NVM.
    pub nvm_reads: u64,
    pub set_bits: u64,
    pub reset_bits: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Volatile scratch accesses (per-transaction bitmaps), time-only.
    pub sram_accesses: u64,
    /// Header-entry reads issued while driving insertion order from the
    /// header table, reported separately so the charging policy is visible.
    pub header_scan_reads: u64,
    pub(crate) sim_time_ps: u64,
    pub(crate) sim_energy_fj: u64,
}

impl PhaseMetrics {
    pub fn sim_time_ns(&self) -> f64 {
        self.sim_time_ps as f64 / 1000.0
    }

    pub fn sim_energy_pj(&self) -> f64 {
        self.sim_energy_fj as f64 / 1000.0
    }

    fn accumulate(&mut self, other: &PhaseMetrics) {
        self.nvm_writes += other.nvm_writes;
        self.nvm_reads += other.nvm_reads;
        self.set_bits += other.set_bits;
        self.reset_bits += other.reset_bits;
        self.cache_hits += other.cache_hits;
        self.cache_misses += other.cache_misses;
        self.sram_accesses += other.sram_accesses;
        self.header_scan_reads += other.header_scan_reads;
        self.sim_time_ps += other.sim_time_ps;
        self.sim_energy_fj += other.sim_energy_fj;
    }
}

/// Immutable snapshot of all accumulators, broken down by phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricsReport {
    pub phases: [PhaseMetrics; 4],
    /// Max per-bit flips over the watched region, all 64 bits of each word.
    pub max_header_bit_flips: u64,
    /// Same maximum restricted to the value bits (word bits 0..60).
    pub max_header_value_bit_flips: u64,
    /// Same maximum restricted to the metadata bits (word bits 60..64).
    pub max_header_metadata_bit_flips: u64,
}

pub const CSV_HEADER: &str = "phase,nvm_writes,nvm_reads,set_bits,reset_bits,\
max_header_bit_flips,sim_time_ns,sim_energy_pj,cache_hits,cache_misses,\
sram_accesses,header_scan_reads,max_header_value_bit_flips,max_header_metadata_bit_flips";

impl MetricsReport {
    pub fn phase(&self, phase: Phase) -> &PhaseMetrics {
        &self.phases[phase.index()]
    }

    /// Sum over all phases. The max_* fields are not additive and live on
    /// the report itself.
    pub fn total(&self) -> PhaseMetrics {
        let mut total = PhaseMetrics::default();
        for p in &self.phases {
            total.accumulate(p);
        }
        total
    }

    fn csv_row(&self, name: &str, m: &PhaseMetrics, with_max: bool) -> String {
        let (max_all, max_val, max_meta) = if with_max {
            (
                self.max_header_bit_flips,
                self.max_header_value_bit_flips,
                self.max_header_metadata_bit_flips,
            )
        } else {
            (0, 0, 0)
        };
        format!(
            "{},{},{},{},{},{},{:.3},{:.3},{},{},{},{},{},{}",
            name,
            m.nvm_writes,
            m.nvm_reads,
            m.set_bits,
            m.reset_bits,
            max_all,
            m.sim_time_ns(),
            m.sim_energy_pj(),
            m.cache_hits,
            m.cache_misses,
            m.sram_accesses,
            m.header_scan_reads,
            max_val,
            max_meta,
        )
    }

    /// CSV with one row per requested phase plus a `total` row. The max
    /// per-bit flip columns are populated on the total row only.
    pub fn to_csv(&self, phases: Option<&[Phase]>) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let selected: Vec<Phase> = match phases {
            Some(list) => list.to_vec(),
            None => Phase::ALL.to_vec(),
        };
        for phase in selected {
            out.push_str(&self.csv_row(phase.name(), self.phase(phase), false));
            out.push('\n');
        }
        out.push_str(&self.csv_row("total", &self.total(), true));
        out.push('\n');
        out
    }

    fn metrics_json(m: &PhaseMetrics) -> serde_json::Value {
        json!({
            "nvm_writes": m.nvm_writes,
            "nvm_reads": m.nvm_reads,
            "set_bits": m.set_bits,
            "reset_bits": m.reset_bits,
            "sim_time_ns": m.sim_time_ns(),
            "sim_energy_pj": m.sim_energy_pj(),
            "cache_hits": m.cache_hits,
            "cache_misses": m.cache_misses,
            "sram_accesses": m.sram_accesses,
            "header_scan_reads": m.header_scan_reads,
        })
    }

    pub fn to_json(&self, phases: Option<&[Phase]>) -> serde_json::Value {
        let mut phase_map = serde_json::Map::new();
        let selected: Vec<Phase> = match phases {
            Some(list) => list.to_vec(),
            None => Phase::ALL.to_vec(),
        };
        for phase in selected {
            phase_map.insert(
                phase.name().to_string(),
                Self::metrics_json(self.phase(phase)),
            );
        }
        let mut total = match Self::metrics_json(&self.total()) {
            serde_json::Value::Object(map) => map,
            _ => unreachable!(),
        };
        total.insert(
            "max_header_bit_flips".into(),
            json!(self.max_header_bit_flips),
        );
        total.insert(
            "max_header_value_bit_flips".into(),
            json!(self.max_header_value_bit_flips),
        );
        total.insert(
            "max_header_metadata_bit_flips".into(),
            json!(self.max_header_metadata_bit_flips),
        );
        json!({ "phases": phase_map, "total": total })
    }

    pub fn to_table(&self, phases: Option<&[Phase]>) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>12} {:>12} {:>16} {:>16} {:>10} {:>10}\n",
            "phase",
            "nvm_writes",
            "nvm_reads",
            "set_bits",
            "reset_bits",
            "sim_time_ns",
            "sim_energy_pj",
            "hits",
            "misses"
        ));
        let selected: Vec<Phase> = match phases {
            Some(list) => list.to_vec(),
            None => Phase::ALL.to_vec(),
        };
        let mut row = |name: &str, m: &PhaseMetrics| {
            out.push_str(&format!(
                "{:<10} {:>12} {:>12} {:>12} {:>12} {:>16.3} {:>16.3} {:>10} {:>10}\n",
                name,
                m.nvm_writes,
                m.nvm_reads,
                m.set_bits,
                m.reset_bits,
                m.sim_time_ns(),
                m.sim_energy_pj(),
                m.cache_hits,
                m.cache_misses
            ));
        };
        for phase in selected {
            row(phase.name(), self.phase(phase));
        }
        row("total", &self.total());
        out.push_str(&format!(
            "max header bit flips: {} (value bits: {}, metadata bits: {})\n",
            self.max_header_bit_flips,
            self.max_header_value_bit_flips,
            self.max_header_metadata_bit_flips
        ));
        out.push_str(&format!(
            "header scan reads: {}, sram accesses: {}\n",
            self.total().header_scan_reads,
            self.total().sram_accesses
        ));
        out
    }
}
