//! Simulated persistent memory with bit-level SET/RESET accounting.
//!
//! Every store is a data-comparison write: old and new bytes are diffed and
//! only actual 0->1 (SET) and 1->0 (RESET) transitions are charged. A write
//! that flips no bits is a silent store and touches no accumulator. Reads go
//! through a set-associative LRU cache; hits cost SRAM latency, misses cost
//! NVM latency and energy. Stores are write-through, so wear lands on the
//! persistent cells at write time.

mod cache;
mod metrics;
mod wear;

pub use cache::{CacheConfig, CacheSim};
pub use metrics::{MetricsReport, Phase, PhaseMetrics, CSV_HEADER};
pub use wear::WearMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NvmError {
    #[error("allocation of zero bytes")]
    ZeroAlloc,
    #[error("address space exhausted: {requested} bytes requested, ceiling {ceiling}")]
    AddressSpaceExhausted { requested: u64, ceiling: u64 },
    #[error("out-of-bounds access at {addr:#x}, len {len}")]
    OutOfBounds { addr: u64, len: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How the energy of a write operation is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WriteEnergyMode {
    /// SET/RESET energy charged per flipped bit.
    #[default]
    PerBit,
    /// One SET (or RESET, if no bit was set) energy charge per operation.
    PerOp,
}

/// PCM and SRAM cost constants. Defaults are the modeled device parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NvmCostParams {
    pub read_latency_ns: f64,
    pub set_latency_ns: f64,
    pub reset_latency_ns: f64,
    /// Per read operation (per missed line).
    pub read_energy_pj: f64,
    /// Per SET bit (or per SET-dominated operation in per-op mode).
    pub set_energy_pj: f64,
    /// Per RESET bit (or per RESET-only operation in per-op mode).
    pub reset_energy_pj: f64,
    pub sram_latency_ns: f64,
    pub write_energy_mode: WriteEnergyMode,
}

impl Default for NvmCostParams {
    fn default() -> Self {
        NvmCostParams {
            read_latency_ns: 6.82,
            set_latency_ns: 152.20,
            reset_latency_ns: 12.20,
            read_energy_pj: 64.0,
            set_energy_pj: 70.0,
            reset_energy_pj: 876.0,
            sram_latency_ns: 1.41,
            write_energy_mode: WriteEnergyMode::PerBit,
        }
    }
}

impl NvmCostParams {
    pub fn validate(&self) -> Result<(), NvmError> {
        let all = [
            self.read_latency_ns,
            self.set_latency_ns,
            self.reset_latency_ns,
            self.read_energy_pj,
            self.set_energy_pj,
            self.reset_energy_pj,
            self.sram_latency_ns,
        ];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(NvmError::InvalidConfig(
                "all latencies and energies must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Integer-domain costs: picoseconds and femtojoules.
struct CostTable {
    read_lat_ps: u64,
    set_lat_ps: u64,
    reset_lat_ps: u64,
    sram_lat_ps: u64,
    read_en_fj: u64,
    set_en_fj: u64,
    reset_en_fj: u64,
    per_op_energy: bool,
}

impl CostTable {
    fn from_params(p: &NvmCostParams) -> Self {
        let scale = |v: f64| (v * 1000.0).round() as u64;
        CostTable {
            read_lat_ps: scale(p.read_latency_ns),
            set_lat_ps: scale(p.set_latency_ns),
            reset_lat_ps: scale(p.reset_latency_ns),
            sram_lat_ps: scale(p.sram_latency_ns),
            read_en_fj: scale(p.read_energy_pj),
            set_en_fj: scale(p.set_energy_pj),
            reset_en_fj: scale(p.reset_energy_pj),
            per_op_energy: p.write_energy_mode == WriteEnergyMode::PerOp,
        }
    }
}

/// An allocated address range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub addr: u64,
    pub len: u64,
}

/// Base address of the first allocation; address 0 is never valid and serves
/// as the null reference in on-NVM data structures.
pub const BASE_ADDR: u64 = 64;

const DEFAULT_CEILING: u64 = 1 << 30;

pub struct NvmModel {
    store: Vec<u8>,
    next_addr: u64,
    ceiling: u64,
    cache: CacheSim,
    wear: WearMap,
    costs: CostTable,
    phase: Phase,
    acc: [PhaseMetrics; 4],
    read_ops: u64,
    write_ops: u64,
}

impl NvmModel {
    pub fn new(params: &NvmCostParams, cache: &CacheConfig) -> Result<Self, NvmError> {
        params.validate()?;
        Ok(NvmModel {
            store: Vec::new(),
            next_addr: BASE_ADDR,
            ceiling: DEFAULT_CEILING,
            cache: CacheSim::new(cache)?,
            wear: WearMap::unwatched(),
            costs: CostTable::from_params(params),
            phase: Phase::Scan1,
            acc: [PhaseMetrics::default(); 4],
            read_ops: 0,
            write_ops: 0,
        })
    }

    pub fn with_defaults() -> Self {
        NvmModel::new(&NvmCostParams::default(), &CacheConfig::default())
            .expect("default parameters are valid")
    }

    pub fn set_address_ceiling(&mut self, ceiling: u64) {
        self.ceiling = ceiling;
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// Designates the per-bit wear watch region. Flip history outside any
    /// previously watched range is not retained.
    pub fn set_watch_region(&mut self, region: Region) -> Result<(), NvmError> {
        self.wear = WearMap::watch(region)?;
        Ok(())
    }

    /// Zero-initialized region at a fresh 8-byte-aligned address. The zeroing
    /// is the background formatted state and is not charged.
    pub fn alloc(&mut self, len: u64) -> Result<Region, NvmError> {
        if len == 0 {
            return Err(NvmError::ZeroAlloc);
        }
        let rounded = (len + 7) & !7;
        if self.next_addr + rounded > self.ceiling {
            return Err(NvmError::AddressSpaceExhausted {
                requested: rounded,
                ceiling: self.ceiling,
            });
        }
        let region = Region {
            addr: self.next_addr,
            len,
        };
        self.next_addr += rounded;
        self.store.resize((self.next_addr - BASE_ADDR) as usize, 0);
        Ok(region)
    }

    fn check_bounds(&self, addr: u64, len: u64) -> Result<(), NvmError> {
        if len == 0 || addr < BASE_ADDR || addr + len > self.next_addr {
            return Err(NvmError::OutOfBounds { addr, len });
        }
        Ok(())
    }

    fn idx(&self, addr: u64) -> usize {
        (addr - BASE_ADDR) as usize
    }

    fn touch_read_lines(&mut self, addr: u64, len: u64) {
        let ls = self.cache.line_size();
        let phase = self.phase.index();
        for line in addr / ls..=(addr + len - 1) / ls {
            let m = &mut self.acc[phase];
            if self.cache.access(line * ls) {
                m.cache_hits += 1;
                m.sim_time_ps += self.costs.sram_lat_ps;
            } else {
                m.cache_misses += 1;
                m.nvm_reads += 1;
                m.sim_time_ps += self.costs.read_lat_ps;
                m.sim_energy_fj += self.costs.read_en_fj;
            }
        }
    }

    /// Charged read. Each covered line is one cache access: a hit costs SRAM
    /// latency, a miss costs NVM read latency plus read energy and counts as
    /// one NVM read.
    pub fn read(&mut self, addr: u64, len: u64) -> Result<Vec<u8>, NvmError> {
        self.check_bounds(addr, len)?;
        self.read_ops += 1;
        self.touch_read_lines(addr, len);
        let i = self.idx(addr);
        Ok(self.store[i..i + len as usize].to_vec())
    }

    pub fn read_u64(&mut self, addr: u64) -> Result<u64, NvmError> {
        self.check_bounds(addr, 8)?;
        self.read_ops += 1;
        self.touch_read_lines(addr, 8);
        let i = self.idx(addr);
        Ok(u64::from_le_bytes(self.store[i..i + 8].try_into().unwrap()))
    }

    /// Charged data-comparison write. Flipped bits are recorded as SET/RESET,
    /// wear is tracked in the watch region, and the operation counts as one
    /// write activity iff at least one bit flipped. A silent store (identical
    /// data) changes no accumulator and does not touch the cache.
    pub fn write(&mut self, addr: u64, data: &[u8]) -> Result<(), NvmError> {
        self.check_bounds(addr, data.len() as u64)?;
        self.write_ops += 1;

        let i = self.idx(addr);
        let mut set_bits = 0u64;
        let mut reset_bits = 0u64;
        for (k, &new) in data.iter().enumerate() {
            let old = self.store[i + k];
            set_bits += (new & !old).count_ones() as u64;
            reset_bits += (old & !new).count_ones() as u64;
        }
        if set_bits + reset_bits == 0 {
            return Ok(());
        }

        for (k, &new) in data.iter().enumerate() {
            let old = self.store[i + k];
            self.wear.record(addr + k as u64, old, new);
            self.store[i + k] = new;
        }

        let m = &mut self.acc[self.phase.index()];
        m.nvm_writes += 1;
        m.set_bits += set_bits;
        m.reset_bits += reset_bits;
        // Bits within a word are programmed in parallel; the slower SET class
        // dominates the operation latency when present.
        m.sim_time_ps += if set_bits > 0 {
            self.costs.set_lat_ps
        } else {
            self.costs.reset_lat_ps
        };
        m.sim_energy_fj += if self.costs.per_op_energy {
            if set_bits > 0 {
                self.costs.set_en_fj
            } else {
                self.costs.reset_en_fj
            }
        } else {
            set_bits * self.costs.set_en_fj + reset_bits * self.costs.reset_en_fj
        };

        // Write-through: the cache copy (or the freshly installed line) stays
        // coherent with the NVM cells; the access updates recency only.
        let ls = self.cache.line_size();
        let end = addr + data.len() as u64 - 1;
        let phase = self.phase.index();
        for line in addr / ls..=end / ls {
            let m = &mut self.acc[phase];
            if self.cache.access(line * ls) {
                m.cache_hits += 1;
            } else {
                m.cache_misses += 1;
            }
        }
        Ok(())
    }

    pub fn write_u64(&mut self, addr: u64, value: u64) -> Result<(), NvmError> {
        self.write(addr, &value.to_le_bytes())
    }

    /// Uncharged inspection of backing data, for diagnostics and for the
    /// data-comparison path of read-modify-write sequences whose read side is
    /// internal to the memory controller.
    pub fn peek(&self, addr: u64, len: u64) -> Result<Vec<u8>, NvmError> {
        self.check_bounds(addr, len)?;
        let i = self.idx(addr);
        Ok(self.store[i..i + len as usize].to_vec())
    }

    pub fn peek_u64(&self, addr: u64) -> Result<u64, NvmError> {
        self.check_bounds(addr, 8)?;
        let i = self.idx(addr);
        Ok(u64::from_le_bytes(self.store[i..i + 8].try_into().unwrap()))
    }

    /// Charges `count` volatile scratch operations at SRAM latency.
    pub fn charge_sram(&mut self, count: u64) {
        let m = &mut self.acc[self.phase.index()];
        m.sram_accesses += count;
        m.sim_time_ps += count * self.costs.sram_lat_ps;
    }

    /// Tags the most recent reads as header-table scans (reporting only).
    pub fn note_header_scan_reads(&mut self, count: u64) {
        self.acc[self.phase.index()].header_scan_reads += count;
    }

    /// Total read operations issued (calls, not missed lines).
    pub fn read_ops(&self) -> u64 {
        self.read_ops
    }

    /// Total write operations issued, including silent stores.
    pub fn write_ops(&self) -> u64 {
        self.write_ops
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            phases: self.acc,
            max_header_bit_flips: self.wear.max_flips(),
            max_header_value_bit_flips: self.wear.max_flips_in_word_bits(0..60),
            max_header_metadata_bit_flips: self.wear.max_flips_in_word_bits(60..64),
        }
    }

    pub fn wear_dump(&self) -> String {
        self.wear.dump()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alloc_zeroed_disjoint_and_guarded() {
        let mut mem = NvmModel::with_defaults();
        let a = mem.alloc(64).unwrap();
        let b = mem.alloc(64).unwrap();
        assert_eq!(mem.peek(a.addr, 64).unwrap(), vec![0u8; 64]);
        assert!(a.addr + 64 <= b.addr || b.addr + 64 <= a.addr);
        assert!(matches!(mem.alloc(0), Err(NvmError::ZeroAlloc)));
        let report = mem.report();
        assert_eq!(report.total().nvm_writes, 0);
        assert_eq!(report.total().sim_time_ns(), 0.0);
    }

    #[test]
    fn address_space_ceiling() {
        let mut mem = NvmModel::with_defaults();
        mem.set_address_ceiling(BASE_ADDR + 16);
        assert!(mem.alloc(16).is_ok());
        assert!(matches!(
            mem.alloc(8),
            Err(NvmError::AddressSpaceExhausted { .. })
        ));
    }

    #[test]
    fn cold_read_charges_exact_constants() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(64).unwrap();
        mem.read(r.addr, 8).unwrap();
        let total = mem.report().total();
        assert_eq!(total.nvm_reads, 1);
        assert_eq!(total.sim_time_ns(), 6.82);
        assert_eq!(total.sim_energy_pj(), 64.0);
    }

    #[test]
    fn warm_read_charges_sram_latency_only() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(64).unwrap();
        mem.read(r.addr, 8).unwrap();
        mem.read(r.addr, 8).unwrap();
        let total = mem.report().total();
        assert_eq!(total.nvm_reads, 1);
        assert_eq!(total.cache_hits, 1);
        assert_eq!(total.sim_time_ns(), 6.82 + 1.41);
        assert_eq!(total.sim_energy_pj(), 64.0);
    }

    #[test]
    fn read_spanning_two_lines_misses_twice() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(128).unwrap();
        assert_eq!(r.addr % 64, 0);
        mem.read(r.addr + 60, 8).unwrap();
        assert_eq!(mem.report().total().nvm_reads, 2);
    }

    #[test]
    fn write_set_bits_charges_set_class() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(8).unwrap();
        mem.write(r.addr, &[0x05]).unwrap();
        let total = mem.report().total();
        assert_eq!(total.set_bits, 2);
        assert_eq!(total.reset_bits, 0);
        assert_eq!(total.nvm_writes, 1);
        assert_eq!(total.sim_time_ns(), 152.20);
        assert_eq!(total.sim_energy_pj(), 140.0);
    }

    #[test]
    fn write_reset_bits_charges_reset_class() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(8).unwrap();
        mem.write(r.addr, &[0xff]).unwrap();
        let before = mem.report().total();
        mem.write(r.addr, &[0x00]).unwrap();
        let total = mem.report().total();
        assert_eq!(total.reset_bits, 8);
        assert_eq!(total.sim_time_ps - before.sim_time_ps, 12_200);
        assert_eq!(total.sim_energy_fj - before.sim_energy_fj, 8 * 876_000);
    }

    #[test]
    fn silent_store_changes_no_accumulator() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(8).unwrap();
        mem.write(r.addr, &[0xa5]).unwrap();
        let before = mem.report();
        mem.write(r.addr, &[0xa5]).unwrap();
        assert_eq!(mem.report(), before);
    }

    #[test]
    fn per_op_write_energy_mode() {
        let params = NvmCostParams {
            write_energy_mode: WriteEnergyMode::PerOp,
            ..NvmCostParams::default()
        };
        let mut mem = NvmModel::new(&params, &CacheConfig::default()).unwrap();
        let r = mem.alloc(8).unwrap();
        mem.write(r.addr, &[0x0f]).unwrap();
        assert_eq!(mem.report().total().sim_energy_pj(), 70.0);
    }

    #[test]
    fn out_of_bounds_is_fatal() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(8).unwrap();
        assert!(matches!(
            mem.read(r.addr + 8, 8),
            Err(NvmError::OutOfBounds { .. })
        ));
        assert!(mem.read(0, 8).is_err());
    }

    #[test]
    fn report_is_idempotent_and_starts_zero() {
        let mut mem = NvmModel::with_defaults();
        let fresh = mem.report();
        assert_eq!(fresh.total(), PhaseMetrics::default());
        assert_eq!(fresh.max_header_bit_flips, 0);
        let r = mem.alloc(64).unwrap();
        for _ in 0..3 {
            // distinct cold lines
        }
        mem.read(r.addr, 8).unwrap();
        let a = mem.report();
        let b = mem.report();
        assert_eq!(a, b);
    }

    #[test]
    fn k_cold_reads_charge_k_read_latencies() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(64 * 8).unwrap();
        for k in 0..8u64 {
            mem.read(r.addr + 64 * k, 8).unwrap();
        }
        let total = mem.report().total();
        assert_eq!(total.nvm_reads, 8);
        assert!((total.sim_time_ns() - 8.0 * 6.82).abs() < 1e-9);
    }

    #[test]
    fn wear_conservation_over_watched_region() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(64).unwrap();
        mem.set_watch_region(r).unwrap();
        let mut x = 0x9e3779b97f4a7c15u64;
        for i in 0..200u64 {
            x = x.wrapping_mul(0xd1342543de82ef95).wrapping_add(1);
            mem.write_u64(r.addr + (i % 8) * 8, x).unwrap();
        }
        let total = mem.report().total();
        // Every write landed in the watched region, so aggregate SET+RESET
        // must equal the per-bit flip total.
        let per_bit: u64 = mem
            .wear_dump()
            .lines()
            .flat_map(|l| l.split(',').map(|c| c.parse::<u64>().unwrap()))
            .sum();
        assert_eq!(total.set_bits + total.reset_bits, per_bit);
        assert!(per_bit > 0);
    }

    #[test]
    fn phase_attribution_sums_to_total() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(256).unwrap();
        mem.set_phase(Phase::Scan1);
        mem.write(r.addr, &[1, 2, 3]).unwrap();
        mem.set_phase(Phase::Build);
        // A line the write-allocate above did not install.
        mem.read(r.addr + 192, 8).unwrap();
        mem.set_phase(Phase::Mine);
        mem.write(r.addr + 128, &[0xff]).unwrap();
        let report = mem.report();
        let total = report.total();
        assert_eq!(total.nvm_writes, 2);
        assert_eq!(report.phase(Phase::Scan1).nvm_writes, 1);
        assert_eq!(report.phase(Phase::Mine).nvm_writes, 1);
        assert_eq!(report.phase(Phase::Build).nvm_reads, 1);
        assert_eq!(report.phase(Phase::Finalize), &PhaseMetrics::default());
        let phase_time: u64 = report.phases.iter().map(|p| p.sim_time_ps).sum();
        assert_eq!(phase_time, total.sim_time_ps);
    }

    #[test]
    fn working_set_within_capacity_stops_missing_after_warmup() {
        let mut mem = NvmModel::with_defaults();
        let r = mem.alloc(32 * 1024).unwrap();
        for pass in 0..2 {
            for line in 0..512u64 {
                mem.read(r.addr + line * 64, 8).unwrap();
            }
            let total = mem.report().total();
            if pass == 0 {
                assert_eq!(total.cache_misses, 512);
            } else {
                assert_eq!(total.cache_misses, 512);
                assert_eq!(total.cache_hits, 512);
            }
        }
    }
}
