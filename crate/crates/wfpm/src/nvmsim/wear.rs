//! Per-bit flip tracking over a designated watch region.
//!
//! The watch region covers the header-table counter area in a normal run so
//! the maximum per-bit flip count of those counters can be reported. Bits
//! outside the region still feed the aggregate SET/RESET totals kept by the
//! model; only the per-bit map is restricted.

use super::{NvmError, Region};

pub struct WearMap {
    start: u64,
    len: u64,
    /// One flip counter per bit of the watched range, bit 0 of the lowest
    /// byte first.
    flips: Vec<u64>,
}

impl WearMap {
    pub fn unwatched() -> Self {
        WearMap {
            start: 0,
            len: 0,
            flips: Vec::new(),
        }
    }

    pub fn watch(region: Region) -> Result<Self, NvmError> {
        if !region.addr.is_multiple_of(8) || !region.len.is_multiple_of(8) || region.len == 0 {
            return Err(NvmError::InvalidConfig(
                "watch region must be a non-empty range of 8-byte words".into(),
            ));
        }
        Ok(WearMap {
            start: region.addr,
            len: region.len,
            flips: vec![0; (region.len * 8) as usize],
        })
    }

    /// Record the flips of one byte write at `addr` (old -> new).
    pub fn record(&mut self, addr: u64, old: u8, new: u8) {
        if self.len == 0 || addr < self.start || addr >= self.start + self.len {
            return;
        }
        let diff = old ^ new;
        if diff == 0 {
            return;
        }
        let base = ((addr - self.start) * 8) as usize;
        for bit in 0..8 {
            if diff & (1 << bit) != 0 {
                self.flips[base + bit] += 1;
            }
        }
    }

    pub fn total_flips(&self) -> u64 {
        self.flips.iter().sum()
    }

    pub fn max_flips(&self) -> u64 {
        self.flips.iter().copied().max().unwrap_or(0)
    }

    /// Max flips over a sub-range of bit positions within each 64-bit word,
    /// e.g. 0..60 for the value bits of a counter word, 60..64 for metadata.
    pub fn max_flips_in_word_bits(&self, bits: std::ops::Range<usize>) -> u64 {
        self.flips
            .chunks(64)
            .flat_map(|w| w[bits.clone()].iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// One line per watched 64-bit word: 64 comma-separated per-bit flip
    /// counts, bit 0 first.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for word in self.flips.chunks(64) {
            let line: Vec<String> = word.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_only_inside_region() {
        let mut map = WearMap::watch(Region { addr: 64, len: 8 }).unwrap();
        map.record(63, 0x00, 0xff);
        assert_eq!(map.total_flips(), 0);
        map.record(64, 0x00, 0x05);
        assert_eq!(map.total_flips(), 2);
        map.record(64, 0x05, 0x00);
        assert_eq!(map.total_flips(), 4);
        assert_eq!(map.max_flips(), 2);
    }

    #[test]
    fn dump_has_one_line_per_word() {
        let mut map = WearMap::watch(Region { addr: 0, len: 16 }).unwrap();
        map.record(0, 0, 1);
        let dump = map.dump();
        assert_eq!(dump.lines().count(), 2);
        let first: Vec<&str> = dump.lines().next().unwrap().split(',').collect();
        assert_eq!(first.len(), 64);
        assert_eq!(first[0], "1");
        assert_eq!(first[1], "0");
    }
}
