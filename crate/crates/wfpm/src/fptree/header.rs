//! The header table: frequent items in descending frequency order, each with
//! a persistent support counter and the head of its node-link chain.
//!
//! NVM layout is three parallel arrays in one region: counter words first
//! (this is the wear watch region), then item ids, then node-link heads.

use std::collections::HashMap;

use crate::counter::Counter;
use crate::dataset::ItemId;
use crate::nvmsim::{NvmModel, Region};

use super::policy::BuildPolicy;
use super::FpTreeError;

pub struct HeaderEntry {
    pub item: ItemId,
    pub frequency: u64,
    pub counter: Counter,
    /// Host mirror of the node-link chain head (written through to NVM).
    head: u64,
}

pub struct HeaderTable {
    entries: Vec<HeaderEntry>,
    rank: HashMap<ItemId, usize>,
    base: u64,
}

impl HeaderTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of an item in descending-frequency order, if frequent.
    pub fn rank_of(&self, item: ItemId) -> Option<usize> {
        self.rank.get(&item).copied()
    }

    pub fn entry(&self, rank: usize) -> &HeaderEntry {
        &self.entries[rank]
    }

    pub fn entries(&self) -> &[HeaderEntry] {
        &self.entries
    }

    pub fn counter_addr(&self, rank: usize) -> u64 {
        self.base + 8 * rank as u64
    }

    pub fn item_addr(&self, rank: usize) -> u64 {
        self.base + 8 * (self.len() + rank) as u64
    }

    pub fn link_addr(&self, rank: usize) -> u64 {
        self.base + 8 * (2 * self.len() + rank) as u64
    }

    /// The counter-word array, i.e. the wear watch region.
    pub fn counters_region(&self) -> Option<Region> {
        if self.is_empty() {
            None
        } else {
            Some(Region {
                addr: self.base,
                len: 8 * self.len() as u64,
            })
        }
    }

    pub fn chain_head(&self, rank: usize) -> u64 {
        self.entries[rank].head
    }

    pub fn set_chain_head(
        &mut self,
        rank: usize,
        addr: u64,
        mem: &mut NvmModel,
    ) -> Result<(), FpTreeError> {
        mem.write_u64(self.link_addr(rank), addr)?;
        self.entries[rank].head = addr;
        Ok(())
    }
}

/// Builds the header from the first-scan frequencies: entries ordered by
/// descending frequency (ties by ascending item id), one counter per entry
/// brought up to the item's frequency by counted increments so that the
/// first scan's counter wear is modeled. Designates the counter array as the
/// wear watch region.
pub fn build_header(
    freqs: &HashMap<ItemId, u64>,
    min_support: u64,
    policy: &BuildPolicy,
    mem: &mut NvmModel,
) -> Result<HeaderTable, FpTreeError> {
    let mut ordered: Vec<(ItemId, u64)> = freqs
        .iter()
        .filter(|&(_, &f)| f >= min_support)
        .map(|(&i, &f)| (i, f))
        .collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    if ordered.is_empty() {
        return Ok(HeaderTable {
            entries: Vec::new(),
            rank: HashMap::new(),
            base: 0,
        });
    }

    let n = ordered.len();
    let region = mem.alloc(24 * n as u64)?;
    mem.set_watch_region(Region {
        addr: region.addr,
        len: 8 * n as u64,
    })?;

    let mut entries = Vec::with_capacity(n);
    let mut rank = HashMap::with_capacity(n);
    for (r, (item, frequency)) in ordered.into_iter().enumerate() {
        mem.write_u64(region.addr + 8 * (n + r) as u64, item.0)?;
        let counter = Counter::init(policy.counter, region.addr + 8 * r as u64, mem)?;
        for _ in 0..frequency {
            counter.increment(mem)?;
        }
        entries.push(HeaderEntry {
            item,
            frequency,
            counter,
            head: 0,
        });
        rank.insert(item, r);
    }

    Ok(HeaderTable {
        entries,
        rank,
        base: region.addr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nvmsim::NvmModel;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn freq_map(pairs: &[(u64, u64)]) -> HashMap<ItemId, u64> {
        pairs.iter().map(|&(i, f)| (ItemId(i), f)).collect()
    }

    #[test]
    fn descending_frequency_with_id_tiebreak() {
        let mut mem = NvmModel::with_defaults();
        let freqs = freq_map(&[(1, 2), (2, 2), (3, 1)]);
        let header = build_header(&freqs, 1, &BuildPolicy::classic(), &mut mem).unwrap();
        let order: Vec<u64> = header.entries().iter().map(|e| e.item.0).collect();
        assert_eq!(order, vec![1, 2, 3]);
        assert_eq!(header.entry(0).frequency, 2);
        assert_eq!(header.rank_of(ItemId(3)), Some(2));
        assert_eq!(header.rank_of(ItemId(9)), None);
    }

    #[test]
    fn counters_reach_the_item_frequency() {
        let mut mem = NvmModel::with_defaults();
        let freqs = freq_map(&[(7, 5), (9, 3)]);
        let header = build_header(&freqs, 1, &BuildPolicy::wfpm(), &mut mem).unwrap();
        for entry in header.entries() {
            assert_eq!(entry.counter.peek_value(&mem).unwrap(), entry.frequency);
        }
        // Counter increments showed up in the watched wear map.
        assert!(mem.report().max_header_bit_flips > 0);
    }

    #[test]
    fn unreachable_min_support_yields_empty_header() {
        let mut mem = NvmModel::with_defaults();
        let freqs = freq_map(&[(1, 2), (2, 1)]);
        let header = build_header(&freqs, 10, &BuildPolicy::classic(), &mut mem).unwrap();
        assert!(header.is_empty());
        assert!(header.counters_region().is_none());
    }

    #[test]
    fn order_matches_comparison_sort_oracle() {
        let mut rng = StdRng::seed_from_u64(3);
        let mut mem = NvmModel::with_defaults();
        let pairs: Vec<(u64, u64)> = (0..50).map(|i| (i, rng.gen_range(1..10))).collect();
        let header = build_header(&freq_map(&pairs), 1, &BuildPolicy::evfp(), &mut mem).unwrap();
        let mut expected = pairs.clone();
        expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let got: Vec<(u64, u64)> = header
            .entries()
            .iter()
            .map(|e| (e.item.0, e.frequency))
            .collect();
        assert_eq!(got, expected);
    }
}
