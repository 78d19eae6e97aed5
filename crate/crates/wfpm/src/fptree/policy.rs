//! Swappable construction policies.

use serde::{Deserialize, Serialize};

use crate::counter::CounterKind;

/// How transactions reach the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionPolicy {
    /// Filter the transaction into an NVM scratch buffer, sort it there in
    /// header order (writing the buffer twice), then insert from the buffer.
    SortedBaseline,
    /// Drive insertion order from the header table itself; the transaction
    /// is never copied or sorted in NVM.
    CopyFree,
}

/// When support counters are bumped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingPolicy {
    /// Every node on the inserted path is incremented per transaction.
    Eager,
    /// Only the path's terminal node is incremented; a final depth-first
    /// child-summing pass recovers all supports.
    Lazy,
}

/// Layout of each node's child index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChildIndexKind {
    /// Single list scanned in insertion order.
    Linear,
    /// Hashed buckets, each a list in insertion order.
    HashWalk,
    /// Hashed buckets, each a list in descending global-frequency order.
    SortedHashWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildPolicy {
    pub insertion: InsertionPolicy,
    pub counting: CountingPolicy,
    pub counter: CounterKind,
    pub child_index: ChildIndexKind,
    pub bucket_count: usize,
}

pub const DEFAULT_BUCKET_COUNT: usize = 8;
pub const DEFAULT_SLIDE_PERIOD: u64 = 16;

impl BuildPolicy {
    /// Classical construction: sort-then-insert, per-node counting, plain
    /// binary counters, linear child scans.
    pub fn classic() -> Self {
        BuildPolicy {
            insertion: InsertionPolicy::SortedBaseline,
            counting: CountingPolicy::Eager,
            counter: CounterKind::Regular,
            child_index: ChildIndexKind::Linear,
            bucket_count: DEFAULT_BUCKET_COUNT,
        }
    }

    /// Lazy-counting comparator with hashed child walks.
    pub fn evfp() -> Self {
        BuildPolicy {
            insertion: InsertionPolicy::SortedBaseline,
            counting: CountingPolicy::Lazy,
            counter: CounterKind::Regular,
            child_index: ChildIndexKind::HashWalk,
            bucket_count: DEFAULT_BUCKET_COUNT,
        }
    }

    /// Combined scheme: copy-free growth, lazy counting, sliding counters,
    /// frequency-sorted hash walk.
    pub fn wfpm() -> Self {
        BuildPolicy {
            insertion: InsertionPolicy::CopyFree,
            counting: CountingPolicy::Lazy,
            counter: CounterKind::Sliding {
                slide_period: DEFAULT_SLIDE_PERIOD,
            },
            child_index: ChildIndexKind::SortedHashWalk,
            bucket_count: DEFAULT_BUCKET_COUNT,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.bucket_count == 0 {
            return Err("bucket_count must be at least 1".into());
        }
        self.counter.validate().map_err(|e| e.to_string())
    }

    /// The linear child index is a single insertion-ordered list.
    pub fn effective_buckets(&self) -> usize {
        match self.child_index {
            ChildIndexKind::Linear => 1,
            _ => self.bucket_count,
        }
    }
}
