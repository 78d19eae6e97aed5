//! Pattern extraction: FP-growth over the finished tree, plus a level-wise
//! brute-force oracle for exact cross-checking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::counter::decode_word;
use crate::dataset::{scan_frequencies, Dataset, ItemId};
use crate::fptree::{FPTree, FpTreeError, HeaderTable};
use crate::fptree::{COUNTER_OFF, ITEM_OFF, PARENT_OFF};
use crate::nvmsim::NvmModel;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error(transparent)]
    Tree(#[from] FpTreeError),
    #[error("oracle capacity exceeded: {0}")]
    OracleGuard(String),
}

/// A frequent itemset with its exact support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub items: Vec<ItemId>,
    pub support: u64,
}

/// Canonically ordered collection of patterns: by size, then lexicographic
/// item ids.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PatternSet {
    patterns: Vec<Pattern>,
}

impl PatternSet {
    pub fn from_patterns(mut patterns: Vec<Pattern>) -> Self {
        for p in &mut patterns {
            p.items.sort_unstable();
        }
        patterns.sort_by(|a, b| {
            a.items
                .len()
                .cmp(&b.items.len())
                .then(a.items.cmp(&b.items))
        });
        debug_assert!(
            patterns.windows(2).all(|w| w[0].items != w[1].items),
            "duplicate itemsets in pattern set"
        );
        PatternSet { patterns }
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn support_of(&self, items: &[ItemId]) -> Option<u64> {
        let mut key = items.to_vec();
        key.sort_unstable();
        self.patterns
            .iter()
            .find(|p| p.items == key)
            .map(|p| p.support)
    }

    /// One pattern per line: `item1 item2 ... (support)`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            let items: Vec<String> = p.items.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{} ({})", items.join(" "), p.support);
        }
        out
    }

    /// Every non-empty proper subset of a frequent itemset must itself be
    /// present with at least the superset's support.
    pub fn downward_closure_holds(&self) -> bool {
        let index: HashMap<&[ItemId], u64> = self
            .patterns
            .iter()
            .map(|p| (p.items.as_slice(), p.support))
            .collect();
        self.patterns.iter().all(|p| {
            if p.items.len() <= 1 {
                return true;
            }
            (0..p.items.len()).all(|skip| {
                let subset: Vec<ItemId> = p
                    .items
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &it)| it)
                    .collect();
                index
                    .get(subset.as_slice())
                    .is_some_and(|&s| s >= p.support)
            })
        })
    }
}

/// Prefix paths of every node in one item's node-link chain, as header ranks
/// with the node's support. All main-tree visits are charged reads.
fn chain_prefix_paths(
    fptree: &FPTree,
    header: &HeaderTable,
    rank: usize,
    mem: &mut NvmModel,
) -> Result<Vec<(Vec<usize>, u64)>, MiningError> {
    let mut paths = Vec::new();
    let mut cur = mem
        .read_u64(header.link_addr(rank))
        .map_err(FpTreeError::from)?;
    while cur != 0 {
        // One read covers the node's counter word, parent and node-link.
        let bytes = mem.read(cur + COUNTER_OFF, 24).map_err(FpTreeError::from)?;
        let word = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let parent = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let link = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let support = decode_word(fptree.policy().counter, word).map_err(FpTreeError::from)?;

        let mut path = Vec::new();
        let mut p = parent;
        while p != fptree.root() {
            let pb = mem.read(p + ITEM_OFF, 32).map_err(FpTreeError::from)?;
            let item = u64::from_le_bytes(pb[0..8].try_into().unwrap());
            let pparent = u64::from_le_bytes(
                pb[PARENT_OFF as usize..PARENT_OFF as usize + 8]
                    .try_into()
                    .unwrap(),
            );
            path.push(
                header
                    .rank_of(ItemId(item))
                    .expect("ancestors of tree nodes are frequent items"),
            );
            p = pparent;
        }
        path.reverse();
        paths.push((path, support));
        cur = link;
    }
    Ok(paths)
}

/// Recursive conditional mining over host-memory pattern bases.
fn mine_base(
    base: &[(Vec<usize>, u64)],
    suffix: &[usize],
    min_support: u64,
    out: &mut Vec<(Vec<usize>, u64)>,
) {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for (path, count) in base {
        for &rank in path {
            *counts.entry(rank).or_insert(0) += count;
        }
    }
    for (&rank, &support) in counts.iter() {
        if support < min_support {
            continue;
        }
        let mut itemset = suffix.to_vec();
        itemset.push(rank);
        out.push((itemset.clone(), support));

        let sub: Vec<(Vec<usize>, u64)> = base
            .iter()
            .filter_map(|(path, count)| {
                path.iter()
                    .position(|&r| r == rank)
                    .filter(|&pos| pos > 0)
                    .map(|pos| (path[..pos].to_vec(), *count))
            })
            .collect();
        if !sub.is_empty() {
            mine_base(&sub, &itemset, min_support, out);
        }
    }
}

/// Mines all itemsets with support >= `min_support` from a finalized tree.
/// Conditional pattern bases come from node-link chains and parent walks over
/// the main tree (charged); the recursion itself runs in volatile host
/// memory.
pub fn fp_growth(
    fptree: &FPTree,
    header: &HeaderTable,
    min_support: u64,
    mem: &mut NvmModel,
) -> Result<PatternSet, MiningError> {
    let mut found: Vec<(Vec<usize>, u64)> = Vec::new();
    for rank in 0..header.len() {
        let paths = chain_prefix_paths(fptree, header, rank, mem)?;
        let support: u64 = paths.iter().map(|(_, c)| c).sum();
        debug_assert_eq!(support, header.entry(rank).frequency);
        if support < min_support {
            continue;
        }
        found.push((vec![rank], support));
        let base: Vec<(Vec<usize>, u64)> =
            paths.into_iter().filter(|(p, _)| !p.is_empty()).collect();
        if !base.is_empty() {
            mine_base(&base, &[rank], min_support, &mut found);
        }
    }
    let patterns = found
        .into_iter()
        .map(|(ranks, support)| Pattern {
            items: ranks.iter().map(|&r| header.entry(r).item).collect(),
            support,
        })
        .collect();
    Ok(PatternSet::from_patterns(patterns))
}

const ORACLE_MAX_TRANSACTIONS: usize = 10_000;
const ORACLE_MAX_FREQUENT_ITEMS: usize = 64;

/// Ground-truth frequent itemsets by level-wise candidate generation and
/// full-scan counting. Runs entirely outside the memory model. Guarded to
/// desk scale; transactions are encoded as 64-bit masks over the frequent
/// items.
pub fn apriori_oracle(dataset: &Dataset, min_support: u64) -> Result<PatternSet, MiningError> {
    if dataset.len() > ORACLE_MAX_TRANSACTIONS {
        return Err(MiningError::OracleGuard(format!(
            "{} transactions exceed the {ORACLE_MAX_TRANSACTIONS} limit",
            dataset.len()
        )));
    }
    let freqs = scan_frequencies(dataset, min_support.max(1));
    let mut frequent: Vec<ItemId> = freqs.keys().copied().collect();
    frequent.sort_unstable();
    if frequent.len() > ORACLE_MAX_FREQUENT_ITEMS {
        return Err(MiningError::OracleGuard(format!(
            "{} frequent items exceed the {ORACLE_MAX_FREQUENT_ITEMS} limit",
            frequent.len()
        )));
    }
    if frequent.is_empty() {
        return Ok(PatternSet::default());
    }

    let bit_of: HashMap<ItemId, u32> = frequent
        .iter()
        .enumerate()
        .map(|(i, &item)| (item, i as u32))
        .collect();
    let masks: Vec<u64> = dataset
        .transactions()
        .iter()
        .map(|txn| {
            txn.items()
                .iter()
                .filter_map(|i| bit_of.get(i))
                .fold(0u64, |m, &b| m | (1 << b))
        })
        .collect();
    let support_of = |candidate: u64| -> u64 {
        masks
            .iter()
            .filter(|&&t| t & candidate == candidate)
            .count() as u64
    };

    let mut all: Vec<(u64, u64)> = Vec::new();
    let mut level: Vec<u64> = frequent.iter().map(|i| 1u64 << bit_of[i]).collect();
    for &single in &level {
        all.push((single, support_of(single)));
    }
    while !level.is_empty() {
        let prev: HashSet<u64> = level.iter().copied().collect();
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for &base in &level {
            let top = 63 - base.leading_zeros();
            for bit in (top + 1)..frequent.len() as u32 {
                let candidate = base | (1 << bit);
                if !seen.insert(candidate) {
                    continue;
                }
                // Prune: every max subset must be frequent.
                let prunable = (0..64)
                    .filter(|b| candidate & (1 << b) != 0)
                    .any(|b| !prev.contains(&(candidate & !(1 << b))));
                if prunable {
                    continue;
                }
                let support = support_of(candidate);
                if support >= min_support {
                    all.push((candidate, support));
                    next.push(candidate);
                }
            }
        }
        level = next;
    }

    let patterns = all
        .into_iter()
        .map(|(mask, support)| Pattern {
            items: (0..64)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| frequent[b as usize])
                .collect(),
            support,
        })
        .collect();
    Ok(PatternSet::from_patterns(patterns))
}
