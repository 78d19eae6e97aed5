//! FP-tree construction over the simulated NVM under swappable policies.

mod header;
mod policy;
mod tree;

pub use header::{build_header, HeaderEntry, HeaderTable};
pub use policy::{
    BuildPolicy, ChildIndexKind, CountingPolicy, InsertionPolicy, DEFAULT_BUCKET_COUNT,
    DEFAULT_SLIDE_PERIOD,
};
pub use tree::FPTree;

#[cfg(test)]
pub(crate) use tree::LINK_OFF;
pub(crate) use tree::{COUNTER_OFF, ITEM_OFF, PARENT_OFF};

use thiserror::Error;

use crate::counter::CounterError;
use crate::dataset::{scan_frequencies, Dataset};
use crate::nvmsim::{MetricsReport, NvmError, NvmModel, Phase};

#[derive(Debug, Error)]
pub enum FpTreeError {
    #[error(transparent)]
    Nvm(#[from] NvmError),
    #[error(transparent)]
    Counter(#[from] CounterError),
    #[error("invalid build policy: {0}")]
    Policy(String),
}

/// Full construction: first scan and header build, one insertion pass, and
/// (under lazy counting) the finalization walk. The database is only ever
/// traversed twice. Returns the tree, its header, and the metrics
/// accumulated so far.
pub fn build_tree(
    dataset: &Dataset,
    min_support: u64,
    policy: BuildPolicy,
    mem: &mut NvmModel,
) -> Result<(FPTree, HeaderTable, MetricsReport), FpTreeError> {
    policy.validate().map_err(FpTreeError::Policy)?;

    mem.set_phase(Phase::Scan1);
    let freqs = scan_frequencies(dataset, min_support);
    let mut header = build_header(&freqs, min_support, &policy, mem)?;
    let mut fptree = FPTree::new(policy, mem)?;

    mem.set_phase(Phase::Build);
    for txn in dataset.transactions() {
        match policy.insertion {
            InsertionPolicy::SortedBaseline => {
                fptree.insert_transaction_sorted(&mut header, txn, mem)?
            }
            InsertionPolicy::CopyFree => {
                fptree.insert_transaction_copy_free(&mut header, txn, mem)?
            }
        }
    }

    if policy.counting == CountingPolicy::Lazy {
        mem.set_phase(Phase::Finalize);
        fptree.finalize_lazy_counters(mem)?;
    }

    Ok((fptree, header, mem.report()))
}
