//! The prefix tree over simulated persistent memory.
//!
//! Nodes are fixed records of 8-byte-aligned fields:
//!
//! ```text
//! offset 0   item id
//! offset 8   bucket_next: next child in the same bucket of my parent
//! offset 16  support counter word
//! offset 24  parent node
//! offset 32  node_link: next node carrying the same item
//! offset 40  bucket heads (effective_buckets slots)
//! ```
//!
//! Child walks charge one read for the bucket-head slot and one read per
//! pointer hop after it, so a child found at list position p costs 1 + p
//! reads and an empty bucket costs the head read only.

use crate::counter::Counter;
use crate::dataset::{ItemId, Transaction};
use crate::nvmsim::NvmModel;

use super::header::HeaderTable;
use super::policy::{BuildPolicy, ChildIndexKind, CountingPolicy};
use super::FpTreeError;

pub(crate) const ITEM_OFF: u64 = 0;
pub(crate) const NEXT_OFF: u64 = 8;
pub(crate) const COUNTER_OFF: u64 = 16;
pub(crate) const PARENT_OFF: u64 = 24;
pub(crate) const LINK_OFF: u64 = 32;
pub(crate) const BUCKETS_OFF: u64 = 40;

pub struct FPTree {
    root: u64,
    policy: BuildPolicy,
    buckets: u64,
    record_size: u64,
    node_count: u64,
    scratch: Option<u64>,
}

impl FPTree {
    /// Creates the root node. The root carries the empty pattern; its record
    /// stays in formatted (all-zero) state, so creation charges nothing.
    pub fn new(policy: BuildPolicy, mem: &mut NvmModel) -> Result<Self, FpTreeError> {
        policy.validate().map_err(FpTreeError::Policy)?;
        let buckets = policy.effective_buckets() as u64;
        let record_size = BUCKETS_OFF + 8 * buckets;
        let root = mem.alloc(record_size)?.addr;
        Ok(FPTree {
            root,
            policy,
            buckets,
            record_size,
            node_count: 0,
            scratch: None,
        })
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn policy(&self) -> &BuildPolicy {
        &self.policy
    }

    /// Item nodes created so far (the root is not counted).
    pub fn node_count(&self) -> u64 {
        self.node_count
    }

    pub fn support_counter(&self, node: u64) -> Counter {
        Counter::attach(self.policy.counter, node + COUNTER_OFF)
    }

    fn bucket_slot(&self, node: u64, item: ItemId) -> u64 {
        node + BUCKETS_OFF + 8 * (item.0 % self.buckets)
    }

    /// True when `a` precedes `b` in a frequency-sorted bucket: descending
    /// global frequency, ties by ascending item id. Items missing from the
    /// header sort last.
    fn precedes(a: ItemId, b: ItemId, header: &HeaderTable) -> bool {
        match (header.rank_of(a), header.rank_of(b)) {
            (Some(ra), Some(rb)) => ra < rb,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => a < b,
        }
    }

    /// Looks up the child of `node` carrying `item`. Charges the bucket-head
    /// read plus one read per hop; the frequency-sorted walk stops as soon as
    /// the target's slot in the order has been passed.
    pub fn child_lookup(
        &self,
        node: u64,
        item: ItemId,
        header: &HeaderTable,
        mem: &mut NvmModel,
    ) -> Result<Option<u64>, FpTreeError> {
        let sorted = self.policy.child_index == ChildIndexKind::SortedHashWalk;
        let mut cur = mem.read_u64(self.bucket_slot(node, item))?;
        while cur != 0 {
            let cur_item = ItemId(mem.peek_u64(cur + ITEM_OFF)?);
            if cur_item == item {
                return Ok(Some(cur));
            }
            if sorted && Self::precedes(item, cur_item, header) {
                return Ok(None);
            }
            let next = mem.peek_u64(cur + NEXT_OFF)?;
            if next != 0 {
                mem.read_u64(cur + NEXT_OFF)?;
            }
            cur = next;
        }
        Ok(None)
    }

    /// Walks the bucket for `item`, returning the existing child or creating
    /// one at the policy's position: appended at the tail for insertion-order
    /// lists, spliced at its frequency slot for sorted buckets.
    fn find_or_insert_child(
        &mut self,
        parent: u64,
        item: ItemId,
        rank: usize,
        header: &mut HeaderTable,
        mem: &mut NvmModel,
    ) -> Result<(u64, bool), FpTreeError> {
        let sorted = self.policy.child_index == ChildIndexKind::SortedHashWalk;
        let slot = self.bucket_slot(parent, item);
        let mut cur = mem.read_u64(slot)?;
        let mut pred = 0u64;
        let mut succ = 0u64;
        while cur != 0 {
            let cur_item = ItemId(mem.peek_u64(cur + ITEM_OFF)?);
            if cur_item == item {
                return Ok((cur, false));
            }
            if sorted && Self::precedes(item, cur_item, header) {
                succ = cur;
                break;
            }
            let next = mem.peek_u64(cur + NEXT_OFF)?;
            if next != 0 {
                mem.read_u64(cur + NEXT_OFF)?;
            }
            pred = cur;
            cur = next;
        }

        let node = self.create_node(item, parent, rank, header, mem)?;
        if succ != 0 {
            mem.write_u64(node + NEXT_OFF, succ)?;
        }
        if pred != 0 {
            mem.write_u64(pred + NEXT_OFF, node)?;
        } else {
            mem.write_u64(slot, node)?;
        }
        Ok((node, true))
    }

    fn create_node(
        &mut self,
        item: ItemId,
        parent: u64,
        rank: usize,
        header: &mut HeaderTable,
        mem: &mut NvmModel,
    ) -> Result<u64, FpTreeError> {
        let node = mem.alloc(self.record_size)?.addr;
        mem.write_u64(node + ITEM_OFF, item.0)?;
        Counter::init(self.policy.counter, node + COUNTER_OFF, mem)?;
        mem.write_u64(node + PARENT_OFF, parent)?;
        // Node-link chains prepend: the new node points at the old head.
        let old_head = header.chain_head(rank);
        if old_head != 0 {
            mem.write_u64(node + LINK_OFF, old_head)?;
        }
        header.set_chain_head(rank, node, mem)?;
        self.node_count += 1;
        Ok(node)
    }

    fn ensure_scratch(&mut self, words: u64, mem: &mut NvmModel) -> Result<u64, FpTreeError> {
        if self.scratch.is_none() {
            self.scratch = Some(mem.alloc(8 * words.max(1))?.addr);
        }
        Ok(self.scratch.unwrap())
    }

    fn descend(
        &mut self,
        cur: u64,
        item: ItemId,
        rank: usize,
        header: &mut HeaderTable,
        mem: &mut NvmModel,
    ) -> Result<u64, FpTreeError> {
        let (child, _) = self.find_or_insert_child(cur, item, rank, header, mem)?;
        if self.policy.counting == CountingPolicy::Eager {
            self.support_counter(child).increment(mem)?;
        }
        Ok(child)
    }

    /// Baseline insertion: the frequent items of the transaction are
    /// materialized in an NVM scratch buffer and then rewritten there in
    /// header order (the sort's double write), and the path is inserted by
    /// reading the buffer back.
    pub fn insert_transaction_sorted(
        &mut self,
        header: &mut HeaderTable,
        txn: &Transaction,
        mem: &mut NvmModel,
    ) -> Result<(), FpTreeError> {
        let mut filtered: Vec<(usize, ItemId)> = txn
            .items()
            .iter()
            .filter_map(|&item| header.rank_of(item).map(|r| (r, item)))
            .collect();
        if filtered.is_empty() {
            return Ok(());
        }
        let scratch = self.ensure_scratch(header.len() as u64, mem)?;
        // First write: the filtered transaction as parsed.
        for (i, &(_, item)) in filtered.iter().enumerate() {
            mem.write_u64(scratch + 8 * i as u64, item.0)?;
        }
        filtered.sort_by_key(|&(rank, _)| rank);
        // Second write: the same buffer in header order.
        for (i, &(_, item)) in filtered.iter().enumerate() {
            mem.write_u64(scratch + 8 * i as u64, item.0)?;
        }

        let mut cur = self.root;
        for (i, &(rank, _)) in filtered.iter().enumerate() {
            let item = ItemId(mem.read_u64(scratch + 8 * i as u64)?);
            cur = self.descend(cur, item, rank, header, mem)?;
        }
        if self.policy.counting == CountingPolicy::Lazy {
            self.support_counter(cur).increment(mem)?;
        }
        Ok(())
    }

    /// Copy-free insertion: the header table supplies the item order. The
    /// transaction is held as a transient bitmap in volatile scratch (charged
    /// at SRAM cost); header entries are read top-down (charged, reported as
    /// header scan reads) until every transaction item has been placed.
    pub fn insert_transaction_copy_free(
        &mut self,
        header: &mut HeaderTable,
        txn: &Transaction,
        mem: &mut NvmModel,
    ) -> Result<(), FpTreeError> {
        let mut bitmap = vec![false; header.len()];
        let mut matched = 0u64;
        for &item in txn.items() {
            if let Some(rank) = header.rank_of(item) {
                bitmap[rank] = true;
                matched += 1;
                mem.charge_sram(1);
            }
        }
        if matched == 0 {
            return Ok(());
        }

        let mut cur = self.root;
        let mut placed = 0u64;
        for (rank, &is_member) in bitmap.iter().enumerate() {
            let item = ItemId(mem.read_u64(header.item_addr(rank))?);
            mem.note_header_scan_reads(1);
            mem.charge_sram(1);
            if is_member {
                cur = self.descend(cur, item, rank, header, mem)?;
                placed += 1;
                if placed == matched {
                    break;
                }
            }
        }
        if self.policy.counting == CountingPolicy::Lazy {
            self.support_counter(cur).increment(mem)?;
        }
        Ok(())
    }

    /// Charged walk of all buckets of `node`, in bucket then list order.
    fn children_charged(&self, node: u64, mem: &mut NvmModel) -> Result<Vec<u64>, FpTreeError> {
        let mut out = Vec::new();
        for b in 0..self.buckets {
            let mut cur = mem.read_u64(node + BUCKETS_OFF + 8 * b)?;
            while cur != 0 {
                out.push(cur);
                let next = mem.peek_u64(cur + NEXT_OFF)?;
                if next != 0 {
                    mem.read_u64(cur + NEXT_OFF)?;
                }
                cur = next;
            }
        }
        Ok(out)
    }

    /// Uncharged child enumeration for diagnostics and serialization.
    pub fn children_peek(&self, node: u64, mem: &NvmModel) -> Result<Vec<u64>, FpTreeError> {
        let mut out = Vec::new();
        for b in 0..self.buckets {
            let mut cur = mem.peek_u64(node + BUCKETS_OFF + 8 * b)?;
            while cur != 0 {
                out.push(cur);
                cur = mem.peek_u64(cur + NEXT_OFF)?;
            }
        }
        Ok(out)
    }

    /// One depth-first pass that rewrites every node's support as its own
    /// value plus the finalized supports of its children. Required after a
    /// lazy-counting build; leaves need no write.
    pub fn finalize_lazy_counters(&mut self, mem: &mut NvmModel) -> Result<(), FpTreeError> {
        struct Frame {
            node: u64,
            children: Vec<u64>,
            next: usize,
            child_sum: u64,
        }
        let root_children = self.children_charged(self.root, mem)?;
        let mut stack = vec![Frame {
            node: self.root,
            children: root_children,
            next: 0,
            child_sum: 0,
        }];
        while let Some(frame) = stack.last_mut() {
            if frame.next < frame.children.len() {
                let child = frame.children[frame.next];
                frame.next += 1;
                let grandchildren = self.children_charged(child, mem)?;
                stack.push(Frame {
                    node: child,
                    children: grandchildren,
                    next: 0,
                    child_sum: 0,
                });
            } else {
                let done = stack.pop().unwrap();
                if done.node == self.root {
                    break;
                }
                let counter = self.support_counter(done.node);
                counter.add(done.child_sum, mem)?;
                let finalized = counter.peek_value(mem)?;
                stack
                    .last_mut()
                    .expect("non-root node has a parent frame")
                    .child_sum += finalized;
            }
        }
        Ok(())
    }

    /// Deterministic text form: depth-first, children visited in header
    /// order, one `depth item:support` line per node. Identical trees yield
    /// identical strings regardless of child-index policy. Diagnostic only,
    /// so reads are uncharged.
    pub fn canonical_serialization(
        &self,
        header: &HeaderTable,
        mem: &NvmModel,
    ) -> Result<String, FpTreeError> {
        let mut out = String::new();
        let mut stack: Vec<(u64, usize)> = Vec::new();
        self.push_children_ordered(self.root, 1, header, mem, &mut stack)?;
        while let Some((node, depth)) = stack.pop() {
            let item = mem.peek_u64(node + ITEM_OFF)?;
            let support = self.support_counter(node).peek_value(mem)?;
            out.push_str(&format!("{depth} {item}:{support}\n"));
            self.push_children_ordered(node, depth + 1, header, mem, &mut stack)?;
        }
        Ok(out)
    }

    fn push_children_ordered(
        &self,
        node: u64,
        depth: usize,
        header: &HeaderTable,
        mem: &NvmModel,
        stack: &mut Vec<(u64, usize)>,
    ) -> Result<(), FpTreeError> {
        let mut children: Vec<(usize, u64)> = Vec::new();
        for child in self.children_peek(node, mem)? {
            let item = ItemId(mem.peek_u64(child + ITEM_OFF)?);
            let rank = header
                .rank_of(item)
                .expect("tree node items are always frequent");
            children.push((rank, child));
        }
        // Reverse-rank push so the stack pops in header order.
        children.sort_by_key(|&(rank, _)| std::cmp::Reverse(rank));
        for (_, child) in children {
            stack.push((child, depth));
        }
        Ok(())
    }

    /// (path items root->node, support) for every node. Uncharged; test and
    /// diagnostic helper.
    pub fn all_paths(&self, mem: &NvmModel) -> Result<Vec<(Vec<ItemId>, u64)>, FpTreeError> {
        let mut out = Vec::new();
        let mut stack: Vec<(u64, Vec<ItemId>)> = Vec::new();
        for child in self.children_peek(self.root, mem)? {
            stack.push((child, Vec::new()));
        }
        while let Some((node, prefix)) = stack.pop() {
            let item = ItemId(mem.peek_u64(node + ITEM_OFF)?);
            let support = self.support_counter(node).peek_value(mem)?;
            let mut path = prefix.clone();
            path.push(item);
            out.push((path.clone(), support));
            for child in self.children_peek(node, mem)? {
                stack.push((child, path.clone()));
            }
        }
        Ok(out)
    }
}
