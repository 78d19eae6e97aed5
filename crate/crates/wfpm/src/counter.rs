//! Support counters that live in simulated persistent memory.
//!
//! Two representations share one 64-bit cell contract:
//!
//! * `Regular` — a plain binary count. Its low bits flip on nearly every
//!   increment, concentrating wear.
//! * `Sliding` — the cell is split into a 4-bit metadata region and a 60-bit
//!   sliding region of fifteen 4-bit counting blocks (serials 0..14). The
//!   live value occupies a window of eight contiguous blocks (32 value bits).
//!   Every `slide_period` increments the window moves one block in its
//!   current direction, relocating the flip-heavy low blocks. When a move
//!   would cross the region border, the packing order of the window reverses
//!   in place and the direction flips, so the previously low blocks become
//!   the high blocks for the return trip.
//!
//! Metadata layout: bits 60..63 hold the window offset (serial of its lowest
//! block, 0..=7); bit 63 holds the direction flag. The flag is 0 while the
//! window moves toward higher serials with normal packing, 1 while it moves
//! toward lower serials with reversed packing; a fresh counter is therefore
//! an all-zero word. Metadata bit flips wear the cell like any others and
//! are reported separately.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nvmsim::{NvmError, NvmModel};

/// Largest value an 8-block window can hold.
pub const COUNTER_CAPACITY: u64 = u32::MAX as u64;

const BLOCK_COUNT: u64 = 15;
const WINDOW_BLOCKS: u64 = 8;
const OFFSET_SHIFT: u32 = 60;
const OFFSET_MASK: u64 = 0x7;
const DIR_BIT: u64 = 1 << 63;
const SLIDING_REGION_MASK: u64 = (1 << 60) - 1;

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("counter overflow: capacity {COUNTER_CAPACITY} exceeded")]
    Overflow,
    #[error("counter cell corrupted: {0}")]
    Integrity(String),
    #[error(transparent)]
    Nvm(#[from] NvmError),
}

/// Counter representation policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterKind {
    Regular,
    Sliding { slide_period: u64 },
}

impl CounterKind {
    pub fn validate(&self) -> Result<(), CounterError> {
        match self {
            CounterKind::Sliding { slide_period } if *slide_period == 0 => Err(
                CounterError::Integrity("slide_period must be at least 1".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Handle to one 64-bit counter cell. The cell itself is the only state;
/// handles are cheap and carry no cached value.
#[derive(Clone, Copy, Debug)]
pub struct Counter {
    addr: u64,
    kind: CounterKind,
}

/// Window placement after `moves` one-block moves: offsets walk 0..=7, the
/// packing reverses at serial-14 border, offsets walk back 7..=0, and the
/// packing reverses again at serial-0 border, a 16-move cycle.
fn window_state(moves: u64) -> (u64, bool) {
    match moves % 16 {
        0 => (0, false),
        r @ 1..=7 => (r, false),
        8 => (7, true),
        r => (15 - r, true),
    }
}

/// Packs `value` nibbles into the window at `offset` with the given packing
/// order and encodes the metadata region.
fn sliding_encode(value: u64, offset: u64, reversed: bool) -> u64 {
    debug_assert!(value <= COUNTER_CAPACITY);
    debug_assert!(offset + WINDOW_BLOCKS <= BLOCK_COUNT);
    let mut word = offset << OFFSET_SHIFT;
    if reversed {
        word |= DIR_BIT;
    }
    for i in 0..WINDOW_BLOCKS {
        let nibble = (value >> (4 * i)) & 0xf;
        let block = offset + if reversed { 7 - i } else { i };
        word |= nibble << (4 * block);
    }
    word
}

/// Recovers (value, offset, reversed) from a cell image, verifying that every
/// counting block outside the live window is zero.
fn sliding_decode(word: u64) -> Result<(u64, u64, bool), CounterError> {
    let offset = (word >> OFFSET_SHIFT) & OFFSET_MASK;
    let reversed = word & DIR_BIT != 0;
    let sliding = word & SLIDING_REGION_MASK;
    let window_mask = ((1u64 << (4 * WINDOW_BLOCKS)) - 1) << (4 * offset);
    if sliding & !window_mask != 0 {
        return Err(CounterError::Integrity(format!(
            "nonzero counting blocks outside window at offset {offset}"
        )));
    }
    let mut value = 0u64;
    for i in 0..WINDOW_BLOCKS {
        let block = offset + if reversed { 7 - i } else { i };
        let nibble = (word >> (4 * block)) & 0xf;
        value |= nibble << (4 * i);
    }
    Ok((value, offset, reversed))
}

/// Decodes a raw cell image under the given policy without touching memory.
pub fn decode_word(kind: CounterKind, word: u64) -> Result<u64, CounterError> {
    match kind {
        CounterKind::Regular => Ok(word),
        CounterKind::Sliding { .. } => sliding_decode(word).map(|(v, _, _)| v),
    }
}

impl Counter {
    /// Initializes the cell at `addr` to logical zero with exactly one 64-bit
    /// write. Both representations encode zero as the all-zero word, so the
    /// write is silent on freshly formatted memory.
    pub fn init(kind: CounterKind, addr: u64, mem: &mut NvmModel) -> Result<Counter, CounterError> {
        kind.validate()?;
        mem.write_u64(addr, 0)?;
        Ok(Counter { addr, kind })
    }

    /// Handle to an already-initialized cell.
    pub fn attach(kind: CounterKind, addr: u64) -> Counter {
        Counter { addr, kind }
    }

    pub fn addr(&self) -> u64 {
        self.addr
    }

    pub fn kind(&self) -> CounterKind {
        self.kind
    }

    /// Adds one. For a sliding counter whose post-increment count is a
    /// multiple of the slide period, the window moves first (one write) and
    /// the value write lands after it.
    pub fn increment(&self, mem: &mut NvmModel) -> Result<(), CounterError> {
        match self.kind {
            CounterKind::Regular => {
                let value = mem.peek_u64(self.addr)?;
                let new = value.checked_add(1).ok_or(CounterError::Overflow)?;
                mem.write_u64(self.addr, new)?;
            }
            CounterKind::Sliding { slide_period } => {
                let word = mem.peek_u64(self.addr)?;
                let (value, mut offset, mut reversed) = sliding_decode(word)?;
                if value >= COUNTER_CAPACITY {
                    return Err(CounterError::Overflow);
                }
                let new = value + 1;
                if new % slide_period == 0 {
                    let (o, r) = window_state(new / slide_period);
                    offset = o;
                    reversed = r;
                    mem.write_u64(self.addr, sliding_encode(value, offset, reversed))?;
                }
                mem.write_u64(self.addr, sliding_encode(new, offset, reversed))?;
            }
        }
        Ok(())
    }

    /// Adds `delta` in a single value write. A sliding window that would have
    /// moved during the covered increments lands directly at its final
    /// position, so window placement stays a pure function of the count.
    pub fn add(&self, delta: u64, mem: &mut NvmModel) -> Result<(), CounterError> {
        if delta == 0 {
            return Ok(());
        }
        match self.kind {
            CounterKind::Regular => {
                let value = mem.peek_u64(self.addr)?;
                let new = value.checked_add(delta).ok_or(CounterError::Overflow)?;
                mem.write_u64(self.addr, new)?;
            }
            CounterKind::Sliding { slide_period } => {
                let word = mem.peek_u64(self.addr)?;
                let (value, _, _) = sliding_decode(word)?;
                let new = value.checked_add(delta).ok_or(CounterError::Overflow)?;
                if new > COUNTER_CAPACITY {
                    return Err(CounterError::Overflow);
                }
                let (offset, reversed) = window_state(new / slide_period);
                mem.write_u64(self.addr, sliding_encode(new, offset, reversed))?;
            }
        }
        Ok(())
    }

    /// Logical count. One charged read of the cell.
    pub fn decode(&self, mem: &mut NvmModel) -> Result<u64, CounterError> {
        let word = mem.read_u64(self.addr)?;
        decode_word(self.kind, word)
    }

    /// Logical count without charging the read (diagnostics).
    pub fn peek_value(&self, mem: &NvmModel) -> Result<u64, CounterError> {
        decode_word(self.kind, mem.peek_u64(self.addr)?)
    }

    /// Window placement (offset, reversed) of a sliding counter.
    pub fn peek_window(&self, mem: &NvmModel) -> Result<Option<(u64, bool)>, CounterError> {
        match self.kind {
            CounterKind::Regular => Ok(None),
            CounterKind::Sliding { .. } => {
                let (_, offset, reversed) = sliding_decode(mem.peek_u64(self.addr)?)?;
                Ok(Some((offset, reversed)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nvmsim::{NvmModel, Region};
    use proptest::prelude::*;

    fn model_with_cell() -> (NvmModel, u64) {
        let mut mem = NvmModel::with_defaults();
        let region = mem.alloc(8).unwrap();
        (mem, region.addr)
    }

    fn sliding(period: u64) -> CounterKind {
        CounterKind::Sliding {
            slide_period: period,
        }
    }

    /// Independent reference: the cell modeled as an explicit nibble array
    /// driven by a step-by-step state machine (slide one block per period,
    /// reverse packing in place at the borders).
    struct NibbleOracle {
        blocks: [u8; 15],
        offset: usize,
        reversed: bool,
        count: u64,
        period: u64,
    }

    impl NibbleOracle {
        fn new(period: u64) -> Self {
            NibbleOracle {
                blocks: [0; 15],
                offset: 0,
                reversed: false,
                count: 0,
                period,
            }
        }

        fn restore_value(&mut self) {
            self.blocks = [0; 15];
            for i in 0..8usize {
                let nibble = ((self.count >> (4 * i)) & 0xf) as u8;
                let block = self.offset + if self.reversed { 7 - i } else { i };
                self.blocks[block] = nibble;
            }
        }

        fn move_window(&mut self) {
            if !self.reversed {
                if self.offset < 7 {
                    self.offset += 1;
                } else {
                    self.reversed = true;
                }
            } else if self.offset > 0 {
                self.offset -= 1;
            } else {
                self.reversed = false;
            }
        }

        fn increment(&mut self) {
            self.count += 1;
            if self.count.is_multiple_of(self.period) {
                self.move_window();
            }
            self.restore_value();
        }

        fn word(&self) -> u64 {
            let mut word = (self.offset as u64) << OFFSET_SHIFT;
            if self.reversed {
                word |= DIR_BIT;
            }
            for (serial, &nibble) in self.blocks.iter().enumerate() {
                word |= (nibble as u64) << (4 * serial);
            }
            word
        }
    }

    #[test]
    fn init_is_one_silent_zero_write() {
        for kind in [CounterKind::Regular, sliding(16)] {
            let (mut mem, addr) = model_with_cell();
            let c = Counter::init(kind, addr, &mut mem).unwrap();
            assert_eq!(mem.write_ops(), 1);
            assert_eq!(mem.report().total().nvm_writes, 0);
            assert_eq!(c.peek_value(&mem).unwrap(), 0);
        }
    }

    #[test]
    fn fresh_sliding_window_starts_at_the_bottom_eight_blocks() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        // Offset 0: live blocks are serials 0..=7, so the highest live block
        // is the eighth block of the counting region.
        assert_eq!(c.peek_window(&mem).unwrap(), Some((0, false)));
        c.increment(&mut mem).unwrap();
        assert_eq!(c.decode(&mut mem).unwrap(), 1);
    }

    #[test]
    fn first_increment_sets_one_bit_in_the_lowest_block() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        c.increment(&mut mem).unwrap();
        let total = mem.report().total();
        assert_eq!(total.set_bits, 1);
        assert_eq!(total.reset_bits, 0);
        assert_eq!(mem.peek_u64(addr).unwrap(), 1);
    }

    #[test]
    fn sixteenth_increment_slides_the_window() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        for _ in 0..16 {
            c.increment(&mut mem).unwrap();
        }
        assert_eq!(c.decode(&mut mem).unwrap(), 16);
        assert_eq!(c.peek_window(&mem).unwrap(), Some((1, false)));
    }

    #[test]
    fn border_reversal_schedule() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        let mut count = 0u64;
        let inc_to = |c: &Counter, mem: &mut NvmModel, target: u64, count: &mut u64| {
            while *count < target {
                c.increment(mem).unwrap();
                *count += 1;
            }
        };
        // Seven slides bring the window to the far border.
        inc_to(&c, &mut mem, 112, &mut count);
        assert_eq!(c.peek_window(&mem).unwrap(), Some((7, false)));
        // The next period event cannot slide further: packing reverses.
        inc_to(&c, &mut mem, 128, &mut count);
        assert_eq!(c.peek_window(&mem).unwrap(), Some((7, true)));
        assert_eq!(c.decode(&mut mem).unwrap(), 128);
        // Seven more slides return to offset 0, still reversed.
        inc_to(&c, &mut mem, 240, &mut count);
        assert_eq!(c.peek_window(&mem).unwrap(), Some((0, true)));
        // The mirror reversal restores normal packing.
        inc_to(&c, &mut mem, 256, &mut count);
        assert_eq!(c.peek_window(&mem).unwrap(), Some((0, false)));
        assert_eq!(c.decode(&mut mem).unwrap(), 256);
    }

    #[test]
    fn decode_tracks_count_at_landmarks() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        let landmarks = [1u64, 15, 16, 17, 112, 113, 1000];
        let mut count = 0;
        for &k in &landmarks {
            while count < k {
                c.increment(&mut mem).unwrap();
                count += 1;
            }
            assert_eq!(c.decode(&mut mem).unwrap(), k);
        }
    }

    #[test]
    fn word_images_match_the_nibble_oracle() {
        for period in [1u64, 4, 16, 64] {
            let (mut mem, addr) = model_with_cell();
            let c = Counter::init(sliding(period), addr, &mut mem).unwrap();
            let mut oracle = NibbleOracle::new(period);
            for step in 0..600u64 {
                c.increment(&mut mem).unwrap();
                oracle.increment();
                assert_eq!(
                    mem.peek_u64(addr).unwrap(),
                    oracle.word(),
                    "period {period} step {step}"
                );
            }
        }
    }

    #[test]
    fn reversal_swaps_packing_in_place() {
        // Window at blocks 7..14 holding nibbles n0..n7 low-to-high: after
        // the packing reverses, block 14 holds n0 and block 7 holds n7.
        let value = 0x1234_5678u64;
        let before = sliding_encode(value, 7, false);
        let after = sliding_encode(value, 7, true);
        let block = |word: u64, serial: u64| (word >> (4 * serial)) & 0xf;
        assert_eq!(block(before, 7), value & 0xf);
        assert_eq!(block(after, 14), value & 0xf);
        assert_eq!(block(after, 7), (value >> 28) & 0xf);
        assert_eq!(sliding_decode(after).unwrap().0, value);
        // Reversing a zero window changes only the direction bit.
        assert_eq!(
            sliding_encode(0, 7, false) ^ sliding_encode(0, 7, true),
            DIR_BIT
        );
    }

    #[test]
    fn bulk_add_lands_on_the_increment_schedule() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        c.add(130, &mut mem).unwrap();
        let (mut mem2, addr2) = model_with_cell();
        let c2 = Counter::init(sliding(16), addr2, &mut mem2).unwrap();
        for _ in 0..130 {
            c2.increment(&mut mem2).unwrap();
        }
        assert_eq!(mem.peek_u64(addr).unwrap(), mem2.peek_u64(addr2).unwrap());
        assert_eq!(c.peek_value(&mem).unwrap(), 130);
    }

    #[test]
    fn overflow_is_a_hard_error() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        c.add(COUNTER_CAPACITY, &mut mem).unwrap();
        assert_eq!(c.peek_value(&mem).unwrap(), COUNTER_CAPACITY);
        assert!(matches!(c.increment(&mut mem), Err(CounterError::Overflow)));
        assert!(matches!(c.add(1, &mut mem), Err(CounterError::Overflow)));
    }

    #[test]
    fn decode_is_a_pure_charged_read() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        c.increment(&mut mem).unwrap();
        let before = mem.read_ops();
        let a = c.decode(&mut mem).unwrap();
        let b = c.decode(&mut mem).unwrap();
        assert_eq!(a, b);
        assert_eq!(mem.read_ops() - before, 2);
    }

    #[test]
    fn corrupted_cell_fails_integrity() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
        // A nonzero counting block outside the live window.
        mem.write_u64(addr, 1u64 << 56).unwrap();
        assert!(matches!(
            c.decode(&mut mem),
            Err(CounterError::Integrity(_))
        ));
    }

    #[test]
    fn regular_counter_bit_j_flips_n_over_2j_times() {
        let (mut mem, addr) = model_with_cell();
        mem.set_watch_region(Region { addr, len: 8 }).unwrap();
        let c = Counter::init(CounterKind::Regular, addr, &mut mem).unwrap();
        let n = 1000u64;
        for _ in 0..n {
            c.increment(&mut mem).unwrap();
        }
        let dump = mem.wear_dump();
        let flips: Vec<u64> = dump
            .lines()
            .next()
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect();
        for (j, &flip_count) in flips.iter().enumerate().take(16) {
            assert_eq!(flip_count, n / (1 << j), "bit {j}");
        }
        assert_eq!(mem.report().max_header_bit_flips, n);
    }

    #[test]
    fn window_discipline_keeps_outside_blocks_zero() {
        let (mut mem, addr) = model_with_cell();
        let c = Counter::init(sliding(4), addr, &mut mem).unwrap();
        for _ in 0..500 {
            c.increment(&mut mem).unwrap();
            let word = mem.peek_u64(addr).unwrap();
            // decode re-verifies the outside-window-zero invariant
            sliding_decode(word).unwrap();
        }
    }

    proptest! {
        #[test]
        fn decode_matches_shadow_count(
            period in prop::sample::select(vec![1u64, 4, 16, 64]),
            steps in 1usize..1500,
        ) {
            let (mut mem, addr) = model_with_cell();
            let c = Counter::init(sliding(period), addr, &mut mem).unwrap();
            for shadow in 1..=steps as u64 {
                c.increment(&mut mem).unwrap();
                prop_assert_eq!(c.peek_value(&mem).unwrap(), shadow);
            }
        }

        #[test]
        fn encode_decode_roundtrip_all_windows(value in 0u64..=COUNTER_CAPACITY) {
            for offset in 0..8u64 {
                for reversed in [false, true] {
                    let word = sliding_encode(value, offset, reversed);
                    let (v, o, r) = sliding_decode(word).unwrap();
                    prop_assert_eq!(v, value);
                    prop_assert_eq!(o, offset);
                    prop_assert_eq!(r, reversed);
                }
            }
        }

        #[test]
        fn mixed_adds_and_increments_stay_faithful(
            ops in prop::collection::vec((0u64..200, prop::bool::ANY), 1..40)
        ) {
            let (mut mem, addr) = model_with_cell();
            let c = Counter::init(sliding(16), addr, &mut mem).unwrap();
            let mut shadow = 0u64;
            for (delta, use_add) in ops {
                if use_add {
                    c.add(delta, &mut mem).unwrap();
                    shadow += delta;
                } else {
                    c.increment(&mut mem).unwrap();
                    shadow += 1;
                }
                prop_assert_eq!(c.peek_value(&mem).unwrap(), shadow);
            }
        }
    }
}
