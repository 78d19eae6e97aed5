//! Deterministic synthetic transaction datasets.
//!
//! The bundled benchmark files are generated here: two dense categorical
//! tables (every row picks one value per attribute slot, with a latent class
//! skewing the value distributions so rows share long prefixes) and one
//! sparse basket dataset with zipf-distributed item popularity. Shapes match
//! the canonical dense/sparse benchmark datasets; content is synthetic and
//! reproducible from the seeds below.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// One value per attribute slot, ids disjoint across slots. `class_count`
/// latent classes rotate each slot's preference order so that supports vary
/// and prefixes cluster.
pub fn dense_categorical(
    seed: u64,
    transactions: usize,
    slots: usize,
    max_values_per_slot: usize,
) -> Vec<Vec<u64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let class_count = 2;
    let slot_values: Vec<usize> = (0..slots)
        .map(|_| rng.gen_range(2..=max_values_per_slot))
        .collect();
    // Per class and slot: geometric-decay weights over a rotated value order.
    let samplers: Vec<Vec<WeightedIndex<f64>>> = (0..class_count)
        .map(|class| {
            slot_values
                .iter()
                .map(|&k| {
                    let weights: Vec<f64> = (0..k)
                        .map(|v| {
                            let pos = (v + class * (k / 2 + 1)) % k;
                            1.0 / (1.6f64.powi(pos as i32))
                        })
                        .collect();
                    WeightedIndex::new(weights).unwrap()
                })
                .collect()
        })
        .collect();

    (0..transactions)
        .map(|_| {
            let class = rng.gen_range(0..class_count);
            (0..slots)
                .map(|s| (s as u64) * 32 + samplers[class][s].sample(&mut rng) as u64)
                .collect()
        })
        .collect()
}

/// Variable-length baskets over a large universe with zipf-like popularity.
pub fn sparse_zipf(
    seed: u64,
    transactions: usize,
    universe: u64,
    mean_len: usize,
    exponent: f64,
) -> Vec<Vec<u64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..universe)
        .map(|r| 1.0 / ((r + 1) as f64).powf(exponent))
        .collect();
    let sampler = WeightedIndex::new(weights).unwrap();

    (0..transactions)
        .map(|_| {
            let len = 1 + rng.gen_range(0..2 * mean_len);
            let mut items: Vec<u64> = (0..len).map(|_| sampler.sample(&mut rng) as u64).collect();
            items.sort_unstable();
            items.dedup();
            items
        })
        .collect()
}

/// Dense 8124 x 23 categorical table (the classical dense benchmark shape).
pub fn mushroom_like() -> Vec<Vec<u64>> {
    dense_categorical(0xA1, 8124, 23, 8)
}

/// Dense 3196 x 37 categorical table with small per-slot domains.
pub fn chess_like() -> Vec<Vec<u64>> {
    dense_categorical(0xC2, 3196, 37, 3)
}

/// Sparse 10000-basket dataset: short baskets over a wide universe with a
/// flat popularity curve, so nodes carry many children of similar frequency.
pub fn retail_like() -> Vec<Vec<u64>> {
    sparse_zipf(0xE3, 10_000, 3000, 3, 0.7)
}

/// Writes rows in FIMI text format: one transaction per line, ids separated
/// by single spaces.
pub fn write_fimi(path: &Path, rows: &[Vec<u64>]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in rows {
        let line: Vec<String> = row.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            dense_categorical(7, 50, 5, 4),
            dense_categorical(7, 50, 5, 4)
        );
        assert_eq!(
            sparse_zipf(7, 50, 100, 5, 1.1),
            sparse_zipf(7, 50, 100, 5, 1.1)
        );
    }

    #[test]
    fn dense_rows_have_one_item_per_slot() {
        let rows = dense_categorical(3, 100, 23, 8);
        assert_eq!(rows.len(), 100);
        for row in &rows {
            assert_eq!(row.len(), 23);
            for (slot, &item) in row.iter().enumerate() {
                assert_eq!(item / 32, slot as u64);
            }
        }
    }

    #[test]
    fn sparse_rows_are_nonempty_sets() {
        let rows = sparse_zipf(5, 200, 500, 8, 1.1);
        assert_eq!(rows.len(), 200);
        for row in &rows {
            assert!(!row.is_empty());
            assert!(row.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
