//! Transaction datasets in FIMI format: one transaction per line,
//! whitespace-separated non-negative integer item ids.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A distinct item. Ids are kept exactly as given in the input file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One transaction: a set of items. Stored sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub tid: usize,
    items: Vec<ItemId>,
}

impl Transaction {
    pub fn new(tid: usize, mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Transaction { tid, items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

/// An ordered list of transactions. Input order is preserved.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    transactions: Vec<Transaction>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid item id {token:?}")]
    Parse {
        path: String,
        line: usize,
        token: String,
    },
    #[error("{path}: no transactions")]
    Empty { path: String },
}

impl Dataset {
    pub fn from_transactions(transactions: Vec<Transaction>) -> Self {
        Dataset { transactions }
    }

    /// Builds a dataset from raw item-id rows, numbering transactions in
    /// order. Convenience for tests and generated data.
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let transactions = rows
            .iter()
            .enumerate()
            .map(|(tid, row)| Transaction::new(tid, row.iter().map(|&i| ItemId(i)).collect()))
            .collect();
        Dataset { transactions }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn item_universe(&self) -> Vec<ItemId> {
        let mut universe: Vec<ItemId> = self
            .transactions
            .iter()
            .flat_map(|t| t.items().iter().copied())
            .collect();
        universe.sort_unstable();
        universe.dedup();
        universe
    }
}

/// Parses a FIMI file. Blank lines are skipped; duplicate ids within a line
/// collapse; CRLF endings are accepted.
pub fn load_transactions(path: &Path) -> Result<Dataset, DatasetError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut transactions = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: display.clone(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut items = Vec::new();
        for token in trimmed.split_whitespace() {
            let id: u64 = token.parse().map_err(|_| DatasetError::Parse {
                path: display.clone(),
                line: lineno + 1,
                token: token.to_string(),
            })?;
            items.push(ItemId(id));
        }
        transactions.push(Transaction::new(transactions.len(), items));
    }
    if transactions.is_empty() {
        return Err(DatasetError::Empty { path: display });
    }
    Ok(Dataset { transactions })
}

/// First database scan: occurrence count per item (number of transactions
/// containing it), restricted to items meeting `min_support`.
pub fn scan_frequencies(dataset: &Dataset, min_support: u64) -> HashMap<ItemId, u64> {
    assert!(min_support >= 1, "min_support must be at least 1");
    let mut counts: HashMap<ItemId, u64> = HashMap::new();
    for txn in dataset.transactions() {
        for &item in txn.items() {
            *counts.entry(item).or_insert(0) += 1;
        }
    }
    counts.retain(|_, c| *c >= min_support);
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_lines_in_order() {
        let f = write_temp("1 2 3\n2 3\n");
        let ds = load_transactions(f.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(
            ds.transactions()[0].items(),
            &[ItemId(1), ItemId(2), ItemId(3)]
        );
        assert_eq!(ds.transactions()[1].items(), &[ItemId(2), ItemId(3)]);
        assert_eq!(ds.item_universe(), vec![ItemId(1), ItemId(2), ItemId(3)]);
    }

    #[test]
    fn duplicates_within_a_line_collapse() {
        let f = write_temp("5 5 7\n");
        let ds = load_transactions(f.path()).unwrap();
        assert_eq!(ds.transactions()[0].items(), &[ItemId(5), ItemId(7)]);
    }

    #[test]
    fn crlf_and_blank_lines_are_tolerated() {
        let f = write_temp("1 2\r\n\r\n  \n3\r\n");
        let ds = load_transactions(f.path()).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn non_integer_token_reports_line_number() {
        let f = write_temp("1 2\n3 x 4\n");
        match load_transactions(f.path()) {
            Err(DatasetError::Parse { line, token, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "x");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("");
        assert!(matches!(
            load_transactions(f.path()),
            Err(DatasetError::Empty { .. })
        ));
        assert!(matches!(
            load_transactions(Path::new("/nonexistent/file.dat")),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn bundled_dense_dataset_has_expected_row_count() {
        // The canonical dense benchmark file has 8124 rows; only checked when
        // the data directory is present.
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mushroom.dat");
        if path.exists() {
            let ds = load_transactions(&path).unwrap();
            assert_eq!(ds.len(), 8124);
        }
    }

    #[test]
    fn frequencies_on_small_example() {
        let ds = Dataset::from_rows(&[vec![1, 2, 3], vec![1, 2]]);
        let freqs = scan_frequencies(&ds, 1);
        assert_eq!(freqs[&ItemId(1)], 2);
        assert_eq!(freqs[&ItemId(2)], 2);
        assert_eq!(freqs[&ItemId(3)], 1);
        assert!(scan_frequencies(&ds, 3).is_empty());
    }

    #[test]
    fn frequencies_match_brute_force_recount() {
        let mut rng = StdRng::seed_from_u64(7);
        let rows: Vec<Vec<u64>> = (0..100)
            .map(|_| {
                (0..rng.gen_range(1..12))
                    .map(|_| rng.gen_range(0..30))
                    .collect()
            })
            .collect();
        let ds = Dataset::from_rows(&rows);
        let freqs = scan_frequencies(&ds, 3);
        for item in ds.item_universe() {
            let brute = ds
                .transactions()
                .iter()
                .filter(|t| t.contains(item))
                .count() as u64;
            if brute >= 3 {
                assert_eq!(freqs[&item], brute);
            } else {
                assert!(!freqs.contains_key(&item));
            }
        }
    }

    #[test]
    fn frequencies_are_order_insensitive() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut rows: Vec<Vec<u64>> = (0..60)
            .map(|_| {
                (0..rng.gen_range(1..8))
                    .map(|_| rng.gen_range(0..15))
                    .collect()
            })
            .collect();
        let forward = scan_frequencies(&Dataset::from_rows(&rows), 2);
        rows.reverse();
        let backward = scan_frequencies(&Dataset::from_rows(&rows), 2);
        assert_eq!(forward, backward);
    }
}
