//! Set-associative LRU cache fronting the simulated persistent memory.
//!
//! The cache tracks presence and recency only. Stores are write-through, so
//! the backing store always holds current data and cached lines carry no
//! payload of their own.

use serde::{Deserialize, Serialize};

use super::NvmError;

/// Cache geometry. Defaults to 32 KB, four-way, 64-byte lines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity: usize,
    pub associativity: usize,
    pub line_size: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            capacity: 32 * 1024,
            associativity: 4,
            line_size: 64,
        }
    }
}

impl CacheConfig {
    pub fn validate(&self) -> Result<(), NvmError> {
        if self.capacity == 0 || self.associativity == 0 || self.line_size == 0 {
            return Err(NvmError::InvalidConfig(
                "cache capacity, associativity and line size must be positive".into(),
            ));
        }
        if !self
            .capacity
            .is_multiple_of(self.associativity * self.line_size)
        {
            return Err(NvmError::InvalidConfig(format!(
                "cache capacity {} not divisible by associativity {} x line size {}",
                self.capacity, self.associativity, self.line_size
            )));
        }
        Ok(())
    }

    pub fn set_count(&self) -> usize {
        self.capacity / (self.associativity * self.line_size)
    }
}

#[derive(Clone, Copy, Default)]
struct Line {
    tag: u64,
    valid: bool,
    last_used: u64,
}

/// LRU recency is a global access stamp; the least stamp in a set is the
/// eviction victim, with invalid ways filled first.
pub struct CacheSim {
    sets: Vec<Vec<Line>>,
    set_count: usize,
    line_size: u64,
    tick: u64,
}

impl CacheSim {
    pub fn new(config: &CacheConfig) -> Result<Self, NvmError> {
        config.validate()?;
        let set_count = config.set_count();
        Ok(CacheSim {
            sets: vec![vec![Line::default(); config.associativity]; set_count],
            set_count,
            line_size: config.line_size as u64,
            tick: 0,
        })
    }

    pub fn line_size(&self) -> u64 {
        self.line_size
    }

    /// One access to the line containing `addr`. Returns true on hit.
    /// A miss installs the line, evicting the least-recently-used way.
    pub fn access(&mut self, addr: u64) -> bool {
        self.tick += 1;
        let line_addr = addr / self.line_size;
        let set = (line_addr % self.set_count as u64) as usize;
        let tag = line_addr;

        for way in self.sets[set].iter_mut() {
            if way.valid && way.tag == tag {
                way.last_used = self.tick;
                return true;
            }
        }

        let mut victim = 0;
        let mut oldest = u64::MAX;
        for (i, way) in self.sets[set].iter().enumerate() {
            if !way.valid {
                victim = i;
                break;
            }
            if way.last_used < oldest {
                oldest = way.last_used;
                victim = i;
            }
        }
        self.sets[set][victim] = Line {
            tag,
            valid: true,
            last_used: self.tick,
        };
        false
    }

    /// Line addresses covered by the byte range `[addr, addr + len)`.
    pub fn lines_covering(&self, addr: u64, len: u64) -> impl Iterator<Item = u64> {
        let first = addr / self.line_size;
        let last = (addr + len - 1) / self.line_size;
        let ls = self.line_size;
        (first..=last).map(move |l| l * ls)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_cache() -> CacheSim {
        CacheSim::new(&CacheConfig::default()).unwrap()
    }

    #[test]
    fn config_rejects_indivisible_capacity() {
        let cfg = CacheConfig {
            capacity: 1000,
            associativity: 4,
            line_size: 64,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn five_lines_in_one_set_evict_the_first() {
        let mut cache = default_cache();
        let set_count = CacheConfig::default().set_count() as u64;
        // Five distinct lines all mapping to set 0 of a 4-way cache.
        for i in 0..5u64 {
            assert!(!cache.access(i * set_count * 64));
        }
        // The first was LRU and got evicted; the fifth is still resident.
        assert!(!cache.access(0));
        assert!(cache.access(4 * set_count * 64));
    }

    #[test]
    fn lines_covering_spans() {
        let cache = default_cache();
        let lines: Vec<u64> = cache.lines_covering(60, 8).collect();
        assert_eq!(lines, vec![0, 64]);
        let lines: Vec<u64> = cache.lines_covering(64, 64).collect();
        assert_eq!(lines, vec![64]);
    }
}
