//! Classical physically-indexed set-associative cache with LRU replacement.

use super::{AccessKind, AccessOutcome, Cache, CacheStats};
use crate::error::Error;
use crate::Result;

/// Geometry of the baseline cache.
#[derive(Debug, Clone, Copy)]
pub struct BaselineConfig {
    pub sets: u64,
    pub ways: u32,
}

impl Default for BaselineConfig {
    /// 16-way, 16K sets: the same capacity class as the reference MIRAGE.
    fn default() -> Self {
        BaselineConfig {
            sets: 16_384,
            ways: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Line {
    valid: bool,
    line_tag: u64,
    /// Global access stamp of the last touch; smallest stamp is the LRU way.
    last_use: u64,
}

/// Set-associative cache state. The set index is the low bits of the line
/// address.
pub struct BaselineCache {
    config: BaselineConfig,
    lines: Vec<Line>,
    stamp: u64,
    occupancy: u64,
    stats: CacheStats,
}

impl BaselineCache {
    pub fn new(config: BaselineConfig) -> Result<Self> {
        if !config.sets.is_power_of_two() || config.ways == 0 {
            return Err(Error::config(
                "baseline needs a power-of-two set count and at least one way",
            ));
        }
        Ok(BaselineCache {
            lines: vec![Line::default(); (config.sets * u64::from(config.ways)) as usize],
            config,
            stamp: 0,
            occupancy: 0,
            stats: CacheStats::default(),
        })
    }

    fn set_base(&self, line_addr: u64) -> usize {
        ((line_addr & (self.config.sets - 1)) * u64::from(self.config.ways)) as usize
    }
}

impl Cache for BaselineCache {
    fn lookup(&self, line_addr: u64) -> bool {
        let base = self.set_base(line_addr);
        self.lines[base..base + self.config.ways as usize]
            .iter()
            .any(|l| l.valid && l.line_tag == line_addr)
    }

    fn access(&mut self, line_addr: u64) -> AccessOutcome {
        self.stats.accesses += 1;
        self.stamp += 1;
        let base = self.set_base(line_addr);
        let ways = self.config.ways as usize;

        if let Some(l) = self.lines[base..base + ways]
            .iter_mut()
            .find(|l| l.valid && l.line_tag == line_addr)
        {
            l.last_use = self.stamp;
            self.stats.hits += 1;
            return AccessOutcome::hit();
        }
        self.stats.misses += 1;

        // Fill an invalid way first; otherwise evict the LRU way.
        let way = if let Some(w) = (0..ways).find(|&w| !self.lines[base + w].valid) {
            w
        } else {
            (0..ways)
                .min_by_key(|&w| self.lines[base + w].last_use)
                .expect("ways > 0")
        };
        let victim = &self.lines[base + way];
        let globally_evicted = if victim.valid {
            self.stats.global_evictions += 1;
            Some(victim.line_tag)
        } else {
            self.occupancy += 1;
            None
        };
        self.lines[base + way] = Line {
            valid: true,
            line_tag: line_addr,
            last_use: self.stamp,
        };
        AccessOutcome {
            kind: AccessKind::MissInstalled,
            globally_evicted,
            sae_triggered: false,
            sae_victim: None,
        }
    }

    fn occupancy(&self) -> u64 {
        self.occupancy
    }

    fn stats(&self) -> CacheStats {
        self.stats
    }

    fn capacity(&self) -> u64 {
        self.config.sets * u64::from(self.config.ways)
    }

    fn reset_with_seed(&mut self, _seed: u64) {
        self.lines.fill(Line::default());
        self.stamp = 0;
        self.occupancy = 0;
        self.stats = CacheStats::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_prime_causes_no_evictions() {
        // 10,000 lines at stride 1000 cycle over gcd-limited sets; no set
        // exceeds 16 lines.
        let mut cache = BaselineCache::new(BaselineConfig::default()).unwrap();
        for i in 0..10_000u64 {
            let out = cache.access(i * 1_000);
            assert_eq!(out.globally_evicted, None);
        }
        assert_eq!(cache.stats().global_evictions, 0);
        assert_eq!(cache.occupancy(), 10_000);
    }

    #[test]
    fn seventeenth_line_evicts_lru() {
        let mut cache = BaselineCache::new(BaselineConfig::default()).unwrap();
        // 17 lines mapping to set 0 (stride = set count).
        for i in 0..16u64 {
            assert!(cache.access(i * 16_384).globally_evicted.is_none());
        }
        // Touch line 0 so line 1 becomes LRU.
        assert!(cache.access(0).is_hit());
        let out = cache.access(16 * 16_384);
        assert_eq!(out.globally_evicted, Some(16_384));
    }

    #[test]
    fn hit_does_not_install() {
        let mut cache = BaselineCache::new(BaselineConfig::default()).unwrap();
        cache.access(5);
        assert!(cache.access(5).is_hit());
        assert_eq!(cache.occupancy(), 1);
        let s = cache.stats();
        assert_eq!((s.accesses, s.hits, s.misses), (2, 1, 1));
    }
}
