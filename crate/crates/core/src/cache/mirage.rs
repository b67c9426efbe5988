//! The MIRAGE state machine.
//!
//! Two skewed tag arrays with extra invalid ways, a fully associative data
//! store coupled to the tags by forward/back pointers, power-of-two-choices
//! install, and an unconditional global eviction on every install.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AccessKind, AccessOutcome, Cache, CacheStats};
use crate::cipher::{Algorithm, BlockCipherKey, CipherMode, IndexDeriver, KeyPair, SiblingIndices};
use crate::error::Error;
use crate::seed::seeded_rng;
use crate::Result;

/// Geometry, cipher and seed of one MIRAGE instance.
#[derive(Debug, Clone)]
pub struct MirageConfig {
    pub skews: u32,
    pub sets_per_skew: u64,
    pub base_ways: u32,
    pub extra_ways: u32,
    pub keys: KeyPair,
    pub mode: CipherMode,
    pub rng_seed: u64,
}

impl MirageConfig {
    /// The reference 16MB geometry: 2 skews, 16K sets each, 8+6 ways,
    /// PRESENT-80 with two fixed distinct keys.
    pub fn reference(seed: u64) -> Self {
        MirageConfig {
            skews: 2,
            sets_per_skew: 16_384,
            base_ways: 8,
            extra_ways: 6,
            keys: Self::default_keys(Algorithm::Present80),
            mode: CipherMode::Correct,
            rng_seed: seed,
        }
    }

    /// Fixed distinct default keys for `algorithm`.
    pub fn default_keys(algorithm: Algorithm) -> KeyPair {
        let (a, b) = match algorithm {
            Algorithm::Present80 => (0x0123_4567_89ab_cdef_0123u128, 0xfedc_ba98_7654_3210_fedcu128),
            Algorithm::Prince128 => (
                0x0123_4567_89ab_cdef_1122_3344_5566_7788u128,
                0xfedc_ba98_7654_3210_8877_6655_4433_2211u128,
            ),
        };
        KeyPair::new(
            BlockCipherKey::new(algorithm, a).expect("fixed key fits"),
            BlockCipherKey::new(algorithm, b).expect("fixed key fits"),
        )
        .expect("fixed keys are distinct")
    }

    pub fn index_bits(&self) -> u32 {
        self.sets_per_skew.trailing_zeros()
    }

    pub fn ways(&self) -> u32 {
        self.base_ways + self.extra_ways
    }

    /// Data-store slots: sets_per_skew * base_ways.
    pub fn data_capacity(&self) -> u64 {
        self.sets_per_skew * u64::from(self.base_ways)
    }

    pub fn validate(&self) -> Result<()> {
        if self.skews != 2 {
            return Err(Error::config("exactly two skews are supported"));
        }
        if !self.sets_per_skew.is_power_of_two() {
            return Err(Error::config("sets_per_skew must be a power of two"));
        }
        if self.base_ways == 0 {
            return Err(Error::config("base_ways must be positive"));
        }
        let bits = self.index_bits();
        if !(1..=30).contains(&bits) {
            return Err(Error::config("sets_per_skew out of range"));
        }
        Ok(())
    }
}

/// Initial per-set tag split used by the bucket-and-ball abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheInitState {
    pub valid_tags_per_set: u32,
    pub invalid_tags_per_set: u32,
}

#[derive(Debug, Clone, Copy)]
struct TagEntry {
    valid: bool,
    line_tag: u64,
    data_ptr: u32,
}

#[derive(Debug, Clone, Copy)]
struct DataEntry {
    valid: bool,
    line_tag: u64,
    back_ptr: u32,
}

const INVALID: TagEntry = TagEntry {
    valid: false,
    line_tag: 0,
    data_ptr: 0,
};

/// Tag store, data store and counters of one MIRAGE instance.
pub struct MirageCache {
    config: MirageConfig,
    deriver: IndexDeriver,
    tags: Vec<TagEntry>,
    data: Vec<DataEntry>,
    /// Invalid-way count per tag set, indexed by skew * sets + set.
    invalid_per_set: Vec<u16>,
    occupancy: u64,
    rng: ChaCha8Rng,
    stats: CacheStats,
}

impl MirageCache {
    pub fn new(config: MirageConfig) -> Result<Self> {
        config.validate()?;
        let deriver = IndexDeriver::new(&config.keys, config.index_bits(), config.mode)?;
        let sets = config.sets_per_skew as usize * config.skews as usize;
        let ways = config.ways() as usize;
        let rng = seeded_rng(config.rng_seed);
        Ok(MirageCache {
            deriver,
            tags: vec![INVALID; sets * ways],
            data: vec![
                DataEntry {
                    valid: false,
                    line_tag: 0,
                    back_ptr: 0,
                };
                config.data_capacity() as usize
            ],
            invalid_per_set: vec![ways as u16; sets],
            occupancy: 0,
            rng,
            stats: CacheStats::default(),
            config,
        })
    }

    pub fn config(&self) -> &MirageConfig {
        &self.config
    }

    /// Flat set index of (skew, set-within-skew).
    fn set_index(&self, skew: u32, set: u32) -> usize {
        skew as usize * self.config.sets_per_skew as usize + set as usize
    }

    fn tag_base(&self, set_index: usize) -> usize {
        set_index * self.config.ways() as usize
    }

    fn find_tag(&self, line_addr: u64) -> Option<usize> {
        self.find_tag_at(line_addr, self.deriver.indices(line_addr))
    }

    fn find_tag_at(&self, line_addr: u64, idx: SiblingIndices) -> Option<usize> {
        let ways = self.config.ways() as usize;
        for (skew, set) in [(0, idx.i1), (1, idx.i2)] {
            let base = self.tag_base(self.set_index(skew, set));
            for w in 0..ways {
                let t = &self.tags[base + w];
                if t.valid && t.line_tag == line_addr {
                    return Some(base + w);
                }
            }
        }
        None
    }

    /// Invalidate the valid tag at `tag_idx` and its data entry.
    fn invalidate_tag(&mut self, tag_idx: usize) {
        let entry = self.tags[tag_idx];
        debug_assert!(entry.valid);
        self.tags[tag_idx].valid = false;
        self.data[entry.data_ptr as usize].valid = false;
        self.invalid_per_set[tag_idx / self.config.ways() as usize] += 1;
        self.occupancy -= 1;
    }

    /// Pick a uniform-random way of `set_index` with validity `want_valid`.
    fn pick_way(&mut self, set_index: usize, want_valid: bool) -> usize {
        let ways = self.config.ways() as usize;
        let base = self.tag_base(set_index);
        let count = self.tags[base..base + ways]
            .iter()
            .filter(|t| t.valid == want_valid)
            .count();
        debug_assert!(count > 0);
        let pick = self.rng.random_range(0..count);
        let mut seen = 0;
        for w in 0..ways {
            if self.tags[base + w].valid == want_valid {
                if seen == pick {
                    return base + w;
                }
                seen += 1;
            }
        }
        unreachable!("pick within counted ways");
    }

    /// Full-scan integrity check: valid tags and valid data entries form a
    /// perfect matching with equal line tags, and counters agree.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let ways = self.config.ways() as usize;
        let mut valid_tags = 0u64;
        for (i, t) in self.tags.iter().enumerate() {
            if !t.valid {
                continue;
            }
            valid_tags += 1;
            let d = self
                .data
                .get(t.data_ptr as usize)
                .ok_or_else(|| format!("tag {i}: data_ptr out of range"))?;
            if !d.valid || d.back_ptr as usize != i || d.line_tag != t.line_tag {
                return Err(format!("tag {i}: broken forward/back pointer pair"));
            }
        }
        let valid_data = self.data.iter().filter(|d| d.valid).count() as u64;
        if valid_data != valid_tags || valid_data != self.occupancy {
            return Err(format!(
                "counts disagree: {valid_tags} tags, {valid_data} data, occupancy {}",
                self.occupancy
            ));
        }
        for (s, &inv) in self.invalid_per_set.iter().enumerate() {
            let base = s * ways;
            let actual = self.tags[base..base + ways].iter().filter(|t| !t.valid).count();
            if actual != inv as usize {
                return Err(format!("set {s}: invalid-way count {inv} != {actual}"));
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn fill_sibling_sets_for_test(&mut self, line_addr: u64) {
        let idx = self.deriver.indices(line_addr);
        let ways = self.config.ways() as usize;
        let mut next_slot = 0usize;
        let mut next_tag = 0x8000_0000_0000_0000u64;
        for (skew, set) in [(0, idx.i1), (1, idx.i2)] {
            let set_index = self.set_index(skew, set);
            let base = self.tag_base(set_index);
            for w in 0..ways {
                if self.tags[base + w].valid {
                    continue;
                }
                while self.data[next_slot].valid {
                    next_slot += 1;
                }
                self.tags[base + w] = TagEntry {
                    valid: true,
                    line_tag: next_tag,
                    data_ptr: next_slot as u32,
                };
                self.data[next_slot] = DataEntry {
                    valid: true,
                    line_tag: next_tag,
                    back_ptr: (base + w) as u32,
                };
                self.invalid_per_set[set_index] -= 1;
                self.occupancy += 1;
                next_tag += 1;
            }
        }
    }
}

impl Cache for MirageCache {
    fn lookup(&self, line_addr: u64) -> bool {
        self.find_tag(line_addr).is_some()
    }

    fn access(&mut self, line_addr: u64) -> AccessOutcome {
        self.stats.accesses += 1;
        let idx = self.deriver.indices(line_addr);
        if self.find_tag_at(line_addr, idx).is_some() {
            self.stats.hits += 1;
            return AccessOutcome::hit();
        }
        self.stats.misses += 1;

        let set1 = self.set_index(0, idx.i1);
        let set2 = self.set_index(1, idx.i2);
        let (inv1, inv2) = (self.invalid_per_set[set1], self.invalid_per_set[set2]);
        // Power-of-two-choices: more invalid ways wins, uniform tie-break.
        let chosen = if inv1 > inv2 {
            set1
        } else if inv2 > inv1 {
            set2
        } else if self.rng.random::<bool>() {
            set1
        } else {
            set2
        };

        // SAE: both sibling sets are out of invalid ways; evict a random
        // valid way of the chosen set to make room.
        let (sae_triggered, sae_victim) = if self.invalid_per_set[chosen] == 0 {
            self.stats.sae_count += 1;
            let victim_idx = self.pick_way(chosen, true);
            let victim = self.tags[victim_idx].line_tag;
            self.invalidate_tag(victim_idx);
            (true, Some(victim))
        } else {
            (false, None)
        };

        let tag_idx = self.pick_way(chosen, false);

        // Global eviction on every install: a uniform slot over the whole
        // data store, freed if currently valid.
        let slot = self.rng.random_range(0..self.config.data_capacity()) as usize;
        let globally_evicted = if self.data[slot].valid {
            let victim = self.data[slot].line_tag;
            self.invalidate_tag(self.data[slot].back_ptr as usize);
            self.stats.global_evictions += 1;
            Some(victim)
        } else {
            None
        };

        self.tags[tag_idx] = TagEntry {
            valid: true,
            line_tag: line_addr,
            data_ptr: slot as u32,
        };
        self.data[slot] = DataEntry {
            valid: true,
            line_tag: line_addr,
            back_ptr: tag_idx as u32,
        };
        self.invalid_per_set[tag_idx / self.config.ways() as usize] -= 1;
        self.occupancy += 1;

        AccessOutcome {
            kind: AccessKind::MissInstalled,
            globally_evicted,
            sae_triggered,
            sae_victim,
        }
    }

    fn occupancy(&self) -> u64 {
        self.occupancy
    }

    fn stats(&self) -> CacheStats {
        self.stats
    }

    fn capacity(&self) -> u64 {
        self.config.data_capacity()
    }

    fn reset_with_seed(&mut self, seed: u64) {
        self.tags.fill(INVALID);
        for d in &mut self.data {
            d.valid = false;
        }
        self.invalid_per_set.fill(self.config.ways() as u16);
        self.occupancy = 0;
        self.rng = seeded_rng(seed);
        self.stats = CacheStats::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> MirageConfig {
        MirageConfig {
            sets_per_skew: 256,
            ..MirageConfig::reference(seed)
        }
    }

    #[test]
    fn new_cache_is_empty_with_reference_geometry() {
        let cache = MirageCache::new(MirageConfig::reference(1)).unwrap();
        assert_eq!(cache.tags.len(), 2 * 16_384 * 14);
        assert_eq!(cache.data.len(), 131_072);
        assert_eq!(cache.occupancy(), 0);
        assert_eq!(cache.stats(), CacheStats::default());
        cache.check_invariants().unwrap();
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut cfg = MirageConfig::reference(1);
        cfg.sets_per_skew = 100;
        assert!(MirageCache::new(cfg).is_err());
        let mut cfg = MirageConfig::reference(1);
        cfg.skews = 3;
        assert!(MirageCache::new(cfg).is_err());
    }

    #[test]
    fn miss_then_hit() {
        let mut cache = MirageCache::new(small_config(2)).unwrap();
        assert!(!cache.lookup(42));
        let out = cache.access(42);
        assert_eq!(out.kind, AccessKind::MissInstalled);
        assert_eq!(out.globally_evicted, None);
        assert!(!out.sae_triggered);
        assert!(cache.lookup(42));
        assert!(cache.access(42).is_hit());
        assert_eq!(cache.occupancy(), 1);
        let s = cache.stats();
        assert_eq!((s.accesses, s.hits, s.misses), (2, 1, 1));
        cache.check_invariants().unwrap();
    }

    #[test]
    fn deterministic_under_seed() {
        let trace: Vec<u64> = (0..5_000).map(|i| i * 31).collect();
        let mut a = MirageCache::new(small_config(7)).unwrap();
        let mut b = MirageCache::new(small_config(7)).unwrap();
        for &addr in &trace {
            assert_eq!(a.access(addr), b.access(addr));
        }
        assert_eq!(a.stats(), b.stats());
        assert_eq!(a.occupancy(), b.occupancy());
    }

    #[test]
    fn reset_reproduces_run() {
        let mut cache = MirageCache::new(small_config(3)).unwrap();
        let trace: Vec<u64> = (0..3_000).map(|i| i * 17 + 5).collect();
        let first: Vec<AccessOutcome> = trace.iter().map(|&a| cache.access(a)).collect();
        cache.reset_with_seed(3);
        assert_eq!(cache.occupancy(), 0);
        let second: Vec<AccessOutcome> = trace.iter().map(|&a| cache.access(a)).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn invariants_hold_along_random_trace() {
        // Small geometry so the data store saturates and global evictions,
        // SAE paths and pointer rewiring all run.
        let mut cfg = small_config(11);
        cfg.sets_per_skew = 64;
        let mut cache = MirageCache::new(cfg).unwrap();
        let mut rng = crate::seed::seeded_rng(99);
        use rand::Rng;
        for step in 0..20_000u64 {
            cache.access(rng.random::<u64>() % 4096);
            if step % 1000 == 0 {
                cache.check_invariants().unwrap();
            }
        }
        cache.check_invariants().unwrap();
        assert!(cache.occupancy() <= cache.capacity());
        let s = cache.stats();
        assert!(s.global_evictions > 0);
        assert_eq!(s.accesses, 20_000);
        assert_eq!(s.hits + s.misses, s.accesses);
    }

    #[test]
    fn forced_sae_when_both_sets_full() {
        let mut cache = MirageCache::new(small_config(5)).unwrap();
        cache.fill_sibling_sets_for_test(0xabcd);
        cache.check_invariants().unwrap();
        let out = cache.access(0xabcd);
        assert!(out.sae_triggered);
        assert!(out.sae_victim.is_some());
        assert_eq!(cache.stats().sae_count, 1);
        cache.check_invariants().unwrap();
    }

    #[test]
    fn prime_scale_self_evictions_near_expectation() {
        // 10,000 distinct installs from empty: expected valid global
        // evictions = sum_i occ_i / D, about 381 on the reference geometry.
        let mut cache = MirageCache::new(MirageConfig::reference(1234)).unwrap();
        for i in 0..10_000u64 {
            cache.access(i * 1_000);
        }
        let evicted = cache.stats().global_evictions;
        assert!((300..520).contains(&evicted), "evictions {evicted}");
        let occ = cache.occupancy();
        assert_eq!(occ, 10_000 - evicted);
        // Around 9600 resident = 7.32% of the data store.
        assert!((9_480..=9_700).contains(&occ), "occupancy {occ}");
        cache.check_invariants().unwrap();
    }
}
