//! Prime, victim-run and probe phases of the occupancy attack.

use std::collections::HashSet;

use crate::cache::Cache;
use crate::error::Error;
use crate::Result;

/// Address pattern of the receiver's prime phase: `prime_count` lines from
/// `base_address` at `address_stride` line-address units.
#[derive(Debug, Clone, Copy)]
pub struct PrimeConfig {
    pub prime_count: u64,
    pub address_stride: u64,
    pub base_address: u64,
}

impl Default for PrimeConfig {
    fn default() -> Self {
        PrimeConfig {
            prime_count: 10_000,
            address_stride: 1_000,
            base_address: 0x1000_0000,
        }
    }
}

impl PrimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.address_stride == 0 {
            return Err(Error::argument("address stride must be >= 1"));
        }
        Ok(())
    }

    pub fn address(&self, i: u64) -> u64 {
        self.base_address + i * self.address_stride
    }

    /// Half-open span of line addresses the pattern touches.
    pub fn span(&self) -> (u64, u64) {
        (
            self.base_address,
            self.base_address + self.prime_count * self.address_stride,
        )
    }

    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base_address
            && (addr - self.base_address) % self.address_stride == 0
            && (addr - self.base_address) / self.address_stride < self.prime_count
    }
}

/// Result of the prime phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeOutcome {
    /// Primed lines that the phase's own global evictions removed again.
    pub self_evictions: u64,
    /// Primed lines still resident when the phase ended.
    pub resident: u64,
}

/// Install the prime pattern into a freshly reset cache.
pub fn prime(cache: &mut dyn Cache, cfg: &PrimeConfig) -> Result<PrimeOutcome> {
    cfg.validate()?;
    if cfg.prime_count > cache.capacity() {
        return Err(Error::argument(format!(
            "prime_count {} oversubscribes the {}-line cache",
            cfg.prime_count,
            cache.capacity()
        )));
    }
    let mut evicted: HashSet<u64> = HashSet::new();
    for i in 0..cfg.prime_count {
        let out = cache.access(cfg.address(i));
        if let Some(victim) = out.globally_evicted {
            if cfg.contains(victim) {
                evicted.insert(victim);
            }
        }
    }
    Ok(PrimeOutcome {
        self_evictions: evicted.len() as u64,
        resident: cfg.prime_count - evicted.len() as u64,
    })
}

/// Per-owner split of the lines a victim run evicted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvictionBreakdown {
    pub total: u64,
    /// Receiver-primed lines removed during the run.
    pub receiver_owned: u64,
    /// The victim's own lines removed during the run.
    pub victim_owned: u64,
    pub other: u64,
}

/// Run `accesses` distinct victim lines from `base` at `stride`; the range
/// must be disjoint from the receiver's prime range.
pub fn victim_run(
    cache: &mut dyn Cache,
    accesses: u64,
    base: u64,
    stride: u64,
    receiver: &PrimeConfig,
) -> Result<EvictionBreakdown> {
    if stride == 0 {
        return Err(Error::argument("victim stride must be >= 1"));
    }
    let (rx_lo, rx_hi) = receiver.span();
    let (v_lo, v_hi) = (base, base + accesses * stride);
    if accesses > 0 && v_lo < rx_hi && rx_lo < v_hi {
        return Err(Error::argument(
            "victim address range overlaps the receiver's prime range",
        ));
    }
    let victim_cfg = PrimeConfig {
        prime_count: accesses,
        address_stride: stride,
        base_address: base,
    };
    let mut breakdown = EvictionBreakdown::default();
    for i in 0..accesses {
        let out = cache.access(victim_cfg.address(i));
        if let Some(victim) = out.globally_evicted {
            breakdown.total += 1;
            if receiver.contains(victim) {
                breakdown.receiver_owned += 1;
            } else if victim_cfg.contains(victim) {
                breakdown.victim_owned += 1;
            } else {
                breakdown.other += 1;
            }
        }
    }
    Ok(breakdown)
}

/// Re-access the primed lines in order and count misses. Misses re-install
/// through the normal path, so the probe itself churns the cache.
pub fn probe(cache: &mut dyn Cache, cfg: &PrimeConfig) -> u64 {
    let mut misses = 0u64;
    for i in 0..cfg.prime_count {
        if !cache.access(cfg.address(i)).is_hit() {
            misses += 1;
        }
    }
    misses
}
