//! Cache state machines: the MIRAGE design and a classical set-associative
//! baseline, behind a common access interface so the attack harness can run
//! the same experiment on either.

mod baseline;
mod mirage;

pub use baseline::{BaselineCache, BaselineConfig};
pub use mirage::{CacheInitState, MirageCache, MirageConfig};

/// What an access did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Hit,
    MissInstalled,
}

/// Outcome of a single access. A hit sets no eviction fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub kind: AccessKind,
    /// Line removed by the global eviction (MIRAGE) or by set-conflict
    /// replacement (baseline), when the victim slot held a valid line.
    pub globally_evicted: Option<u64>,
    pub sae_triggered: bool,
    pub sae_victim: Option<u64>,
}

impl AccessOutcome {
    pub(crate) fn hit() -> Self {
        AccessOutcome {
            kind: AccessKind::Hit,
            globally_evicted: None,
            sae_triggered: false,
            sae_victim: None,
        }
    }

    pub fn is_hit(&self) -> bool {
        self.kind == AccessKind::Hit
    }
}

/// Monotone counters since construction or last reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub global_evictions: u64,
    pub sae_count: u64,
}

impl CacheStats {
    /// CSV row matching the `sim` subcommand schema.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.accesses, self.hits, self.misses, self.global_evictions, self.sae_count
        )
    }
}

/// Common surface of the two cache models.
pub trait Cache {
    /// Pure hit test; does not mutate state.
    fn lookup(&self, line_addr: u64) -> bool;

    /// Perform one access, installing on a miss.
    fn access(&mut self, line_addr: u64) -> AccessOutcome;

    /// Number of valid lines currently resident.
    fn occupancy(&self) -> u64;

    fn stats(&self) -> CacheStats;

    /// Total line capacity.
    fn capacity(&self) -> u64;

    /// Return to the empty post-construction state with a fresh seed.
    fn reset_with_seed(&mut self, seed: u64);
}
