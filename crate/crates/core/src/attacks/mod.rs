//! Cache-occupancy attack harness.
//!
//! The receiver primes a fixed set of distinct lines, a victim/sender runs a
//! disjoint access sequence, and the receiver probes its own lines counting
//! misses. On MIRAGE every install triggers a global eviction, so the miss
//! count tracks the victim's footprint; the same protocol runs against the
//! classical baseline for contrast.

mod covert;
mod occupancy;
mod template;

pub use covert::{
    covert_transmit, symbol_distributions, CovertConfig, CovertReport, TrialRecord,
};
pub use occupancy::{prime, probe, victim_run, EvictionBreakdown, PrimeConfig, PrimeOutcome};
pub use template::{
    build_templates, classify, default_access_counts, draw_observation, Classification, Template,
    TemplateConfig,
};

use crate::cache::Cache;

/// Builds an independent cache instance for a trial seed. Every trial owns
/// its cache, so sweeps parallelize without shared state.
pub trait CacheFactory: Sync {
    fn build(&self, seed: u64) -> Box<dyn Cache + Send>;
}

impl<F> CacheFactory for F
where
    F: Fn(u64) -> Box<dyn Cache + Send> + Sync,
{
    fn build(&self, seed: u64) -> Box<dyn Cache + Send> {
        self(seed)
    }
}

/// Symbol statistics of one cache design under the covert-channel protocol.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonSide {
    pub low_mean: f64,
    pub low_std: f64,
    pub high_mean: f64,
    pub high_std: f64,
    pub separability: f64,
}

/// Side-by-side covert-channel statistics for MIRAGE and the baseline.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    pub mirage: ComparisonSide,
    pub baseline: ComparisonSide,
}

fn comparison_side(
    factory: &dyn CacheFactory,
    cfg: &CovertConfig,
    trials: u64,
    master_seed: u64,
) -> crate::Result<ComparisonSide> {
    let (low, high) = symbol_distributions(factory, cfg, trials, master_seed)?;
    let (low_mean, low_std) = mean_std(&low);
    let (high_mean, high_std) = mean_std(&high);
    Ok(ComparisonSide {
        low_mean,
        low_std,
        high_mean,
        high_std,
        separability: separability(low_mean, low_std, high_mean, high_std),
    })
}

/// Run the covert-channel experiment with identical parameters on both cache
/// designs and report each side's symbol distributions and separability.
pub fn baseline_comparison(
    mirage: &dyn CacheFactory,
    baseline: &dyn CacheFactory,
    cfg: &CovertConfig,
    trials: u64,
    master_seed: u64,
) -> crate::Result<ComparisonReport> {
    Ok(ComparisonReport {
        mirage: comparison_side(mirage, cfg, trials, master_seed)?,
        baseline: comparison_side(baseline, cfg, trials, master_seed)?,
    })
}

/// Difference of the two symbol means over the pooled standard deviation.
/// Zero-variance distributions compare by mean only.
pub fn separability(mean_a: f64, std_a: f64, mean_b: f64, std_b: f64) -> f64 {
    let pooled = ((std_a * std_a + std_b * std_b) / 2.0).sqrt();
    let diff = (mean_a - mean_b).abs();
    if pooled == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / pooled
    }
}

/// Mean and (sample) standard deviation from exact integer accumulators, so
/// the result is independent of summation order.
pub(crate) fn mean_std(values: &[u64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let sum: u128 = values.iter().map(|&v| u128::from(v)).sum();
    let sum_sq: u128 = values.iter().map(|&v| u128::from(v) * u128::from(v)).sum();
    let mean = sum as f64 / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = (sum_sq as f64 - n * mean * mean) / (n - 1.0);
    (mean, var.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separability_handles_degenerate_spread() {
        assert_eq!(separability(5.0, 0.0, 5.0, 0.0), 0.0);
        assert!(separability(5.0, 0.0, 6.0, 0.0).is_infinite());
        let s = separability(450.0, 20.0, 750.0, 25.0);
        assert!(s > 10.0);
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let (m, s) = mean_std(&[2, 4, 4, 4, 5, 5, 7, 9]);
        assert!((m - 5.0).abs() < 1e-12);
        // Sample stddev of that set is sqrt(32/7).
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
