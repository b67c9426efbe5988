//! Template-based fingerprinting of a victim's access count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::occupancy::{prime, probe, victim_run, PrimeConfig};
use super::{mean_std, CacheFactory};
use crate::error::Error;
use crate::seed::derive_seed;
use crate::Result;

const STREAM_TEMPLATE: u64 = 0x7e_00;

/// Address layout shared by template building and classification trials.
#[derive(Debug, Clone, Copy)]
pub struct TemplateConfig {
    pub receiver: PrimeConfig,
    pub victim_base: u64,
    pub victim_stride: u64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig {
            receiver: PrimeConfig::default(),
            victim_base: 0x4000_0000_0000,
            victim_stride: 1_000,
        }
    }
}

/// The default sweep: 500 to 8000 victim accesses in steps of 500.
pub fn default_access_counts() -> Vec<u64> {
    (1..=16).map(|i| i * 500).collect()
}

/// Empirical probe-miss distribution for one victim access count.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub victim_accesses: u64,
    pub trials: u64,
    pub miss_histogram: BTreeMap<u64, u64>,
    pub mean: f64,
    pub stddev: f64,
}

/// One prime / victim-run / probe round; returns the probe miss count.
pub fn draw_observation(
    factory: &dyn CacheFactory,
    cfg: &TemplateConfig,
    victim_accesses: u64,
    seed: u64,
) -> Result<u64> {
    let mut cache = factory.build(seed);
    prime(cache.as_mut(), &cfg.receiver)?;
    victim_run(
        cache.as_mut(),
        victim_accesses,
        cfg.victim_base,
        cfg.victim_stride,
        &cfg.receiver,
    )?;
    Ok(probe(cache.as_mut(), &cfg.receiver))
}

/// Build one template per access count from `trials_per_template` seeded
/// rounds each.
pub fn build_templates(
    factory: &dyn CacheFactory,
    cfg: &TemplateConfig,
    access_counts: &[u64],
    trials_per_template: u64,
    master_seed: u64,
) -> Result<Vec<Template>> {
    if access_counts.is_empty() {
        return Err(Error::argument("access_counts must be non-empty"));
    }
    if trials_per_template < 2 {
        return Err(Error::argument(
            "need at least 2 trials per template for a defined stddev",
        ));
    }
    access_counts
        .par_iter()
        .enumerate()
        .map(|(ci, &count)| {
            let misses: Vec<u64> = (0..trials_per_template)
                .into_par_iter()
                .map(|t| {
                    draw_observation(
                        factory,
                        cfg,
                        count,
                        derive_seed(master_seed, STREAM_TEMPLATE + ci as u64, t),
                    )
                })
                .collect::<Result<_>>()?;
            let mut miss_histogram = BTreeMap::new();
            for &m in &misses {
                *miss_histogram.entry(m).or_insert(0u64) += 1;
            }
            let (mean, stddev) = mean_std(&misses);
            Ok(Template {
                victim_accesses: count,
                trials: trials_per_template,
                miss_histogram,
                mean,
                stddev,
            })
        })
        .collect()
}

/// Winning label and its posterior under a uniform prior.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub label: u64,
    pub confidence: f64,
}

/// Maximum-likelihood label for an observed miss count under per-template
/// normal approximations. Falls back to nearest mean if any template has a
/// degenerate stddev.
pub fn classify(observed_miss_count: u64, templates: &[Template]) -> Result<Classification> {
    if templates.len() < 2 {
        return Err(Error::argument("classification needs at least 2 templates"));
    }
    let x = observed_miss_count as f64;
    if templates.iter().any(|t| t.stddev == 0.0) {
        let best = templates
            .iter()
            .min_by(|a, b| {
                (a.mean - x)
                    .abs()
                    .partial_cmp(&(b.mean - x).abs())
                    .expect("means are finite")
            })
            .expect("non-empty");
        return Ok(Classification {
            label: best.victim_accesses,
            confidence: 1.0,
        });
    }
    let log_liks: Vec<f64> = templates
        .iter()
        .map(|t| {
            let z = (x - t.mean) / t.stddev;
            -t.stddev.ln() - 0.5 * z * z
        })
        .collect();
    let max = log_liks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_liks.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let (best, weight) = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite weights"))
        .expect("non-empty");
    Ok(Classification {
        label: templates[best].victim_accesses,
        confidence: weight / total,
    })
}
