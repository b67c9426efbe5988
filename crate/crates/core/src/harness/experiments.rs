//! CSV bodies for each experiment and the cache factories the CLI uses.
//!
//! Every function here builds its output from deterministic, seed-derived
//! inputs, so identical (config, seed) pairs produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analytics::{bucket_ball_simulate, BucketBallParams};
use crate::attacks::{mean_std, CacheFactory, ComparisonReport, CovertReport, Template};
use crate::cache::{BaselineCache, Cache, CacheStats, MirageCache};
use crate::cipher::UniformityReport;
use crate::error::Error;
use crate::harness::ExperimentConfig;
use crate::seed::derive_seed;
use crate::Result;

/// Seed stream for the bucket-and-ball sweep trials.
const STREAM_SWEEP: u64 = 0x5eed_ba11;

/// Factory producing one MIRAGE instance per trial seed.
pub fn mirage_factory(cfg: &ExperimentConfig) -> Result<impl CacheFactory + use<>> {
    cfg.validate()?;
    let cfg = cfg.clone();
    Ok(move |seed: u64| -> Box<dyn Cache + Send> {
        let mc = cfg.mirage_config(seed).expect("config validated");
        Box::new(MirageCache::new(mc).expect("config validated"))
    })
}

/// Factory producing one set-associative baseline instance per trial.
pub fn baseline_factory(cfg: &ExperimentConfig) -> impl CacheFactory + use<> {
    let bc = cfg.baseline_config();
    move |_seed: u64| -> Box<dyn Cache + Send> {
        Box::new(BaselineCache::new(bc).expect("default geometry is valid"))
    }
}

/// `sim` stats output: one header line and one row of lifetime counters.
pub fn stats_csv(stats: &CacheStats) -> String {
    format!(
        "accesses,hits,misses,global_evictions,sae_count\n{}\n",
        stats.csv_row()
    )
}

/// Uniformity report as CSV, one row per skew.
pub fn uniformity_csv(report: &UniformityReport) -> String {
    let mut s = String::from("skew,chi_square,samples,bins,expected,four_sigma_bound\n");
    for (skew, chi) in [(1, report.chi_square_skew1), (2, report.chi_square_skew2)] {
        let _ = writeln!(
            s,
            "{skew},{chi:.4},{},{},{:.1},{:.4}",
            report.samples,
            report.bins,
            report.expected(),
            report.four_sigma_bound()
        );
    }
    s
}

/// Covert-channel per-trial report rows.
pub fn covert_csv(report: &CovertReport) -> String {
    let mut s = String::from("trial,bit_sent,miss_count,bit_decoded\n");
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.trial, r.bit_sent, r.miss_count, r.bit_decoded
        );
    }
    s
}

/// Template store: every observation, grouped by access count. Within a
/// group, rows are ordered by miss count (the per-trial draw order carries
/// no information; the histogram is the template).
pub fn template_store_csv(templates: &[Template]) -> String {
    let mut s = String::from("victim_accesses,trial,miss_count\n");
    for t in templates {
        let mut trial = 0u64;
        for (&miss, &freq) in &t.miss_histogram {
            for _ in 0..freq {
                let _ = writeln!(s, "{},{trial},{miss}", t.victim_accesses);
                trial += 1;
            }
        }
    }
    s
}

/// Template summary: one row of moments per access count.
pub fn template_summary_csv(templates: &[Template]) -> String {
    let mut s = String::from("victim_accesses,trials,mean,stddev\n");
    for t in templates {
        let _ = writeln!(
            s,
            "{},{},{:.4},{:.4}",
            t.victim_accesses, t.trials, t.mean, t.stddev
        );
    }
    s
}

/// Rebuild templates from a store file previously written by
/// [`template_store_csv`] (comment lines and header are skipped).
pub fn templates_from_store(csv: &str) -> Result<Vec<Template>> {
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut saw_header = false;
    for (lineno, raw) in csv.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(format!(
                "template store line {}: expected 3 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let bad = |e: std::num::ParseIntError| {
            Error::parse(format!("template store line {}: {e}", lineno + 1))
        };
        let accesses: u64 = fields[0].parse().map_err(bad)?;
        let miss: u64 = fields[2].parse().map_err(bad)?;
        groups.entry(accesses).or_default().push(miss);
    }
    if groups.is_empty() {
        return Err(Error::parse("template store holds no observations"));
    }
    groups
        .into_iter()
        .map(|(victim_accesses, misses)| {
            if misses.len() < 2 {
                return Err(Error::parse(format!(
                    "template for {victim_accesses} accesses has fewer than 2 observations"
                )));
            }
            let mut miss_histogram = BTreeMap::new();
            for &m in &misses {
                *miss_histogram.entry(m).or_insert(0u64) += 1;
            }
            let (mean, stddev) = mean_std(&misses);
            Ok(Template {
                victim_accesses,
                trials: misses.len() as u64,
                miss_histogram,
                mean,
                stddev,
            })
        })
        .collect()
}

/// Bucket-and-ball parameter sweep. For each bucket count and balancing
/// policy, runs `trials` seeded throws-until-spill experiments.
pub fn bucket_ball_sweep_csv(
    bucket_counts: &[u64],
    spill_threshold: u64,
    trials: u64,
    max_throws: u64,
    master_seed: u64,
) -> Result<String> {
    if bucket_counts.is_empty() {
        return Err(Error::argument("need at least one bucket count"));
    }
    let mut s = String::from("B,buckets,threshold,load_balanced,seed,throws_until_first_spill\n");
    let mut run_index = 0u64;
    for &buckets in bucket_counts {
        let params = BucketBallParams::new(max_throws, buckets, 1, spill_threshold)?;
        for load_balanced in [false, true] {
            for _ in 0..trials {
                let seed = derive_seed(master_seed, STREAM_SWEEP, run_index);
                run_index += 1;
                let stats =
                    bucket_ball_simulate(&params, load_balanced, spill_threshold, max_throws, seed)?;
                let first = stats
                    .throws_until_first_spill
                    .map(|t| t.to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{buckets},{spill_threshold},{load_balanced},{seed},{first}",
                    stats.total_throws
                );
            }
        }
    }
    Ok(s)
}

/// Baseline-versus-MIRAGE covert separability report.
pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut s =
        String::from("cache,low_mean,low_std,high_mean,high_std,separability\n");
    for (name, side) in [("mirage", &report.mirage), ("baseline", &report.baseline)] {
        let _ = writeln!(
            s,
            "{name},{:.4},{:.4},{:.4},{:.4},{:.4}",
            side.low_mean, side.low_std, side.high_mean, side.high_std, side.separability
        );
    }
    s
}
