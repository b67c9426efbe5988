//! Covert channel over the occupancy signal.
//!
//! Per bit: the receiver primes, the sender makes `low_accesses` or
//! `high_accesses` distinct accesses depending on the bit, the receiver
//! probes and decodes the miss count against a calibrated midpoint threshold.

use rayon::prelude::*;

use super::occupancy::{prime, probe, victim_run, PrimeConfig};
use super::{mean_std, CacheFactory};
use crate::error::Error;
use crate::seed::derive_seed;
use crate::Result;

const STREAM_CAL_LOW: u64 = 0xc0_01;
const STREAM_CAL_HIGH: u64 = 0xc0_02;
const STREAM_BITS: u64 = 0xc0_03;

/// Protocol parameters of the covert channel.
#[derive(Debug, Clone, Copy)]
pub struct CovertConfig {
    pub receiver: PrimeConfig,
    pub sender_base: u64,
    pub sender_stride: u64,
    /// Sender accesses for a 0 bit.
    pub low_accesses: u64,
    /// Sender accesses for a 1 bit.
    pub high_accesses: u64,
    /// Warm-up trials per symbol used to calibrate the threshold.
    pub calibration_trials: u64,
}

impl Default for CovertConfig {
    fn default() -> Self {
        CovertConfig {
            receiver: PrimeConfig::default(),
            sender_base: 0x4000_0000_0000,
            sender_stride: 1_000,
            low_accesses: 1_000,
            high_accesses: 4_000,
            calibration_trials: 30,
        }
    }
}

impl CovertConfig {
    pub fn validate(&self) -> Result<()> {
        self.receiver.validate()?;
        if self.low_accesses >= self.high_accesses {
            return Err(Error::argument("low_accesses must be below high_accesses"));
        }
        Ok(())
    }

    fn sender_accesses(&self, bit: u8) -> u64 {
        if bit == 0 {
            self.low_accesses
        } else {
            self.high_accesses
        }
    }
}

/// One transmitted bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub bit_sent: u8,
    pub miss_count: u64,
    pub bit_decoded: u8,
}

/// Channel report: calibrated threshold, per-symbol miss means and bit-error
/// rate.
#[derive(Debug, Clone)]
pub struct CovertReport {
    pub threshold: f64,
    pub low_mean: f64,
    pub low_std: f64,
    pub high_mean: f64,
    pub high_std: f64,
    pub ber: f64,
    pub records: Vec<TrialRecord>,
}

fn run_symbol_trial(
    factory: &dyn CacheFactory,
    cfg: &CovertConfig,
    bit: u8,
    seed: u64,
) -> Result<u64> {
    let mut cache = factory.build(seed);
    prime(cache.as_mut(), &cfg.receiver)?;
    victim_run(
        cache.as_mut(),
        cfg.sender_accesses(bit),
        cfg.sender_base,
        cfg.sender_stride,
        &cfg.receiver,
    )?;
    Ok(probe(cache.as_mut(), &cfg.receiver))
}

/// Calibrate the decoding threshold: midpoint of the two symbols' mean miss
/// counts over `calibration_trials` warm-up transmissions each.
fn calibrate(
    factory: &dyn CacheFactory,
    cfg: &CovertConfig,
    master_seed: u64,
) -> Result<(f64, f64, f64)> {
    let trials = cfg.calibration_trials.max(1);
    let run = |bit: u8, stream: u64| -> Result<Vec<u64>> {
        (0..trials)
            .into_par_iter()
            .map(|t| run_symbol_trial(factory, cfg, bit, derive_seed(master_seed, stream, t)))
            .collect()
    };
    let low = run(0, STREAM_CAL_LOW)?;
    let high = run(1, STREAM_CAL_HIGH)?;
    let (low_mean, _) = mean_std(&low);
    let (high_mean, _) = mean_std(&high);
    Ok(((low_mean + high_mean) / 2.0, low_mean, high_mean))
}

/// Miss-count samples for both symbols, `trials` independent runs each.
pub fn symbol_distributions(
    factory: &dyn CacheFactory,
    cfg: &CovertConfig,
    trials: u64,
    master_seed: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::argument("trials must be positive"));
    }
    let run = |bit: u8, stream: u64| -> Result<Vec<u64>> {
        (0..trials)
            .into_par_iter()
            .map(|t| run_symbol_trial(factory, cfg, bit, derive_seed(master_seed, stream, t)))
            .collect()
    };
    Ok((run(0, STREAM_CAL_LOW)?, run(1, STREAM_CAL_HIGH)?))
}

/// Transmit `bits` and decode them; every trial runs on its own cache with a
/// seed derived from `master_seed` and the trial index.
pub fn covert_transmit(
    factory: &dyn CacheFactory,
    bits: &[u8],
    cfg: &CovertConfig,
    master_seed: u64,
) -> Result<CovertReport> {
    cfg.validate()?;
    if bits.is_empty() {
        return Err(Error::argument("bit sequence must be non-empty"));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::argument(format!("bits must be 0 or 1, got {b}")));
    }
    let (threshold, _, _) = calibrate(factory, cfg, master_seed)?;

    let records: Vec<TrialRecord> = bits
        .par_iter()
        .enumerate()
        .map(|(i, &bit)| {
            let seed = derive_seed(master_seed, STREAM_BITS, i as u64);
            let miss_count = run_symbol_trial(factory, cfg, bit, seed)?;
            Ok(TrialRecord {
                trial: i as u64,
                seed,
                bit_sent: bit,
                miss_count,
                bit_decoded: u8::from(miss_count as f64 > threshold),
            })
        })
        .collect::<Result<_>>()?;

    let split = |want: u8| -> Vec<u64> {
        records
            .iter()
            .filter(|r| r.bit_sent == want)
            .map(|r| r.miss_count)
            .collect()
    };
    let (low_mean, low_std) = mean_std(&split(0));
    let (high_mean, high_std) = mean_std(&split(1));
    let errors = records.iter().filter(|r| r.bit_decoded != r.bit_sent).count();
    Ok(CovertReport {
        threshold,
        low_mean,
        low_std,
        high_mean,
        high_std,
        ber: errors as f64 / records.len() as f64,
        records,
    })
}
