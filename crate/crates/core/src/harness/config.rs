//! Declarative experiment configuration.
//!
//! A flat `key = value` text file with `#` comments; every field defaults to
//! the reference parameters, and CLI flags override file values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::attacks::{CovertConfig, PrimeConfig, TemplateConfig};
use crate::cache::{BaselineConfig, MirageConfig};
use crate::cipher::{Algorithm, BlockCipherKey, CipherMode, KeyPair};
use crate::error::Error;
use crate::Result;

/// All knobs of a run. Fields mirror the config-file keys one to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sets_per_skew: u64,
    pub base_ways: u32,
    pub extra_ways: u32,
    pub cipher: Algorithm,
    pub key1: u128,
    pub key2: u128,
    pub bug_mode: bool,
    pub prime_count: u64,
    pub prime_stride: u64,
    pub prime_base: u64,
    pub sender_base: u64,
    pub low_accesses: u64,
    pub high_accesses: u64,
    pub calibration_trials: u64,
    pub template_counts: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let keys = MirageConfig::default_keys(Algorithm::Present80);
        ExperimentConfig {
            sets_per_skew: 16_384,
            base_ways: 8,
            extra_ways: 6,
            cipher: Algorithm::Present80,
            key1: keys.k1().key_bits(),
            key2: keys.k2().key_bits(),
            bug_mode: false,
            prime_count: 10_000,
            prime_stride: 1_000,
            prime_base: 0x1000_0000,
            sender_base: 0x4000_0000_0000,
            low_accesses: 1_000,
            high_accesses: 4_000,
            calibration_trials: 30,
            template_counts: crate::attacks::default_access_counts(),
            trials: 100,
            master_seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_u64(v: &str, key: &str) -> Result<u64> {
    let v = v.trim();
    let parsed = if let Some(hex) = v.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
    } else {
        v.parse()
    };
    parsed.map_err(|e| Error::parse(format!("key `{key}`: {e}")))
}

fn parse_u128_hex(v: &str, key: &str) -> Result<u128> {
    u128::from_str_radix(v.trim().trim_start_matches("0x"), 16)
        .map_err(|e| Error::parse(format!("key `{key}`: {e}")))
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::parse(format!("key `{key}`: bad bool `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_contents(&contents)
    }

    pub fn from_str_contents(contents: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in contents.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sets_per_skew" => self.sets_per_skew = parse_u64(value, key)?,
            "base_ways" => self.base_ways = parse_u64(value, key)? as u32,
            "extra_ways" => self.extra_ways = parse_u64(value, key)? as u32,
            "cipher" => self.cipher = Algorithm::parse(value)?,
            "key1" => self.key1 = parse_u128_hex(value, key)?,
            "key2" => self.key2 = parse_u128_hex(value, key)?,
            "bug_mode" => self.bug_mode = parse_bool(value, key)?,
            "prime_count" => self.prime_count = parse_u64(value, key)?,
            "prime_stride" => self.prime_stride = parse_u64(value, key)?,
            "prime_base" => self.prime_base = parse_u64(value, key)?,
            "sender_base" => self.sender_base = parse_u64(value, key)?,
            "low_accesses" => self.low_accesses = parse_u64(value, key)?,
            "high_accesses" => self.high_accesses = parse_u64(value, key)?,
            "calibration_trials" => self.calibration_trials = parse_u64(value, key)?,
            "template_counts" => {
                self.template_counts = value
                    .split(',')
                    .map(|v| parse_u64(v, key))
                    .collect::<Result<_>>()?;
            }
            "trials" => self.trials = parse_u64(value, key)?,
            "master_seed" => self.master_seed = parse_u64(value, key)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.key_pair()?;
        self.mirage_config(self.master_seed)?.validate()?;
        if self.template_counts.is_empty() {
            return Err(Error::config("template_counts must be non-empty"));
        }
        Ok(())
    }

    pub fn key_pair(&self) -> Result<KeyPair> {
        KeyPair::new(
            BlockCipherKey::new(self.cipher, self.key1)?,
            BlockCipherKey::new(self.cipher, self.key2)?,
        )
    }

    pub fn cipher_mode(&self) -> CipherMode {
        if self.bug_mode {
            CipherMode::Buggy
        } else {
            CipherMode::Correct
        }
    }

    pub fn mirage_config(&self, seed: u64) -> Result<MirageConfig> {
        Ok(MirageConfig {
            skews: 2,
            sets_per_skew: self.sets_per_skew,
            base_ways: self.base_ways,
            extra_ways: self.extra_ways,
            keys: self.key_pair()?,
            mode: self.cipher_mode(),
            rng_seed: seed,
        })
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig::default()
    }

    pub fn prime_config(&self) -> PrimeConfig {
        PrimeConfig {
            prime_count: self.prime_count,
            address_stride: self.prime_stride,
            base_address: self.prime_base,
        }
    }

    pub fn covert_config(&self) -> CovertConfig {
        CovertConfig {
            receiver: self.prime_config(),
            sender_base: self.sender_base,
            sender_stride: self.prime_stride,
            low_accesses: self.low_accesses,
            high_accesses: self.high_accesses,
            calibration_trials: self.calibration_trials,
        }
    }

    pub fn template_config(&self) -> TemplateConfig {
        TemplateConfig {
            receiver: self.prime_config(),
            victim_base: self.sender_base,
            victim_stride: self.prime_stride,
        }
    }

    /// Canonical dump: fixed key order, one `key = value` per line. Feeds the
    /// config hash and round-trips through the parser.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let counts = self
            .template_counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "sets_per_skew = {}", self.sets_per_skew);
        let _ = writeln!(s, "base_ways = {}", self.base_ways);
        let _ = writeln!(s, "extra_ways = {}", self.extra_ways);
        let _ = writeln!(s, "cipher = {}", self.cipher.name());
        let _ = writeln!(s, "key1 = {:x}", self.key1);
        let _ = writeln!(s, "key2 = {:x}", self.key2);
        let _ = writeln!(s, "bug_mode = {}", self.bug_mode);
        let _ = writeln!(s, "prime_count = {}", self.prime_count);
        let _ = writeln!(s, "prime_stride = {}", self.prime_stride);
        let _ = writeln!(s, "prime_base = {:#x}", self.prime_base);
        let _ = writeln!(s, "sender_base = {:#x}", self.sender_base);
        let _ = writeln!(s, "low_accesses = {}", self.low_accesses);
        let _ = writeln!(s, "high_accesses = {}", self.high_accesses);
        let _ = writeln!(s, "calibration_trials = {}", self.calibration_trials);
        let _ = writeln!(s, "template_counts = {counts}");
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        // out_dir is deliberately omitted: where results land must not change
        // the experiment identity, so re-runs into different directories (or
        // at different parallelism) keep the same config hash.
        s
    }

    /// SHA-256 of the canonical dump, hex-encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
