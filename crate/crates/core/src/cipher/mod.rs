//! Set-index derivation for the skewed tag store.
//!
//! A line address is encrypted under two distinct keys; the low index bits of
//! the two ciphertexts select the sibling sets. A bug-emulation mode
//! reproduces a faulty binary-to-integer conversion that makes the derived
//! indices depend only on the low 16 bits of the address.

mod present;
mod prince;
pub mod vectors;

use std::collections::HashSet;

use rand::Rng;

use crate::error::Error;
use crate::seed::seeded_rng;
use crate::Result;

/// Supported set-index ciphers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Present80,
    Prince128,
}

impl Algorithm {
    pub fn key_bits(self) -> u32 {
        match self {
            Algorithm::Present80 => 80,
            Algorithm::Prince128 => 128,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "present" | "present80" => Ok(Algorithm::Present80),
            "prince" | "prince128" => Ok(Algorithm::Prince128),
            other => Err(Error::parse(format!("unknown cipher algorithm `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Present80 => "PRESENT80",
            Algorithm::Prince128 => "PRINCE128",
        }
    }
}

/// A key for one skew's index cipher. The key width must match the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCipherKey {
    algorithm: Algorithm,
    key_bits: u128,
}

impl BlockCipherKey {
    pub fn new(algorithm: Algorithm, key_bits: u128) -> Result<Self> {
        let width = algorithm.key_bits();
        if width < 128 && key_bits >> width != 0 {
            return Err(Error::config(format!(
                "{} key must fit in {width} bits",
                algorithm.name()
            )));
        }
        Ok(BlockCipherKey {
            algorithm,
            key_bits,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn key_bits(&self) -> u128 {
        self.key_bits
    }
}

/// The two distinct keys indexing the two skews.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair {
    k1: BlockCipherKey,
    k2: BlockCipherKey,
}

impl KeyPair {
    pub fn new(k1: BlockCipherKey, k2: BlockCipherKey) -> Result<Self> {
        if k1.algorithm != k2.algorithm {
            return Err(Error::config("key pair must use the same algorithm"));
        }
        if k1.key_bits == k2.key_bits {
            return Err(Error::config("skew keys must be distinct"));
        }
        Ok(KeyPair { k1, k2 })
    }

    /// Draw a random pair of distinct keys for `algorithm`.
    pub fn random(algorithm: Algorithm, rng: &mut impl Rng) -> Self {
        let mask = if algorithm.key_bits() == 128 {
            u128::MAX
        } else {
            (1u128 << algorithm.key_bits()) - 1
        };
        let a = rng.random::<u128>() & mask;
        let mut b = rng.random::<u128>() & mask;
        while b == a {
            b = rng.random::<u128>() & mask;
        }
        KeyPair {
            k1: BlockCipherKey {
                algorithm,
                key_bits: a,
            },
            k2: BlockCipherKey {
                algorithm,
                key_bits: b,
            },
        }
    }

    pub fn k1(&self) -> &BlockCipherKey {
        &self.k1
    }

    pub fn k2(&self) -> &BlockCipherKey {
        &self.k2
    }

    pub fn algorithm(&self) -> Algorithm {
        self.k1.algorithm
    }
}

/// The tag-set pair an address maps to, one index per skew.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiblingIndices {
    pub i1: u32,
    pub i2: u32,
}

/// Whether index derivation runs the correct path or the bug emulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CipherMode {
    Correct,
    Buggy,
}

/// Full-round encryption of a 64-bit block.
pub fn encrypt(block: u64, key: &BlockCipherKey) -> u64 {
    match key.algorithm {
        Algorithm::Present80 => present::encrypt(block, key.key_bits),
        Algorithm::Prince128 => prince::encrypt(block, key.key_bits),
    }
}

/// Inverse of [`encrypt`] under the same key.
pub fn decrypt(block: u64, key: &BlockCipherKey) -> u64 {
    match key.algorithm {
        Algorithm::Present80 => present::decrypt(block, key.key_bits),
        Algorithm::Prince128 => prince::decrypt(block, key.key_bits),
    }
}

fn check_index_bits(index_bits: u32) -> Result<()> {
    if !(1..=30).contains(&index_bits) {
        return Err(Error::argument(format!(
            "index_bits must be in 1..=30, got {index_bits}"
        )));
    }
    Ok(())
}

/// The faulty conversion: the 64-character binary expansion of the address is
/// read back as base-16 digits and the result truncated to 64 bits, so each of
/// the low 16 address bits lands in its own nibble and the rest are dropped.
pub fn buggy_block(line_addr: u64) -> u64 {
    let mut out = 0u64;
    for k in 0..16 {
        out |= ((line_addr >> k) & 1) << (4 * k);
    }
    out
}

/// A key pair with precomputed key schedules, the hot path for simulation.
#[derive(Debug, Clone)]
pub struct IndexDeriver {
    skew1: PreparedKey,
    skew2: PreparedKey,
    index_mask: u64,
    index_bits: u32,
    mode: CipherMode,
}

#[derive(Debug, Clone)]
enum PreparedKey {
    Present(Box<[u64; present::ROUNDS + 1]>),
    Prince { k0: u64, k0_prime: u64, k1: u64 },
}

impl PreparedKey {
    fn new(key: &BlockCipherKey) -> Self {
        match key.algorithm {
            Algorithm::Present80 => {
                PreparedKey::Present(Box::new(present::round_keys(key.key_bits)))
            }
            Algorithm::Prince128 => {
                let (k0, k0_prime, k1) = prince::expand_key(key.key_bits);
                PreparedKey::Prince { k0, k0_prime, k1 }
            }
        }
    }

    fn encrypt(&self, block: u64) -> u64 {
        match self {
            PreparedKey::Present(keys) => present::encrypt_with(keys, block),
            PreparedKey::Prince { k0, k0_prime, k1 } => {
                prince::encrypt_with(*k0, *k0_prime, *k1, block)
            }
        }
    }
}

impl IndexDeriver {
    pub fn new(keys: &KeyPair, index_bits: u32, mode: CipherMode) -> Result<Self> {
        check_index_bits(index_bits)?;
        Ok(IndexDeriver {
            skew1: PreparedKey::new(&keys.k1),
            skew2: PreparedKey::new(&keys.k2),
            index_mask: (1u64 << index_bits) - 1,
            index_bits,
            mode,
        })
    }

    pub fn index_bits(&self) -> u32 {
        self.index_bits
    }

    pub fn mode(&self) -> CipherMode {
        self.mode
    }

    pub fn indices(&self, line_addr: u64) -> SiblingIndices {
        let block = match self.mode {
            CipherMode::Correct => line_addr,
            CipherMode::Buggy => buggy_block(line_addr),
        };
        SiblingIndices {
            i1: (self.skew1.encrypt(block) & self.index_mask) as u32,
            i2: (self.skew2.encrypt(block) & self.index_mask) as u32,
        }
    }
}

/// Sibling indices of `line_addr`: the low `index_bits` bits of the two
/// ciphertexts.
pub fn derive_sibling_indices(
    line_addr: u64,
    keys: &KeyPair,
    index_bits: u32,
) -> Result<SiblingIndices> {
    Ok(IndexDeriver::new(keys, index_bits, CipherMode::Correct)?.indices(line_addr))
}

/// Sibling indices under the bug emulation; depends only on the low 16 bits
/// of `line_addr`.
pub fn derive_sibling_indices_buggy(
    line_addr: u64,
    keys: &KeyPair,
    index_bits: u32,
) -> Result<SiblingIndices> {
    Ok(IndexDeriver::new(keys, index_bits, CipherMode::Buggy)?.indices(line_addr))
}

/// Chi-square statistics of the index distributions, one per skew.
#[derive(Debug, Clone, Copy)]
pub struct UniformityReport {
    pub chi_square_skew1: f64,
    pub chi_square_skew2: f64,
    pub samples: u64,
    pub bins: u64,
}

impl UniformityReport {
    /// Mean of the chi-square distribution with `bins - 1` degrees of freedom
    /// is close to `bins` at these sizes; the acceptance band is +-4 sigma.
    pub fn expected(&self) -> f64 {
        self.bins as f64
    }

    pub fn four_sigma_bound(&self) -> f64 {
        4.0 * (2.0 * self.bins as f64).sqrt()
    }
}

/// Tally the sibling indices of `sample_count` distinct random addresses and
/// compare each skew's histogram against the uniform expectation.
pub fn uniformity_report(
    keys: &KeyPair,
    index_bits: u32,
    sample_count: u64,
    seed: u64,
    mode: CipherMode,
) -> Result<UniformityReport> {
    if sample_count == 0 {
        return Err(Error::argument("sample_count must be positive"));
    }
    let deriver = IndexDeriver::new(keys, index_bits, mode)?;
    let bins = 1usize << index_bits;
    let mut hist1 = vec![0u64; bins];
    let mut hist2 = vec![0u64; bins];
    let mut rng = seeded_rng(seed);
    let mut seen = HashSet::with_capacity(sample_count as usize);
    while seen.len() < sample_count as usize {
        let addr: u64 = rng.random();
        if !seen.insert(addr) {
            continue;
        }
        let idx = deriver.indices(addr);
        hist1[idx.i1 as usize] += 1;
        hist2[idx.i2 as usize] += 1;
    }
    let expected = sample_count as f64 / bins as f64;
    let chi = |hist: &[u64]| {
        hist.iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum::<f64>()
    };
    Ok(UniformityReport {
        chi_square_skew1: chi(&hist1),
        chi_square_skew2: chi(&hist2),
        samples: sample_count,
        bins: bins as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn present_pair() -> KeyPair {
        KeyPair::new(
            BlockCipherKey::new(Algorithm::Present80, 0).unwrap(),
            BlockCipherKey::new(Algorithm::Present80, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn key_width_is_enforced() {
        assert!(BlockCipherKey::new(Algorithm::Present80, 1u128 << 80).is_err());
        assert!(BlockCipherKey::new(Algorithm::Present80, (1u128 << 80) - 1).is_ok());
        assert!(BlockCipherKey::new(Algorithm::Prince128, u128::MAX).is_ok());
    }

    #[test]
    fn key_pair_rejects_equal_or_mixed() {
        let a = BlockCipherKey::new(Algorithm::Present80, 7).unwrap();
        let b = BlockCipherKey::new(Algorithm::Prince128, 9).unwrap();
        assert!(KeyPair::new(a, a).is_err());
        assert!(KeyPair::new(a, b).is_err());
    }

    #[test]
    fn sibling_indices_mask_test_vector() {
        // Low 14 bits of the PRESENT all-zero test-vector ciphertext.
        let idx = derive_sibling_indices(0, &present_pair(), 14).unwrap();
        assert_eq!(idx.i1, (0x5579_c138_7b22_8445u64 & 0x3fff) as u32);
        assert_eq!(idx.i1, 0x0445);
    }

    #[test]
    fn sibling_indices_deterministic() {
        let keys = present_pair();
        let a = derive_sibling_indices(0xdead_beef, &keys, 14).unwrap();
        let b = derive_sibling_indices(0xdead_beef, &keys, 14).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn index_bits_bounds_checked() {
        let keys = present_pair();
        assert!(derive_sibling_indices(0, &keys, 0).is_err());
        assert!(derive_sibling_indices(0, &keys, 31).is_err());
    }

    #[test]
    fn buggy_mode_depends_only_on_low_16_bits() {
        let keys = present_pair();
        let a = derive_sibling_indices_buggy(0x0123_4567_89ab_0042, &keys, 14).unwrap();
        let b = derive_sibling_indices_buggy(0xffff_0000_0000_0042, &keys, 14).unwrap();
        assert_eq!(a, b);

        let mut rng = seeded_rng(11);
        for _ in 0..1000 {
            let low: u64 = rng.random::<u64>() & 0xffff;
            let hi_a: u64 = rng.random::<u64>() << 16;
            let hi_b: u64 = rng.random::<u64>() << 16;
            let ia = derive_sibling_indices_buggy(hi_a | low, &keys, 14).unwrap();
            let ib = derive_sibling_indices_buggy(hi_b | low, &keys, 14).unwrap();
            assert_eq!(ia, ib);
        }
    }

    #[test]
    fn buggy_mode_distinct_low_bits_mostly_differ() {
        let keys = present_pair();
        let mut rng = seeded_rng(12);
        let mut same = 0u32;
        let pairs = 10_000;
        for _ in 0..pairs {
            let a: u64 = rng.random();
            let mut b: u64 = rng.random();
            if a & 0xffff == b & 0xffff {
                b ^= 1;
            }
            let ia = derive_sibling_indices_buggy(a, &keys, 14).unwrap();
            let ib = derive_sibling_indices_buggy(b, &keys, 14).unwrap();
            if ia == ib {
                same += 1;
            }
        }
        // >= 99% of pairs with different low bits produce different tuples.
        assert!(same <= pairs / 100, "{same} tuple collisions in {pairs}");
    }

    #[test]
    fn uniformity_rejects_zero_samples() {
        assert!(uniformity_report(&present_pair(), 8, 0, 1, CipherMode::Correct).is_err());
    }

    #[test]
    fn uniformity_report_is_deterministic() {
        let keys = present_pair();
        let a = uniformity_report(&keys, 8, 10_000, 5, CipherMode::Correct).unwrap();
        let b = uniformity_report(&keys, 8, 10_000, 5, CipherMode::Correct).unwrap();
        assert_eq!(a.chi_square_skew1, b.chi_square_skew1);
        assert_eq!(a.chi_square_skew2, b.chi_square_skew2);
    }

    #[test]
    fn uniformity_small_scale() {
        // 2^8 bins, 100x oversampled; both skews should sit near 256.
        let keys = present_pair();
        let rep = uniformity_report(&keys, 8, 25_600, 77, CipherMode::Correct).unwrap();
        let bound = rep.four_sigma_bound();
        for chi in [rep.chi_square_skew1, rep.chi_square_skew2] {
            assert!((chi - rep.expected()).abs() < bound, "chi={chi}");
        }
    }

    proptest! {
        // decrypt . encrypt = id for random keys and blocks, both ciphers.
        #[test]
        fn roundtrip_present(block: u64, key in any::<u128>()) {
            let key = BlockCipherKey::new(Algorithm::Present80, key & ((1 << 80) - 1)).unwrap();
            prop_assert_eq!(decrypt(encrypt(block, &key), &key), block);
        }

        #[test]
        fn roundtrip_prince(block: u64, key: u128) {
            let key = BlockCipherKey::new(Algorithm::Prince128, key).unwrap();
            prop_assert_eq!(decrypt(encrypt(block, &key), &key), block);
        }

        #[test]
        fn buggy_block_spreads_low_bits(addr: u64) {
            let block = buggy_block(addr);
            for k in 0..16u32 {
                prop_assert_eq!((block >> (4 * k)) & 0xf, (addr >> k) & 1);
            }
        }
    }

    #[test]
    fn no_ciphertext_collisions_small() {
        // Bijectivity spot check: 100k distinct plaintexts, no repeats.
        let key = BlockCipherKey::new(Algorithm::Present80, 0xabcdef).unwrap();
        let mut rng = seeded_rng(3);
        let mut seen = HashSet::new();
        let mut out = HashSet::new();
        while seen.len() < 100_000 {
            let x: u64 = rng.random();
            if seen.insert(x) {
                assert!(out.insert(encrypt(x, &key)));
            }
        }
    }
}
