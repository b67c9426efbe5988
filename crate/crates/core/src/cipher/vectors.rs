//! Cipher self-test vectors.
//!
//! File format: one record per line, `algorithm,key_hex,plaintext_hex,ciphertext_hex`.
//! Lines starting with `#` and blank lines are skipped.

use crate::cipher::{encrypt, Algorithm, BlockCipherKey};
use crate::error::Error;
use crate::Result;

/// One parsed test-vector record.
#[derive(Debug, Clone)]
pub struct TestVector {
    pub algorithm: Algorithm,
    pub key: u128,
    pub plaintext: u64,
    pub ciphertext: u64,
}

/// Outcome of checking one vector.
#[derive(Debug, Clone)]
pub struct VectorResult {
    pub vector: TestVector,
    pub computed: u64,
    pub pass: bool,
}

/// Vectors published with the original cipher specifications, bundled so the
/// self-test works without external files.
pub const BUNDLED: &str = include_str!("../../data/cipher_vectors.csv");

fn parse_hex_u128(field: &str, what: &str) -> Result<u128> {
    u128::from_str_radix(field.trim(), 16)
        .map_err(|e| Error::parse(format!("bad {what} `{field}`: {e}")))
}

/// Parse a vector file's contents.
pub fn parse(contents: &str) -> Result<Vec<TestVector>> {
    let mut out = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(format!(
                "line {}: expected 4 comma-separated fields",
                lineno + 1
            )));
        }
        let algorithm = Algorithm::parse(fields[0])?;
        out.push(TestVector {
            algorithm,
            key: parse_hex_u128(fields[1], "key")?,
            plaintext: parse_hex_u128(fields[2], "plaintext")? as u64,
            ciphertext: parse_hex_u128(fields[3], "ciphertext")? as u64,
        });
    }
    if out.is_empty() {
        return Err(Error::parse("vector file holds no records"));
    }
    Ok(out)
}

/// Run every vector; a record passes iff encryption is bit-exact.
pub fn check(vectors: &[TestVector]) -> Result<Vec<VectorResult>> {
    vectors
        .iter()
        .map(|v| {
            let key = BlockCipherKey::new(v.algorithm, v.key)?;
            let computed = encrypt(v.plaintext, &key);
            Ok(VectorResult {
                vector: v.clone(),
                computed,
                pass: computed == v.ciphertext,
            })
        })
        .collect()
}
