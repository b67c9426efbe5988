//! PRINCE with a 128-bit key: k0 whitening around a 12-round core keyed by k1.
//!
//! The key is `k0 || k1` with k0 in the high 64 bits.

const SBOX: [u8; 16] = [
    0xb, 0xf, 0x3, 0x2, 0xa, 0xc, 0x9, 0x1, 0x6, 0x7, 0x8, 0x0, 0xe, 0x5, 0xd, 0x4,
];
const ISBOX: [u8; 16] = [
    0xb, 0x7, 0x3, 0x2, 0xf, 0xd, 0x8, 0x9, 0xa, 0x6, 0x4, 0x0, 0x5, 0xe, 0xc, 0x1,
];

const RC: [u64; 12] = [
    0x0000000000000000,
    0x13198a2e03707344,
    0xa4093822299f31d0,
    0x082efa98ec4e6c89,
    0x452821e638d01377,
    0xbe5466cf34e90c6c,
    0x7ef84f78fd955cb1,
    0x85840851f1ac43aa,
    0xc882d32f25323c54,
    0x64a51195e0e3610d,
    0xd3b5a399ca0c2399,
    0xc0ac29b7c97c50dd,
];

// Nibble permutation of the shift-rows step, most-significant nibble first.
const SR: [usize; 16] = [0, 13, 10, 7, 4, 1, 14, 11, 8, 5, 2, 15, 12, 9, 6, 3];
const ISR: [usize; 16] = [0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11];

// Columns of the two 16x16 blocks of the involutive M' matrix.
const M0: [u16; 16] = [
    0x0111, 0x2220, 0x4404, 0x8088, 0x1011, 0x0222, 0x4440, 0x8808, 0x1101, 0x2022, 0x0444,
    0x8880, 0x1110, 0x2202, 0x4044, 0x0888,
];
const M1: [u16; 16] = [
    0x1110, 0x2202, 0x4044, 0x0888, 0x0111, 0x2220, 0x4404, 0x8088, 0x1011, 0x0222, 0x4440,
    0x8808, 0x1101, 0x2022, 0x0444, 0x8880,
];

fn mat16(x: u64, m: &[u16; 16]) -> u64 {
    let mut out = 0u64;
    for (i, col) in m.iter().enumerate() {
        if (x >> i) & 1 == 1 {
            out ^= u64::from(*col);
        }
    }
    out
}

fn m_prime(x: u64) -> u64 {
    mat16(x, &M0)
        | (mat16(x >> 16, &M1) << 16)
        | (mat16(x >> 32, &M1) << 32)
        | (mat16(x >> 48, &M0) << 48)
}

fn shift_rows(x: u64, table: &[usize; 16]) -> u64 {
    let mut out = 0u64;
    for (i, &dst) in table.iter().enumerate() {
        out |= ((x >> ((15 - i) * 4)) & 0xf) << ((15 - dst) * 4);
    }
    out
}

fn sub(x: u64, sbox: &[u8; 16]) -> u64 {
    let mut out = 0u64;
    for j in 0..16 {
        out |= u64::from(sbox[((x >> (j * 4)) & 0xf) as usize]) << (j * 4);
    }
    out
}

/// Split a 128-bit key into (k0, k0', k1).
pub fn expand_key(key: u128) -> (u64, u64, u64) {
    let k0 = (key >> 64) as u64;
    let k1 = key as u64;
    let k0_prime = k0.rotate_right(1) ^ (k0 >> 63);
    (k0, k0_prime, k1)
}

fn core(block: u64, k1: u64) -> u64 {
    let mut s = block ^ k1 ^ RC[0];
    for i in 1..=5 {
        s = shift_rows(m_prime(sub(s, &SBOX)), &SR);
        s ^= RC[i] ^ k1;
    }
    s = sub(m_prime(sub(s, &SBOX)), &ISBOX);
    for i in 6..=10 {
        s ^= RC[i] ^ k1;
        s = sub(m_prime(shift_rows(s, &ISR)), &ISBOX);
    }
    s ^ RC[11] ^ k1
}

pub fn encrypt_with(k0: u64, k0_prime: u64, k1: u64, block: u64) -> u64 {
    core(block ^ k0, k1) ^ k0_prime
}

/// Decryption uses the alpha-reflection property: swap k0/k0' and XOR alpha
/// (= RC[11]) into k1.
pub fn decrypt_with(k0: u64, k0_prime: u64, k1: u64, block: u64) -> u64 {
    core(block ^ k0_prime, k1 ^ RC[11]) ^ k0
}

pub fn encrypt(block: u64, key: u128) -> u64 {
    let (k0, k0p, k1) = expand_key(key);
    encrypt_with(k0, k0p, k1, block)
}

pub fn decrypt(block: u64, key: u128) -> u64 {
    let (k0, k0p, k1) = expand_key(key);
    decrypt_with(k0, k0p, k1, block)
}
