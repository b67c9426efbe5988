//! PRESENT with an 80-bit key, 31 rounds plus final key addition.

const SBOX: [u8; 16] = [
    0xc, 0x5, 0x6, 0xb, 0x9, 0x0, 0xa, 0xd, 0x3, 0xe, 0xf, 0x8, 0x4, 0x7, 0x1, 0x2,
];
const ISBOX: [u8; 16] = [
    0x5, 0xe, 0xf, 0x8, 0xc, 0x1, 0x2, 0xd, 0xb, 0x4, 0x6, 0x3, 0x0, 0x7, 0x9, 0xa,
];

const KEY_MASK: u128 = (1u128 << 80) - 1;
pub const ROUNDS: usize = 31;

/// Expand an 80-bit key (low 80 bits of `key`) into the 32 round keys.
pub fn round_keys(key: u128) -> [u64; ROUNDS + 1] {
    let mut reg = key & KEY_MASK;
    let mut keys = [0u64; ROUNDS + 1];
    for (i, rk) in keys.iter_mut().enumerate() {
        *rk = (reg >> 16) as u64;
        if i == ROUNDS {
            break;
        }
        // Rotate left by 61, S-box on the top nibble, XOR round counter.
        reg = ((reg << 61) | (reg >> 19)) & KEY_MASK;
        let nib = ((reg >> 76) & 0xf) as usize;
        reg = (reg & !(0xfu128 << 76)) | (u128::from(SBOX[nib]) << 76);
        reg ^= ((i as u128) + 1) << 15;
    }
    keys
}

#[cfg(test)] // retained as the oracle for the fused SP table
fn sbox_layer(state: u64) -> u64 {
    let mut out = 0u64;
    for j in 0..16 {
        out |= u64::from(SBOX[((state >> (j * 4)) & 0xf) as usize]) << (j * 4);
    }
    out
}

fn inv_sbox_layer(state: u64) -> u64 {
    let mut out = 0u64;
    for j in 0..16 {
        out |= u64::from(ISBOX[((state >> (j * 4)) & 0xf) as usize]) << (j * 4);
    }
    out
}

// Bit i of the state moves to 16*i mod 63 (bit 63 is fixed).
const fn p_layer(state: u64) -> u64 {
    let mut out = state & (1u64 << 63);
    let mut i = 0;
    while i < 63 {
        out |= ((state >> i) & 1) << ((i * 16) % 63);
        i += 1;
    }
    out
}

// Combined substitution-permutation table: SP[j][v] is the permuted image of
// S-box output v placed in nibble j. Nibble images are bit-disjoint, so a
// round body is the OR of 16 lookups.
const SP: [[u64; 16]; 16] = {
    let mut t = [[0u64; 16]; 16];
    let mut j = 0;
    while j < 16 {
        let mut v = 0;
        while v < 16 {
            t[j][v] = p_layer((SBOX[v] as u64) << (4 * j));
            v += 1;
        }
        j += 1;
    }
    t
};

fn inv_p_layer(state: u64) -> u64 {
    let mut out = state & (1u64 << 63);
    for i in 0..63 {
        out |= ((state >> ((i * 16) % 63)) & 1) << i;
    }
    out
}

pub fn encrypt_with(keys: &[u64; ROUNDS + 1], block: u64) -> u64 {
    let mut state = block;
    for rk in keys.iter().take(ROUNDS) {
        let x = state ^ rk;
        let mut out = 0u64;
        for (j, table) in SP.iter().enumerate() {
            out |= table[((x >> (4 * j)) & 0xf) as usize];
        }
        state = out;
    }
    state ^ keys[ROUNDS]
}

pub fn decrypt_with(keys: &[u64; ROUNDS + 1], block: u64) -> u64 {
    let mut state = block ^ keys[ROUNDS];
    for rk in keys.iter().take(ROUNDS).rev() {
        state = inv_sbox_layer(inv_p_layer(state)) ^ rk;
    }
    state
}

pub fn encrypt(block: u64, key: u128) -> u64 {
    encrypt_with(&round_keys(key), block)
}

pub fn decrypt(block: u64, key: u128) -> u64 {
    decrypt_with(&round_keys(key), block)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference vectors from the original PRESENT publication.
    const VECTORS: [(u64, u128, u64); 4] = [
        (0, 0, 0x5579_c138_7b22_8445),
        (0, KEY_MASK, 0xe72c_46c0_f594_5049),
        (u64::MAX, 0, 0xa112_ffc7_2f68_417b),
        (u64::MAX, KEY_MASK, 0x3333_dcd3_2132_10d2),
    ];

    #[test]
    fn published_test_vectors() {
        for (pt, key, ct) in VECTORS {
            assert_eq!(encrypt(pt, key), ct, "pt={pt:016x} key={key:020x}");
            assert_eq!(decrypt(ct, key), pt);
        }
    }

    #[test]
    fn sp_table_matches_layered_round() {
        for x in [0u64, 1, u64::MAX, 0xdead_beef_0123_4567, 0x0f0f_1234_abcd_9876] {
            let mut out = 0u64;
            for (j, table) in SP.iter().enumerate() {
                out |= table[((x >> (4 * j)) & 0xf) as usize];
            }
            assert_eq!(out, p_layer(sbox_layer(x)));
        }
    }

    #[test]
    fn p_layer_inverts() {
        for x in [0u64, 1, u64::MAX, 0xdead_beef_0123_4567] {
            assert_eq!(inv_p_layer(p_layer(x)), x);
        }
    }
}
