//! A 16-bit toy SPN small enough for brute force over its whole key space.
//!
//! The state is a single column of four nibbles (most significant first).
//! Each of the three rounds XORs the 16-bit key, applies the Sbox to every
//! nibble and, except in the last round, multiplies by LED's MixColumns
//! matrix. A final key XOR follows the last round. The same key is used
//! everywhere, so an attack on the last round recovers the whole key.

use super::gf::mat_vec;
use super::led::{FIELD_POLY, MIX, MIX_INV};
use super::SboxTable;

pub const ROUNDS: usize = 3;

fn split(x: u16) -> [u8; 4] {
    core::array::from_fn(|i| ((x >> (12 - 4 * i)) & 0xf) as u8)
}

fn join(v: [u8; 4]) -> u16 {
    v.iter().fold(0, |acc, &n| (acc << 4) | u16::from(n))
}

fn sub(x: u16, sbox: &SboxTable) -> u16 {
    join(split(x).map(|n| sbox.get(n)))
}

fn mix(x: u16, m: &[[u8; 4]; 4]) -> u16 {
    join(mat_vec(m, split(x), FIELD_POLY, 4))
}

pub fn encrypt(key: u16, plaintext: u16, sbox: &SboxTable) -> u16 {
    let mut x = plaintext;
    for r in 0..ROUNDS {
        x = sub(x ^ key, sbox);
        if r + 1 < ROUNDS {
            x = mix(x, &MIX);
        }
    }
    x ^ key
}

/// `inv_sbox` is the inverse of the clean table.
pub fn decrypt(key: u16, ciphertext: u16, inv_sbox: &SboxTable) -> u16 {
    let mut x = ciphertext ^ key;
    for r in (0..ROUNDS).rev() {
        if r + 1 < ROUNDS {
            x = mix(x, &MIX_INV);
        }
        x = sub(x, inv_sbox) ^ key;
    }
    x
}

/// Post-Sbox value of nibble `cell` in the penultimate round, recomputed
/// from a ciphertext under `key` by peeling the last round exactly
/// (including the middle key addition).
pub fn penultimate_sbox_output(ciphertext: u16, key: u16, cell: usize, inv_sbox: &SboxTable) -> u8 {
    let before_last = sub(ciphertext ^ key, inv_sbox) ^ key;
    split(mix(before_last, &MIX_INV))[cell]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decrypt_inverts_encrypt() {
        let s = SboxTable::present();
        let inv = s.inverse().unwrap();
        for key in [0u16, 0x1234, 0xffff, 0xbeef] {
            for pt in (0..=u16::MAX).step_by(97) {
                assert_eq!(decrypt(key, encrypt(key, pt, &s), &inv), pt);
            }
        }
    }

    #[test]
    fn penultimate_value_matches_forward_computation() {
        let s = SboxTable::present();
        let inv = s.inverse().unwrap();
        let key = 0x5a3c;
        for pt in (0..=u16::MAX).step_by(131) {
            let mut x = sub(pt ^ key, &s);
            x = mix(x, &MIX);
            let y = sub(x ^ key, &s);
            let ct = encrypt(key, pt, &s);
            for cell in 0..4 {
                assert_eq!(penultimate_sbox_output(ct, key, cell, &inv), split(y)[cell]);
            }
        }
    }
}
