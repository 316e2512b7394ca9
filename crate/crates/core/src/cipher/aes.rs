//! AES-128 (FIPS-197) with a caller-supplied Sbox for the data path.

use super::gf::{mat_vec, mul};
use super::{Block, CipherId, CipherState, SboxSchedule, SboxTable};
use crate::error::Result;

pub const ROUNDS: usize = 10;
pub const FIELD_POLY: u16 = 0x11b;

pub const MIX: [[u8; 4]; 4] = [[2, 3, 1, 1], [1, 2, 3, 1], [1, 1, 2, 3], [3, 1, 1, 2]];
pub const MIX_INV: [[u8; 4]; 4] = [
    [0x0e, 0x0b, 0x0d, 0x09],
    [0x09, 0x0e, 0x0b, 0x0d],
    [0x0d, 0x09, 0x0e, 0x0b],
    [0x0b, 0x0d, 0x09, 0x0e],
];

pub const RCON: [u8; 10] = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];

#[rustfmt::skip]
pub const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

#[inline]
pub fn gmul(a: u8, b: u8) -> u8 {
    mul(a, b, FIELD_POLY, 8)
}

pub fn sub_bytes(state: &CipherState, sbox: &SboxTable) -> CipherState {
    CipherState { cells: state.cells.map(|c| sbox.get(c)) }
}

/// SB⁻¹; the table must be bijective.
pub fn inv_sub_bytes(state: &CipherState, sbox: &SboxTable) -> Result<CipherState> {
    let inv = sbox.inverse()?;
    Ok(sub_bytes(state, &inv))
}

pub fn shift_rows(state: &CipherState) -> CipherState {
    let mut out = CipherState::default();
    for row in 0..4 {
        for col in 0..4 {
            out.set(row, col, state.get(row, (col + row) % 4));
        }
    }
    out
}

pub fn inv_shift_rows(state: &CipherState) -> CipherState {
    let mut out = CipherState::default();
    for row in 0..4 {
        for col in 0..4 {
            out.set(row, (col + row) % 4, state.get(row, col));
        }
    }
    out
}

fn mix_with(state: &CipherState, matrix: &[[u8; 4]; 4]) -> CipherState {
    let mut out = CipherState::default();
    for col in 0..4 {
        out.set_column(col, mat_vec(matrix, state.column(col), FIELD_POLY, 8));
    }
    out
}

pub fn mix_columns(state: &CipherState) -> CipherState {
    mix_with(state, &MIX)
}

pub fn inv_mix_columns(state: &CipherState) -> CipherState {
    mix_with(state, &MIX_INV)
}

/// AddRoundKey is an involution, so this is also AK⁻¹.
pub fn add_round_key(state: &CipherState, round_key: &CipherState) -> CipherState {
    state.xor(round_key)
}

fn sub_word(w: [u8; 4]) -> [u8; 4] {
    w.map(|b| SBOX[usize::from(b)])
}

/// Round keys 0..=10 as byte strings in block order.
pub fn round_keys(master: &[u8; 16]) -> [[u8; 16]; 11] {
    let mut w = [[0u8; 4]; 44];
    for (i, word) in w.iter_mut().take(4).enumerate() {
        word.copy_from_slice(&master[4 * i..4 * i + 4]);
    }
    for i in 4..44 {
        let mut t = w[i - 1];
        if i % 4 == 0 {
            t.rotate_left(1);
            t = sub_word(t);
            t[0] ^= RCON[i / 4 - 1];
        }
        for b in 0..4 {
            w[i][b] = w[i - 4][b] ^ t[b];
        }
    }
    let mut out = [[0u8; 16]; 11];
    for (r, rk) in out.iter_mut().enumerate() {
        for j in 0..4 {
            rk[4 * j..4 * j + 4].copy_from_slice(&w[4 * r + j]);
        }
    }
    out
}

/// Recover the master key from the last round key by running the
/// expansion recurrence backwards.
pub fn invert_key_schedule(k10: &[u8; 16]) -> [u8; 16] {
    let mut w = [[0u8; 4]; 44];
    for j in 0..4 {
        w[40 + j].copy_from_slice(&k10[4 * j..4 * j + 4]);
    }
    for i in (4..44).rev() {
        let mut t = w[i - 1];
        if i % 4 == 0 {
            t.rotate_left(1);
            t = sub_word(t);
            t[0] ^= RCON[i / 4 - 1];
        }
        for b in 0..4 {
            w[i - 4][b] = w[i][b] ^ t[b];
        }
    }
    let mut master = [0u8; 16];
    for j in 0..4 {
        master[4 * j..4 * j + 4].copy_from_slice(&w[j]);
    }
    master
}

pub(crate) fn key_schedule(master: &[u8; 16]) -> [CipherState; 11] {
    round_keys(master).map(|rk| CipherId::Aes128.state_from_block(u128::from_be_bytes(rk)))
}

pub(crate) fn encrypt_block(rk: &[CipherState; 11], plaintext: Block, sboxes: SboxSchedule<'_>) -> Block {
    let mut s = add_round_key(&CipherId::Aes128.state_from_block(plaintext), &rk[0]);
    for round in 1..=ROUNDS {
        s = shift_rows(&sub_bytes(&s, sboxes.table(round)));
        if round != ROUNDS {
            s = mix_columns(&s);
        }
        s = add_round_key(&s, &rk[round]);
    }
    CipherId::Aes128.block_from_state(&s)
}

pub(crate) fn decrypt_block(rk: &[CipherState; 11], ciphertext: Block) -> Block {
    let inv = SboxTable::aes().inverse().expect("clean AES Sbox is bijective");
    let mut s = CipherId::Aes128.state_from_block(ciphertext);
    for round in (1..=ROUNDS).rev() {
        s = add_round_key(&s, &rk[round]);
        if round != ROUNDS {
            s = inv_mix_columns(&s);
        }
        s = sub_bytes(&inv_shift_rows(&s), &inv);
    }
    CipherId::Aes128.block_from_state(&add_round_key(&s, &rk[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{decrypt, encrypt, CipherKey, CipherSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hex16(s: &str) -> [u8; 16] {
        u128::from_str_radix(s, 16).unwrap().to_be_bytes()
    }

    /// Independent Sbox construction: multiplicative inverse then the
    /// affine map, straight from the algebraic definition.
    fn sbox_oracle(x: u8) -> u8 {
        let inv = if x == 0 { 0 } else { (1..=255u8).find(|&y| gmul(x, y) == 1).unwrap() };
        let mut out = 0x63u8;
        for i in 0..8 {
            let bit = (inv >> i) ^ (inv >> ((i + 4) % 8)) ^ (inv >> ((i + 5) % 8))
                ^ (inv >> ((i + 6) % 8)) ^ (inv >> ((i + 7) % 8));
            out ^= (bit & 1) << i;
        }
        out
    }

    #[test]
    fn sbox_matches_algebraic_definition() {
        for x in 0..=255u8 {
            assert_eq!(SBOX[usize::from(x)], sbox_oracle(x), "x = {x:#04x}");
        }
    }

    #[test]
    fn fips_197_vectors() {
        let desc = CipherSpec::new(CipherId::Aes128);
        let clean = SboxTable::aes();
        let cases = [
            ("000102030405060708090a0b0c0d0e0f", "00112233445566778899aabbccddeeff", "69c4e0d86a7b0430d8cdb78070b4c55a"),
            ("2b7e151628aed2a6abf7158809cf4f3c", "3243f6a8885a308d313198a2e0370734", "3925841d02dc09fbdc118597196a0b32"),
        ];
        for (k, p, c) in cases {
            let key = CipherKey::Aes128(hex16(k));
            let pt = u128::from_str_radix(p, 16).unwrap();
            let ct = u128::from_str_radix(c, 16).unwrap();
            assert_eq!(encrypt(&desc, &key, pt, &clean).unwrap(), ct);
            assert_eq!(decrypt(&desc, &key, ct).unwrap(), pt);
        }
    }

    #[test]
    fn key_schedule_reference_values() {
        let rk = round_keys(&hex16("2b7e151628aed2a6abf7158809cf4f3c"));
        assert_eq!(rk[1], hex16("a0fafe1788542cb123a339392a6c7605"));
        assert_eq!(rk[10], hex16("d014f9a8c9ee2589e13f0cc8b6630ca6"));
        let zero = round_keys(&[0; 16]);
        assert_eq!(zero[1], hex16("62636363626363636263636362636363"));
        assert_eq!(zero[10], hex16("b4ef5bcb3e92e21123e951cf6f8f188e"));
        assert_eq!(invert_key_schedule(&rk[10]), hex16("2b7e151628aed2a6abf7158809cf4f3c"));
    }

    #[test]
    fn key_schedule_inversion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let k: [u8; 16] = rng.gen();
            assert_eq!(invert_key_schedule(&round_keys(&k)[10]), k);
        }
    }

    #[test]
    fn primitive_inverses() {
        let clean = SboxTable::aes();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let s = CipherState::new(rng.gen());
            let k = CipherState::new(rng.gen());
            assert_eq!(inv_mix_columns(&mix_columns(&s)), s);
            assert_eq!(mix_columns(&inv_mix_columns(&s)), s);
            assert_eq!(inv_shift_rows(&shift_rows(&s)), s);
            assert_eq!(inv_sub_bytes(&sub_bytes(&s, &clean), &clean).unwrap(), s);
            assert_eq!(add_round_key(&add_round_key(&s, &k), &k), s);
        }
        let inv = clean.inverse().unwrap();
        assert_eq!(inv.get(0x63), 0x00);
        for x in 0..=255u8 {
            assert_eq!(inv.get(clean.get(x)), x);
        }
    }

    #[test]
    fn inverse_sub_bytes_rejects_faulted_table() {
        let mut t = SboxTable::aes();
        t.set(0, t.get(1));
        assert!(inv_sub_bytes(&CipherState::default(), &t).is_err());
    }

    #[test]
    fn shift_rows_moves_row_r_left_by_r() {
        let s = CipherState::new(core::array::from_fn(|i| i as u8));
        let t = shift_rows(&s);
        assert_eq!(t.get(1, 0), s.get(1, 1));
        assert_eq!(t.get(3, 0), s.get(3, 3));
        assert_eq!(t.get(0, 2), s.get(0, 2));
    }
}
