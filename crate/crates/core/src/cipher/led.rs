//! LED-64: 32 rounds of AddConstants, SubCells, ShiftRows and
//! MixColumnsSerial, with the 64-bit key added before the first round and
//! after every fourth round.

use super::gf::mat_vec;
use super::{diagonal_cells, CipherId, CipherKey, CipherState, SboxSchedule, SboxTable};
use crate::error::Result;

pub const ROUNDS: usize = 32;
pub const FIELD_POLY: u16 = 0x13;

/// PRESENT Sbox.
pub const SBOX: [u8; 16] = [0xc, 0x5, 0x6, 0xb, 0x9, 0x0, 0xa, 0xd, 0x3, 0xe, 0xf, 0x8, 0x4, 0x7, 0x1, 0x2];

#[rustfmt::skip]
pub const ROUND_CONSTANTS: [u8; 32] = [
    0x01, 0x03, 0x07, 0x0f, 0x1f, 0x3e, 0x3d, 0x3b, 0x37, 0x2f, 0x1e, 0x3c, 0x39, 0x33, 0x27, 0x0e,
    0x1d, 0x3a, 0x35, 0x2b, 0x16, 0x2c, 0x18, 0x30, 0x21, 0x02, 0x05, 0x0b, 0x17, 0x2e, 0x1c, 0x38,
];

/// MixColumnsSerial matrix, the fourth power of the serial companion matrix.
pub const MIX: [[u8; 4]; 4] = [[0x4, 0x1, 0x2, 0x2], [0x8, 0x6, 0x5, 0x6], [0xb, 0xe, 0xa, 0x9], [0x2, 0x2, 0xf, 0xb]];
pub const MIX_INV: [[u8; 4]; 4] = [[0xc, 0xc, 0xd, 0x4], [0x3, 0x8, 0x4, 0x5], [0x7, 0x6, 0x2, 0xe], [0xd, 0x9, 0x9, 0xd]];

const KEY_SIZE: u8 = 64;

/// The constant matrix XORed by AddConstants in 0-based round `round`.
pub fn round_constant_state(round: usize) -> CipherState {
    let rc = ROUND_CONSTANTS[round];
    let mut s = CipherState::default();
    let (hi, lo) = ((KEY_SIZE >> 4) & 0xf, KEY_SIZE & 0xf);
    s.set_column(0, [hi, 1 ^ hi, 2 ^ lo, 3 ^ lo]);
    s.set_column(1, [(rc >> 3) & 7, rc & 7, (rc >> 3) & 7, rc & 7]);
    s
}

/// AC for 0-based round `round`. XOR, so also AC⁻¹.
pub fn add_constants(state: &CipherState, round: usize) -> CipherState {
    state.xor(&round_constant_state(round))
}

pub fn sub_cells(state: &CipherState, sbox: &SboxTable) -> CipherState {
    CipherState { cells: state.cells.map(|c| sbox.get(c)) }
}

/// SC⁻¹; the table must be bijective.
pub fn inv_sub_cells(state: &CipherState, sbox: &SboxTable) -> Result<CipherState> {
    Ok(sub_cells(state, &sbox.inverse()?))
}

pub fn shift_rows(state: &CipherState) -> CipherState {
    super::aes::shift_rows(state)
}

pub fn inv_shift_rows(state: &CipherState) -> CipherState {
    super::aes::inv_shift_rows(state)
}

fn mix_with(state: &CipherState, m: &[[u8; 4]; 4]) -> CipherState {
    let mut out = CipherState::default();
    for col in 0..4 {
        out.set_column(col, mat_vec(m, state.column(col), FIELD_POLY, 4));
    }
    out
}

pub fn mix_columns(state: &CipherState) -> CipherState {
    mix_with(state, &MIX)
}

pub fn inv_mix_columns(state: &CipherState) -> CipherState {
    mix_with(state, &MIX_INV)
}

fn key_state(key: u64) -> CipherState {
    CipherId::Led64.state_from_block(u128::from(key))
}

pub(crate) fn encrypt_block(key: u64, plaintext: u64, sboxes: SboxSchedule<'_>) -> u64 {
    let k = key_state(key);
    let mut s = CipherId::Led64.state_from_block(u128::from(plaintext)).xor(&k);
    for r in 0..ROUNDS {
        s = add_constants(&s, r);
        s = sub_cells(&s, sboxes.table(r + 1));
        s = mix_columns(&shift_rows(&s));
        if r % 4 == 3 {
            s = s.xor(&k);
        }
    }
    CipherId::Led64.block_from_state(&s) as u64
}

pub(crate) fn decrypt_block(key: u64, ciphertext: u64) -> u64 {
    let inv = SboxTable::present().inverse().expect("PRESENT Sbox is bijective");
    let k = key_state(key);
    let mut s = CipherId::Led64.state_from_block(u128::from(ciphertext));
    for r in (0..ROUNDS).rev() {
        if r % 4 == 3 {
            s = s.xor(&k);
        }
        s = inv_shift_rows(&inv_mix_columns(&s));
        s = sub_cells(&s, &inv);
        s = add_constants(&s, r);
    }
    CipherId::Led64.block_from_state(&s.xor(&k)) as u64
}

/// Reassemble the master key from per-group candidates for
/// `K' = MC⁻¹(K)`. Nibble `i` of group `g`'s candidate (most significant
/// first) is K' cell `diagonal_cells(g)[i]`.
pub fn key_recover(kprime_groups: [u16; 4]) -> CipherKey {
    let mut kp = CipherState::default();
    for (g, cand) in kprime_groups.iter().enumerate() {
        for (i, cell) in diagonal_cells(g).into_iter().enumerate() {
            kp.cells[cell] = ((cand >> (12 - 4 * i)) & 0xf) as u8;
        }
    }
    CipherKey::Led64(CipherId::Led64.block_from_state(&mix_columns(&kp)) as u64)
}

/// Inverse of [`key_recover`]: the four group candidates a key produces.
pub fn kprime_groups(key: u64) -> [u16; 4] {
    let kp = inv_mix_columns(&key_state(key));
    core::array::from_fn(|g| {
        diagonal_cells(g)
            .into_iter()
            .fold(0u16, |acc, cell| (acc << 4) | u16::from(kp.cells[cell]))
    })
}
