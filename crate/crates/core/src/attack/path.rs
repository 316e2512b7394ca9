//! Inverse paths from a ciphertext to one penultimate-round Sbox output.
//!
//! The fast form used by the scan: with `c` the four (preprocessed)
//! ciphertext cells of the group and `k` the hypothesis,
//! `delta = constant ^ T0[c0^k0] ^ T1[c1^k1] ^ T2[c2^k2] ^ T3[c3^k3]`,
//! `Tr[x] = MC⁻¹[row][r] * S⁻¹[x]`. The `*_partial_decrypt` functions
//! compute the same value the slow way through whole-state operations.

use super::{AttackTarget, HypothesisSpace};
use crate::cipher::gf::mul;
use crate::cipher::{aes, diagonal_cells, led, Block, CipherId, CipherState, SboxTable};
use crate::error::{config, Result};

#[derive(Clone, Debug)]
pub(crate) struct ColumnPath {
    pub(crate) tables: [[u8; 256]; 4],
    pub(crate) constant: u8,
}

impl ColumnPath {
    fn build(inv: &SboxTable, row: [u8; 4], poly: u16, constant: u8) -> Self {
        let width = inv.width();
        let mut tables = [[0u8; 256]; 4];
        for (r, t) in tables.iter_mut().enumerate() {
            for x in 0..inv.len() {
                t[x] = mul(row[r], inv.get(x as u8), poly, width);
            }
        }
        ColumnPath { tables, constant }
    }

    /// `inv` is the inverse of the clean table.
    pub(crate) fn for_target(target: &AttackTarget, inv: &SboxTable) -> Self {
        let i = target.mix_row();
        match target.cipher {
            CipherId::Aes128 => Self::build(inv, aes::MIX_INV[i], aes::FIELD_POLY, 0),
            CipherId::Led64 => {
                let ac = led::round_constant_state(led::ROUNDS - 1);
                let g = target.group;
                let constant =
                    (0..4).fold(0, |acc, r| acc ^ mul(led::MIX_INV[i][r], ac.get(r, g), led::FIELD_POLY, 4));
                Self::build(inv, led::MIX_INV[i], led::FIELD_POLY, constant)
            }
        }
    }

    pub(crate) fn toy(cell: usize, inv: &SboxTable) -> Self {
        Self::build(inv, led::MIX_INV[cell], led::FIELD_POLY, 0)
    }

    #[inline]
    pub(crate) fn delta(&self, c: [u8; 4], k: [u8; 4]) -> u8 {
        (0..4).fold(self.constant, |acc, r| acc ^ self.tables[r][usize::from(c[r] ^ k[r])])
    }
}

/// The group's four ciphertext cells per block, after the linear
/// preprocessing the cipher needs (LED: `MC⁻¹`).
pub(crate) fn extract_columns(target: &AttackTarget, cts: &[Block]) -> Vec<[u8; 4]> {
    let cells = diagonal_cells(target.group);
    cts.iter()
        .map(|&ct| {
            let mut s = target.cipher.state_from_block(ct);
            if target.cipher == CipherId::Led64 {
                s = led::inv_mix_columns(&s);
            }
            cells.map(|c| s.cells[c])
        })
        .collect()
}

pub(crate) fn toy_column(ct: u16) -> [u8; 4] {
    core::array::from_fn(|i| ((ct >> (12 - 4 * i)) & 0xf) as u8)
}

fn hypothesis_state(target: &AttackTarget, h: u32) -> CipherState {
    let space = HypothesisSpace::full(target.cipher.cell_bits());
    let mut s = CipherState::default();
    for (cell, v) in target.key_cells().into_iter().zip(space.split(h)) {
        s.cells[cell] = v;
    }
    s
}

fn check(target: &AttackTarget, cipher: CipherId) -> Result<()> {
    target.validate()?;
    if target.cipher != cipher {
        return config(format!("{} target on the {cipher} path", target.cipher));
    }
    Ok(())
}

/// Post-SubBytes value of round 9 at `target.cell` under the hypothesis,
/// with the round-9 key addition left out (a constant XOR on the result).
/// Key cells outside the hypothesis are taken as zero.
pub fn aes_partial_decrypt(ct: Block, h: u32, target: &AttackTarget, clean: &SboxTable) -> Result<u8> {
    check(target, CipherId::Aes128)?;
    aes_partial_decrypt_with_key(ct, &hypothesis_state(target, h), target, clean)
}

/// As [`aes_partial_decrypt`] with an explicit full last-round key state.
pub fn aes_partial_decrypt_with_key(
    ct: Block,
    k10: &CipherState,
    target: &AttackTarget,
    clean: &SboxTable,
) -> Result<u8> {
    let s = CipherId::Aes128.state_from_block(ct).xor(k10);
    let s = aes::inv_sub_bytes(&aes::inv_shift_rows(&s), clean)?;
    let s = aes::inv_shift_rows(&aes::inv_mix_columns(&s));
    Ok(s.cells[target.cell])
}

/// Post-SubCells value of round 31 at `target.cell`. `h` holds cells of
/// `K' = MC⁻¹(K)`, which can be added after `MC⁻¹` is applied to the
/// ciphertext because MixColumns is linear.
pub fn led_partial_decrypt(ct: Block, h: u32, target: &AttackTarget, clean: &SboxTable) -> Result<u8> {
    check(target, CipherId::Led64)?;
    let s = led::inv_mix_columns(&CipherId::Led64.state_from_block(ct)).xor(&hypothesis_state(target, h));
    let s = led::inv_sub_cells(&led::inv_shift_rows(&s), clean)?;
    let s = led::add_constants(&s, led::ROUNDS - 1);
    let s = led::inv_shift_rows(&led::inv_mix_columns(&s));
    Ok(s.cells[target.cell])
}

/// Toy-cipher counterpart of the fast path, up to the constant
/// contributed by the middle key.
pub fn toy_penultimate_delta(ct: u16, key: u16, cell: usize, clean: &SboxTable) -> Result<u8> {
    let path = ColumnPath::toy(cell, &clean.inverse()?);
    Ok(path.delta(toy_column(ct), toy_column(key)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::toy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn targets(cipher: CipherId) -> Vec<AttackTarget> {
        (0..4).flat_map(|g| (0..4).map(move |r| AttackTarget::with_row(cipher, g, r).unwrap())).collect()
    }

    #[test]
    fn fast_path_matches_state_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for cipher in [CipherId::Aes128, CipherId::Led64] {
            let clean = cipher.clean_sbox();
            let inv = clean.inverse().unwrap();
            let space = HypothesisSpace::full(cipher.cell_bits());
            for t in targets(cipher) {
                let path = ColumnPath::for_target(&t, &inv);
                for _ in 0..200 {
                    let ct = rng.gen::<u128>() & cipher.block_mask();
                    let h = rng.gen::<u32>() >> (32 - 4 * cipher.cell_bits());
                    let fast = path.delta(extract_columns(&t, &[ct])[0], space.split(h));
                    let slow = match cipher {
                        CipherId::Aes128 => aes_partial_decrypt(ct, h, &t, &clean).unwrap(),
                        CipherId::Led64 => led_partial_decrypt(ct, h, &t, &clean).unwrap(),
                    };
                    assert_eq!(fast, slow);
                }
            }
        }
    }

    #[test]
    fn aes_path_lands_on_round_nine_sbox_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let clean = SboxTable::aes();
        let key: [u8; 16] = rng.gen();
        let rk = aes::round_keys(&key).map(|k| CipherId::Aes128.state_from_block(u128::from_be_bytes(k)));
        let desc = crate::cipher::CipherSpec::new(CipherId::Aes128);
        for t in targets(CipherId::Aes128) {
            let mut offset = None;
            for _ in 0..50 {
                let pt: u128 = rng.gen();
                let mut s = CipherId::Aes128.state_from_block(pt).xor(&rk[0]);
                for r in 1..9 {
                    s = aes::mix_columns(&aes::shift_rows(&aes::sub_bytes(&s, &clean))).xor(&rk[r]);
                }
                let sb9 = aes::sub_bytes(&s, &clean).cells[t.cell];
                let ct = crate::cipher::encrypt(&desc, &crate::cipher::CipherKey::Aes128(key), pt, &clean).unwrap();
                let got = aes_partial_decrypt_with_key(ct, &rk[10], &t, &clean).unwrap();
                // the omitted round-9 key addition shifts every value by one constant
                let d = got ^ sb9;
                assert_eq!(*offset.get_or_insert(d), d);
            }
        }
    }

    #[test]
    fn aes_path_ignores_key_bytes_outside_the_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clean = SboxTable::aes();
        for t in targets(CipherId::Aes128) {
            let ct: u128 = rng.gen();
            let mut k = CipherState::new(rng.gen());
            let a = aes_partial_decrypt_with_key(ct, &k, &t, &clean).unwrap();
            for cell in (0..16).filter(|c| !t.key_cells().contains(c)) {
                k.cells[cell] ^= rng.gen_range(1..=255);
            }
            assert_eq!(aes_partial_decrypt_with_key(ct, &k, &t, &clean).unwrap(), a);
        }
    }

    #[test]
    fn led_path_lands_on_round_31_sbox_output() {
        // peel the last round with the real key and compare
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let clean = SboxTable::present();
        let desc = crate::cipher::CipherSpec::new(CipherId::Led64);
        let key: u64 = rng.gen();
        let kstate = CipherId::Led64.state_from_block(u128::from(key));
        let groups = led::kprime_groups(key);
        for t in targets(CipherId::Led64) {
            for _ in 0..50 {
                let pt = u128::from(rng.gen::<u64>());
                let ct = crate::cipher::encrypt(&desc, &crate::cipher::CipherKey::Led64(key), pt, &clean).unwrap();
                let s = CipherId::Led64.state_from_block(ct).xor(&kstate);
                let s = led::inv_shift_rows(&led::inv_mix_columns(&s));
                let s = led::add_constants(&led::inv_sub_cells(&s, &clean).unwrap(), led::ROUNDS - 1);
                let s = led::inv_shift_rows(&led::inv_mix_columns(&s));
                let got = led_partial_decrypt(ct, u32::from(groups[t.group]), &t, &clean).unwrap();
                assert_eq!(got, s.cells[t.cell]);
            }
        }
    }

    #[test]
    fn toy_path_differs_from_exact_value_by_a_key_constant() {
        let clean = SboxTable::present();
        let inv = clean.inverse().unwrap();
        let key = 0x9c41;
        for cell in 0..4 {
            let d0 = toy_penultimate_delta(0, key, cell, &clean).unwrap() ^ toy::penultimate_sbox_output(0, key, cell, &inv);
            for ct in (0..=u16::MAX).step_by(257) {
                let d = toy_penultimate_delta(ct, key, cell, &clean).unwrap()
                    ^ toy::penultimate_sbox_output(ct, key, cell, &inv);
                assert_eq!(d, d0);
            }
        }
    }

    #[test]
    fn wrong_cipher_target_rejected() {
        let t = AttackTarget::new(CipherId::Led64, 0).unwrap();
        assert!(aes_partial_decrypt(0, 0, &t, &SboxTable::aes()).is_err());
    }
}
