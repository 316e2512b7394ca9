//! Key recovery from faulty ciphertexts.
//!
//! For each column group `g` the attack hypothesizes the four key cells that
//! inverse ShiftRows gathers into column `g`, inverts the last round with
//! the clean Sbox, and scores how far the resulting intermediate cell is
//! from uniform. A persistently faulted Sbox skews that cell only under the
//! right key.
//!
//! Hypotheses pack four cells, cell `diagonal_cells(g)[0]` in the most
//! significant position: 32 bits for AES, 16 bits for LED.

mod batch;
mod engine;
mod full;
mod path;
mod pfa;
mod sei;

pub use batch::{BatchMeta, CiphertextBatch, LabeledBatch};
pub use engine::ProgressiveScan;
pub use full::{full_search, FullSearchOptions, FullSearchProgress};
pub use path::{aes_partial_decrypt, led_partial_decrypt, toy_penultimate_delta};
pub use pfa::{pfa_baseline, pfa_needed_n, PfaResult};
pub use sei::{null_sei_mean, sei, sei_exact, sei_from_sumsq, Histogram, RankEntry, SeiRanking};

use serde::{Deserialize, Serialize};

use crate::cipher::{aes, diagonal_cells, led, CipherId, CipherKey, SboxTable};
use crate::error::{config, Error, Result};
use crate::scalar::Scalar;

/// Hypothesis positions pinned in fixed-bytes mode unless configured
/// otherwise.
pub const DEFAULT_PINNED: [usize; 2] = [2, 3];

/// Spaces above this size are searched head-only.
pub const MAX_FULL_RANKING: u64 = 1 << 24;

/// Which intermediate cell is scored and which key cells are hypothesized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackTarget {
    pub cipher: CipherId,
    /// 1-based round whose Sbox output is observed.
    pub round: usize,
    /// Post-Sbox cell, row-major.
    pub cell: usize,
    pub group: usize,
}

impl AttackTarget {
    /// Row-0 target of group `g`.
    pub fn new(cipher: CipherId, group: usize) -> Result<Self> {
        Self::with_row(cipher, group, 0)
    }

    /// Target in MixColumns row `row` of group `group`'s column.
    pub fn with_row(cipher: CipherId, group: usize, row: usize) -> Result<Self> {
        if group >= 4 || row >= 4 {
            return config(format!("group {group} / row {row} out of range"));
        }
        let t = AttackTarget { cipher, round: cipher.attack_round(), cell: 4 * row + (group + row) % 4, group };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.group >= 4 || self.cell >= 16 {
            return config(format!("target cell {} / group {} out of range", self.cell, self.group));
        }
        if self.round != self.cipher.attack_round() {
            return config(format!(
                "{} is attacked in round {}, not {}",
                self.cipher,
                self.cipher.attack_round(),
                self.round
            ));
        }
        let (row, col) = (self.cell / 4, self.cell % 4);
        if (col + 4 - row) % 4 != self.group {
            return config(format!("cell {} is not reached from group {}", self.cell, self.group));
        }
        Ok(())
    }

    pub fn mix_row(&self) -> usize {
        self.cell / 4
    }

    /// Key cells hypothesized, most significant first.
    pub fn key_cells(&self) -> [usize; 4] {
        diagonal_cells(self.group)
    }
}

/// The set of group hypotheses searched: every cell not pinned is free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypothesisSpace {
    pub width: u32,
    pub pinned: [Option<u8>; 4],
}

impl HypothesisSpace {
    pub fn full(width: u32) -> Self {
        HypothesisSpace { width, pinned: [None; 4] }
    }

    pub fn with_pinned(width: u32, fixed: &[(usize, u8)]) -> Result<Self> {
        let mut s = Self::full(width);
        for &(pos, v) in fixed {
            if pos >= 4 || u32::from(v) >> width != 0 {
                return config(format!("cannot pin position {pos} to {v:#x}"));
            }
            if s.pinned[pos].replace(v).is_some() {
                return config(format!("position {pos} pinned twice"));
            }
        }
        if s.free_positions().is_empty() {
            return config("at least one hypothesis position must stay free");
        }
        Ok(s)
    }

    pub fn free_positions(&self) -> Vec<usize> {
        (0..4).filter(|&p| self.pinned[p].is_none()).collect()
    }

    pub fn len(&self) -> u64 {
        1u64 << (self.width as usize * self.free_positions().len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn split(&self, h: u32) -> [u8; 4] {
        let mask = (1u32 << self.width) - 1;
        core::array::from_fn(|r| ((h >> (self.width * (3 - r as u32))) & mask) as u8)
    }

    pub fn join(&self, k: [u8; 4]) -> u32 {
        k.iter().fold(0, |acc, &c| (acc << self.width) | u32::from(c))
    }

    /// The `index`-th hypothesis in ascending order.
    pub fn hypothesis(&self, index: u64) -> u32 {
        let free = self.free_positions();
        let mut k = self.pinned.map(|p| p.unwrap_or(0));
        let mask = (1u64 << self.width) - 1;
        for (j, &pos) in free.iter().enumerate() {
            let shift = self.width as usize * (free.len() - 1 - j);
            k[pos] = ((index >> shift) & mask) as u8;
        }
        self.join(k)
    }

    pub fn index_of(&self, h: u32) -> Option<u64> {
        let k = self.split(h);
        if h.checked_shr(4 * self.width).unwrap_or(0) != 0 || (0..4).any(|r| self.pinned[r].is_some_and(|p| p != k[r])) {
            return None;
        }
        Some(self.free_positions().iter().fold(0u64, |acc, &pos| (acc << self.width) | u64::from(k[pos])))
    }
}

fn check_sbox(target: &AttackTarget, clean: &SboxTable) -> Result<SboxTable> {
    if clean.width() != target.cipher.cell_bits() {
        return config(format!("{} needs a {}-bit Sbox", target.cipher, target.cipher.cell_bits()));
    }
    clean.inverse()
}

/// Score every hypothesis of `target`'s group on `batch`.
///
/// `fixed` pins `(position, value)` pairs (AES only). Spaces larger than
/// [`MAX_FULL_RANKING`] keep only the head of the ranking. The result does
/// not depend on `workers`.
pub fn run_attack<T: Scalar>(
    batch: &CiphertextBatch,
    target: &AttackTarget,
    clean: &SboxTable,
    fixed: Option<&[(usize, u8)]>,
    workers: usize,
) -> Result<SeiRanking<T>> {
    let space = attack_space(target, fixed)?;
    if batch.cipher() != target.cipher {
        return config(format!("{} batch for a {} target", batch.cipher(), target.cipher));
    }
    if space.len() > MAX_FULL_RANKING {
        let opts = FullSearchOptions { workers, ..FullSearchOptions::default() };
        return full_search(batch, target, clean, &space, &opts);
    }
    let inv = check_sbox(target, clean)?;
    let path = path::ColumnPath::for_target(target, &inv);
    let cols = path::extract_columns(target, batch.ciphertexts());
    let sumsq = engine::scan(&path, &cols, &space, workers);
    Ok(SeiRanking::from_sumsq(space, batch.len(), &sumsq))
}

pub(crate) fn attack_space(target: &AttackTarget, fixed: Option<&[(usize, u8)]>) -> Result<HypothesisSpace> {
    target.validate()?;
    let width = target.cipher.cell_bits();
    match (target.cipher, fixed) {
        (CipherId::Led64, Some(_)) => {
            Err(Error::Unsupported("pinning hypothesis cells is only offered for AES".into()))
        }
        (_, Some(f)) => HypothesisSpace::with_pinned(width, f),
        (_, None) => Ok(HypothesisSpace::full(width)),
    }
}

/// Assemble the master key from one hypothesis per group (group order).
///
/// AES hypotheses are last-round key cells and the key schedule is run
/// backwards; LED hypotheses live in the `MC⁻¹(K)` domain.
pub fn recover_full_key(cipher: CipherId, groups: [u32; 4]) -> CipherKey {
    match cipher {
        CipherId::Led64 => led::key_recover(groups.map(|h| h as u16)),
        CipherId::Aes128 => {
            let mut state = crate::cipher::CipherState::default();
            let space = HypothesisSpace::full(8);
            for (g, &h) in groups.iter().enumerate() {
                for (cell, v) in diagonal_cells(g).into_iter().zip(space.split(h)) {
                    state.cells[cell] = v;
                }
            }
            let k10 = CipherId::Aes128.block_from_state(&state).to_be_bytes();
            CipherKey::Aes128(aes::invert_key_schedule(&k10))
        }
    }
}

/// Rank-1 hypotheses of four rankings, `None` if any is tied at the top.
pub fn recover_from_rankings<T: Scalar>(cipher: CipherId, rankings: &[SeiRanking<T>; 4]) -> Option<CipherKey> {
    let mut groups = [0u32; 4];
    for (g, r) in rankings.iter().enumerate() {
        groups[g] = r.unique_top()?;
    }
    Some(recover_full_key(cipher, groups))
}

/// The hypothesis a known key induces for `target`'s group; used to score
/// experiments, never by the attack itself.
pub fn true_hypothesis(key: &CipherKey, group: usize) -> u32 {
    match key {
        CipherKey::Led64(k) => u32::from(led::kprime_groups(*k)[group]),
        CipherKey::Aes128(k) => {
            let k10 = aes::round_keys(k)[10];
            let state = CipherId::Aes128.state_from_block(u128::from_be_bytes(k10));
            diagonal_cells(group).iter().fold(0u32, |acc, &c| (acc << 8) | u32::from(state.cells[c]))
        }
    }
}

/// Score the 16-bit toy cipher's whole key space on nibble `cell` of the
/// penultimate Sbox output.
pub fn toy_attack<T: Scalar>(ciphertexts: &[u16], cell: usize, clean: &SboxTable, workers: usize) -> Result<SeiRanking<T>> {
    if cell >= 4 || clean.width() != 4 {
        return config("toy attack needs a nibble cell and a 4-bit Sbox");
    }
    if ciphertexts.is_empty() {
        return crate::error::contract("toy attack on zero ciphertexts");
    }
    let path = path::ColumnPath::toy(cell, &clean.inverse()?);
    let cols: Vec<[u8; 4]> = ciphertexts.iter().map(|&c| path::toy_column(c)).collect();
    let space = HypothesisSpace::full(4);
    let sumsq = engine::scan(&path, &cols, &space, workers);
    Ok(SeiRanking::from_sumsq(space, ciphertexts.len(), &sumsq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn targets() {
        let t = AttackTarget::new(CipherId::Aes128, 2).unwrap();
        assert_eq!((t.cell, t.round), (2, 9));
        assert_eq!(AttackTarget::new(CipherId::Led64, 1).unwrap().round, 31);
        let t = AttackTarget::with_row(CipherId::Aes128, 1, 3).unwrap();
        assert_eq!(t.cell, 12);
        let mut bad = t;
        bad.cell = 13;
        assert!(bad.validate().is_err());
        bad = t;
        bad.round = 10;
        assert!(bad.validate().is_err());
        assert!(AttackTarget::new(CipherId::Aes128, 4).is_err());
    }

    #[test]
    fn space_enumeration_is_ordered() {
        let s = HypothesisSpace::with_pinned(8, &[(2, 0xaa), (3, 0x55)]).unwrap();
        assert_eq!(s.len(), 1 << 16);
        let mut prev = None;
        for i in (0..s.len()).step_by(97) {
            let h = s.hypothesis(i);
            assert_eq!(h & 0xffff, 0xaa55);
            assert_eq!(s.index_of(h), Some(i));
            assert!(prev < Some(h));
            prev = Some(h);
        }
        assert_eq!(s.index_of(0x1234_0000), None);
        let s = HypothesisSpace::with_pinned(8, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(s.hypothesis(0x0405), 0x0104_0305);
        assert!(HypothesisSpace::with_pinned(8, &[(0, 1), (0, 2)]).is_err());
        assert!(HypothesisSpace::with_pinned(4, &[(0, 16)]).is_err());
        assert!(HypothesisSpace::with_pinned(4, &[(0, 1), (1, 1), (2, 1), (3, 1)]).is_err());
        let full = HypothesisSpace::full(4);
        assert_eq!(full.len(), 1 << 16);
        assert_eq!(full.hypothesis(0xbeef), 0xbeef);
    }

    #[test]
    fn key_recovery_from_true_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let aes_key = CipherKey::Aes128(rng.gen());
            let groups = core::array::from_fn(|g| true_hypothesis(&aes_key, g));
            assert_eq!(recover_full_key(CipherId::Aes128, groups), aes_key);
            let led_key = CipherKey::Led64(rng.gen());
            let groups = core::array::from_fn(|g| true_hypothesis(&led_key, g));
            assert_eq!(recover_full_key(CipherId::Led64, groups), led_key);
        }
    }

    #[test]
    fn aes_group_zero_is_bytes_0_13_10_7() {
        let key = CipherKey::Aes128(core::array::from_fn(|i| i as u8));
        let k10 = aes::round_keys(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15])[10];
        let want = u32::from_be_bytes([k10[0], k10[13], k10[10], k10[7]]);
        assert_eq!(true_hypothesis(&key, 0), want);
    }
}
