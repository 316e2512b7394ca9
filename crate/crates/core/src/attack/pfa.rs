//! Classical persistent fault analysis on AES: with one Sbox output value
//! `v` missing, ciphertext byte `j` never takes the value `v ^ k10[j]`.

use crate::cipher::{aes, CipherId, CipherKey};
use crate::error::{config, Result};

use super::CiphertextBatch;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfaResult {
    /// Per ciphertext byte, every last-round key byte consistent with the
    /// least frequent value.
    pub candidates: Vec<Vec<u8>>,
    /// Some byte has more than one candidate.
    pub ambiguous: bool,
}

impl PfaResult {
    pub fn last_round_key(&self) -> Option<[u8; 16]> {
        if self.ambiguous {
            return None;
        }
        Some(core::array::from_fn(|j| self.candidates[j][0]))
    }

    pub fn master_key(&self) -> Option<CipherKey> {
        self.last_round_key().map(|k10| CipherKey::Aes128(aes::invert_key_schedule(&k10)))
    }
}

fn byte_counts(batch: &CiphertextBatch) -> Result<Vec<[u32; 256]>> {
    if batch.cipher() != CipherId::Aes128 {
        return config("the PFA baseline is implemented for AES only");
    }
    let mut counts = vec![[0u32; 256]; 16];
    for &ct in batch.ciphertexts() {
        for (j, b) in ct.to_be_bytes().into_iter().enumerate() {
            counts[j][usize::from(b)] += 1;
        }
    }
    Ok(counts)
}

/// `old_value` is the clean Sbox output that the fault removed.
pub fn pfa_baseline(batch: &CiphertextBatch, old_value: u8) -> Result<PfaResult> {
    let counts = byte_counts(batch)?;
    let candidates: Vec<Vec<u8>> = counts
        .iter()
        .map(|c| {
            let min = *c.iter().min().expect("256 bins");
            (0..=255u8).filter(|&t| c[usize::from(t)] == min).map(|t| t ^ old_value).collect()
        })
        .collect();
    let ambiguous = candidates.iter().any(|c| c.len() > 1);
    Ok(PfaResult { candidates, ambiguous })
}

/// Smallest `N` at which every ciphertext byte has taken 255 distinct
/// values, leaving a single candidate per byte. `None` if the batch is too
/// short.
pub fn pfa_needed_n(batch: &CiphertextBatch) -> Result<Option<usize>> {
    if batch.cipher() != CipherId::Aes128 {
        return config("the PFA baseline is implemented for AES only");
    }
    let mut seen = [[false; 256]; 16];
    let mut distinct = [0u32; 16];
    let mut complete = 0;
    for (i, &ct) in batch.ciphertexts().iter().enumerate() {
        for (j, b) in ct.to_be_bytes().into_iter().enumerate() {
            if !std::mem::replace(&mut seen[j][usize::from(b)], true) {
                distinct[j] += 1;
                if distinct[j] == 255 {
                    complete += 1;
                }
            }
        }
        if complete == 16 {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::BatchMeta;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn missing_value_gives_key_byte() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let missing: [u8; 16] = rng.gen();
        let cts: Vec<u128> = (0..6000)
            .map(|_| {
                let bytes: [u8; 16] = core::array::from_fn(|j| loop {
                    let b: u8 = rng.gen();
                    if b != missing[j] {
                        break b;
                    }
                });
                u128::from_be_bytes(bytes)
            })
            .collect();
        let b = CiphertextBatch::new(CipherId::Aes128, cts, BatchMeta::default()).unwrap();
        let v = 0x63;
        let r = pfa_baseline(&b, v).unwrap();
        assert!(!r.ambiguous);
        assert_eq!(r.last_round_key().unwrap(), missing.map(|w| w ^ v));
        let n = pfa_needed_n(&b).unwrap().unwrap();
        let r = pfa_baseline(&b.truncated(n).unwrap(), v).unwrap();
        assert!(!r.ambiguous);
        let r = pfa_baseline(&b.truncated(n - 1).unwrap(), v).unwrap();
        assert!(r.ambiguous);
    }

    #[test]
    fn small_batches_are_ambiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = CiphertextBatch::new(CipherId::Aes128, (0..100).map(|_| rng.gen()).collect(), BatchMeta::default()).unwrap();
        let r = pfa_baseline(&b, 0).unwrap();
        assert!(r.ambiguous && r.master_key().is_none());
        assert!(r.candidates.iter().all(|c| c.len() > 1));
        assert_eq!(pfa_needed_n(&b).unwrap(), None);
    }
}
