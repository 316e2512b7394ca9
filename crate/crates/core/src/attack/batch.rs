//! Ciphertext batches and their text file format:
//!
//! ```text
//! cipher=aes128 n=2 seed=7 fault=<sha256> key=<hex>
//! 3925841d02dc09fbdc118597196a0b32
//! ...
//! ```
//!
//! The header holds `key=value` pairs; `cipher` and `n` are required, the
//! rest is metadata. Lines starting with `#` are ignored. The key, when
//! present, is split off into [`LabeledBatch`] so attack code never sees it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::cipher::{Block, CipherId, CipherKey};
use crate::error::{config, contract, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchMeta {
    /// SHA-256 of the fault description JSON.
    pub fault_hash: Option<String>,
    pub seed: Option<u64>,
    pub extra: BTreeMap<String, String>,
}

/// `N >= 1` ciphertexts from one key and one faulted table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextBatch {
    cipher: CipherId,
    ciphertexts: Vec<Block>,
    pub meta: BatchMeta,
}

impl CiphertextBatch {
    pub fn new(cipher: CipherId, ciphertexts: Vec<Block>, meta: BatchMeta) -> Result<Self> {
        if ciphertexts.is_empty() {
            return contract("a ciphertext batch holds at least one block");
        }
        if let Some(b) = ciphertexts.iter().find(|&&b| b & !cipher.block_mask() != 0) {
            return config(format!("block {b:#x} is wider than {} bits", cipher.block_bits()));
        }
        Ok(CiphertextBatch { cipher, ciphertexts, meta })
    }

    pub fn cipher(&self) -> CipherId {
        self.cipher
    }

    pub fn ciphertexts(&self) -> &[Block] {
        &self.ciphertexts
    }

    pub fn len(&self) -> usize {
        self.ciphertexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ciphertexts.is_empty()
    }

    /// The first `n` ciphertexts.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return config(format!("cannot take {n} of {} ciphertexts", self.len()));
        }
        Ok(CiphertextBatch { cipher: self.cipher, ciphertexts: self.ciphertexts[..n].to_vec(), meta: self.meta.clone() })
    }

    /// SHA-256 over the cipher id and every block.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.cipher.to_string());
        for b in &self.ciphertexts {
            h.update(b.to_be_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// A batch together with the key that produced it, for scoring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledBatch {
    pub batch: CiphertextBatch,
    pub true_key: Option<CipherKey>,
}

impl LabeledBatch {
    pub fn to_text(&self) -> String {
        let b = &self.batch;
        let mut out = format!("cipher={} n={}", b.cipher, b.len());
        if let Some(s) = b.meta.seed {
            write!(out, " seed={s}").unwrap();
        }
        if let Some(f) = &b.meta.fault_hash {
            write!(out, " fault={f}").unwrap();
        }
        if let Some(k) = &self.true_key {
            write!(out, " key={k}").unwrap();
        }
        for (k, v) in &b.meta.extra {
            write!(out, " {k}={v}").unwrap();
        }
        out.push('\n');
        for &c in &b.ciphertexts {
            out.push_str(&b.cipher.format_block(c));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "missing header".into() })?;
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut fields = BTreeMap::new();
        for tok in header.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| perr(hline, format!("expected key=value, got {tok:?}")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let cipher: CipherId = fields
            .remove("cipher")
            .ok_or_else(|| perr(hline, "header lacks cipher=".into()))?
            .parse()?;
        let n: usize = fields
            .remove("n")
            .ok_or_else(|| perr(hline, "header lacks n=".into()))?
            .parse()
            .map_err(|e| perr(hline, format!("bad n: {e}")))?;
        let seed = match fields.remove("seed") {
            Some(s) => Some(s.parse().map_err(|e| perr(hline, format!("bad seed: {e}")))?),
            None => None,
        };
        let fault_hash = fields.remove("fault");
        let true_key = match fields.remove("key") {
            Some(k) => Some(CipherKey::parse(cipher, &k)?),
            None => None,
        };
        let ciphertexts = lines
            .map(|(i, l)| cipher.parse_block(l).map_err(|e| perr(i, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if ciphertexts.len() != n {
            return Err(perr(hline, format!("header says n={n}, file holds {}", ciphertexts.len())));
        }
        let meta = BatchMeta { fault_hash, seed, extra: fields };
        Ok(LabeledBatch { batch: CiphertextBatch::new(cipher, ciphertexts, meta)?, true_key })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledBatch {
        let meta = BatchMeta {
            fault_hash: Some(hex::encode(Sha256::digest(b"{}"))),
            seed: Some(7),
            extra: [("trial".to_string(), "3".to_string())].into(),
        };
        LabeledBatch {
            batch: CiphertextBatch::new(CipherId::Led64, vec![0x0123456789abcdef, 0, 0xffff_ffff_ffff_ffff], meta).unwrap(),
            true_key: Some(CipherKey::Led64(0xdead_beef)),
        }
    }

    #[test]
    fn text_round_trip() {
        let b = sample();
        let text = b.to_text();
        assert!(text.starts_with("cipher=led64 n=3 seed=7 fault="));
        assert_eq!(LabeledBatch::parse(&text).unwrap(), b);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.txt");
        b.write(&p).unwrap();
        assert_eq!(LabeledBatch::read(&p).unwrap(), b);
    }

    #[test]
    fn malformed_files() {
        assert!(LabeledBatch::parse("").is_err());
        assert!(LabeledBatch::parse("cipher=aes128 n=2\n00112233445566778899aabbccddeeff\n").is_err());
        assert!(LabeledBatch::parse("n=1\n00\n").is_err());
        assert!(LabeledBatch::parse("cipher=led64 n=1\nxyz\n").is_err());
        assert!(matches!(
            LabeledBatch::parse("cipher=led64 n=1\n00112233\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_batches_and_truncation() {
        assert!(CiphertextBatch::new(CipherId::Aes128, vec![], BatchMeta::default()).is_err());
        assert!(CiphertextBatch::new(CipherId::Led64, vec![1 << 64], BatchMeta::default()).is_err());
        let b = sample().batch;
        assert_eq!(b.truncated(2).unwrap().ciphertexts(), &b.ciphertexts()[..2]);
        assert!(b.truncated(0).is_err());
        assert_ne!(b.digest(), b.truncated(2).unwrap().digest());
    }
}
