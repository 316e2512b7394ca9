//! Reproducible campaigns: ciphertext collection, the needed-N protocol,
//! fault-count sweeps, the LED study, the PFA comparison and the gate-level
//! study.
//!
//! Every trial draws from its own `ChaCha8Rng` whose seed is derived from
//! the master seed, a campaign tag, the fault-count target and the trial
//! index, so any single record can be replayed in isolation.

mod compare;
mod gate;
mod led_study;
mod stats;
mod sweep;

pub use compare::{compare_with_pfa, pfa_trial, Comparison, ComparisonRow, PfaTrial};
pub use gate::{find_gate_fault, gate_fault_study, GateStudy};
pub use led_study::{reproduce_led_study, LedFaultMode, LedStudy, LedTrial};
pub use stats::Summary;
pub use sweep::{replay_trial, run_trial, sweep_fault_counts, SweepRecord, SweepResult, SweepSummary};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{BatchMeta, CiphertextBatch, LabeledBatch, ProgressiveScan, DEFAULT_PINNED};
use crate::cipher::{CipherId, CipherKey, CipherSpec, Encryptor, SboxSchedule, SboxTable};
use crate::error::{config, Result};
use crate::fault::{FaultSpec, RNG_NAME};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub cipher: CipherId,
    /// Used when `fault_counts` is empty.
    pub fault: Option<FaultSpec>,
    /// Fault-count targets of a sweep.
    pub fault_counts: Vec<usize>,
    /// Random keys (trials) per configuration.
    pub trials: usize,
    pub stride: usize,
    pub max_n: usize,
    /// Pin two hypothesis cells to their true values (AES).
    pub fixed_bytes: bool,
    pub pinned_positions: [usize; 2],
    /// Checkpoints after the first success that must also succeed.
    pub stability: usize,
    pub workers: usize,
    pub seed: u64,
    pub led_fault: LedFaultMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            cipher: CipherId::Aes128,
            fault: None,
            fault_counts: vec![1, 2, 8, 16, 32, 64, 128],
            trials: 10,
            stride: 250,
            max_n: 50_000,
            fixed_bytes: true,
            pinned_positions: DEFAULT_PINNED,
            stability: 2,
            workers: default_workers(),
            seed: 0,
            led_fault: LedFaultMode::Overwrite,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.max_n < self.stride {
            return config(format!("need 0 < stride <= max_n, got stride {} and max_n {}", self.stride, self.max_n));
        }
        if self.workers == 0 {
            return config("workers must be at least 1");
        }
        let [a, b] = self.pinned_positions;
        if a >= 4 || b >= 4 || a == b {
            return config(format!("pinned positions {a}, {b} must be distinct and below 4"));
        }
        if self.fixed_bytes && self.cipher == CipherId::Led64 {
            return Err(crate::Error::Unsupported("fixed-bytes mode is only offered for AES".into()));
        }
        let cells = 1usize << self.cipher.cell_bits();
        if let Some(&f) = self.fault_counts.iter().find(|&&f| f > cells) {
            return config(format!("{f} faults exceed the {cells}-entry Sbox"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        c.validate()?;
        Ok(c)
    }
}

/// Seed for one trial of one campaign.
pub fn derive_seed(master: u64, tag: &str, f: u64, trial: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(f.to_le_bytes());
    h.update(trial.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Independent streams of one trial.
pub(crate) struct TrialRng {
    pub(crate) seed: u64,
}

impl TrialRng {
    pub(crate) fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(id);
        r
    }

    pub(crate) fn key(&self, cipher: CipherId) -> CipherKey {
        let mut r = self.stream(0);
        CipherKey::from_u128(cipher, r.gen::<u128>() & cipher.block_mask())
    }

    pub(crate) fn sub_seed(&self, id: u64) -> u64 {
        self.stream(id).gen()
    }
}

pub(crate) const FAULT_STREAM: u64 = 1;
pub(crate) const PLAINTEXT_STREAM: u64 = 2;

/// `n` ciphertexts of uniformly random plaintexts under `key` and the
/// persistent table `faulted`.
pub fn collect(cipher: CipherId, key: &CipherKey, faulted: &SboxTable, n: usize, seed: u64) -> Result<LabeledBatch> {
    collect_scheduled(cipher, key, SboxSchedule::Persistent(faulted), n, seed)
}

pub fn collect_scheduled(
    cipher: CipherId,
    key: &CipherKey,
    schedule: SboxSchedule<'_>,
    n: usize,
    seed: u64,
) -> Result<LabeledBatch> {
    let desc = CipherSpec::new(cipher);
    let enc = Encryptor::new(&desc, key, schedule.table(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cts = (0..n).map(|_| enc.encrypt(rng.gen::<u128>() & cipher.block_mask(), schedule)).collect();
    let meta = BatchMeta { seed: Some(seed), ..BatchMeta::default() };
    Ok(LabeledBatch { batch: CiphertextBatch::new(cipher, cts, meta)?, true_key: Some(*key) })
}

/// Hex SHA-256 of a fault description's JSON form.
pub fn fault_hash(desc: &FaultSpec) -> String {
    let json = serde_json::to_string(desc).expect("fault descriptions serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Outcome of the checkpoint protocol on one batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeededN<T> {
    /// Smallest checkpoint from which the true hypothesis is strictly
    /// first for `1 + stability` consecutive checkpoints.
    pub needed: Option<usize>,
    /// Rank-1 over rank-2 score at `needed`, or at the last checkpoint.
    pub gap_ratio: Option<T>,
    /// Rank of the true hypothesis at the last checkpoint evaluated.
    pub final_rank: Option<usize>,
    pub last_checkpoint: usize,
}

/// Evaluate the ranking at `stride, 2*stride, ...` up to `max_n`.
pub fn needed_n<T: Scalar>(
    scan: &mut ProgressiveScan,
    truth: u32,
    stride: usize,
    max_n: usize,
    stability: usize,
) -> Result<NeededN<T>> {
    if stride == 0 {
        return config("checkpoint stride must be positive");
    }
    let limit = max_n.min(scan.capacity());
    let mut run: Option<(usize, Option<T>)> = None;
    let mut streak = 0;
    let mut last = 0;
    let mut gap = None;
    for c in (stride..=limit).step_by(stride) {
        scan.advance_to(c)?;
        last = c;
        gap = scan.gap_ratio::<T>();
        if scan.is_strict_top(truth) {
            if run.is_none() {
                run = Some((c, gap));
            }
            streak += 1;
            if streak > stability {
                let (needed, g) = run.expect("streak started");
                return Ok(NeededN { needed: Some(needed), gap_ratio: g, final_rank: Some(1), last_checkpoint: c });
            }
        } else {
            run = None;
            streak = 0;
        }
    }
    let final_rank = if last > 0 { scan.rank_of(truth) } else { None };
    Ok(NeededN { needed: None, gap_ratio: gap, final_rank, last_checkpoint: last })
}

/// Provenance written next to every CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub generator: String,
    pub config: ExperimentConfig,
    pub command: String,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig, command: &str) -> Self {
        RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generator: RNG_NAME.to_string(),
            config: config.clone(),
            command: command.to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => crate::Error::Io(io),
        other => crate::Error::Config(format!("csv: {other:?}")),
    }
}
