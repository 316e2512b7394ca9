use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{collect, derive_seed, fault_hash, ExperimentConfig, TrialRng, FAULT_STREAM, PLAINTEXT_STREAM};
use crate::attack::{recover_from_rankings, run_attack, true_hypothesis, AttackTarget, SeiRanking};
use crate::cipher::CipherId;
use crate::error::{config, Result};
use crate::fault::{apply_fault, FaultSpec};
use crate::scalar::Scalar;

/// How the single-entry LED fault is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedFaultMode {
    /// Entry `i` takes the value of entry `j != i`.
    #[default]
    Overwrite,
    /// Entries `i` and `j` trade values; the table stays a permutation.
    Swap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedTrial<T> {
    pub trial: usize,
    pub key: String,
    pub fault_hash: String,
    pub effective_f: usize,
    pub recovered: bool,
    pub groups_correct: [bool; 4],
    pub group_wall_ms: [u64; 4],
    pub gap_ratios: [Option<T>; 4],
    pub trial_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedStudy<T> {
    pub n: usize,
    pub workers: usize,
    pub mode: LedFaultMode,
    pub trials: Vec<LedTrial<T>>,
    pub recovered: usize,
    pub max_group_ms: u64,
    pub mean_group_ms: u64,
}

impl<T: Scalar> LedStudy<T> {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(super::csv_err)?;
        w.write_record([
            "trial", "key", "effective_f", "recovered", "g0_ok", "g1_ok", "g2_ok", "g3_ok", "g0_ms", "g1_ms", "g2_ms",
            "g3_ms", "trial_seed", "fault_hash",
        ])
        .map_err(super::csv_err)?;
        for t in &self.trials {
            let mut row = vec![t.trial.to_string(), t.key.clone(), t.effective_f.to_string(), t.recovered.to_string()];
            row.extend(t.groups_correct.iter().map(bool::to_string));
            row.extend(t.group_wall_ms.iter().map(u64::to_string));
            row.extend([t.trial_seed.to_string(), t.fault_hash.clone()]);
            w.write_record(&row).map_err(super::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `cfg.trials` random keys, one single-entry fault each, `cfg.max_n`
/// ciphertexts, all four groups searched in full. `max_n = 0` yields a DNF
/// per trial without attacking.
pub fn reproduce_led_study<T: Scalar>(cfg: &ExperimentConfig, mut on_trial: impl FnMut(&LedTrial<T>)) -> Result<LedStudy<T>> {
    if cfg.cipher != CipherId::Led64 {
        return config("the LED study runs on led64");
    }
    if cfg.workers == 0 {
        return config("workers must be at least 1");
    }
    let clean = cfg.cipher.clean_sbox();
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let seed = derive_seed(cfg.seed, "led-study", 1, trial as u64);
        let rng = TrialRng { seed };
        let key = rng.key(cfg.cipher);
        let fseed = rng.sub_seed(FAULT_STREAM);
        let desc = match cfg.led_fault {
            LedFaultMode::Overwrite => FaultSpec::random_overwrite(&clean, fseed),
            LedFaultMode::Swap => FaultSpec::random_swap(&clean, fseed),
        };
        let (faulted, report) = apply_fault(&clean, &desc)?;
        let mut t = LedTrial {
            trial,
            key: key.to_hex(),
            fault_hash: fault_hash(&desc),
            effective_f: report.effective_fault_count,
            recovered: false,
            groups_correct: [false; 4],
            group_wall_ms: [0; 4],
            gap_ratios: [None; 4],
            trial_seed: seed,
        };
        if cfg.max_n > 0 {
            let batch = collect(cfg.cipher, &key, &faulted, cfg.max_n, rng.sub_seed(PLAINTEXT_STREAM))?.batch;
            let mut rankings: Vec<SeiRanking<T>> = Vec::with_capacity(4);
            for g in 0..4 {
                let start = Instant::now();
                let r = run_attack::<T>(&batch, &AttackTarget::new(cfg.cipher, g)?, &clean, None, cfg.workers)?;
                t.group_wall_ms[g] = start.elapsed().as_millis() as u64;
                t.groups_correct[g] = r.unique_top() == Some(true_hypothesis(&key, g));
                t.gap_ratios[g] = r.gap_ratio();
                rankings.push(r);
            }
            let rankings: [SeiRanking<T>; 4] = rankings.try_into().expect("four groups");
            t.recovered = recover_from_rankings(cfg.cipher, &rankings) == Some(key);
        }
        on_trial(&t);
        trials.push(t);
    }
    let times: Vec<u64> = trials.iter().flat_map(|t| t.group_wall_ms).collect();
    Ok(LedStudy {
        n: cfg.max_n,
        workers: cfg.workers,
        mode: cfg.led_fault,
        recovered: trials.iter().filter(|t| t.recovered).count(),
        max_group_ms: times.iter().copied().max().unwrap_or(0),
        mean_group_ms: times.iter().sum::<u64>() / times.len().max(1) as u64,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: usize, n: usize) -> ExperimentConfig {
        ExperimentConfig { cipher: CipherId::Led64, fixed_bytes: false, trials, max_n: n, workers: 2, seed: 3, ..Default::default() }
    }

    #[test]
    fn zero_ciphertexts_is_a_dnf() {
        let s = reproduce_led_study::<f64>(&cfg(3, 0), |_| {}).unwrap();
        assert_eq!((s.trials.len(), s.recovered), (3, 0));
        assert!(s.trials.iter().all(|t| t.groups_correct == [false; 4]));
    }

    #[test]
    fn small_study_recovers_keys() {
        let s = reproduce_led_study::<f64>(&cfg(2, 1000), |_| {}).unwrap();
        assert_eq!(s.trials.iter().map(|t| t.effective_f).collect::<Vec<_>>(), [1, 1]);
        assert!(s.recovered >= 1, "{:?}", s.trials);
        let dir = tempfile::tempdir().unwrap();
        s.write_csv(&dir.path().join("led.csv")).unwrap();
    }

    #[test]
    fn rejects_aes() {
        let c = ExperimentConfig { trials: 1, ..Default::default() };
        assert!(reproduce_led_study::<f64>(&c, |_| {}).is_err());
    }
}
