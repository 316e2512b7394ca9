use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::{cell, Summary};
use super::{collect, derive_seed, fault_hash, needed_n, ExperimentConfig, TrialRng, FAULT_STREAM, PLAINTEXT_STREAM};
use crate::attack::{true_hypothesis, AttackTarget, HypothesisSpace, ProgressiveScan};
use crate::cipher::{CipherId, SboxTable};
use crate::error::{config, Result};
use crate::fault::{apply_fault, FaultSpec, ROW_LEN};
use crate::scalar::Scalar;

/// One (fault count, trial) cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    /// Requested fault count; for a fixed fault description, its effective count.
    pub f_target: usize,
    pub effective_f: usize,
    pub trial: usize,
    pub group: usize,
    /// `None` is a DNF at `max_n`.
    pub needed_n: Option<usize>,
    pub last_checkpoint: usize,
    pub final_rank: Option<usize>,
    pub gap_ratio: Option<T>,
    /// The true hypothesis held rank 1 at the last checkpoint evaluated.
    pub correct: bool,
    /// Analysis time, collection excluded.
    pub wall_ms: u64,
    pub master_seed: u64,
    pub trial_seed: u64,
    pub fault_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary<T> {
    pub f_target: usize,
    pub needed: Summary<T>,
    pub mean_wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub records: Vec<SweepRecord<T>>,
    pub summary: Vec<SweepSummary<T>>,
}

const CSV_HEADER: [&str; 19] = [
    "row",
    "f_target",
    "effective_f",
    "trial",
    "group",
    "needed_n",
    "last_checkpoint",
    "final_rank",
    "gap_ratio",
    "correct",
    "wall_ms",
    "master_seed",
    "trial_seed",
    "fault_hash",
    "trials",
    "successes",
    "min_n",
    "median_n",
    "mean_n",
];

fn opt<X: ToString>(x: &Option<X>) -> String {
    x.as_ref().map_or(String::new(), X::to_string)
}

impl<T: Scalar> SweepResult<T> {
    pub fn summary_for(&self, f: usize) -> Option<&SweepSummary<T>> {
        self.summary.iter().find(|s| s.f_target == f)
    }

    /// The fault count among `fs` with the smallest median needed-N.
    pub fn argmin_median(&self, fs: &[usize]) -> Option<usize> {
        fs.iter()
            .filter_map(|&f| self.summary_for(f).map(|s| (f, s.needed.median)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN").then(a.0.cmp(&b.0)))
            .map(|(f, _)| f)
    }

    /// Trial rows (`row=trial`) then one `row=summary` line per fault count.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(super::csv_err)?;
        w.write_record(CSV_HEADER).map_err(super::csv_err)?;
        for r in &self.records {
            let row = [
                "trial".to_string(),
                r.f_target.to_string(),
                r.effective_f.to_string(),
                r.trial.to_string(),
                r.group.to_string(),
                r.needed_n.map_or("DNF".into(), |n| n.to_string()),
                r.last_checkpoint.to_string(),
                opt(&r.final_rank),
                opt(&r.gap_ratio),
                r.correct.to_string(),
                r.wall_ms.to_string(),
                r.master_seed.to_string(),
                r.trial_seed.to_string(),
                r.fault_hash.clone(),
            ];
            w.write_record(row.iter().map(String::as_str).chain([""; 5])).map_err(super::csv_err)?;
        }
        for s in &self.summary {
            let mut row = vec![String::new(); CSV_HEADER.len()];
            row[0] = "summary".into();
            row[1] = s.f_target.to_string();
            row[10] = s.mean_wall_ms.to_string();
            row[14] = s.needed.trials.to_string();
            row[15] = s.needed.successes.to_string();
            row[16] = cell(s.needed.min);
            row[17] = cell(s.needed.median);
            row[18] = cell(s.needed.mean);
            w.write_record(&row).map_err(super::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fault for target `f`: whole rows for multiples of the row length on
/// AES, distinct entries otherwise.
fn sweep_fault(cfg: &ExperimentConfig, clean: &SboxTable, f: usize, seed: u64) -> Result<FaultSpec> {
    if let (Some(desc), true) = (&cfg.fault, cfg.fault_counts.is_empty()) {
        return Ok(desc.clone());
    }
    if cfg.cipher == CipherId::Aes128 && f > 0 && f.is_multiple_of(ROW_LEN) {
        FaultSpec::random_rows(clean, f / ROW_LEN, seed)
    } else {
        FaultSpec::random_entries(clean, f, seed)
    }
}

/// Run one trial; deterministic in `(cfg, f_target, trial)`.
pub fn run_trial<T: Scalar>(cfg: &ExperimentConfig, f_target: usize, trial: usize) -> Result<SweepRecord<T>> {
    let seed = derive_seed(cfg.seed, "sweep", f_target as u64, trial as u64);
    replay_trial(cfg, f_target, trial, seed)
}

/// Re-run a trial from the seed stored in its record.
pub fn replay_trial<T: Scalar>(cfg: &ExperimentConfig, f_target: usize, trial: usize, trial_seed: u64) -> Result<SweepRecord<T>> {
    cfg.validate()?;
    let rng = TrialRng { seed: trial_seed };
    let clean = cfg.cipher.clean_sbox();
    let key = rng.key(cfg.cipher);
    let desc = sweep_fault(cfg, &clean, f_target, rng.sub_seed(FAULT_STREAM))?;
    let (faulted, report) = apply_fault(&clean, &desc)?;
    let mut batch = collect(cfg.cipher, &key, &faulted, cfg.max_n, rng.sub_seed(PLAINTEXT_STREAM))?.batch;
    let hash = fault_hash(&desc);
    batch.meta.fault_hash = Some(hash.clone());

    let group = trial % 4;
    let target = AttackTarget::new(cfg.cipher, group)?;
    let truth = true_hypothesis(&key, group);
    let space = HypothesisSpace::full(cfg.cipher.cell_bits());
    let k = space.split(truth);
    let fixed = cfg.pinned_positions.map(|p| (p, k[p]));
    let start = Instant::now();
    let mut scan = ProgressiveScan::new(&batch, &target, &clean, cfg.fixed_bytes.then_some(&fixed[..]), cfg.workers)?;
    let out = needed_n::<T>(&mut scan, truth, cfg.stride, cfg.max_n, cfg.stability)?;
    Ok(SweepRecord {
        f_target: if cfg.fault_counts.is_empty() { report.effective_fault_count } else { f_target },
        effective_f: report.effective_fault_count,
        trial,
        group,
        correct: out.final_rank == Some(1),
        needed_n: out.needed,
        last_checkpoint: out.last_checkpoint,
        final_rank: out.final_rank,
        gap_ratio: out.gap_ratio,
        wall_ms: start.elapsed().as_millis() as u64,
        master_seed: cfg.seed,
        trial_seed,
        fault_hash: hash,
    })
}

/// Every fault count in `cfg.fault_counts` (or the single `cfg.fault`)
/// times `cfg.trials`. DNFs are recorded, not raised.
pub fn sweep_fault_counts<T: Scalar>(
    cfg: &ExperimentConfig,
    mut on_record: impl FnMut(&SweepRecord<T>),
) -> Result<SweepResult<T>> {
    cfg.validate()?;
    let fs: Vec<usize> = if cfg.fault_counts.is_empty() {
        if cfg.fault.is_none() {
            return config("a sweep needs fault counts or a fault description");
        }
        vec![0]
    } else {
        cfg.fault_counts.clone()
    };
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &f in &fs {
        let first = records.len();
        for trial in 0..cfg.trials {
            let r = run_trial::<T>(cfg, f, trial)?;
            on_record(&r);
            records.push(r);
        }
        let rs: &[SweepRecord<T>] = &records[first..];
        let needed: Vec<Option<usize>> = rs.iter().map(|r| r.needed_n).collect();
        summary.push(SweepSummary {
            f_target: rs.first().map_or(f, |r| r.f_target),
            needed: Summary::of(&needed),
            mean_wall_ms: rs.iter().map(|r| r.wall_ms).sum::<u64>() / rs.len().max(1) as u64,
        });
    }
    Ok(SweepResult { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { fault_counts: vec![32], trials: 2, max_n: 3000, workers: 2, seed: 11, ..Default::default() }
    }

    #[test]
    fn records_replay_exactly() {
        let cfg = small();
        let res = sweep_fault_counts::<f64>(&cfg, |_| {}).unwrap();
        assert_eq!(res.records.len(), 2);
        for r in &res.records {
            let again = replay_trial::<f64>(&cfg, r.f_target, r.trial, r.trial_seed).unwrap();
            assert_eq!((again.needed_n, again.gap_ratio, &again.fault_hash), (r.needed_n, r.gap_ratio, &r.fault_hash));
            assert_eq!(r.effective_f, 32);
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.csv");
        res.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut rd = csv::Reader::from_path(&p).unwrap();
        assert_eq!(rd.headers().unwrap().len(), CSV_HEADER.len());
        assert_eq!(rd.records().count(), 3);
        assert!(text.lines().last().unwrap().starts_with("summary,32,"));
    }

    #[test]
    fn led_sweep_without_pinning() {
        let cfg = ExperimentConfig {
            cipher: CipherId::Led64,
            fixed_bytes: false,
            fault_counts: vec![4],
            trials: 1,
            max_n: 500,
            workers: 1,
            ..Default::default()
        };
        let r = run_trial::<f32>(&cfg, 4, 0).unwrap();
        assert_eq!((r.effective_f, r.last_checkpoint > 0), (4, true));
    }

    #[test]
    fn fixed_spec_sweep_labels_effective_count() {
        let clean = SboxTable::aes();
        let desc = FaultSpec::random_entries(&clean, 5, 1).unwrap();
        let cfg = ExperimentConfig { fault: Some(desc), fault_counts: vec![], trials: 1, max_n: 250, workers: 1, ..Default::default() };
        let res = sweep_fault_counts::<f64>(&cfg, |_| {}).unwrap();
        assert_eq!(res.summary[0].f_target, 5);
    }
}
