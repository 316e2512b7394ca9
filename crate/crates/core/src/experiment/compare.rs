use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{cell, Summary};
use super::sweep::{sweep_fault_counts, SweepResult};
use super::{collect, derive_seed, ExperimentConfig, TrialRng, FAULT_STREAM, PLAINTEXT_STREAM};
use crate::attack::{pfa_baseline, pfa_needed_n};
use crate::cipher::CipherId;
use crate::error::{config, Result};
use crate::fault::{apply_fault, FaultKind, FaultSpec};
use crate::scalar::Scalar;

/// Published figures for the comparison table, copied as printed. These
/// are external reference values, not outputs of this crate.
const LITERATURE: [(usize, &str, &str, &str, &str, &str); 4] = [
    (1, "2273", "1641", "15650", "0", "2^50"),
    (2, "ca.2000", "n/a", "7775", "2^16", "2^50"),
    (8, "ca.2000", "n/a", "2008", "2^50", "2^50"),
    (16, "ca.2000", "n/a", "1643", "2^64", "2^50"),
];

/// One single-known-fault PFA run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PfaTrial {
    pub trial: usize,
    pub fault_index: usize,
    pub old_value: u8,
    pub needed_n: Option<usize>,
    pub key_exact: bool,
    pub trial_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow<T> {
    pub faults: usize,
    /// Our statistical attack, two bytes pinned.
    pub spfa: Option<Summary<T>>,
    /// Our PFA baseline; single-fault row only.
    pub pfa: Option<Summary<T>>,
    pub pfa_keys_exact: Option<usize>,
    pub lit_pfa: String,
    pub lit_pfa_mle: String,
    pub lit_spfa: String,
    pub lit_pfa_complexity: String,
    pub lit_spfa_complexity: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison<T> {
    pub rows: Vec<ComparisonRow<T>>,
    pub pfa: Vec<PfaTrial>,
    pub sweep: SweepResult<T>,
}

impl<T: Scalar> Comparison<T> {
    pub fn row(&self, f: usize) -> Option<&ComparisonRow<T>> {
        self.rows.iter().find(|r| r.faults == f)
    }

    /// Columns prefixed `ext_` are the external reference figures.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(super::csv_err)?;
        w.write_record([
            "faults",
            "spfa_min_n",
            "spfa_median_n",
            "spfa_mean_n",
            "spfa_successes",
            "pfa_min_n",
            "pfa_median_n",
            "pfa_mean_n",
            "pfa_keys_exact",
            "ext_pfa",
            "ext_pfa_mle",
            "ext_spfa",
            "ext_pfa_complexity",
            "ext_spfa_complexity",
        ])
        .map_err(super::csv_err)?;
        let stats = |s: &Option<Summary<T>>| match s {
            Some(s) => [cell(s.min), cell(s.median), cell(s.mean), s.successes.to_string()],
            None => Default::default(),
        };
        for r in &self.rows {
            let [a, b, c, d] = stats(&r.spfa);
            let [e, f, g, _] = stats(&r.pfa);
            let row = [
                r.faults.to_string(),
                a,
                b,
                c,
                d,
                e,
                f,
                g,
                r.pfa_keys_exact.map_or(String::new(), |k| k.to_string()),
                r.lit_pfa.clone(),
                r.lit_pfa_mle.clone(),
                r.lit_spfa.clone(),
                r.lit_pfa_complexity.clone(),
                r.lit_spfa_complexity.clone(),
            ];
            w.write_record(&row).map_err(super::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// PFA on one random known single-entry fault per trial.
pub fn pfa_trial(cfg: &ExperimentConfig, trial: usize) -> Result<PfaTrial> {
    let seed = derive_seed(cfg.seed, "pfa", 1, trial as u64);
    let rng = TrialRng { seed };
    let clean = cfg.cipher.clean_sbox();
    let key = rng.key(cfg.cipher);
    let desc = FaultSpec::random_entries(&clean, 1, rng.sub_seed(FAULT_STREAM))?;
    let FaultKind::ReplaceEntries { entries } = &desc.kind else { unreachable!("random_entries") };
    let fault_index = entries[0].0;
    let old_value = clean.get(fault_index as u8);
    let (faulted, _) = apply_fault(&clean, &desc)?;
    let batch = collect(cfg.cipher, &key, &faulted, cfg.max_n.max(1), rng.sub_seed(PLAINTEXT_STREAM))?.batch;
    let needed_n = pfa_needed_n(&batch)?;
    let key_exact = match needed_n {
        Some(n) => pfa_baseline(&batch.truncated(n)?, old_value)?.master_key() == Some(key),
        None => false,
    };
    Ok(PfaTrial { trial, fault_index, old_value, needed_n, key_exact, trial_seed: seed })
}

/// PFA baseline trials plus the SPFA sweep (reused when given), joined
/// with the published figures on the fault count.
pub fn compare_with_pfa<T: Scalar>(cfg: &ExperimentConfig, sweep: Option<SweepResult<T>>) -> Result<Comparison<T>> {
    if cfg.cipher != CipherId::Aes128 {
        return config("the PFA comparison runs on aes128");
    }
    let sweep = match sweep {
        Some(s) => s,
        None => sweep_fault_counts::<T>(cfg, |_| {})?,
    };
    let pfa = (0..cfg.trials).map(|t| pfa_trial(cfg, t)).collect::<Result<Vec<_>>>()?;
    let pfa_summary = Summary::of(&pfa.iter().map(|p| p.needed_n).collect::<Vec<_>>());
    let exact = pfa.iter().filter(|p| p.key_exact).count();

    let mut fs: Vec<usize> = LITERATURE.iter().map(|l| l.0).collect();
    fs.extend(sweep.summary.iter().map(|s| s.f_target));
    fs.sort_unstable();
    fs.dedup();
    let rows = fs
        .into_iter()
        .map(|f| {
            let lit = LITERATURE.iter().find(|l| l.0 == f);
            let s = |i: usize| {
                lit.map_or(String::new(), |l| [l.1, l.2, l.3, l.4, l.5][i].to_string())
            };
            ComparisonRow {
                faults: f,
                spfa: sweep.summary_for(f).map(|s| s.needed.clone()),
                pfa: (f == 1).then(|| pfa_summary.clone()),
                pfa_keys_exact: (f == 1).then_some(exact),
                lit_pfa: s(0),
                lit_pfa_mle: s(1),
                lit_spfa: s(2),
                lit_pfa_complexity: s(3),
                lit_spfa_complexity: s(4),
            }
        })
        .collect();
    Ok(Comparison { rows, pfa, sweep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfa_trial_recovers_exact_key() {
        let cfg = ExperimentConfig { max_n: 6000, seed: 4, ..Default::default() };
        let t = pfa_trial(&cfg, 0).unwrap();
        let n = t.needed_n.expect("6000 ciphertexts complete every byte");
        assert!((1000..6000).contains(&n), "{n}");
        assert!(t.key_exact);
        assert_eq!(pfa_trial(&cfg, 0).unwrap(), t);
    }

    #[test]
    fn table_rows_carry_external_figures() {
        let cfg = ExperimentConfig { fault_counts: vec![32], trials: 1, max_n: 4000, seed: 2, workers: 2, ..Default::default() };
        let c = compare_with_pfa::<f64>(&cfg, None).unwrap();
        assert_eq!(c.rows.iter().map(|r| r.faults).collect::<Vec<_>>(), [1, 2, 8, 16, 32]);
        assert_eq!(c.row(1).unwrap().lit_spfa, "15650");
        assert_eq!(c.row(2).unwrap().lit_pfa, "ca.2000");
        assert!(c.row(32).unwrap().lit_spfa.is_empty() && c.row(32).unwrap().spfa.is_some());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("table.csv");
        c.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",2273,1641,15650,0,2^50"));
    }
}
