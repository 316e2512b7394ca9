use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::Summary;
use super::sweep::{sweep_fault_counts, SweepRecord};
use super::{derive_seed, ExperimentConfig};
use crate::circuit::{synthesize_sop, GateFault, Pin};
use crate::cipher::SboxTable;
use crate::error::{config, Result};
use crate::fault::{FaultKind, FaultSpec, ROW_LEN};
use crate::scalar::Scalar;

/// Attempts before giving up on finding a fault in the requested range.
const MAX_ATTEMPTS: usize = 20_000;

/// Draw seeded input-pin stuck-at faults on the synthesized netlist of
/// `clean` until one corrupts a number of entries inside `range`.
/// Returns the fault, its effective count and the attempts used.
pub fn find_gate_fault(clean: &SboxTable, range: RangeInclusive<usize>, seed: u64) -> Result<(GateFault, usize, usize)> {
    let net = synthesize_sop(clean)?;
    let candidates: Vec<(String, usize)> =
        net.gates().iter().flat_map(|g| (0..g.inputs.len()).map(move |k| (g.id.clone(), k))).collect();
    if candidates.is_empty() {
        return config("netlist has no gate inputs");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let (gate, k) = &candidates[rng.gen_range(0..candidates.len())];
        let fault = GateFault { gate: gate.clone(), pin: Pin::Input(*k), stuck: rng.gen() };
        let t = net.inject_fault(&fault)?.derive_table()?;
        let eff = clean.diff_indices(&t)?.len();
        if range.contains(&eff) {
            return Ok((fault, eff, attempt));
        }
    }
    config(format!("no stuck-at fault in {MAX_ATTEMPTS} attempts corrupts {range:?} entries"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateStudy<T> {
    pub fault: GateFault,
    pub effective_f: usize,
    pub attempts: usize,
    pub rows: usize,
    pub gate_records: Vec<SweepRecord<T>>,
    pub row_records: Vec<SweepRecord<T>>,
    pub gate: Summary<T>,
    pub row: Summary<T>,
}

impl<T: Scalar> GateStudy<T> {
    /// Gate-fault median over row-fault median.
    pub fn ratio(&self) -> T {
        self.gate.median / self.row.median
    }
}

/// Needed-N under one gate-level fault against whole-row replacement of
/// about the same size, `cfg.trials` trials each.
pub fn gate_fault_study<T: Scalar>(cfg: &ExperimentConfig, range: RangeInclusive<usize>) -> Result<GateStudy<T>> {
    let clean = cfg.cipher.clean_sbox();
    let (fault, effective_f, attempts) = find_gate_fault(&clean, range, derive_seed(cfg.seed, "gate", 0, 0))?;
    let rows = ((effective_f + ROW_LEN / 2) / ROW_LEN).max(1);
    let desc = FaultSpec::new(FaultKind::Netlist { faults: vec![fault.clone()] }, 0);
    let gate_cfg = ExperimentConfig { fault: Some(desc), fault_counts: vec![], ..cfg.clone() };
    let row_cfg = ExperimentConfig { fault: None, fault_counts: vec![rows * ROW_LEN], ..cfg.clone() };
    let g = sweep_fault_counts::<T>(&gate_cfg, |_| {})?;
    let r = sweep_fault_counts::<T>(&row_cfg, |_| {})?;
    Ok(GateStudy {
        gate: g.summary[0].needed.clone(),
        row: r.summary[0].needed.clone(),
        fault,
        effective_f,
        attempts,
        rows,
        gate_records: g.records,
        row_records: r.records,
    })
}
