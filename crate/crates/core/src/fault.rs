//! Persistent faults on Sbox tables.
//!
//! A [`FaultSpec`] is a declarative recipe; [`apply_fault`] turns it into a
//! faulted table plus a [`FaultReport`] counting the entries that actually
//! changed. Randomized kinds draw from `ChaCha8Rng` seeded with `desc.seed`.

use std::collections::BTreeSet;
use std::path::Path;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{synthesize_sop, GateFault};
use crate::cipher::SboxTable;
use crate::error::{config, contract, Result};

/// Name of the generator behind every seeded draw, echoed in metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Entries per Sbox row; an 8-bit table has 16 rows, a 4-bit table one.
pub const ROW_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    SwapPair { i: usize, j: usize },
    ReplaceEntries { entries: Vec<(usize, u8)> },
    /// Every entry of each row is replaced by a fresh uniform value, which
    /// may happen to equal the original.
    ReplaceRows { rows: Vec<usize> },
    /// `(index, mask)`: the entry is XORed with `mask`.
    BitFlips { flips: Vec<(usize, u8)> },
    /// Stuck-at faults on the SOP netlist synthesized from the clean table.
    Netlist { faults: Vec<GateFault> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    #[serde(flatten)]
    pub kind: FaultKind,
    #[serde(default)]
    pub seed: u64,
}

impl FaultSpec {
    pub fn new(kind: FaultKind, seed: u64) -> Self {
        FaultSpec { kind, seed }
    }

    /// A description that leaves the table untouched.
    pub fn identity() -> Self {
        FaultSpec::new(FaultKind::ReplaceEntries { entries: Vec::new() }, 0)
    }

    /// `count` distinct random indices, each overwritten with a random value
    /// different from the original.
    pub fn random_entries(clean: &SboxTable, count: usize, seed: u64) -> Result<Self> {
        if count > clean.len() {
            return config(format!("cannot fault {count} of {} entries", clean.len()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, clean.len(), count).into_vec();
        idx.sort_unstable();
        let entries = idx
            .into_iter()
            .map(|i| {
                let old = clean.entries()[i];
                let delta = rng.gen_range(1..clean.len()) as u8;
                (i, old ^ delta)
            })
            .collect();
        Ok(FaultSpec::new(FaultKind::ReplaceEntries { entries }, seed))
    }

    /// `count` distinct random rows, replaced with seeded uniform values.
    pub fn random_rows(clean: &SboxTable, count: usize, seed: u64) -> Result<Self> {
        let nrows = row_count(clean);
        if count > nrows {
            return config(format!("cannot replace {count} of {nrows} rows"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x726f_7773);
        let mut rows = sample(&mut rng, nrows, count).into_vec();
        rows.sort_unstable();
        Ok(FaultSpec::new(FaultKind::ReplaceRows { rows }, seed))
    }

    /// One entry overwritten by the value of a different entry: one output
    /// value disappears and another appears twice.
    pub fn random_overwrite(clean: &SboxTable, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i = rng.gen_range(0..clean.len());
        let j = (i + rng.gen_range(1..clean.len())) % clean.len();
        FaultSpec::new(FaultKind::ReplaceEntries { entries: vec![(i, clean.entries()[j])] }, seed)
    }

    /// Exchange of two distinct random entries.
    pub fn random_swap(clean: &SboxTable, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = sample(&mut rng, clean.len(), 2).into_vec();
        FaultSpec::new(FaultKind::SwapPair { i: pick[0], j: pick[1] }, seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn row_count(table: &SboxTable) -> usize {
    table.len().div_ceil(ROW_LEN)
}

mod ratio_text {
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u32>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u32>, D::Error> {
        let text = String::deserialize(d)?;
        let (n, den) = text.split_once('/').ok_or_else(|| D::Error::custom("expected a/b"))?;
        let n: u32 = n.trim().parse().map_err(D::Error::custom)?;
        let den: u32 = den.trim().parse().map_err(D::Error::custom)?;
        if den == 0 {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, den))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultReport {
    pub effective_fault_count: usize,
    pub faulted_indices: Vec<usize>,
    /// Fault-free inputs over all inputs, reduced.
    #[serde(with = "ratio_text")]
    pub ineffectiveness_ratio: Ratio<u32>,
    pub bijective: bool,
}

impl FaultReport {
    pub fn between(clean: &SboxTable, faulted: &SboxTable) -> Result<Self> {
        let faulted_indices = clean.diff_indices(faulted)?;
        Ok(FaultReport {
            effective_fault_count: faulted_indices.len(),
            ineffectiveness_ratio: Ratio::new((clean.len() - faulted_indices.len()) as u32, clean.len() as u32),
            faulted_indices,
            bijective: faulted.is_bijective(),
        })
    }
}

fn check_index(table: &SboxTable, i: usize) -> Result<()> {
    if i >= table.len() {
        return config(format!("index {i} outside a {}-entry Sbox", table.len()));
    }
    Ok(())
}

fn check_value(table: &SboxTable, v: u8) -> Result<()> {
    if usize::from(v) >= table.len() {
        return config(format!("value {v:#x} exceeds {} bits", table.width()));
    }
    Ok(())
}

/// Apply `desc` to a clean (bijective) table. Deterministic in `(clean, desc)`.
pub fn apply_fault(clean: &SboxTable, desc: &FaultSpec) -> Result<(SboxTable, FaultReport)> {
    if !clean.is_bijective() {
        return contract("faults are applied to a clean, bijective table");
    }
    let mut t = clean.clone();
    match &desc.kind {
        FaultKind::SwapPair { i, j } => {
            check_index(&t, *i)?;
            check_index(&t, *j)?;
            let (a, b) = (t.get(*i as u8), t.get(*j as u8));
            t.set(*i, b);
            t.set(*j, a);
        }
        FaultKind::ReplaceEntries { entries } => {
            for &(i, v) in entries {
                check_index(&t, i)?;
                check_value(&t, v)?;
                t.set(i, v);
            }
        }
        FaultKind::ReplaceRows { rows } => {
            let nrows = row_count(&t);
            let distinct: BTreeSet<_> = rows.iter().collect();
            if distinct.len() != rows.len() {
                return config("ReplaceRows lists a row twice");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(desc.seed);
            for &r in rows {
                if r >= nrows {
                    return config(format!("row {r} outside a {nrows}-row Sbox"));
                }
                for i in r * ROW_LEN..((r + 1) * ROW_LEN).min(t.len()) {
                    let v = rng.gen_range(0..t.len()) as u8;
                    t.set(i, v);
                }
            }
        }
        FaultKind::BitFlips { flips } => {
            for &(i, mask) in flips {
                check_index(&t, i)?;
                check_value(&t, mask)?;
                let v = t.get(i as u8) ^ mask;
                t.set(i, v);
            }
        }
        FaultKind::Netlist { faults } => {
            let mut net = synthesize_sop(clean)?;
            for f in faults {
                net = net.inject_fault(f)?;
            }
            t = net.derive_table()?;
        }
    }
    let report = FaultReport::between(clean, &t)?;
    Ok((t, report))
}

/// Share of inputs whose output is unaffected by the fault.
pub fn ineffectiveness_ratio(clean: &SboxTable, faulted: &SboxTable) -> Result<Ratio<u32>> {
    Ok(FaultReport::between(clean, faulted)?.ineffectiveness_ratio)
}
