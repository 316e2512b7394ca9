//! Head-only search of large hypothesis spaces (the unpinned AES group,
//! 2^32 hypotheses), with an optional JSON progress file for resuming.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::engine::{scan_range, Layout};
use super::path::{extract_columns, ColumnPath};
use super::sei::outranks;
use super::{check_sbox, AttackTarget, CiphertextBatch, HypothesisSpace, SeiRanking};
use crate::cipher::SboxTable;
use crate::error::{config, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct FullSearchOptions {
    pub workers: usize,
    /// Entries kept at the top of the ranking.
    pub head: usize,
    /// Prefixes scanned between progress saves.
    pub chunk_prefixes: u64,
    pub progress: Option<PathBuf>,
    /// Restrict the scan to these prefixes (all free positions but the last).
    pub prefix_range: Option<(u64, u64)>,
    /// Called after every chunk with `(done, total)` prefixes.
    pub on_chunk: Option<fn(u64, u64)>,
}

impl Default for FullSearchOptions {
    fn default() -> Self {
        FullSearchOptions { workers: 1, head: 64, chunk_prefixes: 1 << 12, progress: None, prefix_range: None, on_chunk: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullSearchProgress {
    pub batch_digest: String,
    pub target: AttackTarget,
    pub space: HypothesisSpace,
    pub n: usize,
    pub start_prefix: u64,
    pub next_prefix: u64,
    pub end_prefix: u64,
    /// `(hypothesis, sumsq)`, best first.
    pub head: Vec<(u32, u64)>,
}

fn merge(head: &mut Vec<(u64, u32)>, k: usize, cand: (u64, u32)) {
    if head.len() == k && !outranks(cand, *head.last().expect("k > 0")) {
        return;
    }
    let pos = head.partition_point(|&e| outranks(e, cand));
    head.insert(pos, cand);
    head.truncate(k);
}

pub fn full_search<T: Scalar>(
    batch: &CiphertextBatch,
    target: &AttackTarget,
    clean: &SboxTable,
    space: &HypothesisSpace,
    opts: &FullSearchOptions,
) -> Result<SeiRanking<T>> {
    if opts.head == 0 || opts.chunk_prefixes == 0 {
        return config("head size and chunk size must be positive");
    }
    target.validate()?;
    let inv = check_sbox(target, clean)?;
    let path = ColumnPath::for_target(target, &inv);
    let cols = extract_columns(target, batch.ciphertexts());
    let lay = Layout::new(space);
    let (start, end) = opts.prefix_range.unwrap_or((0, lay.prefixes));
    if start >= end || end > lay.prefixes {
        return config(format!("prefix range {start}..{end} outside 0..{}", lay.prefixes));
    }

    let mut state = FullSearchProgress {
        batch_digest: batch.digest(),
        target: *target,
        space: *space,
        n: batch.len(),
        start_prefix: start,
        next_prefix: start,
        end_prefix: end,
        head: Vec::new(),
    };
    if let Some(p) = opts.progress.as_ref().filter(|p| p.exists()) {
        let saved: FullSearchProgress = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        let same = saved.batch_digest == state.batch_digest
            && saved.target == state.target
            && saved.space == state.space
            && saved.n == state.n
            && (saved.start_prefix, saved.end_prefix) == (start, end);
        if !same {
            return config(format!("progress file {} belongs to a different search", p.display()));
        }
        state = saved;
    }
    let mut head: Vec<(u64, u32)> = state.head.iter().map(|&(h, s)| (s, h)).collect();

    while state.next_prefix < end {
        let stop = (state.next_prefix + opts.chunk_prefixes).min(end);
        let out = scan_range(&path, &cols, space, state.next_prefix..stop, opts.workers);
        let base = state.next_prefix * lay.bins as u64;
        for (i, &s) in out.iter().enumerate() {
            merge(&mut head, opts.head, (s, space.hypothesis(base + i as u64)));
        }
        state.next_prefix = stop;
        if let Some(p) = &opts.progress {
            state.head = head.iter().map(|&(s, h)| (h, s)).collect();
            let tmp = p.with_extension("tmp");
            std::fs::write(&tmp, serde_json::to_string(&state)?)?;
            std::fs::rename(&tmp, p)?;
        }
        if let Some(cb) = opts.on_chunk {
            cb(state.next_prefix - start, end - start);
        }
    }

    let searched = (end - start) * lay.bins as u64;
    let complete = head.len() as u64 == searched;
    Ok(SeiRanking::from_sorted(*space, batch.len(), searched, complete, head))
}
