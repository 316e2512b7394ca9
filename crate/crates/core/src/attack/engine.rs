//! Exhaustive hypothesis scan.
//!
//! The free hypothesis positions are split into a prefix (all but the last)
//! and the last position. Per prefix the XOR of every other position's
//! contribution is computed once per ciphertext; the inner loop over the
//! last position then costs one table lookup and one histogram increment
//! per ciphertext. Prefix ranges are dealt out to workers in contiguous
//! blocks and written to disjoint output slices, so the result does not
//! depend on the worker count.

use std::ops::Range;

use super::path::{extract_columns, ColumnPath};
use super::sei::outranks;
use super::{attack_space, check_sbox, AttackTarget, CiphertextBatch, HypothesisSpace, SeiRanking};
use crate::cipher::SboxTable;
use crate::error::{config, contract, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub(crate) bins: usize,
    pub(crate) last: usize,
    prefix_pos: Vec<usize>,
    pub(crate) prefixes: u64,
}

impl Layout {
    pub(crate) fn new(space: &HypothesisSpace) -> Self {
        let free = space.free_positions();
        let (&last, prefix_pos) = free.split_last().expect("spaces keep a free position");
        Layout {
            bins: 1 << space.width,
            last,
            prefix_pos: prefix_pos.to_vec(),
            prefixes: 1u64 << (space.width as usize * prefix_pos.len()),
        }
    }

    fn key(&self, space: &HypothesisSpace, p: u64) -> [u8; 4] {
        let mut k = space.pinned.map(|v| v.unwrap_or(0));
        let n = self.prefix_pos.len();
        for (j, &pos) in self.prefix_pos.iter().enumerate() {
            k[pos] = ((p >> (space.width as usize * (n - 1 - j))) & (self.bins as u64 - 1)) as u8;
        }
        k
    }
}

/// XOR of every position's contribution except `last`.
fn partial(path: &ColumnPath, lay: &Layout, k: [u8; 4], cols: &[[u8; 4]], u: &mut Vec<u8>) {
    u.clear();
    u.extend(cols.iter().map(|c| {
        (0..4)
            .filter(|&r| r != lay.last)
            .fold(path.constant, |acc, r| acc ^ path.tables[r][usize::from(c[r] ^ k[r])])
    }));
}

struct Job<'a> {
    path: &'a ColumnPath,
    cols: &'a [[u8; 4]],
    lastcol: &'a [u8],
    space: &'a HypothesisSpace,
    lay: &'a Layout,
}

impl Job<'_> {
    fn run(&self, prefixes: Range<u64>, out: &mut [u64]) {
        let tl = &self.path.tables[self.lay.last];
        let bins = self.lay.bins;
        let mut u = Vec::with_capacity(self.cols.len());
        let mut hist = [0u32; 256];
        for (p, slot) in prefixes.zip(out.chunks_mut(bins)) {
            partial(self.path, self.lay, self.lay.key(self.space, p), self.cols, &mut u);
            for (v, s) in slot.iter_mut().enumerate() {
                hist[..bins].fill(0);
                for (&ui, &ci) in u.iter().zip(self.lastcol) {
                    hist[usize::from(ui ^ tl[usize::from(ci ^ v as u8)])] += 1;
                }
                *s = hist[..bins].iter().map(|&c| u64::from(c) * u64::from(c)).sum();
            }
        }
    }
}

pub(crate) fn split(total: u64, workers: usize) -> u64 {
    total.div_ceil(workers.max(1) as u64).max(1)
}

/// Sum of squared counts for every hypothesis whose prefix is in `prefixes`,
/// in enumeration order.
pub(crate) fn scan_range(
    path: &ColumnPath,
    cols: &[[u8; 4]],
    space: &HypothesisSpace,
    prefixes: Range<u64>,
    workers: usize,
) -> Vec<u64> {
    let lay = Layout::new(space);
    let lastcol: Vec<u8> = cols.iter().map(|c| c[lay.last]).collect();
    let job = Job { path, cols, lastcol: &lastcol, space, lay: &lay };
    let count = prefixes.end - prefixes.start;
    let mut out = vec![0u64; count as usize * lay.bins];
    let per = split(count, workers);
    if workers <= 1 {
        job.run(prefixes, &mut out);
        return out;
    }
    std::thread::scope(|s| {
        for (w, slice) in out.chunks_mut(per as usize * lay.bins).enumerate() {
            let start = prefixes.start + w as u64 * per;
            let end = (start + per).min(prefixes.end);
            let job = &job;
            s.spawn(move || job.run(start..end, slice));
        }
    });
    out
}

pub(crate) fn scan(path: &ColumnPath, cols: &[[u8; 4]], space: &HypothesisSpace, workers: usize) -> Vec<u64> {
    scan_range(path, cols, space, 0..Layout::new(space).prefixes, workers)
}

/// Per-hypothesis histograms kept across a growing prefix of a batch, so
/// rankings at increasing `N` cost one pass over the data in total.
pub struct ProgressiveScan {
    path: ColumnPath,
    cols: Vec<[u8; 4]>,
    lastcol: Vec<u8>,
    space: HypothesisSpace,
    lay: Layout,
    workers: usize,
    hists: Vec<u32>,
    sumsq: Vec<u64>,
    done: usize,
}

/// Histogram memory limit for a progressive scan.
const MAX_PROGRESSIVE_CELLS: u64 = 1 << 26;

impl ProgressiveScan {
    pub fn new(
        batch: &CiphertextBatch,
        target: &AttackTarget,
        clean: &SboxTable,
        fixed: Option<&[(usize, u8)]>,
        workers: usize,
    ) -> Result<Self> {
        let space = attack_space(target, fixed)?;
        let lay = Layout::new(&space);
        let cells = space.len() * lay.bins as u64;
        if cells > MAX_PROGRESSIVE_CELLS {
            return config(format!("{} hypotheses are too many to track progressively", space.len()));
        }
        let inv = check_sbox(target, clean)?;
        let path = ColumnPath::for_target(target, &inv);
        let cols = extract_columns(target, batch.ciphertexts());
        let lastcol = cols.iter().map(|c| c[lay.last]).collect();
        Ok(ProgressiveScan {
            path,
            cols,
            lastcol,
            hists: vec![0; cells as usize],
            sumsq: vec![0; space.len() as usize],
            space,
            lay,
            workers: workers.max(1),
            done: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.done
    }

    pub fn capacity(&self) -> usize {
        self.cols.len()
    }

    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    /// Sums of squared counts in enumeration order.
    pub fn sumsq(&self) -> &[u64] {
        &self.sumsq
    }

    /// Fold in ciphertexts up to (not including) index `n`.
    pub fn advance_to(&mut self, n: usize) -> Result<()> {
        if n > self.cols.len() {
            return config(format!("batch holds {} ciphertexts, asked for {n}", self.cols.len()));
        }
        if n <= self.done {
            return Ok(());
        }
        let range = self.done..n;
        let bins = self.lay.bins;
        let per = split(self.lay.prefixes, self.workers) as usize;
        let (path, lay, space) = (&self.path, &self.lay, &self.space);
        let cols = &self.cols[range.clone()];
        let lastcol = &self.lastcol[range];
        let work = |first: usize, hists: &mut [u32], sumsq: &mut [u64]| {
            let tl = &path.tables[lay.last];
            let mut u = Vec::with_capacity(cols.len());
            for (j, (h, s)) in hists.chunks_mut(bins * bins).zip(sumsq.chunks_mut(bins)).enumerate() {
                partial(path, lay, lay.key(space, (first + j) as u64), cols, &mut u);
                for (v, (hv, sv)) in h.chunks_mut(bins).zip(s.iter_mut()).enumerate() {
                    let mut acc = *sv;
                    for (&ui, &ci) in u.iter().zip(lastcol) {
                        let slot = &mut hv[usize::from(ui ^ tl[usize::from(ci ^ v as u8)])];
                        acc += 2 * u64::from(*slot) + 1;
                        *slot += 1;
                    }
                    *sv = acc;
                }
            }
        };
        if self.workers == 1 {
            work(0, &mut self.hists, &mut self.sumsq);
        } else {
            let work = &work;
            std::thread::scope(|s| {
                for (w, (h, q)) in
                    self.hists.chunks_mut(per * bins * bins).zip(self.sumsq.chunks_mut(per * bins)).enumerate()
                {
                    s.spawn(move || work(w * per, h, q));
                }
            });
        }
        self.done = n;
        Ok(())
    }

    pub fn ranking<T: Scalar>(&self) -> Result<SeiRanking<T>> {
        if self.done == 0 {
            return contract("no ciphertexts processed yet");
        }
        Ok(SeiRanking::from_sumsq(self.space, self.done, &self.sumsq))
    }

    /// 1-based rank of `h`; `None` if `h` is outside the searched space.
    pub fn rank_of(&self, h: u32) -> Option<usize> {
        let idx = self.space.index_of(h)? as usize;
        let me = (self.sumsq[idx], idx as u32);
        Some(1 + self.sumsq.iter().enumerate().filter(|&(j, &s)| outranks((s, j as u32), me)).count())
    }

    /// Whether `h` scores strictly above every other hypothesis.
    pub fn is_strict_top(&self, h: u32) -> bool {
        let Some(idx) = self.space.index_of(h) else { return false };
        let mine = self.sumsq[idx as usize];
        self.sumsq.iter().enumerate().all(|(j, &s)| j == idx as usize || s < mine)
    }

    /// Rank-1 score over rank-2 score, from the integer sums.
    pub fn gap_ratio<T: Scalar>(&self) -> Option<T> {
        let (mut a, mut b) = (0u64, 0u64);
        for &s in &self.sumsq {
            if s > a {
                b = a;
                a = s;
            } else if s > b {
                b = s;
            }
        }
        if self.done == 0 || self.sumsq.len() < 2 {
            return None;
        }
        let n = self.done as u64;
        let w = self.space.width;
        let sa = T::from_ratio(&super::sei_from_sumsq(a, n, w));
        let sb = T::from_ratio(&super::sei_from_sumsq(b, n, w));
        Some(sa / sb)
    }
}
