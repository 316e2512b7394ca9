//! Histograms, the SEI score and rankings of key hypotheses.
//!
//! For `N` samples over `2^s` bins with counts `c`,
//! `SEI = sum (c/N - 2^-s)^2 = (2^s * sum c^2 - N^2) / (N^2 * 2^s)`,
//! so a hypothesis is fully described by the integer `sum c^2`. Rankings
//! compare those integers and only convert to a float for reporting.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::HypothesisSpace;
use crate::error::{contract, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    width: u32,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(width: u32) -> Self {
        Histogram { width, counts: vec![0; 1 << width], total: 0 }
    }

    pub fn from_values(width: u32, values: impl IntoIterator<Item = u8>) -> Self {
        let mut h = Histogram::new(width);
        for v in values {
            h.add(v);
        }
        h
    }

    /// Takes explicit counts; the length must be a power of two.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let width = counts.len().trailing_zeros();
        debug_assert_eq!(counts.len(), 1 << width);
        let total = counts.iter().sum();
        Histogram { width, counts, total }
    }

    #[inline]
    pub fn add(&mut self, v: u8) {
        let mask = self.counts.len() - 1;
        self.counts[usize::from(v) & mask] += 1;
        self.total += 1;
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn sum_of_squares(&self) -> u64 {
        self.counts.iter().map(|c| c * c).sum()
    }
}

/// Exact SEI from the sum of squared counts.
pub fn sei_from_sumsq(sumsq: u64, n: u64, width: u32) -> Ratio<u128> {
    let n2 = u128::from(n) * u128::from(n);
    let bins = 1u128 << width;
    Ratio::new(u128::from(sumsq) * bins - n2, n2 * bins)
}

pub fn sei_exact(hist: &Histogram) -> Result<Ratio<u128>> {
    if hist.total == 0 {
        return contract("SEI of an empty histogram");
    }
    Ok(sei_from_sumsq(hist.sum_of_squares(), hist.total, hist.width))
}

pub fn sei<T: Scalar>(hist: &Histogram) -> Result<T> {
    sei_exact(hist).map(|r| T::from_ratio(&r))
}

/// Expected SEI of `n` uniform samples over `2^width` bins.
pub fn null_sei_mean<T: Scalar>(n: usize, width: u32) -> T {
    let bins = 1u128 << width;
    T::from_ratio(&Ratio::new(bins - 1, n as u128 * bins))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry<T> {
    pub hypothesis: u32,
    pub sumsq: u64,
    pub score: T,
}

/// Hypotheses by descending SEI, ties by ascending hypothesis value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeiRanking<T> {
    pub space: HypothesisSpace,
    pub n: usize,
    /// Number of hypotheses scored.
    pub searched: u64,
    /// False when only the head of a larger search was kept.
    pub complete: bool,
    pub entries: Vec<RankEntry<T>>,
}

/// `(sumsq, hypothesis)` order used by every ranking.
#[inline]
pub(crate) fn outranks(a: (u64, u32), b: (u64, u32)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl<T: Scalar> SeiRanking<T> {
    /// Rank every hypothesis in `space` from its sum of squares, indexed as
    /// the space enumerates.
    pub(crate) fn from_sumsq(space: HypothesisSpace, n: usize, sumsq: &[u64]) -> Self {
        let mut order: Vec<(u64, u32)> =
            sumsq.iter().enumerate().map(|(i, &s)| (s, space.hypothesis(i as u64))).collect();
        order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Self::from_sorted(space, n, sumsq.len() as u64, true, order)
    }

    pub(crate) fn from_sorted(
        space: HypothesisSpace,
        n: usize,
        searched: u64,
        complete: bool,
        order: Vec<(u64, u32)>,
    ) -> Self {
        let width = space.width;
        let entries = order
            .into_iter()
            .map(|(s, h)| RankEntry { hypothesis: h, sumsq: s, score: T::from_ratio(&sei_from_sumsq(s, n as u64, width)) })
            .collect();
        SeiRanking { space, n, searched, complete, entries }
    }

    pub fn top(&self) -> Option<&RankEntry<T>> {
        self.entries.first()
    }

    /// Rank-1 hypothesis, or `None` if it shares its score with rank 2.
    pub fn unique_top(&self) -> Option<u32> {
        match self.entries.as_slice() {
            [a, b, ..] if a.sumsq == b.sumsq => None,
            [a, ..] => Some(a.hypothesis),
            [] => None,
        }
    }

    /// 1-based rank of `hypothesis`, if it was kept.
    pub fn rank_of(&self, hypothesis: u32) -> Option<usize> {
        self.entries.iter().position(|e| e.hypothesis == hypothesis).map(|p| p + 1)
    }

    /// Rank-1 score over rank-2 score.
    pub fn gap_ratio(&self) -> Option<T> {
        match self.entries.as_slice() {
            [a, b, ..] => Some(a.score / b.score),
            _ => None,
        }
    }

    pub fn head(&self, k: usize) -> &[RankEntry<T>] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn truncate(&mut self, k: usize) {
        if k < self.entries.len() {
            self.entries.truncate(k);
            self.complete = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The defining sum, straight from the formula.
    fn sei_direct(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let q = 1.0 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 / n as f64 - q).powi(2)).sum()
    }

    #[test]
    fn point_mass() {
        let mut c4 = vec![0; 16];
        c4[3] = 77;
        assert_eq!(sei_exact(&Histogram::from_counts(c4)).unwrap(), Ratio::new(15, 16));
        let mut c8 = vec![0; 256];
        c8[200] = 5;
        let h8 = Histogram::from_counts(c8);
        assert_eq!(sei_exact(&h8).unwrap(), Ratio::new(255, 256));
        assert_eq!(sei::<f64>(&h8).unwrap(), 255.0 / 256.0);
    }

    #[test]
    fn uniform_is_zero() {
        for width in [4, 8] {
            let h = Histogram::from_counts(vec![3; 1 << width]);
            assert_eq!(sei::<f64>(&h).unwrap(), 0.0);
            assert_eq!(sei::<f32>(&h).unwrap(), 0.0);
        }
    }

    #[test]
    fn empty_is_contract_violation() {
        assert!(matches!(sei::<f64>(&Histogram::new(4)), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn matches_defining_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let width = if rng.gen() { 4 } else { 8 };
            let n = rng.gen_range(1..3000);
            let h = Histogram::from_values(width, (0..n).map(|_| rng.gen_range(0..(1u32 << width)) as u8));
            let got: f64 = sei(&h).unwrap();
            let want = sei_direct(h.counts());
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
            let bound = (1.0 - (-(width as f64)).exp2()).powi(2)
                + ((1u32 << width) - 1) as f64 * (-(2.0 * width as f64)).exp2();
            assert!(got >= 0.0 && got <= bound + 1e-15);
        }
    }
}
