//! Quine-McCluskey two-level minimization.

use std::collections::BTreeSet;

/// A product term: bits set in `mask` are don't-care, the rest must equal
/// the corresponding bits of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Implicant {
    pub value: u32,
    pub mask: u32,
}

impl Implicant {
    pub fn covers(&self, x: u32) -> bool {
        (x & !self.mask) == self.value
    }

    fn merge(&self, other: &Implicant) -> Option<Implicant> {
        if self.mask != other.mask {
            return None;
        }
        let diff = self.value ^ other.value;
        (diff.count_ones() == 1).then_some(Implicant { value: self.value & !diff, mask: self.mask | diff })
    }
}

fn prime_implicants(minterms: &[u32]) -> Vec<Implicant> {
    let mut current: BTreeSet<Implicant> = minterms.iter().map(|&m| Implicant { value: m, mask: 0 }).collect();
    let mut primes = BTreeSet::new();
    while !current.is_empty() {
        let terms: Vec<Implicant> = current.iter().copied().collect();
        let mut used = vec![false; terms.len()];
        let mut next = BTreeSet::new();
        for a in 0..terms.len() {
            for b in a + 1..terms.len() {
                if let Some(m) = terms[a].merge(&terms[b]) {
                    used[a] = true;
                    used[b] = true;
                    next.insert(m);
                }
            }
        }
        primes.extend(terms.iter().zip(&used).filter(|(_, &u)| !u).map(|(t, _)| *t));
        current = next;
    }
    primes.into_iter().collect()
}

/// Cover of `minterms` (over `n` variables) by prime implicants: essential
/// primes first, then greedily the prime covering the most still-uncovered
/// minterms, ties going to the smallest `(value, mask)`. Output is sorted.
pub fn minimize(n: u32, minterms: &[u32]) -> Vec<Implicant> {
    let full = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut mins: Vec<u32> = minterms.iter().map(|m| m & full).collect();
    mins.sort_unstable();
    mins.dedup();
    if mins.is_empty() {
        return Vec::new();
    }
    let primes = prime_implicants(&mins);
    let mut chosen: BTreeSet<Implicant> = BTreeSet::new();
    for &m in &mins {
        let mut covering = primes.iter().filter(|p| p.covers(m));
        if let (Some(p), None) = (covering.next(), covering.next()) {
            chosen.insert(*p);
        }
    }
    let mut uncovered: Vec<u32> = mins.iter().copied().filter(|&m| !chosen.iter().any(|p| p.covers(m))).collect();
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .filter(|p| !chosen.contains(p))
            .max_by(|a, b| {
                let ca = uncovered.iter().filter(|&&m| a.covers(m)).count();
                let cb = uncovered.iter().filter(|&&m| b.covers(m)).count();
                ca.cmp(&cb).then_with(|| b.cmp(a))
            })
            .copied()
            .expect("primes cover every minterm");
        chosen.insert(best);
        uncovered.retain(|&m| !best.covers(m));
    }
    chosen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(cover: &[Implicant], x: u32) -> bool {
        cover.iter().any(|p| p.covers(x))
    }

    #[test]
    fn textbook_example() {
        // f(a,b,c,d) = sum m(4,8,10,11,12,15)
        let mins = [4, 8, 10, 11, 12, 15];
        let cover = minimize(4, &mins);
        for x in 0..16 {
            assert_eq!(eval(&cover, x), mins.contains(&x), "x={x}");
        }
        assert!(cover.len() <= 4);
    }

    #[test]
    fn and_and_xor() {
        assert_eq!(minimize(2, &[3]), vec![Implicant { value: 3, mask: 0 }]);
        assert_eq!(
            minimize(2, &[1, 2]),
            vec![Implicant { value: 1, mask: 0 }, Implicant { value: 2, mask: 0 }]
        );
    }

    #[test]
    fn constants() {
        assert!(minimize(3, &[]).is_empty());
        let all: Vec<u32> = (0..8).collect();
        assert_eq!(minimize(3, &all), vec![Implicant { value: 0, mask: 7 }]);
    }

    #[test]
    fn exhaustive_three_variable_functions() {
        for f in 0u32..256 {
            let mins: Vec<u32> = (0..8).filter(|x| (f >> x) & 1 == 1).collect();
            let cover = minimize(3, &mins);
            for x in 0..8 {
                assert_eq!(eval(&cover, x), (f >> x) & 1 == 1);
            }
        }
    }
}
