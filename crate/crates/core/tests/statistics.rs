//! Monte Carlo checks of the distributions the attack relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spfa_core::attack::{true_hypothesis, AttackTarget, HypothesisSpace, ProgressiveScan};
use spfa_core::cipher::{CipherId, CipherKey, SboxTable};
use spfa_core::experiment::collect;
use spfa_core::fault::{apply_fault, FaultKind, FaultSpec};

fn sei_of(sumsq: u64, n: usize, bins: f64) -> f64 {
    let n = n as f64;
    (sumsq as f64 * bins - n * n) / (n * n * bins)
}

fn aes_pinned_scan(key: &CipherKey, rows: Vec<usize>, n: usize, group: usize, seed: u64) -> (ProgressiveScan, u32) {
    let clean = SboxTable::aes();
    let (t, _) = apply_fault(&clean, &FaultSpec::new(FaultKind::ReplaceRows { rows }, seed)).unwrap();
    let batch = collect(CipherId::Aes128, key, &t, n, seed ^ 0xabc).unwrap().batch;
    let target = AttackTarget::new(CipherId::Aes128, group).unwrap();
    let truth = true_hypothesis(key, group);
    let k = HypothesisSpace::full(8).split(truth);
    let scan = ProgressiveScan::new(&batch, &target, &clean, Some(&[(2, k[2]), (3, k[3])]), 1).unwrap();
    (scan, truth)
}

#[test]
fn unaffected_ciphertext_frequency_matches_hit_model() {
    // a swap of two entries leaves a ciphertext intact iff none of the 160
    // data-path lookups touches them (the key schedule stays clean)
    let clean = SboxTable::aes();
    let (swapped, report) = apply_fault(&clean, &FaultSpec::random_swap(&clean, 17)).unwrap();
    assert_eq!(report.effective_fault_count, 2);
    let key = CipherKey::Aes128(ChaCha8Rng::seed_from_u64(3).gen());
    let n = 10_000;
    let a = collect(CipherId::Aes128, &key, &clean, n, 5).unwrap().batch;
    let b = collect(CipherId::Aes128, &key, &swapped, n, 5).unwrap().batch;
    let same = a.ciphertexts().iter().zip(b.ciphertexts()).filter(|(x, y)| x == y).count();
    let p = (254.0f64 / 256.0).powi(160);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let frac = same as f64 / n as f64;
    assert!((frac - p).abs() <= 3.0 * sigma, "{frac} vs {p} +- {}", 3.0 * sigma);
}

#[test]
fn without_a_fault_the_true_key_is_not_singled_out() {
    let clean = SboxTable::present();
    let mut top = 0;
    let mut flat = 0;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let key = CipherKey::Led64(rng.gen());
        let batch = collect(CipherId::Led64, &key, &clean, 2000, trial).unwrap().batch;
        let group = (trial % 4) as usize;
        let target = AttackTarget::new(CipherId::Led64, group).unwrap();
        let r = spfa_core::attack::run_attack::<f64>(&batch, &target, &clean, None, 1).unwrap();
        top += usize::from(r.unique_top() == Some(true_hypothesis(&key, group)));
        flat += usize::from(r.gap_ratio().unwrap() < 1.5);
    }
    assert!(top <= 1, "true key first in {top}/20 unfaulted trials");
    assert!(flat >= 18, "rank-1/rank-2 below 1.5 in only {flat}/20");
}

#[test]
fn two_faulty_rows_single_out_the_key() {
    let mut wins = 0;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let key = CipherKey::Aes128(rng.gen());
        let r1 = rng.gen_range(0..16);
        let r2 = (r1 + rng.gen_range(1..16)) % 16;
        let (mut scan, truth) = aes_pinned_scan(&key, vec![r1, r2], 5000, (trial % 4) as usize, trial);
        scan.advance_to(5000).unwrap();
        wins += usize::from(scan.is_strict_top(truth));
    }
    assert!(wins >= 18, "{wins}/20");
}

#[test]
fn signal_persists_while_wrong_keys_decay() {
    let key = CipherKey::Aes128([0x5c; 16]);
    let (mut scan, truth) = aes_pinned_scan(&key, vec![1, 12], 8000, 2, 7);
    let idx = scan.space().index_of(truth).unwrap() as usize;
    let null_n = 255.0 / 256.0;
    let mut excess = Vec::new();
    for n in [1000, 2000, 4000, 8000] {
        scan.advance_to(n).unwrap();
        let s = scan.sumsq();
        let wrong: f64 = s.iter().enumerate().filter(|&(j, _)| j != idx).map(|(_, &x)| sei_of(x, n, 256.0)).sum::<f64>()
            / (s.len() - 1) as f64;
        // wrong keys behave like N uniform samples: mean SEI * N ~ 255/256
        assert!((wrong * n as f64 / null_n - 1.0).abs() < 0.1, "N={n}: wrong-key mean {wrong}");
        // excess over the finite-sample term every key carries
        excess.push(sei_of(s[idx], n, 256.0) - null_n / n as f64);
    }
    assert!(scan.is_strict_top(truth));
    // the true key's excess tends to a constant bias rather than to zero
    let (a, b) = (excess[2], excess[3]);
    assert!((b / a - 1.0).abs() < 0.3, "{excess:?}");
    assert!(b > null_n / 8000.0, "{excess:?}");
}
