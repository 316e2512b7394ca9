//! The key label of a batch file is scoring metadata only: removing or
//! replacing it leaves every attack output unchanged.

use spfa_core::attack::{run_attack, AttackTarget, LabeledBatch, ProgressiveScan};
use spfa_core::cipher::{CipherId, CipherKey};
use spfa_core::experiment::collect;
use spfa_core::fault::{apply_fault, FaultSpec};

fn labeled(cipher: CipherId, key: CipherKey, n: usize) -> LabeledBatch {
    let clean = cipher.clean_sbox();
    let (t, _) = apply_fault(&clean, &FaultSpec::random_entries(&clean, 2, 4).unwrap()).unwrap();
    collect(cipher, &key, &t, n, 21).unwrap()
}

fn strip_key_line(text: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().filter(|kv| !kv.starts_with("key=")).collect();
    std::iter::once(header.join(" ")).chain(lines.map(str::to_string)).collect::<Vec<_>>().join("\n") + "\n"
}

#[test]
fn stripping_or_forging_the_key_changes_nothing() {
    for (cipher, key, fixed) in [
        (CipherId::Led64, CipherKey::Led64(0x0123_4567_89ab_cdef), None),
        (CipherId::Aes128, CipherKey::Aes128([9; 16]), Some(vec![(2usize, 0x11u8), (3, 0x22)])),
    ] {
        let lb = labeled(cipher, key, 400);
        let text = lb.to_text();
        assert!(text.lines().next().unwrap().contains("key="));
        let stripped = strip_key_line(&text);
        assert!(!stripped.contains("key="));
        let forged = text.replace(&format!("key={}", key.to_hex()), &format!("key={}", CipherKey::from_u128(cipher, 1).to_hex()));

        let dir = tempfile::tempdir().unwrap();
        let mut batches = Vec::new();
        for (name, body) in [("labeled", &text), ("stripped", &stripped), ("forged", &forged)] {
            let p = dir.path().join(name);
            std::fs::write(&p, body).unwrap();
            batches.push(LabeledBatch::read(&p).unwrap());
        }
        assert_eq!(batches[0].true_key, Some(key));
        assert_eq!(batches[1].true_key, None);
        assert_ne!(batches[2].true_key, Some(key));

        let clean = cipher.clean_sbox();
        for g in 0..4 {
            let t = AttackTarget::new(cipher, g).unwrap();
            let outs: Vec<_> = batches
                .iter()
                .map(|b| run_attack::<f64>(&b.batch, &t, &clean, fixed.as_deref(), 1).unwrap())
                .collect();
            assert_eq!(outs[0], outs[1]);
            assert_eq!(outs[0], outs[2]);
            let sums: Vec<Vec<u64>> = batches
                .iter()
                .map(|b| {
                    let mut s = ProgressiveScan::new(&b.batch, &t, &clean, fixed.as_deref(), 1).unwrap();
                    s.advance_to(b.batch.len()).unwrap();
                    s.sumsq().to_vec()
                })
                .collect();
            assert_eq!(sums[0], sums[1]);
            assert_eq!(sums[0], sums[2]);
        }
        assert_eq!(batches[0].batch.digest(), batches[1].batch.digest());
    }
}
