use std::path::Path;
use std::process::{Command, Output};

fn spfa(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spfa"))
        .args(["--out", out.to_str().unwrap(), "--workers", "2", "--seed", "3"])
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = spfa(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn inject_collect_attack_led() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fault = d.join("fault.json");
    std::fs::write(&fault, r#"{"kind":"replace_entries","entries":[[3,12]]}"#).unwrap();
    let report = ok(d, &["inject", "--cipher", "led64", "--fault", fault.to_str().unwrap()]);
    assert!(report.contains("\"effective_fault_count\": 1"));
    assert_eq!(std::fs::read_to_string(d.join("faulted.sbox")).unwrap().split_whitespace().nth(3), Some("c"));

    ok(d, &["collect", "--cipher", "led64", "--key", "0123456789abcdef", "--fault", fault.to_str().unwrap(), "-n", "1000"]);
    let batch = d.join("batch.txt");
    let text = ok(d, &["attack", "--batch", batch.to_str().unwrap()]);
    assert!(text.contains("master key 0123456789abcdef"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("attack.json")).unwrap()).unwrap();
    assert_eq!(json["correct"], true);
    assert_eq!(json["groups"].as_array().unwrap().len(), 4);
    assert_eq!(json["groups"][0]["ranking"]["entries"].as_array().unwrap().len(), 64);
}

#[test]
fn aes_pinned_attack_and_pfa() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fault = d.join("fault.json");
    std::fs::write(&fault, r#"{"kind":"replace_entries","entries":[[0,1]]}"#).unwrap();
    ok(d, &["collect", "--cipher", "aes128", "--key", "000102030405060708090a0b0c0d0e0f", "--fault", fault.to_str().unwrap(), "-n", "4000"]);
    let batch = d.join("batch.txt");
    // 0x63 = S(0) no longer appears
    let pfa = ok(d, &["pfa-baseline", "--batch", batch.to_str().unwrap(), "--old-value", "63"]);
    assert!(pfa.contains("\"correct\": true"), "{pfa}");
    let out = ok(d, &["attack", "--batch", batch.to_str().unwrap(), "--groups", "1", "--fixed", "2=00,3=00", "--head", "5"]);
    assert!(out.starts_with("group 1: top "), "{out}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("attack.json")).unwrap()).unwrap();
    assert_eq!(json["groups"][0]["ranking"]["entries"].as_array().unwrap().len(), 5);
    assert!(json["master_key"].is_null());
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["sweep", "--fault-counts", "32", "--trials", "1", "--max-n", "2000"]);
    let csv = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("row,f_target,effective_f,trial,group,needed_n"));
    assert_eq!(csv.lines().count(), 3);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 3);
    assert_eq!(meta["generator"], "ChaCha8Rng");
}

#[test]
fn led_study_zero_ciphertexts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["led-study", "--trials", "2", "--max-n", "0"]);
    assert!(out.starts_with("recovered 0/2"), "{out}");
}

#[test]
fn circuit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["circuit", "synth", "--cipher", "led64"]);
    let net = d.join("sbox.net");
    let table = ok(d, &["circuit", "table", "--netlist", net.to_str().unwrap()]);
    assert_eq!(table.trim(), spfa_clean_present());
    let msg = ok(d, &["circuit", "fault", "--netlist", net.to_str().unwrap(), "--gate", "g0", "--pin", "output", "--stuck", "1"]);
    assert!(msg.starts_with("g0 output stuck-at-1: "), "{msg}");
    assert!(d.join("faulted.net").exists());
}

fn spfa_clean_present() -> String {
    ["c", "5", "6", "b", "9", "0", "a", "d", "3", "e", "f", "8", "4", "7", "1", "2"].join(" ")
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = spfa(d, &["attack", "--batch", d.join("missing.txt").to_str().unwrap()]);
    assert!(!o.status.success());
    let o = spfa(d, &["collect", "--cipher", "led64", "--key", "xyz", "-n", "5"]);
    assert!(!o.status.success());
    let o = spfa(d, &["sweep", "--stride", "500", "--max-n", "100", "--trials", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stride"));
}
