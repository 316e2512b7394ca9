use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use spfa_core::attack::{
    full_search, pfa_baseline, pfa_needed_n, recover_full_key, run_attack, AttackTarget, FullSearchOptions,
    HypothesisSpace, LabeledBatch, SeiRanking,
};
use spfa_core::cipher::{CipherId, CipherKey, SboxSchedule, SboxTable};
use spfa_core::circuit::{synthesize_sop, GateFault, Netlist, Pin};
use spfa_core::experiment::{
    collect_scheduled, compare_with_pfa, default_workers, fault_hash, gate_fault_study, reproduce_led_study,
    sweep_fault_counts, ExperimentConfig, LedFaultMode, RunMetadata,
};
use spfa_core::fault::{apply_fault, FaultSpec};

#[derive(Parser)]
#[command(name = "spfa", version, about = "Statistical persistent fault analysis lab")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a fault description to the clean Sbox.
    Inject {
        #[arg(long)]
        cipher: CipherId,
        #[arg(long)]
        fault: PathBuf,
    },
    /// Encrypt random plaintexts under a faulted Sbox.
    Collect {
        #[arg(long)]
        cipher: CipherId,
        /// Key in hex.
        #[arg(long)]
        key: String,
        #[arg(long)]
        fault: Option<PathBuf>,
        #[arg(short, long)]
        n: usize,
        /// Fault only this 1-based round.
        #[arg(long)]
        only_round: Option<usize>,
        /// Leave the key out of the batch file.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Rank key hypotheses on a batch.
    Attack {
        #[arg(long)]
        batch: PathBuf,
        /// Groups to attack; all four give a master key.
        #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3])]
        groups: Vec<usize>,
        /// Pinned hypothesis cells as `pos=hexbyte` (AES).
        #[arg(long, value_delimiter = ',')]
        fixed: Vec<String>,
        /// Head-only search of the unpinned AES space.
        #[arg(long)]
        full_search: bool,
        /// Progress file for a resumable full search.
        #[arg(long)]
        progress: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        head: usize,
    },
    /// Needed-N over fault counts.
    Sweep(CampaignArgs),
    /// Single-fault LED key recovery over random keys.
    LedStudy {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Overwrite)]
        mode: ModeArg,
    },
    /// Classical PFA on a batch with a known single fault.
    PfaBaseline {
        #[arg(long)]
        batch: PathBuf,
        /// Clean Sbox output removed by the fault, hex.
        #[arg(long)]
        old_value: String,
    },
    /// PFA baseline against the statistical attack on fault counts.
    Compare(CampaignArgs),
    #[command(subcommand)]
    Circuit(CircuitCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Overwrite,
    Swap,
}

#[derive(Args, Clone)]
struct CampaignArgs {
    /// JSON experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cipher: Option<CipherId>,
    #[arg(long, value_delimiter = ',')]
    fault_counts: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    max_n: Option<usize>,
    /// Search every hypothesis instead of pinning two cells.
    #[arg(long)]
    no_fixed_bytes: bool,
}

#[derive(Subcommand)]
enum CircuitCmd {
    /// Two-level netlist of a clean Sbox.
    Synth {
        #[arg(long)]
        cipher: CipherId,
    },
    /// Force a gate pin to a constant.
    Fault {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        gate: String,
        /// `output` or an input index.
        #[arg(long, default_value = "0")]
        pin: String,
        #[arg(long, default_value_t = 0)]
        stuck: u8,
    },
    /// Truth table of a netlist.
    Table {
        #[arg(long)]
        netlist: PathBuf,
    },
    /// Needed-N under a quarter-table gate fault against row faults.
    Study {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, default_value_t = 51)]
        min_faults: usize,
        #[arg(long, default_value_t = 77)]
        max_faults: usize,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let workers = cli.workers.unwrap_or_else(default_workers);
    match &cli.cmd {
        Cmd::Inject { cipher, fault } => inject(&cli, *cipher, fault),
        Cmd::Collect { cipher, key, fault, n, only_round, unlabeled } => {
            let key = CipherKey::parse(*cipher, key)?;
            let clean = cipher.clean_sbox();
            let desc = match fault {
                Some(p) => FaultSpec::load(p)?,
                None => FaultSpec::identity(),
            };
            let (faulted, _) = apply_fault(&clean, &desc)?;
            let schedule = match only_round {
                Some(round) => SboxSchedule::OnlyRound { round: *round, faulty: &faulted, clean: &clean },
                None => SboxSchedule::Persistent(&faulted),
            };
            let mut lb = collect_scheduled(*cipher, &key, schedule, *n, cli.seed.unwrap_or(0))?;
            lb.batch.meta.fault_hash = Some(fault_hash(&desc));
            if *unlabeled {
                lb.true_key = None;
            }
            let path = cli.out.join("batch.txt");
            lb.write(&path)?;
            println!("wrote {} ciphertexts to {}", n, path.display());
            Ok(())
        }
        Cmd::Attack { batch, groups, fixed, full_search, progress, head } => {
            attack(&cli, workers, batch, groups, fixed, *full_search, progress.clone(), *head)
        }
        Cmd::Sweep(args) => {
            let cfg = campaign(&cli, workers, args)?;
            let res = sweep_fault_counts::<f64>(&cfg, |r| {
                let n = r.needed_n.map_or("DNF".into(), |n| n.to_string());
                eprintln!("f={} trial={} needed_n={n} ({} ms)", r.f_target, r.trial, r.wall_ms);
            })?;
            res.write_csv(&cli.out.join("sweep.csv"))?;
            RunMetadata::new(&cfg, "sweep").write(&cli.out.join("sweep.json"))?;
            for s in &res.summary {
                println!("f={} median={} successes={}/{}", s.f_target, s.needed.median, s.needed.successes, s.needed.trials);
            }
            Ok(())
        }
        Cmd::LedStudy { campaign: args, mode } => {
            let mut cfg = campaign(&cli, workers, &CampaignArgs { no_fixed_bytes: true, ..args.clone() })?;
            if args.cipher.is_none() && args.config.is_none() {
                cfg.cipher = CipherId::Led64;
            }
            if args.trials.is_none() && args.config.is_none() {
                cfg.trials = 50;
            }
            if args.max_n.is_none() && args.config.is_none() {
                cfg.max_n = 1000;
            }
            cfg.led_fault = match mode {
                ModeArg::Overwrite => LedFaultMode::Overwrite,
                ModeArg::Swap => LedFaultMode::Swap,
            };
            let s = reproduce_led_study::<f64>(&cfg, |t| {
                eprintln!("trial {} recovered={} group ms={:?}", t.trial, t.recovered, t.group_wall_ms);
            })?;
            s.write_csv(&cli.out.join("led_study.csv"))?;
            RunMetadata::new(&cfg, "led-study").write(&cli.out.join("led_study.json"))?;
            println!(
                "recovered {}/{} keys; per-group ms max {} mean {} on {} workers",
                s.recovered,
                s.trials.len(),
                s.max_group_ms,
                s.mean_group_ms,
                s.workers
            );
            Ok(())
        }
        Cmd::PfaBaseline { batch, old_value } => {
            let lb = LabeledBatch::read(batch)?;
            let old = u8::from_str_radix(old_value.trim_start_matches("0x"), 16).context("old value")?;
            let needed = pfa_needed_n(&lb.batch)?;
            let res = pfa_baseline(&lb.batch, old)?;
            let key = res.master_key();
            let out = json!({
                "needed_n": needed,
                "ambiguous": res.ambiguous,
                "candidates": res.candidates,
                "master_key": key.map(|k| k.to_hex()),
                "correct": lb.true_key.zip(key).map(|(a, b)| a == b),
            });
            write_json(&cli.out.join("pfa.json"), &out)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Cmd::Compare(args) => {
            let mut cfg = campaign(&cli, workers, args)?;
            if args.fault_counts.is_none() && args.config.is_none() {
                cfg.fault_counts = vec![1, 2, 8, 16];
            }
            let c = compare_with_pfa::<f64>(&cfg, None)?;
            c.write_csv(&cli.out.join("comparison.csv"))?;
            c.sweep.write_csv(&cli.out.join("sweep.csv"))?;
            RunMetadata::new(&cfg, "compare").write(&cli.out.join("comparison.json"))?;
            for r in &c.rows {
                let ours = r.spfa.as_ref().map_or(String::from("-"), |s| s.median.to_string());
                println!("f={:<3} spfa median={ours:<8} published={}", r.faults, r.lit_spfa);
            }
            Ok(())
        }
        Cmd::Circuit(c) => circuit(&cli, workers, c),
    }
}

fn campaign(cli: &Cli, workers: usize, a: &CampaignArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(c) = a.cipher {
        cfg.cipher = c;
    }
    if let Some(f) = &a.fault_counts {
        cfg.fault_counts = f.clone();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.stride {
        cfg.stride = s;
    }
    if let Some(m) = a.max_n {
        cfg.max_n = m;
    }
    if a.no_fixed_bytes || cfg.cipher == CipherId::Led64 {
        cfg.fixed_bytes = false;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.workers.is_some() || a.config.is_none() {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn inject(cli: &Cli, cipher: CipherId, fault: &Path) -> Result<()> {
    let desc = FaultSpec::load(fault)?;
    let (t, report) = apply_fault(&cipher.clean_sbox(), &desc)?;
    fs::write(cli.out.join("faulted.sbox"), t.to_string())?;
    write_json(&cli.out.join("fault_report.json"), &json!({ "fault_hash": fault_hash(&desc), "report": report }))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn parse_fixed(items: &[String]) -> Result<Vec<(usize, u8)>> {
    items
        .iter()
        .map(|s| {
            let (p, v) = s.split_once('=').with_context(|| format!("expected pos=value, got {s:?}"))?;
            Ok((p.parse()?, u8::from_str_radix(v.trim_start_matches("0x"), 16)?))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn attack(
    cli: &Cli,
    workers: usize,
    batch: &Path,
    groups: &[usize],
    fixed: &[String],
    full: bool,
    progress: Option<PathBuf>,
    head: usize,
) -> Result<()> {
    // the key label, if any, is only used to score the result
    let lb = LabeledBatch::read(batch)?;
    let cipher = lb.batch.cipher();
    let clean = cipher.clean_sbox();
    let fixed = parse_fixed(fixed)?;
    if full && !fixed.is_empty() {
        bail!("--full-search and --fixed are exclusive");
    }
    let mut results = Vec::new();
    let mut tops = Vec::new();
    for &g in groups {
        let target = AttackTarget::new(cipher, g)?;
        let mut r: SeiRanking<f64> = if full {
            let space = HypothesisSpace::full(cipher.cell_bits());
            let progress = progress.as_ref().map(|p| p.with_extension(format!("g{g}.json")));
            let opts = FullSearchOptions { workers, head, progress, ..Default::default() };
            full_search(&lb.batch, &target, &clean, &space, &opts)?
        } else {
            run_attack(&lb.batch, &target, &clean, (!fixed.is_empty()).then_some(&fixed[..]), workers)?
        };
        r.truncate(head);
        let top = r.unique_top();
        tops.push(top);
        let truth = lb.true_key.map(|k| spfa_core::attack::true_hypothesis(&k, g));
        println!(
            "group {g}: top {} gap {:.4}{}",
            top.map_or("tie".into(), |h| format!("{h:0w$x}", w = cipher.cell_bits() as usize)),
            r.gap_ratio().unwrap_or(f64::NAN),
            truth.map_or(String::new(), |t| format!(" (true key rank {:?})", r.rank_of(t)))
        );
        results.push(json!({ "target": target, "ranking": r }));
    }
    let master = match (groups, tops.iter().copied().collect::<Option<Vec<u32>>>()) {
        ([0, 1, 2, 3], Some(t)) if fixed.is_empty() => Some(recover_full_key(cipher, [t[0], t[1], t[2], t[3]])),
        _ => None,
    };
    if let Some(k) = master {
        println!("master key {}", k.to_hex());
    }
    let out = json!({
        "batch": batch,
        "batch_digest": lb.batch.digest(),
        "batch_seed": lb.batch.meta.seed,
        "fault_hash": lb.batch.meta.fault_hash,
        "n": lb.batch.len(),
        "workers": workers,
        "fixed": fixed,
        "full_search": full,
        "groups": results,
        "master_key": master.map(|k| k.to_hex()),
        "correct": master.zip(lb.true_key).map(|(a, b)| a == b),
    });
    write_json(&cli.out.join("attack.json"), &out)
}

fn circuit(cli: &Cli, workers: usize, c: &CircuitCmd) -> Result<()> {
    match c {
        CircuitCmd::Synth { cipher } => {
            let net = synthesize_sop(&cipher.clean_sbox())?;
            let path = cli.out.join("sbox.net");
            fs::write(&path, net.to_string())?;
            println!("{} gates written to {}", net.gates().len(), path.display());
        }
        CircuitCmd::Fault { netlist, gate, pin, stuck } => {
            let net = read_netlist(netlist)?;
            let pin = match pin.as_str() {
                "output" => Pin::Output,
                k => Pin::Input(k.parse().context("pin is `output` or an input index")?),
            };
            let fault = GateFault { gate: gate.clone(), pin, stuck: *stuck != 0 };
            let faulted = net.inject_fault(&fault)?;
            fs::write(cli.out.join("faulted.net"), faulted.to_string())?;
            let before = net.derive_table()?;
            let after = faulted.derive_table()?;
            println!("{fault}: {} entries changed", before.diff_indices(&after)?.len());
        }
        CircuitCmd::Table { netlist } => {
            let t: SboxTable = read_netlist(netlist)?.derive_table()?;
            print!("{t}");
        }
        CircuitCmd::Study { campaign: args, min_faults, max_faults } => {
            let mut cfg = campaign(cli, workers, args)?;
            if args.config.is_none() {
                cfg.fault_counts.clear();
            }
            let s = gate_fault_study::<f64>(&cfg, *min_faults..=*max_faults)?;
            write_json(&cli.out.join("gate_study.json"), &serde_json::to_value(&s)?)?;
            println!(
                "{} corrupts {} entries; median needed-N {} vs {} for {} rows (ratio {:.3})",
                s.fault,
                s.effective_f,
                s.gate.median,
                s.row.median,
                s.rows,
                s.ratio()
            );
        }
    }
    Ok(())
}

fn read_netlist(p: &Path) -> Result<Netlist> {
    Ok(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?.parse()?)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}
