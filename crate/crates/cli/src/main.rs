//! `selector`: runs selector experiments and acceptance presets.
//!
//! Exit codes: 0 success, 1 a threshold was missed (or a sum-check run
//! rejected), 2 configuration or parse error, 3 instance over budget.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use selector_core::adversaries::{make_adversary_with_truth, AdversaryKind};
use selector_core::harness::criteria::{run_preset, CriterionResult, PresetOptions, PRESETS};
use selector_core::harness::{demo_advice_removal, run_trials, AdviceDemoConfig, RunConfig, TrialReport};
use selector_core::instance::{
    brute_force_v_phi, eval_f_phi, generate_instance, InstanceTemplate, Oracle, Session, SessionPoints, SessionProver,
    SuccinctInstance, TableOracle,
};
use selector_core::sumcheck::{arithmetize, sumcheck_verify, ConstraintKind, ConstraintPoly, SumcheckVerdict};
use selector_core::{Error, PrimeField, Rng};

const SEED_ENV: &str = "SELECTOR_SEED";

#[derive(Parser)]
#[command(name = "selector", version, about = "Selector protocol experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial configuration or named acceptance presets.
    Run {
        /// JSON run configuration.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Preset name or number, or "all".
        #[arg(long)]
        preset: Option<String>,
        /// Base seed; SELECTOR_SEED takes precedence.
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per cell (configurations only).
        #[arg(long)]
        trials: Option<u64>,
        /// Multiplier on preset trial counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Remove advice from a toy machine with a tournament.
    DemoAdvice {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated instance file.
    GenInstance {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "random-clauses")]
        template: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Field modulus (default 2^31 - 1).
        #[arg(long)]
        p: Option<u64>,
    },
    /// Run both sum-check protocols against an oracle and save the transcripts.
    VerifySumcheck {
        #[arg(long)]
        instance: PathBuf,
        /// Adversary kind, or "honest".
        #[arg(long)]
        adversary: String,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InstanceTooLarge(_)) => 3,
        _ => 2,
    }
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, preset, seed, trials, scale, out, format } => {
            let seed = effective_seed(seed)?;
            match (config, preset) {
                (Some(path), _) => run_config(&path, seed, trials, out.as_deref(), format),
                (None, Some(preset)) => run_presets(&preset, seed, scale, out.as_deref(), format),
                (None, None) => bail!("either --config or --preset is required"),
            }
        }
        Command::DemoAdvice { config, seed, out } => {
            let mut cfg = AdviceDemoConfig::from_json(&read(&config)?)?;
            if let Some(seed) = effective_seed(seed)? {
                cfg.seed = seed;
            }
            let report = demo_advice_removal(&cfg)?;
            eprintln!(
                "{} oracles, good fraction {:.4}: success {}/{} ({:.3}, Wilson [{:.3}, {:.3}])",
                report.oracles,
                report.measured_good_fraction,
                report.successes,
                report.draws,
                report.rate,
                report.wilson_lower,
                report.wilson_upper
            );
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            Ok(report.rate >= 2.0 / 3.0)
        }
        Command::GenInstance { n, m, template, out, seed, p } => {
            let template: InstanceTemplate = template.parse()?;
            let field = match p {
                Some(p) => PrimeField::new(p)?,
                None => PrimeField::default(),
            };
            let inst = generate_instance(template, m, n, field, &mut Rng::new(seed))?;
            inst.check_budget()?;
            if !eval_f_phi(&inst, &brute_force_v_phi(&inst)?)? {
                eprintln!("warning: the instance has no satisfying table; selector runs will refuse it");
            }
            fs::write(&out, inst.to_json()).with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
        Command::VerifySumcheck { instance, adversary, transcript, seed } => {
            verify_sumcheck(&instance, &adversary, &transcript, seed)
        }
    }
}

fn effective_seed(flag: Option<u64>) -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not a u64")))?)),
        Err(_) => Ok(flag),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn run_config(path: &Path, seed: Option<u64>, trials: Option<u64>, out: Option<&Path>, format: Format) -> Result<bool> {
    let mut config = RunConfig::from_json(&read(path)?)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(trials) = trials {
        config.trials = trials;
    }
    let report = run_trials(&config)?;
    let s = &report.summary;
    eprintln!(
        "{} cells, {} trials: mean rate {:.4}, min Wilson lower bound {:.4} (threshold {:.4})",
        s.cells, s.trials, s.mean_rate, s.min_wilson_lower, config.threshold
    );
    let text = match format {
        Format::Json => report.to_json(),
        Format::Csv => report_csv(&report)?,
    };
    emit(out, &text)?;
    Ok(s.passed)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    instance: usize,
    m: usize,
    n: usize,
    opponent: String,
    honest_slot: usize,
    selector: &'a str,
    trials: u64,
    successes: u64,
    rate: f64,
    wilson_lower: f64,
    wilson_upper: f64,
    mean_decision_queries: f64,
    mean_mle_queries: f64,
    mean_sumcheck_queries: f64,
    mean_wall_ms: Option<f64>,
    notes: String,
}

fn report_csv(report: &TrialReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(CsvRow {
            instance: r.instance,
            m: r.m,
            n: r.n,
            opponent: r.opponent.to_string(),
            honest_slot: r.honest_slot,
            selector: r.selector,
            trials: r.trials,
            successes: r.successes,
            rate: r.rate,
            wilson_lower: r.wilson_lower,
            wilson_upper: r.wilson_upper,
            mean_decision_queries: r.mean_queries.decision,
            mean_mle_queries: r.mean_queries.mle,
            mean_sumcheck_queries: r.mean_queries.sumcheck,
            mean_wall_ms: r.mean_wall_ms,
            notes: r.notes.join("; "),
        })?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn run_presets(key: &str, seed: Option<u64>, scale: f64, out: Option<&Path>, format: Format) -> Result<bool> {
    if !(scale > 0.0) {
        return Err(Error::Config(format!("scale {scale} must be positive")).into());
    }
    let opts = PresetOptions { seed: seed.unwrap_or(0), scale, ..PresetOptions::default() };
    let keys: Vec<String> = if key == "all" {
        PRESETS.iter().map(|(_, name)| name.to_string()).collect()
    } else {
        vec![key.to_string()]
    };
    let mut results: Vec<CriterionResult> = Vec::new();
    for key in &keys {
        let r = run_preset(key, &opts)?;
        eprintln!("{}", r.line());
        results.push(r);
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&results)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "name", "passed", "summary"])?;
            for r in &results {
                w.write_record([r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.summary.clone()])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(out, &text)?;
    Ok(results.iter().all(|r| r.passed))
}

#[derive(Serialize)]
struct SumcheckRecord {
    adversary: String,
    g1: SumcheckVerdict,
    g2: SumcheckVerdict,
}

fn verify_sumcheck(instance: &Path, adversary: &str, transcript: &Path, seed: u64) -> Result<bool> {
    let inst = SuccinctInstance::from_json(&read(instance)?)?;
    inst.check_budget()?;
    let truth = brute_force_v_phi(&inst)?;
    if !eval_f_phi(&inst, &truth)? {
        eprintln!("warning: the instance has no satisfying table, so no table makes the constraints vanish");
    }
    let mut rng = Rng::new(seed);
    let mut oracle: Box<dyn Oracle> = if adversary == "honest" {
        Box::new(TableOracle::new(&inst, truth)?)
    } else {
        let kind: AdversaryKind = adversary.parse()?;
        Box::new(make_adversary_with_truth(kind, &inst, &truth, &mut rng)?)
    };
    let session = RefCell::new(Session::new(oracle.as_mut(), &inst));
    let arith = arithmetize(inst.phi());
    let mut run = |kind| {
        let mut f = SessionPoints(&session);
        let mut c = ConstraintPoly::new(kind, &inst, &arith, &mut f);
        sumcheck_verify(&mut c, &mut SessionProver(&session), &mut rng)
    };
    let g1 = run(ConstraintKind::G1)?;
    let g2 = run(ConstraintKind::G2)?;
    let accepted = g1.accepted && g2.accepted;
    for (name, v) in [("G1", &g1), ("G2", &g2)] {
        match (v.failure, v.failed_round) {
            (Some(f), Some(round)) => println!("{name}: rejected ({f:?} in round {round})"),
            _ => println!("{name}: accepted"),
        }
    }
    let record = SumcheckRecord { adversary: adversary.to_string(), g1, g2 };
    fs::write(transcript, serde_json::to_string_pretty(&record)?)
        .with_context(|| format!("writing {}", transcript.display()))?;
    Ok(accepted)
}
