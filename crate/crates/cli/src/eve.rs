use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;

use qverify_core::protocol::{full_verified_run, ProtocolConfig, SubProtocol};

use crate::device;

#[derive(Args)]
pub struct RunArgs {
    /// Protocol config as JSON; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    sessions: usize,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "eve-out")]
    out_dir: PathBuf,
    /// Run only this sub-protocol: chsh, state, process or computation.
    #[arg(long)]
    pin_protocol: Option<SubProtocol>,
    /// Device model JSON for Alice.
    #[arg(long)]
    alice: Option<PathBuf>,
    /// Device model JSON for Bob.
    #[arg(long)]
    bob: Option<PathBuf>,
}

pub fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ProtocolConfig::from_json(&text).with_context(|| format!("loading {}", p.display()))?
        }
        None => ProtocolConfig::default(),
    };
    if let Some(p) = args.pin_protocol {
        cfg = cfg.pinned(p);
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let alice = device(args.alice.as_deref())?;
    let bob = device(args.bob.as_deref())?;

    let start = Instant::now();
    let (report, records) = full_verified_run(&cfg, args.sessions, seed, &alice, &bob)?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(&args.out_dir)?;
    let mut jsonl = BufWriter::new(File::create(args.out_dir.join("sessions.jsonl"))?);
    for r in &records {
        writeln!(jsonl, "{}", r.to_json_line())?;
    }
    jsonl.flush()?;

    let summary = serde_json::json!({
        "config": cfg,
        "seed": seed,
        "wall_time_s": wall,
        "acceptance_rate": if report.sessions == 0 { None } else { Some(report.accepted as f64 / report.sessions as f64) },
        "report": report,
    });
    fs::write(args.out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    let mut w = csv::Writer::from_path(args.out_dir.join("histogram.csv"))?;
    w.write_record(["outcome", "count", "frequency", "direct"])?;
    let total: usize = report.histogram.values().sum();
    let mut outcomes: Vec<&String> = report.histogram.keys().collect();
    if let Some(d) = &report.direct {
        outcomes.extend(d.keys().filter(|k| !report.histogram.contains_key(*k)));
        outcomes.sort();
    }
    for o in outcomes {
        let count = report.histogram.get(o).copied().unwrap_or(0);
        let freq = if total == 0 { 0.0 } else { count as f64 / total as f64 };
        let direct = report.direct.as_ref().and_then(|d| d.get(o)).copied().unwrap_or(0.0);
        w.write_record([o.clone(), count.to_string(), format!("{freq:.6}"), format!("{direct:.6}")])?;
    }
    w.flush()?;

    eprintln!(
        "{} of {} sessions accepted ({} malformed) in {wall:.2} s",
        report.accepted, report.sessions, report.malformed
    );
    Ok(if report.accept_majority() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
