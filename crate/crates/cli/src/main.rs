mod eve;
mod load;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qverify_core::chsh::{evaluate, XorGameSpec};
use qverify_core::rigidity::{loglog_slope, run_pipeline, scaling_sweep, single_game_certificate, PipelineConfig};
use qverify_core::sequential::{play_games, structure_report};
use qverify_core::teleport::{exact_frame_check, teleported_counts, Circuit};
use qverify_core::tomography::{
    run_process_tomography, run_state_tomography, BlockMode, DeviceModel, ProcessTomographyConfig, SessionLog,
    StateTomographyConfig,
};
use qverify_core::xz::{conjugation_obstruction, determination_exponent_probe, stabilizer_xz_certificate};

#[derive(Parser)]
#[command(name = "qverify", version, about = "Simulate and check two-prover quantum verification protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single CHSH-type XOR games.
    #[command(subcommand)]
    Chsh(ChshCmd),
    /// Sequential play of many games.
    #[command(subcommand)]
    Seq(SeqCmd),
    /// Rigidity certificates and the sequential construction.
    #[command(subcommand)]
    Rigidity(RigidityCmd),
    /// XZ-determination of states.
    #[command(subcommand)]
    Xz(XzCmd),
    /// State and process tomography sessions.
    #[command(subcommand)]
    Tomo(TomoCmd),
    /// Computation by gate teleportation.
    #[command(subcommand)]
    Compute(ComputeCmd),
    /// The full verifier.
    #[command(subcommand)]
    Eve(EveCmd),
}

#[derive(Subcommand)]
enum ChshCmd {
    /// Win probability, ε and the Tsirelson certificate as JSON.
    Eval {
        /// Strategy file, or a built-in name (`ideal`, `classical_00`, `werner:p`).
        #[arg(long)]
        strategy: String,
        /// XOR game file; CHSH when omitted.
        #[arg(long)]
        game: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SeqCmd {
    /// Monte Carlo play; per-trial win counts as CSV.
    Play {
        #[arg(long)]
        strategy: String,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Slack in Eve's acceptance rule.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// Exact structure report as JSON.
    Structure {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        epsilon: f64,
        /// Number of games, for built-ins.
        #[arg(short = 'n', long)]
        n: Option<usize>,
    },
}

#[derive(Subcommand)]
enum RigidityCmd {
    /// Single-game certificate as JSON.
    Certify {
        #[arg(long)]
        strategy: String,
    },
    /// Run the three construction stages on an `n`-game strategy.
    Pipeline {
        #[arg(long)]
        strategy: String,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Where to write the scaling-sweep CSV.
        #[arg(long)]
        sweep_out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        sweep_instances: u64,
    },
}

#[derive(Subcommand)]
enum XzCmd {
    /// Stabilizer certificate; the file lists signed generators like "+XZ".
    Certify {
        #[arg(long)]
        state: PathBuf,
    },
    /// Randomized probe of how tightly XZ data pins a state down.
    Probe {
        /// Pure or mixed state as JSON.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1")]
        eps_grid: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Two-qubit Bell-pair blocks.
    Bell,
    /// Eleven-qubit resource blocks.
    #[value(name = "paper")]
    Resource,
}

#[derive(Args)]
struct TomoCommon {
    #[arg(long, default_value_t = 100)]
    sessions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-session verdicts as CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Message logs as JSONL, one message per line.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Device model JSON for Alice.
    #[arg(long)]
    alice: Option<PathBuf>,
    /// Device model JSON for Bob.
    #[arg(long)]
    bob: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TomoCmd {
    State {
        /// Number of blocks.
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "bell")]
        mode: Mode,
        #[command(flatten)]
        common: TomoCommon,
    },
    Process {
        /// Number of qubits Alice pairs up; must be even.
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        common: TomoCommon,
    },
}

#[derive(Subcommand)]
enum ComputeCmd {
    /// Outcome histogram as CSV.
    Run {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Frame-corrected output against direct simulation.
    Verify {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum EveCmd {
    Run(eve::RunArgs),
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(io::stdout().lock(), "{text}") {
        // a closed pipe (`| head`) is not an error
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_log(out: &mut impl Write, session: usize, log: &SessionLog) -> Result<()> {
    for e in &log.entries {
        let line = serde_json::json!({
            "session": session,
            "direction": e.direction,
            "round": e.round,
            "payload": e.payload,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn device(path: Option<&Path>) -> Result<DeviceModel> {
    path.map_or(Ok(DeviceModel::Honest), load::json)
}

fn chsh(cmd: ChshCmd) -> Result<ExitCode> {
    let ChshCmd::Eval { strategy, game } = cmd;
    let s = load::single_game(&strategy)?;
    let g = match game {
        Some(p) => load::json(&p)?,
        None => XorGameSpec::chsh(),
    };
    print_json(&evaluate(&s, &g)?)?;
    Ok(ExitCode::SUCCESS)
}

fn seq(cmd: SeqCmd) -> Result<ExitCode> {
    match cmd {
        SeqCmd::Play { strategy, n, trials, seed, out, epsilon } => {
            let s = load::strategy(&strategy)?.with_games(n)?;
            let outcome = play_games(&s, n, trials, seed)?;
            let mut w = csv::Writer::from_writer(writer(out.as_deref())?);
            w.write_record(["trial", "wins", "games", "accepted"])?;
            for t in &outcome.trials {
                let accepted = qverify_core::sequential::eve_accept(t.wins, n, epsilon);
                w.write_record([t.trial.to_string(), t.wins.to_string(), n.to_string(), accepted.to_string()])?;
            }
            w.flush()?;
            eprintln!(
                "mean win fraction {:.6}, acceptance {:.4}",
                outcome.mean_win_fraction(),
                outcome.acceptance_rate(epsilon)
            );
        }
        SeqCmd::Structure { strategy, epsilon, n } => {
            let mut s = load::strategy(&strategy)?;
            if let Some(n) = n {
                s = s.with_games(n)?;
            }
            print_json(&structure_report(&s.to_general()?, epsilon)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn rigidity(cmd: RigidityCmd) -> Result<ExitCode> {
    match cmd {
        RigidityCmd::Certify { strategy } => {
            print_json(&single_game_certificate(&load::single_game(&strategy)?)?)?;
        }
        RigidityCmd::Pipeline { strategy, n, seed, epsilon, sweep_out, sweep_instances } => {
            let s = load::strategy(&strategy)?.with_games(n)?.to_general()?;
            let cfg = PipelineConfig { epsilon, seed, ..PipelineConfig::default() };
            print_json(&run_pipeline(&s, &cfg)?)?;
            if let Some(path) = sweep_out {
                let amplitudes: Vec<f64> = (0..9).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
                let points = scaling_sweep(seed, sweep_instances, 4, &amplitudes)?;
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["instance", "amplitude", "epsilon", "state_distance", "operator_distance"])?;
                for p in &points {
                    w.serialize((p.instance, p.amplitude, p.epsilon, p.state_distance, p.operator_distance))?;
                }
                w.flush()?;
                let fit: Vec<(f64, f64)> = points.iter().map(|p| (p.epsilon, p.state_distance)).collect();
                if let Some(slope) = loglog_slope(&fit) {
                    eprintln!("log-log slope of state distance against epsilon: {slope:.3}");
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn xz(cmd: XzCmd) -> Result<ExitCode> {
    match cmd {
        XzCmd::Certify { state } => {
            let (spec, rotations) = load::stabilizer(&state)?;
            let cert = stabilizer_xz_certificate(&spec, &rotations)?;
            print_json(&cert)?;
            if !cert.certified {
                return Ok(ExitCode::from(1));
            }
        }
        XzCmd::Probe { state, eps_grid, samples, seed } => {
            let rho = load::state(&state)?.density();
            let obstruction = conjugation_obstruction(&rho);
            if obstruction > 1e-9 {
                print_json(&serde_json::json!({
                    "determined": false,
                    "conjugation_obstruction": obstruction,
                }))?;
                return Ok(ExitCode::from(1));
            }
            print_json(&determination_exponent_probe(&rho, &eps_grid, samples, seed)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tomo(cmd: TomoCmd) -> Result<ExitCode> {
    let (common, state_cfg, process_cfg) = match cmd {
        TomoCmd::State { m, mode, common } => {
            let mut cfg = StateTomographyConfig::bell(m);
            if let Mode::Resource = mode {
                cfg.mode = BlockMode::Resource;
            }
            (common, Some(cfg), None)
        }
        TomoCmd::Process { m, common } => (common, None, Some(ProcessTomographyConfig::new(m))),
    };
    let alice = device(common.alice.as_deref())?;
    let bob = device(common.bob.as_deref())?;
    let mut log = common.log.as_deref().map(File::create).transpose()?.map(io::BufWriter::new);
    let mut w = csv::Writer::from_writer(writer(common.out.as_deref())?);
    w.write_record(["session", "k", "accepted", "detail"])?;
    let mut accepted = 0;
    for i in 0..common.sessions {
        let seed = qverify_core::protocol::session_seed(common.seed, i);
        let (k, ok, detail, messages) = if let Some(cfg) = &state_cfg {
            let o = run_state_tomography(cfg, &alice, &bob, seed, false)?;
            let detail = format!("frequency gap {:.5}", o.verdict.worst_frequency_gap);
            (o.session.k, o.verdict.accepted, detail, o.log)
        } else {
            let cfg = process_cfg.as_ref().expect("one of the two");
            let o = run_process_tomography(cfg, &alice, &bob, seed)?;
            let detail = format!("{} violations in {} checks", o.verdict.violations.len(), o.verdict.checks);
            (o.session.k, o.verdict.accepted, detail, o.log)
        };
        accepted += usize::from(ok);
        w.write_record([i.to_string(), k.to_string(), ok.to_string(), detail])?;
        if let Some(out) = log.as_mut() {
            write_log(out, i, &messages)?;
        }
    }
    w.flush()?;
    if let Some(out) = log.as_mut() {
        out.flush()?;
    }
    eprintln!("accepted {accepted} of {}", common.sessions);
    Ok(ExitCode::SUCCESS)
}

fn compute(cmd: ComputeCmd) -> Result<ExitCode> {
    match cmd {
        ComputeCmd::Run { circuit, shots, seed } => {
            let c = Circuit::from_json(&std::fs::read_to_string(&circuit)?)?;
            let counts = teleported_counts(&c, shots, seed)?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["outcome", "count", "frequency"])?;
            for (bits, n) in &counts {
                w.write_record([bits.clone(), n.to_string(), format!("{:.6}", *n as f64 / shots as f64)])?;
            }
            w.flush()?;
        }
        ComputeCmd::Verify { circuit, seed } => {
            let c = Circuit::from_json(&std::fs::read_to_string(&circuit)?)?;
            let check = exact_frame_check(&c, seed)?;
            print_json(&check)?;
            if check.corrected > 1e-9 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Chsh(c) => chsh(c),
        Command::Seq(c) => seq(c),
        Command::Rigidity(c) => rigidity(c),
        Command::Xz(c) => xz(c),
        Command::Tomo(c) => tomo(c),
        Command::Compute(c) => compute(c),
        Command::Eve(EveCmd::Run(args)) => eve::run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
