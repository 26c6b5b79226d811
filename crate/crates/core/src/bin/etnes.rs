use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etnes::output::{read_trace_file, render_comparison, render_sweep};
use etnes::run::run_to_dir;
use etnes::scenario::{preset_source, Scenario, PRESETS};
use etnes::sim::{compare_series, omega_sweep, SimMode};
use etnes::{Error, Result};

#[derive(Parser)]
#[command(name = "etnes", version, about = "Event-triggered Nash equilibrium seeking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimOverrides {
    /// Simulate the original loop or its average system
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SimMode>,
    /// Integration step in seconds
    #[arg(long)]
    dt: Option<f64>,
    /// Final time in seconds
    #[arg(long)]
    horizon: Option<f64>,
    /// Keep every n-th sample in the trace file
    #[arg(long)]
    decimate: Option<usize>,
    /// Reserved; runs are deterministic
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file or preset and write trace, events and report
    Run {
        scenario: String,
        #[command(flatten)]
        overrides: SimOverrides,
        #[arg(long, env = "ETNES_OUT_DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Compare two trace files, or sweep the base frequency of a scenario
    Compare {
        /// Two trace CSV files
        #[arg(num_args = 0..=2)]
        traces: Vec<PathBuf>,
        /// Scenario to sweep instead of comparing files
        #[arg(long, conflicts_with = "traces")]
        sweep: Option<String>,
        /// Base-frequency multipliers for the sweep
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        factors: Vec<f64>,
        #[command(flatten)]
        overrides: SimOverrides,
    },
    /// List the built-in presets
    Presets,
    /// Print a preset as an editable scenario file
    ExportPreset {
        name: String,
        /// Write to this file instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Load and check a scenario without simulating
    Validate { scenario: String },
}

fn parse_mode(s: &str) -> std::result::Result<SimMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(target: &str, o: &SimOverrides) -> Result<Scenario> {
    let mut sc = Scenario::load(target)?;
    sc.override_sim(o.mode, o.dt, o.horizon, o.decimate)?;
    for w in &sc.warnings {
        eprintln!("warning: {w}");
    }
    Ok(sc)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { scenario, overrides, out_dir } => {
            let sc = load(&scenario, &overrides)?;
            let dir = out_dir.or_else(|| sc.spec.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
            let (files, outcome) = run_to_dir(&sc, &dir)?;
            for p in [&files.trace, &files.events, &files.report] {
                println!("wrote {}", p.display());
            }
            match outcome.failure {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Compare { traces, sweep, factors, overrides } => {
            if let Some(target) = sweep {
                let sc = load(&target, &overrides)?;
                let rows = omega_sweep(&sc.game, &sc.dither, &sc.trigger, &sc.sim, &factors)?;
                print!("{}", render_sweep(&rows));
                return Ok(());
            }
            let [a, b] = <[PathBuf; 2]>::try_from(traces)
                .map_err(|_| Error::InvalidConfig { field: "compare".into(), reason: "expected two trace files or --sweep".into() })?;
            let (ta, tb) = (read_trace_file(&a)?, read_trace_file(&b)?);
            let c = compare_series(&ta.times, &ta.theta_hat, &tb.times, &tb.theta_hat)?;
            print!("{}", render_comparison(&c));
            Ok(())
        }
        Command::Presets => {
            for (name, desc, _) in PRESETS {
                println!("{name}\t{desc}");
            }
            Ok(())
        }
        Command::ExportPreset { name, output } => {
            let src = preset_source(&name)?;
            match output {
                Some(p) => write_file(&p, src),
                None => {
                    print!("{src}");
                    Ok(())
                }
            }
        }
        Command::Validate { scenario } => {
            let sc = load(&scenario, &SimOverrides { mode: None, dt: None, horizon: None, decimate: None, seed: None })?;
            println!("{}: ok ({} players, {} warnings)", sc.name, sc.game.players(), sc.warnings.len());
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
