use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use morse_decoherence::Level;
use morse_decoherence_cli::calibrate::calibrate;
use morse_decoherence_cli::scenario::run_scenario;
use morse_decoherence_cli::sweep::run_sweep;
use morse_decoherence_cli::{CliError, ScenarioConfig, SweepConfig};

#[derive(Parser)]
#[command(
    name = "morsedec",
    version,
    about = "Decoherence of Morse-oscillator wave packets in a thermal bath"
)]
struct Cli {
    /// Base directory for artifacts; each run writes into a subdirectory
    /// named after its config.
    #[arg(long, global = true, env = "MORSEDEC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Override the config's master-equation level.
    #[arg(long, global = true)]
    level: Option<LevelArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Full,
    Secular,
    Pauli,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Full => Level::Full,
            LevelArg::Secular => Level::Secular,
            LevelArg::Pauli => Level::Pauli,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario.
    Run { config: PathBuf },
    /// Vary one parameter of a scenario and fit the decoherence times.
    Sweep { config: PathBuf },
    /// Coupling constant for a zero-temperature ω01/γ01 ratio.
    Calibrate {
        #[arg(long)]
        ratio: f64,
        #[arg(long, default_value_t = 54.54)]
        s: f64,
        /// Temperature of the printed rate table.
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long)]
        json: bool,
    },
}

fn run_dir(base: &Path, name: Option<&str>, config: &Path) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    base.join(name.unwrap_or(stem))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => ScenarioConfig::load(config).and_then(|mut cfg| {
            if let Some(level) = cli.level {
                cfg.level = level.into();
            }
            let dir = run_dir(&cli.out_dir, cfg.name.as_deref(), config);
            let manifest = run_scenario(&cfg, &dir)?;
            println!(
                "{}: {} samples, {} artifacts in {}",
                cfg.name.as_deref().unwrap_or("run"),
                manifest.diagnostics.samples,
                manifest.artifacts.len() + 1,
                dir.display()
            );
            Ok(())
        }),
        Command::Sweep { config } => SweepConfig::load(config).and_then(|mut cfg| {
            if let Some(level) = cli.level {
                cfg.scenario.level = level.into();
            }
            if cli.threads == 0 {
                return Err(CliError::usage("--threads must be at least 1"));
            }
            let dir = run_dir(&cli.out_dir, cfg.name.as_deref(), config);
            let manifest = run_sweep(&cfg, &dir, cli.threads)?;
            for p in &manifest.points {
                match p.t_d {
                    Some(t) => println!("{} = {}: t_d = {t:.3} t0", cfg.parameter.name(), p.value),
                    None => println!("{} = {}: {}", cfg.parameter.name(), p.value, p.status),
                }
            }
            if let Some(law) = &manifest.law {
                println!(
                    "t_d(x0) = {:.3} t0 * exp(-{:.4} x0), r^2 = {:.4}",
                    law.t_d0, law.kappa, law.r_squared
                );
            }
            Ok(())
        }),
        Command::Calibrate {
            ratio,
            s,
            temperature,
            json,
        } => calibrate(*s, *ratio, *temperature).map(|c| {
            if *json {
                println!("{}", serde_json::to_string_pretty(&c).expect("serializable"));
            } else {
                print!("{c}");
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
