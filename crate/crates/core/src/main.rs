use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use einsel::experiments::{replay, run, ConfigOverrides, ExperimentKind, OneOrMany};
use einsel::Error;

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "einsel",
    version,
    about = "Decoherence bounds for weakly coupled subsystems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Default)]
struct RunFlags {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Subsystem dimension(s), comma separated
    #[arg(long = "d-s", value_delimiter = ',')]
    d_s: Option<Vec<usize>>,
    /// Bath dimension(s), comma separated
    #[arg(long = "d-b", value_delimiter = ',')]
    d_b: Option<Vec<usize>>,
    #[arg(long = "d-r")]
    d_r: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "horizon-factor")]
    horizon_factor: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Skip the per-trial trajectory files
    #[arg(long = "no-trajectories")]
    no_trajectories: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification suite: lemma1, thm1, thm2, thm3, thm4 or pointer
    Verify {
        suite: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Coupling-strength sweep of the largest-gap coherence
    Sweep {
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Rerun a recorded run and compare its tables byte for byte
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn vec_or_one(v: Option<Vec<usize>>) -> Option<OneOrMany<usize>> {
    v.map(|mut v| {
        if v.len() == 1 {
            OneOrMany::One(v.remove(0))
        } else {
            OneOrMany::Many(v)
        }
    })
}

fn overrides(kind: ExperimentKind, flags: RunFlags) -> einsel::Result<ConfigOverrides> {
    let file = match &flags.config {
        Some(path) => ConfigOverrides::from_file(path)?,
        None => ConfigOverrides::default(),
    };
    let from_flags = ConfigOverrides {
        experiment: Some(kind),
        d_s: vec_or_one(flags.d_s),
        d_b: vec_or_one(flags.d_b),
        d_r: flags.d_r,
        coupling_scales: flags.scales,
        trials: flags.trials,
        n_samples: flags.samples,
        horizon_factor: flags.horizon_factor,
        seed: flags.seed,
        output_path: flags.out,
        workers: flags.workers,
        write_trajectories: flags.no_trajectories.then_some(false),
        ..Default::default()
    };
    Ok(file.merged_with(from_flags))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ConfigInvalid(_) | Error::InvalidParameter(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::ManifestMissing(_) => EXIT_IO,
        _ => EXIT_ASSERTION,
    }
}

fn execute(cli: Cli) -> einsel::Result<u8> {
    let (kind, flags) = match cli.command {
        Command::Verify { suite, flags } => {
            let kind = ExperimentKind::parse(&suite)
                .filter(|k| *k != ExperimentKind::CouplingSweep)
                .ok_or_else(|| Error::ConfigInvalid(format!("unknown suite '{suite}'")))?;
            (kind, flags)
        }
        Command::Sweep { flags } => (ExperimentKind::CouplingSweep, flags),
        Command::Replay {
            manifest,
            out,
            workers,
        } => {
            let outcome = replay(&manifest, out.as_deref(), workers)?;
            if outcome.identical() {
                println!("replay identical: {} files", outcome.run.files.len());
                return Ok(0);
            }
            for f in &outcome.differing {
                println!("differs: {f}");
            }
            return Ok(EXIT_ASSERTION);
        }
    };
    let config = overrides(kind, flags)?.resolve()?;
    let outcome = run(&config)?;
    println!(
        "{}: {} hard failures, {} warnings, manifest {}",
        kind.name(),
        outcome.hard_failures.len(),
        outcome.warnings.len(),
        outcome.manifest_path.display()
    );
    Ok(if outcome.passed() { 0 } else { EXIT_ASSERTION })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
