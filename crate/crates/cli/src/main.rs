use clap::{Args, Parser, Subcommand};
use imagemem::config::ExperimentConfig;
use imagemem::error::Error;
use imagemem::scenario::{self, Overrides, Scenario, ScenarioReport};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulates storage and retrieval of two probe images in a cold-atom memory.
#[derive(Debug, Parser)]
#[command(name = "imagemem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Leakage and retrieved power traces for one storage slot.
    Temporal(RunArgs),
    /// Leaked and retrieved images of each probe alone and both together.
    DualImage(RunArgs),
    /// Visibility and similarity against photons per pulse.
    PhotonSweep(RunArgs),
    /// Retrieved energy against storage time with an exponential fit.
    Decay(RunArgs),
    /// Checks a config and prints its derived quantities.
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed, replacing `scenario.seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Frame count replacing every per-point frame count.
    #[arg(long, value_name = "N")]
    frames: Option<u64>,
}

fn fail(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn output_dir(args: &RunArgs) -> Result<PathBuf, Error> {
    if let Some(out) = &args.out {
        return Ok(out.clone());
    }
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.output.dir.is_empty() {
        return Err(Error::InvalidParameter {
            field: "output.dir".into(),
            reason: "no --out given and the config sets no output directory".into(),
        });
    }
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    Ok(base.join(&cfg.output.dir))
}

fn execute(scenario: Scenario, args: &RunArgs) -> Result<ScenarioReport, Error> {
    let out = output_dir(args)?;
    let overrides = Overrides {
        seed: args.seed,
        frames: args.frames,
    };
    let report = scenario::run(scenario, &args.config, &out, overrides)?;
    if scenario == Scenario::Validate {
        let mut cfg = ExperimentConfig::load(&args.config)?;
        overrides.apply(&mut cfg);
        println!("{}", serde_json::to_string_pretty(&cfg.derived()?).expect("derived quantities serialize"));
    }
    println!(
        "{}",
        json!({
            "scenario": report.scenario,
            "config_hash": report.config_hash,
            "out": out,
            "files": report.files.len(),
        })
    );
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            fail("usage", e.to_string().lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let (scenario, args) = match &cli.command {
        Command::Temporal(a) => (Scenario::Temporal, a),
        Command::DualImage(a) => (Scenario::DualImage, a),
        Command::PhotonSweep(a) => (Scenario::PhotonSweep, a),
        Command::Decay(a) => (Scenario::Decay, a),
        Command::Validate(a) => (Scenario::Validate, a),
    };
    match execute(scenario, args) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            fail(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
