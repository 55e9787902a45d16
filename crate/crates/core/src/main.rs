use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use muskat::cli_io::{self, CliError, Experiment};
use muskat::constants::Model;

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Contour dynamics experiments for the two-phase Muskat problem")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the threshold curve and the decay margin.
    Constants {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        samples: Option<usize>,
        /// Output directory, or a `.csv` path for the curve itself.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Simulate(Common),
    Reverse(Common),
    Decay(Common),
    Contraction(Common),
    Mollifier(Common),
    Staircase(Common),
    Sweep(Common),
}

fn load(path: &Path, experiment: Experiment) -> Result<cli_io::RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::IoFailure { path: path.into(), source: e })?;
    Ok(cli_io::parse_config_for(&text, Some(experiment))?)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (experiment, common) = match cli.command {
        Cmd::Constants { config, model, samples, out } => {
            let mut cfg = match &config {
                Some(p) => load(p, Experiment::Constants)?,
                None => cli_io::RunConfig { experiment: Experiment::Constants, ..Default::default() },
            };
            if let Some(m) = model {
                cfg.model = m;
            } else if config.is_none() {
                return Err(cli_io::ConfigError::MissingRequired("model".into()).into());
            }
            if let Some(s) = samples {
                cfg.samples = s.max(2);
            }
            if let Some(path) = out.as_ref().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).map_err(|e| CliError::IoFailure { path: parent.into(), source: e })?;
                }
                let v = cli_io::write_threshold_curve(path, cfg.model, cfg.samples)?;
                println!("{}: {} (measured {}, bound {})", v.name, if v.pass { "pass" } else { "fail" }, v.measured, v.bound);
                return Ok(v.pass);
            }
            let dir = cli_io::resolve_out_dir(&cfg, out.as_deref());
            return report(cli_io::execute(&cfg, &dir, None)?);
        }
        Cmd::Simulate(c) => (Experiment::Simulate, c),
        Cmd::Reverse(c) => (Experiment::Reverse, c),
        Cmd::Decay(c) => (Experiment::Decay, c),
        Cmd::Contraction(c) => (Experiment::Contraction, c),
        Cmd::Mollifier(c) => (Experiment::Mollifier, c),
        Cmd::Staircase(c) => (Experiment::Staircase, c),
        Cmd::Sweep(c) => (Experiment::Sweep, c),
    };
    let cfg = load(&common.config, experiment)?;
    let dir = cli_io::resolve_out_dir(&cfg, common.out.as_deref());
    report(cli_io::execute(&cfg, &dir, None)?)
}

fn report(outcome: cli_io::CommandOutcome) -> Result<bool, CliError> {
    for v in &outcome.checks {
        println!(
            "{}: {} (measured {}, bound {}, tolerance {})",
            v.name,
            if v.pass { "pass" } else { "fail" },
            v.measured,
            v.bound,
            v.tolerance
        );
    }
    println!("outputs in {}", outcome.out_dir.display());
    Ok(outcome.pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
