use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magweyl_cli::accept;
use magweyl_cli::commands::{self, write_bytes, write_json};
use magweyl_cli::config::ExperimentConfig;
use magweyl_cli::CliError;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "magweyl", version, about = "Magnetic Weyl calculus on phase-space lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML (or JSON) experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides `output` in the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// overrides `seed` in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads for the numeric kernels
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Operator dump and summary for `symbols.f`
    Quantize,
    /// f∘ᴮg with an oracle comparison table
    Compose,
    /// h₀, h₁, h₂ and the commutator-vs-bracket table
    Expand,
    /// Parametrix of `symbols.f`
    Parametrix,
    /// Eigenvalues of the quantized `symbols.f`
    Spectrum,
    /// Covariance residuals of both schemes
    Gauge,
    /// The acceptance battery (desk scale; ignores grid and symbols)
    Accept,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::desk(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn accept_cmd(cfg: &ExperimentConfig, out: &std::path::Path) -> Result<Value, CliError> {
    let report = accept::run(cfg.seed)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    for (name, bytes) in accept::dumps(cfg.seed)? {
        write_bytes(out, &name, &bytes)?;
    }
    let v = write_json(out, "accept.json", serde_json::to_value(&report).expect("report serializes"))?;
    if report.all_pass() {
        Ok(v)
    } else {
        let failed: Vec<String> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
        Err(CliError::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("`--threads`: {e}")))?;
    }
    let cfg = load(cli)?;
    let out = cfg.output_dir(cli.out.as_deref());
    let summary = match cli.command {
        Command::Quantize => commands::quantize(&cfg, &out)?,
        Command::Compose => commands::compose(&cfg, &out)?,
        Command::Expand => commands::expand(&cfg, &out)?,
        Command::Parametrix => commands::parametrix_cmd(&cfg, &out)?,
        Command::Spectrum => commands::spectrum_cmd(&cfg, &out)?,
        Command::Gauge => commands::gauge(&cfg, &out)?,
        Command::Accept => accept_cmd(&cfg, &out)?,
    };
    if !matches!(cli.command, Command::Accept) {
        println!("{}", serde_json::to_string_pretty(&summary).expect("json values serialize"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magweyl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
