use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shapecf::{cmd_evaluate, cmd_explain, cmd_mine, run, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "shapecf", version, about = "Shapelet-based counterfactual explanations for multivariate time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine class-shapelets from the training split.
    Mine(Common),
    /// Generate counterfactuals for every test instance and target class.
    Explain(Common),
    /// Score stored counterfactuals and write the report.
    Evaluate(Common),
    /// Mine, explain and evaluate in one go.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the top-level `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report only valid counterfactuals.
    #[arg(long)]
    valid_only: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
            valid_only: self.valid_only,
        });
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mine(c) => c.load().and_then(|cfg| cmd_mine(&cfg).map(drop)),
        Command::Explain(c) => c.load().and_then(|cfg| cmd_explain(&cfg).map(drop)),
        Command::Evaluate(c) => c.load().and_then(|cfg| cmd_evaluate(&cfg).map(drop)),
        Command::Run(c) => c.load().and_then(|cfg| {
            let artifacts = run(&cfg)?;
            eprintln!("artifacts in {}", artifacts.run_dir.display());
            Ok(())
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
