//! Scenario-driven command line for the asymptotic pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use kfasym_core::pipeline;
use kfasym_core::scenario::Scenario;
use kfasym_core::verify::run_verify;

#[derive(Parser)]
#[command(
    name = "kfasym",
    about = "Global-in-time tunnel asymptotics for Kolmogorov-Feller-type equations by Hamiltonian characteristics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward pipeline: characteristics, manifold snapshots, value
    /// function, densities, shocks, and the asymptotic solution files.
    Forward {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's snapshot times.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        snapshot_times: Option<Vec<f64>>,
    },
    /// Run the backward program on top of a forward run: time reversal,
    /// terra-incognita fans, reconstruction fills, lemma gate, weak limits.
    Backward {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Execute the full acceptance battery and write report.json; exits
    /// nonzero if any criterion fails.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Oracle sweep over the scenario's epsilon ladder at the pre-caustic
    /// probe time.
    SweepEps {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's epsilon list.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::from_path(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Forward {
            scenario,
            out,
            snapshot_times,
        } => {
            let mut sc = load(&scenario)?;
            if let Some(times) = snapshot_times {
                sc.run.snapshot_times = times;
            }
            let art = pipeline::run_forward(&sc)?;
            let files = pipeline::write_forward_artifacts(&art, &out)?;
            println!(
                "forward: caustic = {}, {} shock records, {} files in {}",
                art.caustic
                    .map(|t| format!("{t:.6}"))
                    .unwrap_or_else(|| "none".into()),
                art.shock_records.len(),
                files.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Backward { scenario, out } => {
            let sc = load(&scenario)?;
            let fwd = pipeline::run_forward(&sc)?;
            pipeline::write_forward_artifacts(&fwd, &out)?;
            let bwd = pipeline::run_backward(&sc, &fwd)?;
            pipeline::write_backward_artifacts(&bwd, &sc, &out)?;
            println!(
                "backward: reversal sup error {:.3e}, {} fan(s), {} weak-limit tables in {}",
                bwd.reversal_sup_error,
                bwd.terra.anchors.len(),
                bwd.weak_limits.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { scenario, out } => {
            let sc = load(&scenario)?;
            let report = run_verify(&sc, Some(&out))?;
            for c in &report.criteria {
                c.print_line();
            }
            println!(
                "schema validation: {}",
                if report.schema_ok { "PASS" } else { "FAIL" }
            );
            if report.all_pass {
                println!(
                    "all criteria passed; report at {}",
                    out.join("report.json").display()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!(
                    "FAILURES present; report at {}",
                    out.join("report.json").display()
                );
                Ok(ExitCode::FAILURE)
            }
        }
        Command::SweepEps { scenario, out, eps } => {
            let mut sc = load(&scenario)?;
            if let Some(eps) = eps {
                sc.run.eps = eps;
            }
            let fwd = pipeline::run_forward(&sc)?;
            let files = pipeline::write_oracle_sweep(&sc, &fwd, &out)?;
            println!("sweep-eps: {} oracle files in {}", files.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
