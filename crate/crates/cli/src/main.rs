// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use qptkit::algebra::GateLabel;
use qptkit::qpt::Shots;
use qptkit_cli::commands::{
    cmd_chi_plot, cmd_chi_plot_gate, cmd_qpt, cmd_qst, cmd_table, outcome_line, parse_lines, resolve_backend,
    ExperimentPlan, QstRequest,
};

#[derive(Parser)]
#[command(name = "qptkit", version, about = "Process tomography on simulated IBM QX backends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BackendArgs {
    /// `qx4`, `qx2`, or a path to a backend config file.
    #[arg(long, default_value = "qx4")]
    backend: String,
    /// Disable decay regardless of the config.
    #[arg(long)]
    noiseless: bool,
}

#[derive(Args)]
struct ShotArgs {
    /// Shots per circuit execution.
    #[arg(long, conflicts_with = "exact")]
    shots: Option<u64>,
    /// Use exact outcome probabilities (the default when --shots is absent).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ShotArgs {
    fn shots(&self) -> Result<Shots> {
        match self.shots {
            Some(0) => bail!("--shots must be at least 1"),
            Some(n) => Ok(Shots::Sampled(n)),
            None => Ok(Shots::Exact),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run process tomography and write one χ report per (gate, lines).
    Qpt {
        /// Gate name (repeatable): id x y z h s sdg t tdg cx.
        #[arg(long = "gate")]
        gates: Vec<String>,
        /// All nine single-qubit gates.
        #[arg(long)]
        all_gates: bool,
        /// Qubit line(s), e.g. `2` or `3,2` (control first). Repeatable.
        #[arg(long = "lines")]
        lines: Vec<String>,
        /// Every qubit for single-qubit gates, every coupling pair for cx.
        #[arg(long)]
        all_lines: bool,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        shots: ShotArgs,
        /// Also run N seeds starting at --seed and summarize their fidelities.
        #[arg(long)]
        seeds: Option<u64>,
        /// Report the PSD projection of χ instead of the raw inversion.
        #[arg(long)]
        project_psd: bool,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Render a gates × lines fidelity table from a directory of χ reports.
    Table {
        dir: PathBuf,
        /// Where to write fidelity_table.csv and fidelity_table.txt (default: the report directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write real and imaginary χ grids as CSV.
    ChiPlot {
        /// A χ report.
        #[arg(long, required_unless_present = "gate")]
        report: Option<PathBuf>,
        /// Plot the theoretical χ of this gate instead of a report.
        #[arg(long, conflicts_with = "report")]
        gate: Option<String>,
        /// With --report, also write the theoretical grids.
        #[arg(long)]
        theory: bool,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// State tomography of a measurement-free OpenQASM circuit.
    Qst {
        circuit: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        shots: ShotArgs,
        /// Reconstruct from an existing dataset file instead of executing.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        project_psd: bool,
        #[arg(long, default_value = "qst")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Qpt {
            gates,
            all_gates,
            lines,
            all_lines,
            backend,
            shots,
            seeds,
            project_psd,
            out,
        } => {
            let mut labels: Vec<GateLabel> = gates.iter().map(|g| g.parse()).collect::<Result<_, _>>()?;
            if all_gates {
                labels.extend(GateLabel::SINGLE_QUBIT);
            }
            if labels.is_empty() {
                bail!("give --gate or --all-gates");
            }
            if lines.is_empty() && !all_lines {
                bail!("give --lines or --all-lines");
            }
            let plan = ExperimentPlan {
                gates: labels,
                lines: lines.iter().map(|l| parse_lines(l)).collect::<Result<_>>()?,
                all_lines,
                backend: resolve_backend(&backend.backend, backend.noiseless)?,
                shots: shots.shots()?,
                seed: shots.seed,
                seeds,
                project_psd,
                out,
            };
            let outcomes = cmd_qpt(&plan)?;
            let mut all_ok = true;
            for o in &outcomes {
                if o.result.is_ok() {
                    println!("{}", outcome_line(o));
                } else {
                    all_ok = false;
                    eprintln!("{}", outcome_line(o));
                }
            }
            Ok(all_ok)
        }
        Command::Table { dir, out } => {
            let table = cmd_table(&dir)?;
            let out = out.unwrap_or_else(|| dir.clone());
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("fidelity_table.csv"), table.to_csv())?;
            std::fs::write(out.join("fidelity_table.txt"), table.to_text())?;
            print!("{}", table.to_text());
            Ok(true)
        }
        Command::ChiPlot {
            report,
            gate,
            theory,
            out,
        } => {
            let written = match (report, gate) {
                (Some(r), _) => cmd_chi_plot(&r, &out, theory)?,
                (None, Some(g)) => cmd_chi_plot_gate(g.parse()?, &out)?,
                (None, None) => unreachable!("clap requires one of --report/--gate"),
            };
            for p in written {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Qst {
            circuit,
            backend,
            shots,
            dataset,
            project_psd,
            out,
        } => {
            let req = QstRequest {
                circuit,
                backend: resolve_backend(&backend.backend, backend.noiseless)?,
                shots: shots.shots()?,
                seed: shots.seed,
                out,
                dataset_in: dataset,
                project_psd,
            };
            let (d, r, report) = cmd_qst(&req)?;
            println!("dataset {}", d.display());
            println!("report  {}", r.display());
            println!(
                "fidelity {:.6}, min eigenvalue {:.3e}",
                report.fidelity, report.min_eigenvalue
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
