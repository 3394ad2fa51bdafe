use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use compadmm_bench::plot::{render_svg, Axis};
use compadmm_bench::trace_io::read_trace;
use compadmm_bench::{run_experiment, BenchError, ExperimentConfig};
use compadmm_core::rate::{fit_rate, GapColumn};

#[derive(Parser)]
#[command(name = "compadmm", version, about = "Stochastic composition ADMM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver in a config and write CSV traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fit log10(gap) against epoch over a window.
    Rate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long, value_enum, default_value_t = Column::Objective)]
        column: Column,
    },
    /// Plot objective gap against oracle calls or time.
    Plot {
        #[arg(long, value_enum)]
        axis: PlotAxis,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Column {
    Objective,
    Bregman,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotAxis {
    Oracle,
    Time,
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let summary = run_experiment(&cfg, &dir, jobs)?;
            if !summary.reference_converged {
                eprintln!(
                    "warning: reference solve stopped at residual {:e}; gaps are unreliable",
                    summary.reference_residual
                );
            }
            for o in &summary.outcomes {
                let last = o.trace.last();
                println!(
                    "{:<24} rep {} {:<24} calls {:>10} gap {}",
                    o.trace.run_id,
                    o.rep,
                    o.algorithm,
                    last.map_or(0, |r| r.oracle_calls),
                    last.and_then(|r| r.objective_gap).map_or("-".into(), |g| format!("{g:.3e}"))
                );
            }
            println!("wrote {}", dir.join("summary.csv").display());
        }
        Command::Rate { trace, from, to, column } => {
            let t = read_trace(&trace)?;
            let column = match column {
                Column::Objective => GapColumn::Objective,
                Column::Bregman => GapColumn::Bregman,
            };
            let fit = fit_rate(&t, from, to, column)?;
            println!(
                "slope {:.6} r2 {:.6} window {}..{} points {}{}",
                fit.slope,
                fit.r_squared,
                fit.from,
                fit.to,
                fit.points,
                if fit.shrunk { " (shrunk)" } else { "" }
            );
        }
        Command::Plot { axis, out, traces } => {
            let axis = match axis {
                PlotAxis::Oracle => Axis::Oracle,
                PlotAxis::Time => Axis::Time,
            };
            let mut series = Vec::new();
            for path in &traces {
                let t = read_trace(path)?;
                series.push((t.run_id.clone(), t));
            }
            let svg = render_svg(&series, axis)?;
            std::fs::write(&out, svg).map_err(|e| BenchError::io(&out, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
