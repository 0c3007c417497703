use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use twinsplit::io::to_json;
use twinsplit::sweep::SweepTargets;
use twinsplit_cli::{
    cmd_analyze, cmd_simulate, cmd_sweep, cmd_verify, format_verify_report, parse_grid, resolve, verify_config,
    CalibrationPlan, Params, Preset,
};

#[derive(Parser)]
#[command(name = "twinsplit", version, about = "Split twin-Fock campaigns and the two-cloud separability witness")]
struct Cli {
    #[command(flatten)]
    params: Params,
    /// TOML file with any of the parameter flags (use `_` for `-`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from a built-in parameter set; the config file and flags override it.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a shot campaign into a CSV file.
    Simulate {
        #[arg(long, default_value = "shots.csv")]
        out: PathBuf,
        /// Also write detection-noise calibration shots here.
        #[arg(long)]
        calibration_out: Option<PathBuf>,
        /// Nominal atom numbers of the calibration grid.
        #[arg(long, default_value = "1000,2000,3000,4000,5000")]
        calibration_grid: String,
        #[arg(long, default_value_t = 10_000)]
        calibration_shots: usize,
    },
    /// Estimate the criterion per atom-number bin, with bootstrap errors.
    Analyze {
        shots: PathBuf,
        /// Calibration CSV to fit the detection noise from.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Output directory for results.json and the figure tables.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Check the separability bound and its derivation numerically.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the margin tolerance (a positive value forces failures).
        #[arg(long, hide = true)]
        debug_tolerance: Option<f64>,
    },
    /// Tune spin-flip, dephasing and splitting noise to a target noise budget.
    Sweep {
        #[arg(long, default_value = "twinsplit-calibrated.toml")]
        out: PathBuf,
        #[arg(long, default_value_t = -11.0, allow_hyphen_values = true)]
        target_db: f64,
        #[arg(long, default_value_t = 1.8)]
        target_ratio: f64,
        #[arg(long, default_value_t = 0.94)]
        target_j: f64,
        /// Shots per basis in every tuning run.
        #[arg(long, default_value_t = 200_000)]
        tuning_shots: usize,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring threads")?;
    }
    let r = resolve(&cli.params, cli.config.as_deref(), cli.preset)?;
    match cli.command {
        Command::Simulate {
            out,
            calibration_out,
            calibration_grid,
            calibration_shots,
        } => {
            let plan = CalibrationPlan {
                grid: parse_grid(&calibration_grid)?,
                shots_per_point: calibration_shots,
            };
            let s = cmd_simulate(&r, &out, calibration_out.as_deref().map(|p| (p, &plan)))?;
            eprintln!(
                "wrote {} z + {} perp shots (mean N {:.1}) to {}",
                s.shots_z,
                s.shots_perp,
                s.mean_total,
                out.display()
            );
            if let Some(p) = calibration_out {
                eprintln!("wrote {} calibration shots to {}", s.calibration_records, p.display());
            }
        }
        Command::Analyze { shots, calibration, out } => {
            let doc = cmd_analyze(&r, &shots, calibration.as_deref(), &out)?;
            for s in &doc.report.skipped {
                eprintln!("warning: skipped bin [{}, {}): {}", s.bin_lo, s.bin_hi, s.reason);
            }
            for b in &doc.report.bins {
                let (e, bs) = (&b.estimates, &b.bootstrap);
                println!(
                    "N={:.0} shots={}+{} squeeze={:.2} dB J=({:.4}, {:.4}) lhs={:.4} rhs={:.4} {} significance={}",
                    e.n_mean,
                    e.shots_z,
                    e.shots_perp,
                    e.squeeze_db,
                    e.j_norm_a,
                    e.j_norm_b,
                    e.lhs,
                    e.rhs,
                    if e.violated { "violated" } else { "not violated" },
                    bs.significance.map_or("-".into(), |s| format!("{s:.2}")),
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Verify {
            quick,
            out,
            debug_tolerance,
        } => {
            let cfg = verify_config(r.seed, quick, debug_tolerance);
            let report = cmd_verify(&cfg, out.as_deref())?;
            print!("{}", format_verify_report(&report));
            if !report.passed {
                for c in report.failures() {
                    eprintln!("failed: {}", to_json(c)?);
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep {
            out,
            target_db,
            target_ratio,
            target_j,
            tuning_shots,
            rounds,
        } => {
            let targets = SweepTargets {
                squeeze_db: target_db,
                perp_std_ratio: target_ratio,
                j_norm: target_j,
            };
            let res = cmd_sweep(&r, targets, tuning_shots, rounds, Some(&out))?;
            println!(
                "flip_prob={:.5} perp_dephase={:.5} split_sigma={:.5}",
                res.noise.flip_prob, res.noise.perp_dephase, res.noise.split_sigma
            );
            println!(
                "achieved: {:.3} dB, perp std ratio {:.3}, J {:.4} ({} runs)",
                res.achieved.squeeze_db, res.achieved.perp_std_ratio, res.achieved.j_norm, res.evaluations
            );
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
