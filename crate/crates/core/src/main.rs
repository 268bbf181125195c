use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use nwmm::sim::{check_geometry, emit_csv, emit_plots, run_scenario, Scenario};
use nwmm::trajectory::plan_approach;

/// Number of random states used by `check`.
const CHECK_TRIALS: usize = 200;

#[derive(Parser)]
#[command(
    name = "nwmm",
    version,
    about = "Whole-body control simulator for a differential-drive mobile manipulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop approach and write sim_log.csv
    Simulate {
        scenario: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write SVG plots
        #[arg(long)]
        plots: bool,
    },
    /// Print the planned quintic segments as JSON
    Plan { scenario: PathBuf },
    /// Check model invariants on the scenario's geometry
    Check { scenario: PathBuf },
}

const EXIT_INVALID: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

fn load(path: &PathBuf) -> Result<Scenario, ExitCode> {
    Scenario::load(path).map_err(|e| {
        error!("{e}");
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NWMM_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            plots,
        } => {
            let s = match load(&scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let log = match run_scenario(&s) {
                Ok(l) => l,
                Err(e) => return fail(e),
            };
            if let Err(e) = std::fs::create_dir_all(&out) {
                return fail(format!("{}: {e}", out.display()));
            }
            let csv = out.join("sim_log.csv");
            if let Err(e) = emit_csv(&log, &csv) {
                return fail(e);
            }
            info!("wrote {}", csv.display());
            if plots {
                match emit_plots(&log, &out) {
                    Ok(files) => files.iter().for_each(|f| info!("wrote {}", f.display())),
                    Err(e) => return fail(e),
                }
            }
            if let Some(sum) = log.summary() {
                println!("rows: {}", log.rows.len());
                println!("final position error: {:.6e} m", sum.final_position_error);
                println!(
                    "final orientation error: {:.6e} rad",
                    sum.final_orientation_error
                );
                println!(
                    "final pitch error: {:.6e} deg",
                    sum.final_pitch_error.to_degrees()
                );
                println!(
                    "max constraint residual: {:.3e}",
                    sum.max_constraint_residual
                );
                println!("joint limit violations: {}", sum.joint_limit_violations);
                println!(
                    "min joint limit margin: {:.4} deg",
                    sum.min_limit_margin.to_degrees()
                );
                println!("base travel: {:.4} m", sum.base_travel);
            }
            ExitCode::SUCCESS
        }
        Command::Plan { scenario } => {
            let s = match load(&scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let (start, target) = s.endpoints();
            match plan_approach(&start, &target, s.t_translate, s.t_rotate) {
                Ok(segs) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&segs).expect("segments serialize")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Check { scenario } => {
            let s = match load(&scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let report = check_geometry(&s.geometry, s.dynamics.as_ref(), s.seed, CHECK_TRIALS);
            for item in &report.items {
                println!(
                    "{} {:<45} worst={:.3e} tol={:.1e}",
                    if item.passed { "PASS" } else { "FAIL" },
                    item.name,
                    item.worst,
                    item.tolerance
                );
            }
            if report.passed() {
                println!(
                    "all {} checks passed over {} states",
                    report.items.len(),
                    report.trials
                );
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
    }
}
