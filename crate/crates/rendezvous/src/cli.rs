//! `rendezvous simulate | verify | sweep`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rendezvous_core::closed_loop::Subsystem;

use crate::config::ScenarioConfig;
use crate::error::{exit, Error};
use crate::output::write_outputs;
use crate::run::{check_table, run, Run};
use crate::sweep::{sweep, SWEEP_FILE};

#[derive(Debug, Parser)]
#[command(name = "rendezvous", version, about = "Hybrid impulsive rendezvous stabilizers on the HCW model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SubsystemArg {
    Z,
    Inplane,
    Full,
}

impl From<SubsystemArg> for Subsystem {
    fn from(s: SubsystemArg) -> Self {
        match s {
            SubsystemArg::Z => Subsystem::Z,
            SubsystemArg::Inplane => Subsystem::InPlane,
            SubsystemArg::Full => Subsystem::Full,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write trajectory.csv, events.csv, summary.json and plot.gp.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario's `subsystem`.
        #[arg(long, value_enum)]
        subsystem: Option<SubsystemArg>,
        /// Overrides the scenario's `output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate a scenario and check every certificate; writes nothing.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        subsystem: Option<SubsystemArg>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// tau_z_m, tau_beta_m, tau_alpha_m or umax.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, subsystem: Option<SubsystemArg>) -> Result<ScenarioConfig, Error> {
    let mut c = ScenarioConfig::load(config)?;
    if let Some(s) = subsystem {
        c.subsystem = Subsystem::from(s).name().to_string();
    }
    Ok(c)
}

fn print_summary(run: &Run) {
    let p = &run.scenario.params;
    let b = &run.budget;
    println!(
        "impulses: z {} beta {} alpha {}  total delta-v {:.6} m/s",
        b.z.impulses, b.beta.impulses, b.alpha.impulses, b.total_delta_v
    );
    match run.convergence {
        Some(t) => println!("converged at t = {:.3} s ({:.4} orbits, j = {})", t.t, t.t / p.period(), t.j),
        None => println!(
            "not converged: final distance {:.6e} > epsilon {:.6e}",
            run.final_distance, run.epsilon
        ),
    }
}

fn print_checks(run: &Run) -> bool {
    println!("{:<24} {:>8} {:>10}  result", "check", "checked", "violations");
    for row in check_table(run) {
        let verdict = if row.passed() { "pass" } else { "FAIL" };
        println!("{:<24} {:>8} {:>10}  {verdict}", row.name, row.checked, row.violations);
    }
    for v in run.report.violations.iter().take(10) {
        println!("  t = {:.6} j = {}: {} observed {:e}, bound {:e}", v.time.t, v.time.j, v.quantity, v.observed, v.bound);
    }
    run.report.passed()
}

fn execute(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Simulate { config, subsystem, output } => {
            let scenario = load(&config, subsystem)?.validate()?;
            let result = run(&scenario)?;
            let dir = output.unwrap_or_else(|| scenario.output_dir.clone());
            write_outputs(&dir, &result)?;
            println!("wrote {}", dir.display());
            print_summary(&result);
            if result.report.passed() {
                Ok(exit::OK)
            } else {
                eprintln!("certificate violations: {}", result.report.violations.len());
                Ok(exit::CERTIFICATE)
            }
        }
        Command::Verify { config, subsystem } => {
            let scenario = load(&config, subsystem)?.validate()?;
            let result = run(&scenario)?;
            let passed = print_checks(&result);
            print_summary(&result);
            Ok(if passed { exit::OK } else { exit::CERTIFICATE })
        }
        Command::Sweep { config, param, values, output } => {
            let base = load(&config, None)?;
            let out = output.unwrap_or_else(|| base.output_dir.clone());
            let points = sweep(&base, &param, &values, &out)?;
            println!("{:>10} {:>6} {:>6} {:>6} {:>12} {:>14}  certified", param, "z", "beta", "alpha", "delta-v", "converge [orb]");
            for p in &points {
                let b = &p.run.budget;
                let conv = p.run.convergence.map_or("-".to_string(), |t| {
                    format!("{:.4}", t.t / p.run.scenario.params.period())
                });
                println!(
                    "{:>10} {:>6} {:>6} {:>6} {:>12.6} {:>14}  {}",
                    p.value,
                    b.z.impulses,
                    b.beta.impulses,
                    b.alpha.impulses,
                    b.total_delta_v,
                    conv,
                    p.run.report.passed()
                );
            }
            println!("wrote {}", out.join(SWEEP_FILE).display());
            let all = points.iter().all(|p| p.run.report.passed());
            Ok(if all { exit::OK } else { exit::CERTIFICATE })
        }
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
