use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hybridgrid::scenario::runner::sweep_exit_code;
use hybridgrid::scenario::{case_study, parse_scenario, run_scenario, sweep, RunOptions, SweepParam};
use hybridgrid::{ControlMode, ScenarioError};

#[derive(Parser)]
#[command(name = "hybridgrid", version, about = "Hybrid AC/DC network simulation and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Primary,
    DualDroop,
    Secondary,
}

impl From<Mode> for ControlMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Primary => ControlMode::Primary,
            Mode::DualDroop => ControlMode::DualDroop,
            Mode::Secondary => ControlMode::Secondary,
        }
    }
}

#[derive(clap::Args)]
struct Overrides {
    /// Controller family (overrides the scenario)
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Simulation end time in seconds
    #[arg(long = "t-end", value_name = "S")]
    t_end: Option<f64>,
    /// Sampling interval in seconds
    #[arg(long, value_name = "S")]
    dt: Option<f64>,
    /// Communication delay in seconds
    #[arg(long, value_name = "S")]
    delay: Option<f64>,
    /// Number of worker threads
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

impl Overrides {
    fn options(&self) -> RunOptions {
        RunOptions { mode: self.mode.map(Into::into), t_end: self.t_end, dt: self.dt, delay: self.delay }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    CaseStudy,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario, certify the trajectory and write CSV artifacts
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory
        #[arg(long, value_name = "DIR", default_value = "hybridgrid-out")]
        out: PathBuf,
    },
    /// Print or save a bundled scenario
    Preset {
        name: PresetName,
        /// Write the scenario to FILE instead of standard output
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "primary")]
        mode: Mode,
        /// Include the 200 ms communication delay
        #[arg(long)]
        delayed: bool,
    },
    /// Run a scenario once per parameter value
    Sweep {
        scenario: PathBuf,
        /// dc_resistance_scale, comm_delay, m or virtual_capacitance
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory
        #[arg(long, value_name = "DIR", default_value = "hybridgrid-sweep")]
        out: PathBuf,
    },
}

fn run(scenario: &Path, overrides: &Overrides, out: &Path) -> Result<i32, ScenarioError> {
    let s = parse_scenario(scenario)?;
    let outcome = run_scenario(&s, &overrides.options())?;
    outcome.write_outputs(out)?;
    print!("{}", outcome.summary.to_text());
    print!("{}", outcome.report.summary());
    Ok(outcome.exit_code())
}

fn preset(out: Option<&Path>, mode: Mode, delayed: bool) -> Result<i32, ScenarioError> {
    let json = case_study(mode.into(), delayed).to_json();
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| ScenarioError::io(p, e))?,
        None => println!("{json}"),
    }
    Ok(0)
}

fn run_sweep(
    scenario: &Path,
    param: &str,
    values: &[f64],
    overrides: &Overrides,
    out: &Path,
) -> Result<i32, ScenarioError> {
    let param: SweepParam = param.parse()?;
    let s = parse_scenario(scenario)?;
    let rows = sweep(&s, param, values, &overrides.options(), overrides.jobs, Some(out))?;
    println!("value,omega_max,vbar_max,sharing_error,violations,status");
    for r in &rows {
        match &r.metrics {
            Some(m) => println!(
                "{},{:.6e},{:.6e},{:.6e},{},{}",
                r.value, m.omega_max, m.vbar_max, m.sharing_error, m.violations, r.status
            ),
            None => println!("{},,,,,{}", r.value, r.status),
        }
    }
    Ok(sweep_exit_code(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, overrides, out } => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(overrides.jobs.max(1)).build_global();
            run(scenario, overrides, out)
        }
        Command::Preset { name: PresetName::CaseStudy, out, mode, delayed } => preset(out.as_deref(), *mode, *delayed),
        Command::Sweep { scenario, param, values, overrides, out } => {
            run_sweep(scenario, param, values, overrides, out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
