//! Scenario execution: validate, solve the initial equilibrium, integrate,
//! certify, and write artifacts.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::certification::{certify_trajectory, epoch_equilibria, CertificateReport};
use crate::controllers::{ControlMode, Controllers};
use crate::dynamics::{integrate, IntegrationSettings, StateLayout, Trajectory};
use crate::error::ScenarioError;
use crate::network::{scale_dc_resistance, Domain, ValidatedNetwork};
use crate::numerics::inf_norm;
use crate::steady_state::{damping_power, find_equilibrium, optimal_dispatch, power_sharing_error, EquilibriumPoint};

use super::export::{write_certificate_csv, write_sweep_csv, write_trajectory_csv};
use super::schema::{OutputTarget, Scenario};

/// Command-line overrides of a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub mode: Option<ControlMode>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub delay: Option<f64>,
}

impl RunOptions {
    pub fn apply(&self, s: &Scenario) -> Scenario {
        let mut s = s.clone();
        if let Some(m) = self.mode {
            s.controllers.mode = m;
        }
        if let Some(t) = self.t_end {
            s.sim.t_end_s = t;
        }
        if let Some(dt) = self.dt {
            s.sim.dt_s = dt;
        }
        if let Some(d) = self.delay {
            s.controllers.comm_delay = d;
        }
        s
    }
}

/// Steady-state figures reported at the end of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub mode: ControlMode,
    pub final_time: f64,
    /// Final frequency per AC bus.
    pub final_omega: Vec<(String, f64)>,
    /// Final weighted average voltage per DC subsystem.
    pub final_v_bar: Vec<(String, f64)>,
    /// Final generation and optimal dispatch per source bus.
    pub final_p_g: Vec<(String, f64)>,
    pub optimal_p_g: Vec<(String, f64)>,
    pub sharing_error: f64,
    pub omega_max: f64,
    pub vbar_max: f64,
    pub terminal_error: f64,
    pub max_newton_iterations: usize,
    pub certificate_passed: bool,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(s, "final time: {} s", self.final_time);
        for (id, w) in &self.final_omega {
            let _ = writeln!(s, "omega[{id}] = {w:.9e} rad/s");
        }
        for (id, v) in &self.final_v_bar {
            let _ = writeln!(s, "vbar[{id}] = {v:.9e} pu");
        }
        for ((id, p), (_, q)) in self.final_p_g.iter().zip(&self.optimal_p_g) {
            let _ = writeln!(s, "pg[{id}] = {p:.9e} pu (optimal {q:.9e})");
        }
        let _ = writeln!(s, "power sharing error: {:.6e}", self.sharing_error);
        let _ = writeln!(s, "distance to final equilibrium: {:.6e}", self.terminal_error);
        let _ = writeln!(s, "newton iterations (max): {}", self.max_newton_iterations);
        let _ = writeln!(s, "certificate: {}", if self.certificate_passed { "PASS" } else { "FAIL" });
        s
    }
}

pub struct RunOutcome {
    /// The scenario after command-line overrides.
    pub scenario: Scenario,
    pub network: ValidatedNetwork,
    pub controllers: Controllers,
    pub trajectory: Trajectory,
    /// One equilibrium per load epoch of the trajectory.
    pub equilibria: Vec<EquilibriumPoint>,
    pub report: CertificateReport,
    pub summary: RunSummary,
}

impl RunOutcome {
    /// 0 if every certificate check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            1
        }
    }

    /// Writes the artifacts selected by the scenario's `outputs` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            File::create(&p).map(BufWriter::new).map_err(|e| ScenarioError::io(&p, e))
        };
        let io = |name: &str, e| ScenarioError::io(&dir.join(name), e);
        for target in &self.scenario.outputs {
            match target {
                OutputTarget::Trajectory => {
                    let f = create("trajectory.csv")?;
                    write_trajectory_csv(f, &self.trajectory, &self.network, self.scenario.sim.record_every)
                        .map_err(|e| io("trajectory.csv", e))?;
                }
                OutputTarget::Certificate => {
                    write_certificate_csv(create("certificate.csv")?, &self.report)
                        .map_err(|e| io("certificate.csv", e))?;
                    fs::write(dir.join("certificate.txt"), self.report.summary())
                        .map_err(|e| io("certificate.txt", e))?;
                }
                OutputTarget::Summary => {
                    fs::write(dir.join("summary.txt"), self.summary.to_text()).map_err(|e| io("summary.txt", e))?;
                }
            }
        }
        Ok(())
    }
}

/// Validates, integrates and certifies a scenario.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome, ScenarioError> {
    let scenario = opts.apply(scenario);
    let net = scenario.validate()?;
    let ctl = scenario.controllers.resolve(&net)?;
    let profile = scenario.disturbances.resolve(&net)?;
    let sim = &scenario.sim;
    let layout = StateLayout::new(&net, ctl.mode);
    let initial = if sim.start_at_equilibrium {
        let loads = profile.loads_at(0.0, 1e-9 * sim.dt_s);
        find_equilibrium(&net, &ctl, &loads, None)?.state
    } else {
        layout.zeros(0.0)
    };
    let settings = IntegrationSettings { t_end: sim.t_end_s, dt: sim.dt_s, substeps: sim.substeps };
    let trajectory = integrate(&initial, &net, &ctl, &profile, settings)?;
    let equilibria = epoch_equilibria(&trajectory, &net, &ctl)?;
    let report = certify_trajectory(&trajectory, &equilibria, &net, &ctl, sim.tol_conv)?;
    let summary = summarize(&trajectory, &equilibria, &report, &net, &ctl)?;
    Ok(RunOutcome { scenario, network: net, controllers: ctl, trajectory, equilibria, report, summary })
}

fn summarize(
    traj: &Trajectory,
    equilibria: &[EquilibriumPoint],
    report: &CertificateReport,
    net: &ValidatedNetwork,
    ctl: &Controllers,
) -> Result<RunSummary, ScenarioError> {
    let last = traj.samples.last().expect("non-empty trajectory");
    let loads = traj.loads_at(traj.samples.len() - 1);
    let dispatch = optimal_dispatch(loads, &damping_power(&last.state, net), &ctl.q)?;
    let final_omega: Vec<(String, f64)> = (0..net.bus_count())
        .filter(|&b| net.bus(b).kind.domain() == Domain::Ac)
        .map(|b| (net.bus_id(b).to_owned(), last.outputs.omega[b]))
        .collect();
    let final_v_bar: Vec<(String, f64)> = net
        .dc_subsystems()
        .iter()
        .zip(&last.outputs.v_bar)
        .map(|(&k, v)| (net.subsystems()[k].name.clone(), *v))
        .collect();
    let sources: Vec<usize> = (0..net.bus_count()).filter(|&b| ctl.q[b] > 0.0).collect();
    Ok(RunSummary {
        mode: ctl.mode,
        final_time: last.state.t,
        omega_max: final_omega.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max),
        vbar_max: inf_norm(&last.outputs.v_bar),
        final_omega,
        final_v_bar,
        final_p_g: sources.iter().map(|&b| (net.bus_id(b).to_owned(), last.outputs.p_g[b])).collect(),
        optimal_p_g: sources.iter().map(|&b| (net.bus_id(b).to_owned(), dispatch.p_g_star[b])).collect(),
        sharing_error: power_sharing_error(&last.outputs.p_g, &dispatch),
        terminal_error: report.terminal_error,
        max_newton_iterations: equilibria.iter().map(|e| e.iterations).max().unwrap_or(0),
        certificate_passed: report.passed(),
    })
}

/// Scenario parameters that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// Multiplies every DC line resistance.
    DcResistanceScale,
    CommDelay,
    M,
    /// Virtual capacitance on every DC source bus.
    VirtualCapacitance,
}

impl FromStr for SweepParam {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dc_resistance_scale" => Ok(SweepParam::DcResistanceScale),
            "comm_delay" => Ok(SweepParam::CommDelay),
            "m" => Ok(SweepParam::M),
            "virtual_capacitance" => Ok(SweepParam::VirtualCapacitance),
            other => Err(ScenarioError::UnknownParameter(other.to_owned())),
        }
    }
}

impl SweepParam {
    pub fn apply(self, s: &Scenario, value: f64) -> Result<Scenario, ScenarioError> {
        let mut s = s.clone();
        match self {
            SweepParam::DcResistanceScale => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ScenarioError::schema("dc_resistance_scale", "must be > 0"));
                }
                s.network = scale_dc_resistance(&s.network, value);
            }
            SweepParam::CommDelay => s.controllers.comm_delay = value,
            SweepParam::M => s.controllers.m = value,
            SweepParam::VirtualCapacitance => {
                s.controllers.c_virtual = s
                    .network
                    .buses
                    .iter()
                    .filter(|b| b.kind.domain() == Domain::Dc && b.inverse_cost > 0.0)
                    .map(|b| (b.id.clone(), value))
                    .collect();
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepMetricsRow {
    pub omega_max: f64,
    pub vbar_max: f64,
    pub sharing_error: f64,
    pub violations: usize,
}

/// One sweep point: metrics when the run completed, and a status string
/// (`ok`, `certificate-violation` or `error: ...`).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Option<SweepMetricsRow>,
    pub status: String,
    pub exit_code: i32,
}

fn sweep_point(
    s: &Scenario,
    param: SweepParam,
    value: f64,
    opts: &RunOptions,
    dir: Option<&Path>,
) -> Result<RunOutcome, ScenarioError> {
    let point = param.apply(s, value)?;
    let out = run_scenario(&point, opts)?;
    if let Some(d) = dir {
        out.write_outputs(d)?;
    }
    Ok(out)
}

/// Runs the scenario once per value, up to `jobs` points at a time. Each
/// point writes its artifacts to `out_dir/point-<index>` and the table to
/// `out_dir/sweep.csv`. Errors are recorded per point.
pub fn sweep(
    scenario: &Scenario,
    param: SweepParam,
    values: &[f64],
    opts: &RunOptions,
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, ScenarioError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &value)| {
                let dir = out_dir.map(|d| d.join(format!("point-{i}")));
                match sweep_point(scenario, param, value, opts, dir.as_deref()) {
                    Ok(out) => SweepRow {
                        value,
                        metrics: Some(SweepMetricsRow {
                            omega_max: out.summary.omega_max,
                            vbar_max: out.summary.vbar_max,
                            sharing_error: out.summary.sharing_error,
                            violations: out.report.violations.len(),
                        }),
                        status: if out.report.passed() { "ok".into() } else { "certificate-violation".into() },
                        exit_code: out.exit_code(),
                    },
                    Err(e) => SweepRow {
                        value,
                        metrics: None,
                        status: format!("error: {}", e.to_string().replace(',', ";")),
                        exit_code: e.exit_code(),
                    },
                }
            })
            .collect()
    });
    if let Some(d) = out_dir {
        fs::create_dir_all(d).map_err(|e| ScenarioError::io(d, e))?;
        let p = d.join("sweep.csv");
        let f = File::create(&p).map_err(|e| ScenarioError::io(&p, e))?;
        write_sweep_csv(BufWriter::new(f), &rows).map_err(|e| ScenarioError::io(&p, e))?;
    }
    Ok(rows)
}

/// Exit code of a sweep: the first input or numerical failure, else 1 if any
/// point violated a certificate, else 0.
pub fn sweep_exit_code(rows: &[SweepRow]) -> i32 {
    rows.iter()
        .map(|r| r.exit_code)
        .find(|&c| c >= 2)
        .unwrap_or_else(|| rows.iter().map(|r| r.exit_code).max().unwrap_or(0))
}
