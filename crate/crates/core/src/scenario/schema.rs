use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControlMode, ControllerConfig};
use crate::dynamics::DisturbanceSchedule;
use crate::error::ScenarioError;
use crate::network::{validate_network, BusKind, NetworkSpec, ValidatedNetwork};

use super::units::Bases;

/// Required value of the root `schema` key.
pub const SCHEMA_VERSION: &str = "hybridgrid-scenario/1";

fn default_dt() -> f64 {
    1e-3
}

fn default_record_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_tol_conv() -> f64 {
    1e-6
}

fn is_true(b: &bool) -> bool {
    *b
}

/// Simulation horizon and step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub t_end_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    /// Keep every n-th sample in the exported trajectory.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// RK4 steps per `dt`; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    /// Start from the equilibrium for the loads at t = 0 instead of the origin.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub start_at_equilibrium: bool,
    /// Tolerance of the terminal convergence check.
    #[serde(default = "default_tol_conv")]
    pub tol_conv: f64,
}

impl SimSettings {
    pub fn new(t_end_s: f64) -> Self {
        SimSettings {
            t_end_s,
            dt_s: default_dt(),
            record_every: 1,
            substeps: None,
            start_at_equilibrium: true,
            tol_conv: default_tol_conv(),
        }
    }
}

/// Artifacts written by a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputTarget {
    Trajectory,
    Certificate,
    Summary,
}

impl OutputTarget {
    pub const ALL: [OutputTarget; 3] = [OutputTarget::Trajectory, OutputTarget::Certificate, OutputTarget::Summary];
}

fn default_outputs() -> Vec<OutputTarget> {
    OutputTarget::ALL.to_vec()
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub network: NetworkSpec,
    pub controllers: ControllerConfig,
    #[serde(default)]
    pub disturbances: DisturbanceSchedule,
    pub sim: SimSettings,
    #[serde(default)]
    pub bases: Bases,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputTarget>,
}

impl Scenario {
    pub fn new(network: NetworkSpec, controllers: ControllerConfig, sim: SimSettings) -> Self {
        Scenario {
            schema: SCHEMA_VERSION.to_owned(),
            name: None,
            network,
            controllers,
            disturbances: DisturbanceSchedule::default(),
            sim,
            bases: Bases::default(),
            outputs: default_outputs(),
        }
    }

    pub fn mode(&self) -> ControlMode {
        self.controllers.mode
    }

    /// Range checks with document paths, then structural validation.
    pub fn validate(&self) -> Result<ValidatedNetwork, ScenarioError> {
        check_ranges(self)?;
        Ok(validate_network(&self.network)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }
}

fn ensure(ok: bool, path: impl FnOnce() -> String, msg: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::schema(path(), msg))
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn check_ranges(s: &Scenario) -> Result<(), ScenarioError> {
    ensure(s.schema == SCHEMA_VERSION, || "schema".into(), &format!("expected `{SCHEMA_VERSION}`"))?;
    for (k, b) in s.network.buses.iter().enumerate() {
        let p = |f: &str| format!("network.buses[{k}].{f}");
        if let Some(c) = b.capacitance {
            ensure(positive(c), || p("c_pu_s"), "must be > 0")?;
        }
        if let Some(m) = b.inertia {
            ensure(positive(m), || p("inertia_pu_s2"), "must be > 0")?;
        }
        if let Some(d) = b.damping {
            ensure(nonneg(d), || p("damping_pu_per_rad_s"), "must be >= 0")?;
        }
        ensure(nonneg(b.inverse_cost), || p("q_pu_per_rad_s"), "must be >= 0")?;
        ensure(b.load.is_finite(), || p("load_pu"), "must be finite")?;
        if b.kind == BusKind::Dc {
            ensure(b.capacitance.is_some(), || p("c_pu_s"), "required on DC buses")?;
        }
        if b.kind == BusKind::AcGenerator {
            ensure(b.inertia.is_some(), || p("inertia_pu_s2"), "required on AC generator buses")?;
        }
    }
    for (k, l) in s.network.lines.iter().enumerate() {
        if let Some(b) = l.susceptance {
            ensure(positive(b), || format!("network.lines[{k}].b_pu"), "must be > 0")?;
        }
        if let Some(g) = l.conductance {
            ensure(positive(g), || format!("network.lines[{k}].g_pu"), "must be > 0")?;
        }
    }
    let c = &s.controllers;
    ensure(positive(c.m), || "controllers.m_rad_s_per_pu".into(), "must be > 0")?;
    ensure(c.nominal_zeta.is_finite(), || "controllers.p_nom_zeta_rad_s".into(), "must be finite")?;
    ensure(positive(c.t_xi), || "controllers.t_xi_s".into(), "must be > 0")?;
    ensure(positive(c.m_eps), || "controllers.m_eps_pu_s2".into(), "must be > 0")?;
    ensure(nonneg(c.comm_delay), || "controllers.comm_delay_s".into(), "must be >= 0")?;
    for (bus, t) in &c.t_xi_overrides {
        ensure(positive(*t), || format!("controllers.t_xi_per_bus_s.{bus}"), "must be > 0")?;
    }
    for (bus, cv) in &c.c_virtual {
        ensure(nonneg(*cv), || format!("controllers.c_virtual_pu_s.{bus}"), "must be >= 0")?;
    }
    for (k, g) in c.dual_droop.iter().enumerate() {
        ensure(nonneg(g.k_omega), || format!("controllers.dual_droop[{k}].k_omega_pu_per_rad_s"), "must be >= 0")?;
        ensure(nonneg(g.k_v), || format!("controllers.dual_droop[{k}].k_v_pu"), "must be >= 0")?;
    }
    for (k, d) in s.disturbances.steps.iter().enumerate() {
        ensure(d.time.is_finite() && d.time >= 0.0, || format!("disturbances[{k}].time_s"), "must be >= 0")?;
        ensure(d.delta.is_finite(), || format!("disturbances[{k}].delta_pu"), "must be finite")?;
    }
    let sim = &s.sim;
    ensure(positive(sim.t_end_s), || "sim.t_end_s".into(), "must be > 0")?;
    ensure(positive(sim.dt_s), || "sim.dt_s".into(), "must be > 0")?;
    ensure(sim.dt_s <= sim.t_end_s, || "sim.dt_s".into(), "must not exceed t_end_s")?;
    ensure(sim.record_every >= 1, || "sim.record_every".into(), "must be >= 1")?;
    ensure(sim.substeps != Some(0), || "sim.substeps".into(), "must be >= 1")?;
    ensure(positive(sim.tol_conv), || "sim.tol_conv".into(), "must be > 0")?;
    ensure(positive(s.bases.omega_base_rad_s), || "bases.omega_base_rad_s".into(), "must be > 0")?;
    for (k, b) in s.bases.subsystems.iter().enumerate() {
        ensure(positive(b.s_base_va), || format!("bases.subsystems[{k}].s_base_va"), "must be > 0")?;
        ensure(positive(b.v_base_v), || format!("bases.subsystems[{k}].v_base_v"), "must be > 0")?;
        let known = s.network.buses.iter().any(|bus| bus.subsystem == b.subsystem);
        ensure(known, || format!("bases.subsystems[{k}].subsystem"), "unknown subsystem")?;
    }
    Ok(())
}

/// Parses and validates a scenario document.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => ScenarioError::schema(path, strip_position(&inner)),
            _ => ScenarioError::Parse { line: inner.line(), message: strip_position(&inner) },
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_owned(),
        None => s,
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    parse_scenario_str(&text)
}
