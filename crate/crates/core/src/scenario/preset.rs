//! The nine-bus case study: one AC subsystem with a synchronous machine and
//! two converter buses, and two three-bus DC subsystems, in per-unit on a
//! 4 MVA base.

use std::f64::consts::PI;

use crate::controllers::{ControlMode, ControllerConfig, DualDroopGains};
use crate::dynamics::{Disturbance, DisturbanceSchedule};
use crate::network::{Bus, Converter, Line, NetworkSpec};

use super::schema::{Scenario, SimSettings};
use super::units::{Bases, SubsystemBase};

pub const S_BASE_VA: f64 = 4e6;
pub const V_BASE_DC_V: f64 = 6000.0;
/// AC voltage base; the AC network voltage is not given, 6 kV is assumed.
pub const V_BASE_AC_V: f64 = 6000.0;
pub const OMEGA_BASE: f64 = 2.0 * PI * 50.0;

/// Inertia constant of the machine (s).
pub const MACHINE_H_S: f64 = 1.0;
/// Machine damping in p.u. power per p.u. frequency.
pub const MACHINE_D_PU: f64 = 0.02;
/// Converter ratio in rad/s per volt.
pub const CONVERTER_RATIO_RAD_S_PER_V: f64 = 0.002;
/// DC source voltage droop (W/V) per unit; two units sit on each DC source bus.
pub const DC_DROOP_W_PER_V: f64 = 10e3;
/// Bus capacitance and converter DC capacitance (F).
pub const BUS_CAPACITANCE_F: f64 = 10e-3;
pub const CONVERTER_CAPACITANCE_F: f64 = 300e-3;
pub const DC_LINE_RESISTANCE_OHM: f64 = 0.01;
pub const DC_LOAD_RESISTANCE_OHM: f64 = 60.0;
pub const AC_LOAD_RESISTANCE_OHM: f64 = 60.0;
pub const BUS5_LOAD_W: f64 = 1e6;
pub const AC_LINE_INDUCTANCE_H: f64 = 0.1e-3;
/// Transformer reactance in p.u. on the machine base.
pub const TRANSFORMER_X_PU: f64 = 0.04;
pub const SWITCHED_LOAD_W: f64 = 3.6e6;
/// Dual-droop gains: W/V and W per rad/s.
pub const DUAL_DROOP_K_V_W_PER_V: f64 = 4e3;
pub const DUAL_DROOP_K_OMEGA_W_PER_RAD_S: f64 = 2e6;
pub const COMM_DELAY_S: f64 = 0.2;
pub const T_XI_S: f64 = 0.05;
pub const T_END_S: f64 = 25.0;

pub fn case_study_bases() -> Bases {
    Bases {
        omega_base_rad_s: OMEGA_BASE,
        subsystems: vec![
            SubsystemBase::new("ac", S_BASE_VA, V_BASE_AC_V),
            SubsystemBase::new("dc1", S_BASE_VA, V_BASE_DC_V),
            SubsystemBase::new("dc2", S_BASE_VA, V_BASE_DC_V),
        ],
    }
}

/// The case study in primary mode without communication delay.
pub fn preset_case_study() -> Scenario {
    case_study(ControlMode::Primary, false)
}

/// The case study for `mode`; `delayed` adds the 200 ms communication delay.
pub fn case_study(mode: ControlMode, delayed: bool) -> Scenario {
    let bases = case_study_bases();
    let ac = bases.subsystem("ac").unwrap().clone();
    let dc = bases.subsystem("dc1").unwrap().clone();

    let m = dc.ratio_to_pu(CONVERTER_RATIO_RAD_S_PER_V);
    // one droop unit: p = -k·V, written as p = -q·m·V
    let q_unit = dc.voltage_droop_to_pu(DC_DROOP_W_PER_V) / m;
    let c_bus = dc.capacitance_to_pu(BUS_CAPACITANCE_F);
    let c_conv = dc.capacitance_to_pu(BUS_CAPACITANCE_F + CONVERTER_CAPACITANCE_F);
    let dc_load = dc.resistive_load_pu(DC_LOAD_RESISTANCE_OHM);
    let g_line = dc.conductance_pu_from_resistance(DC_LINE_RESISTANCE_OHM);
    let ac_load = ac.resistive_load_pu(AC_LOAD_RESISTANCE_OHM);
    let x_line = TRANSFORMER_X_PU + OMEGA_BASE * AC_LINE_INDUCTANCE_H / ac.z_base_ohm();
    let b_line = 1.0 / x_line;

    let buses = vec![
        Bus::dc("1", "dc1", c_bus, 2.0 * q_unit).with_load(dc_load),
        Bus::dc("2", "dc1", c_bus, 0.0).with_load(dc_load),
        Bus::dc("3", "dc1", c_conv, 2.0 * q_unit).with_load(dc_load),
        Bus::ac_converter("4", "ac").with_load(ac_load),
        Bus::ac_generator("5", "ac", bases.inertia_to_pu(MACHINE_H_S), bases.damping_to_pu(MACHINE_D_PU), q_unit)
            .with_load(ac.power_to_pu(BUS5_LOAD_W)),
        Bus::ac_converter("6", "ac").with_load(ac_load),
        Bus::dc("7", "dc2", c_conv, 2.0 * q_unit).with_load(dc_load),
        Bus::dc("8", "dc2", c_bus, 0.0).with_load(dc_load),
        Bus::dc("9", "dc2", c_bus, 2.0 * q_unit).with_load(dc_load),
    ];
    let total_load: f64 = buses.iter().map(|b| b.load).sum();
    let total_q: f64 = buses.iter().map(|b| b.inverse_cost).sum();

    let network = NetworkSpec {
        buses,
        lines: vec![
            Line::dc("1", "2", g_line),
            Line::dc("2", "3", g_line),
            Line::ac("5", "4", b_line),
            Line::ac("5", "6", b_line),
            Line::dc("7", "8", g_line),
            Line::dc("8", "9", g_line),
        ],
        converters: vec![Converter::new("x4", "4", "3"), Converter::new("x6", "6", "7")],
        comm_edges: [("1", "3"), ("3", "5"), ("5", "7"), ("7", "9")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    };

    let dual = |id: &str| DualDroopGains {
        converter: id.to_owned(),
        k_omega: ac.frequency_droop_to_pu(DUAL_DROOP_K_OMEGA_W_PER_RAD_S),
        k_v: dc.voltage_droop_to_pu(DUAL_DROOP_K_V_W_PER_V),
    };
    let controllers = ControllerConfig {
        mode,
        m,
        // nominal dispatch shares the nominal load optimally
        nominal_zeta: -total_load / total_q,
        dual_droop: vec![dual("x4"), dual("x6")],
        t_xi: T_XI_S,
        comm_delay: if delayed { COMM_DELAY_S } else { 0.0 },
        ..ControllerConfig::default()
    };

    let mut s = Scenario::new(network, controllers, SimSettings::new(T_END_S));
    s.name = Some("case-study".into());
    s.bases = bases;
    s.disturbances = DisturbanceSchedule::new(vec![
        Disturbance { time: 1.0, bus: "3".into(), delta: dc.power_to_pu(SWITCHED_LOAD_W) },
        Disturbance { time: 13.0, bus: "7".into(), delta: -dc.power_to_pu(SWITCHED_LOAD_W) },
    ]);
    s
}
