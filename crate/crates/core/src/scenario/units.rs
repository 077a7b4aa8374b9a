//! Conversions between SI quantities and the per-unit system used by the model.
//!
//! Powers are normalised by `S_base`, voltages by `V_base`, so impedances by
//! `V_base² / S_base`. Frequencies stay in rad/s; a quantity given per unit of
//! frequency is converted with `ω_base`.

use serde::{Deserialize, Serialize};

/// Base values of one subsystem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemBase {
    pub subsystem: String,
    pub s_base_va: f64,
    pub v_base_v: f64,
}

impl SubsystemBase {
    pub fn new(subsystem: &str, s_base_va: f64, v_base_v: f64) -> Self {
        SubsystemBase { subsystem: subsystem.to_owned(), s_base_va, v_base_v }
    }

    pub fn z_base_ohm(&self) -> f64 {
        self.v_base_v * self.v_base_v / self.s_base_va
    }

    pub fn power_to_pu(&self, watts: f64) -> f64 {
        watts / self.s_base_va
    }

    pub fn power_from_pu(&self, pu: f64) -> f64 {
        pu * self.s_base_va
    }

    pub fn voltage_to_pu(&self, volts: f64) -> f64 {
        volts / self.v_base_v
    }

    pub fn voltage_from_pu(&self, pu: f64) -> f64 {
        pu * self.v_base_v
    }

    /// Conductance of a line with resistance `ohm`.
    pub fn conductance_pu_from_resistance(&self, ohm: f64) -> f64 {
        self.z_base_ohm() / ohm
    }

    pub fn resistance_from_conductance_pu(&self, g_pu: f64) -> f64 {
        self.z_base_ohm() / g_pu
    }

    /// Susceptance of a lossless line with reactance `ohm`.
    pub fn susceptance_pu_from_reactance(&self, ohm: f64) -> f64 {
        self.z_base_ohm() / ohm
    }

    pub fn reactance_from_susceptance_pu(&self, b_pu: f64) -> f64 {
        self.z_base_ohm() / b_pu
    }

    /// Capacitance in p.u.·s: `C·V_base² / S_base`.
    pub fn capacitance_to_pu(&self, farad: f64) -> f64 {
        farad * self.v_base_v * self.v_base_v / self.s_base_va
    }

    pub fn capacitance_from_pu(&self, pu_s: f64) -> f64 {
        pu_s * self.s_base_va / (self.v_base_v * self.v_base_v)
    }

    /// Constant power drawn by a resistor `ohm` at base voltage.
    pub fn resistive_load_pu(&self, ohm: f64) -> f64 {
        self.z_base_ohm() / ohm
    }

    /// Converter ratio in rad/s per p.u. volt from rad/s per volt.
    pub fn ratio_to_pu(&self, rad_s_per_v: f64) -> f64 {
        rad_s_per_v * self.v_base_v
    }

    pub fn ratio_from_pu(&self, rad_s_per_pu: f64) -> f64 {
        rad_s_per_pu / self.v_base_v
    }

    /// DC voltage droop gain (W/V) as p.u. power per p.u. voltage.
    pub fn voltage_droop_to_pu(&self, w_per_v: f64) -> f64 {
        w_per_v * self.v_base_v / self.s_base_va
    }

    pub fn voltage_droop_from_pu(&self, pu: f64) -> f64 {
        pu * self.s_base_va / self.v_base_v
    }

    /// Frequency droop gain (W per rad/s) as p.u. power per rad/s.
    pub fn frequency_droop_to_pu(&self, w_per_rad_s: f64) -> f64 {
        w_per_rad_s / self.s_base_va
    }

    pub fn frequency_droop_from_pu(&self, pu: f64) -> f64 {
        pu * self.s_base_va
    }
}

/// Base values of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bases {
    pub omega_base_rad_s: f64,
    #[serde(default)]
    pub subsystems: Vec<SubsystemBase>,
}

impl Bases {
    pub fn subsystem(&self, name: &str) -> Option<&SubsystemBase> {
        self.subsystems.iter().find(|b| b.subsystem == name)
    }

    /// Inertia `2H/ω_base` in p.u.·s² (per rad/s) from the inertia constant `H`.
    pub fn inertia_to_pu(&self, h_s: f64) -> f64 {
        2.0 * h_s / self.omega_base_rad_s
    }

    pub fn inertia_constant_from_pu(&self, m_pu: f64) -> f64 {
        0.5 * m_pu * self.omega_base_rad_s
    }

    /// Damping given in p.u. power per p.u. frequency, as p.u. power per rad/s.
    pub fn damping_to_pu(&self, d_pu: f64) -> f64 {
        d_pu / self.omega_base_rad_s
    }

    pub fn damping_from_pu(&self, d_pu_per_rad_s: f64) -> f64 {
        d_pu_per_rad_s * self.omega_base_rad_s
    }
}

impl Default for Bases {
    fn default() -> Self {
        Bases { omega_base_rad_s: 2.0 * std::f64::consts::PI * 50.0, subsystems: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn table_values_in_per_unit() {
        let dc = SubsystemBase::new("dc1", 4e6, 6000.0);
        assert!((dc.z_base_ohm() - 9.0).abs() < 1e-12);
        assert!((dc.conductance_pu_from_resistance(0.01) - 900.0).abs() < 1e-9);
        assert!((dc.capacitance_to_pu(10e-3) - 0.09).abs() < 1e-15);
        assert!((dc.resistive_load_pu(60.0) - 0.15).abs() < 1e-15);
        assert!((dc.power_to_pu(3.6e6) - 0.9).abs() < 1e-15);
        assert!((dc.ratio_to_pu(0.002) - 12.0).abs() < 1e-12);
        assert!((dc.voltage_droop_to_pu(10e3) - 15.0).abs() < 1e-12);
        let b = Bases::default();
        assert!((b.inertia_to_pu(1.0) - 2.0 / (100.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn conversions_round_trip(
            s in 1e3f64..1e9, v in 1.0f64..1e6, x in 1e-6f64..1e6, w in 1.0f64..1e3,
        ) {
            let b = SubsystemBase::new("k", s, v);
            let bases = Bases { omega_base_rad_s: w, subsystems: vec![] };
            let tol = 1e-12;
            prop_assert!(rel(b.power_from_pu(b.power_to_pu(x)), x) < tol);
            prop_assert!(rel(b.voltage_from_pu(b.voltage_to_pu(x)), x) < tol);
            prop_assert!(rel(b.resistance_from_conductance_pu(b.conductance_pu_from_resistance(x)), x) < tol);
            prop_assert!(rel(b.reactance_from_susceptance_pu(b.susceptance_pu_from_reactance(x)), x) < tol);
            prop_assert!(rel(b.capacitance_from_pu(b.capacitance_to_pu(x)), x) < tol);
            prop_assert!(rel(b.ratio_from_pu(b.ratio_to_pu(x)), x) < tol);
            prop_assert!(rel(b.voltage_droop_from_pu(b.voltage_droop_to_pu(x)), x) < tol);
            prop_assert!(rel(b.frequency_droop_from_pu(b.frequency_droop_to_pu(x)), x) < tol);
            prop_assert!(rel(bases.inertia_constant_from_pu(bases.inertia_to_pu(x)), x) < tol);
            prop_assert!(rel(bases.damping_from_pu(bases.damping_to_pu(x)), x) < tol);
        }
    }
}
