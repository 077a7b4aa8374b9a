//! Controller laws: droop sources, the frequency/voltage synchronising ILC
//! law, the dual-droop ILC baseline and the distributed secondary controller.
//!
//! Every law here is a pure function of its inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, NetworkError};
use crate::network::{BusKind, Domain, ValidatedNetwork};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    /// Droop sources with ILC frequency tied to the local DC voltage.
    #[default]
    Primary,
    /// Droop sources with ILC power set from frequency and voltage droops.
    DualDroop,
    /// Consensus-based secondary control with ILC frequency tied to the
    /// weighted average voltage of its DC subsystem.
    Secondary,
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlMode::Primary => "primary",
            ControlMode::DualDroop => "dual-droop",
            ControlMode::Secondary => "secondary",
        })
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "primary" => Ok(ControlMode::Primary),
            "dual-droop" => Ok(ControlMode::DualDroop),
            "secondary" => Ok(ControlMode::Secondary),
            other => Err(format!("unknown mode `{other}` (expected primary, dual-droop or secondary)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualDroopGains {
    pub converter: String,
    #[serde(rename = "k_omega_pu_per_rad_s")]
    pub k_omega: f64,
    #[serde(rename = "k_v_pu")]
    pub k_v: f64,
}

fn default_t_xi() -> f64 {
    1.0
}

fn default_m_eps() -> f64 {
    1e-2
}

/// Controller family and gains, as written in a scenario file.
///
/// The inverse cost matrix lives on the buses of the network; the nominal
/// dispatch is stored as the scalar ζ with `p_nom = -Q̃·1·ζ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub mode: ControlMode,
    #[serde(rename = "m_rad_s_per_pu")]
    pub m: f64,
    #[serde(rename = "p_nom_zeta_rad_s", default)]
    pub nominal_zeta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_droop: Vec<DualDroopGains>,
    #[serde(rename = "t_xi_s", default = "default_t_xi")]
    pub t_xi: f64,
    #[serde(rename = "t_xi_per_bus_s", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub t_xi_overrides: BTreeMap<String, f64>,
    #[serde(rename = "c_virtual_pu_s", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub c_virtual: BTreeMap<String, f64>,
    #[serde(rename = "m_eps_pu_s2", default = "default_m_eps")]
    pub m_eps: f64,
    #[serde(rename = "comm_delay_s", default)]
    pub comm_delay: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            mode: ControlMode::Primary,
            m: 1.0,
            nominal_zeta: 0.0,
            dual_droop: Vec::new(),
            t_xi: default_t_xi(),
            t_xi_overrides: BTreeMap::new(),
            c_virtual: BTreeMap::new(),
            m_eps: default_m_eps(),
            comm_delay: 0.0,
        }
    }
}

/// Controller configuration resolved against a network: every gain is laid
/// out in the network's index order.
#[derive(Clone, Debug, PartialEq)]
pub struct Controllers {
    pub mode: ControlMode,
    pub m: f64,
    /// Inverse cost per bus.
    pub q: Vec<f64>,
    /// Nominal dispatch per bus.
    pub p_nom: Vec<f64>,
    /// Dual-droop gains per converter.
    pub k_omega: Vec<f64>,
    pub k_v: Vec<f64>,
    /// Consensus time constants per communication node.
    pub t_xi: Vec<f64>,
    /// Virtual capacitance per DC slot.
    pub c_virtual: Vec<f64>,
    pub m_eps: f64,
    pub comm_delay: f64,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidConfig(msg.into())
}

impl ControllerConfig {
    /// Nominal dispatch vector `-Q̃·1·ζ`.
    pub fn p_nom(&self, net: &ValidatedNetwork) -> Vec<f64> {
        net.q_tilde().iter().map(|q| -q * self.nominal_zeta).collect()
    }

    pub fn resolve(&self, net: &ValidatedNetwork) -> Result<Controllers, ModelError> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(bad(format!("m must be > 0, got {}", self.m)));
        }
        if !self.nominal_zeta.is_finite() {
            return Err(bad("p_nom_zeta_rad_s must be finite"));
        }
        if !(self.m_eps.is_finite() && self.m_eps > 0.0) {
            return Err(bad("m_eps_pu_s2 must be > 0"));
        }
        if !(self.comm_delay.is_finite() && self.comm_delay >= 0.0) {
            return Err(ModelError::NegativeDelay(self.comm_delay));
        }

        if self.mode == ControlMode::Secondary {
            net.check_comm_connected()?;
        }
        let nx = net.converters().len();
        let mut k_omega = vec![f64::NAN; nx];
        let mut k_v = vec![f64::NAN; nx];
        for g in &self.dual_droop {
            let x = (0..nx)
                .find(|&x| net.converter_id(x) == g.converter)
                .ok_or_else(|| bad(format!("dual-droop gains for unknown converter `{}`", g.converter)))?;
            if !(g.k_omega.is_finite() && g.k_omega >= 0.0 && g.k_v.is_finite() && g.k_v >= 0.0) {
                return Err(bad(format!("dual-droop gains of `{}` must be >= 0", g.converter)));
            }
            k_omega[x] = g.k_omega;
            k_v[x] = g.k_v;
        }
        if self.mode == ControlMode::DualDroop {
            if let Some(x) = (0..nx).find(|&x| k_omega[x].is_nan()) {
                return Err(bad(format!("missing dual-droop gains for converter `{}`", net.converter_id(x))));
            }
        }

        if !(self.t_xi.is_finite() && self.t_xi > 0.0) {
            return Err(bad("t_xi_s must be > 0"));
        }
        let mut t_xi = vec![self.t_xi; net.comm_nodes().len()];
        for (bus, &t) in &self.t_xi_overrides {
            let slot = net
                .bus_index(bus)
                .and_then(|b| net.comm_slot(b))
                .ok_or_else(|| bad(format!("t_xi override for `{bus}`, which is not a communication node")))?;
            if !(t.is_finite() && t > 0.0) {
                return Err(bad(format!("t_xi of `{bus}` must be > 0")));
            }
            t_xi[slot] = t;
        }

        let mut c_virtual = vec![0.0; net.dc_buses().len()];
        for (bus, &c) in &self.c_virtual {
            let slot = net
                .bus_index(bus)
                .and_then(|b| net.dc_slot(b))
                .ok_or_else(|| bad(format!("virtual capacitance on `{bus}`, which is not a DC bus")))?;
            if !(c.is_finite() && c >= 0.0) {
                return Err(bad(format!("virtual capacitance of `{bus}` must be >= 0")));
            }
            c_virtual[slot] = c;
        }

        Ok(Controllers {
            mode: self.mode,
            m: self.m,
            q: net.q_tilde(),
            p_nom: self.p_nom(net),
            k_omega,
            k_v,
            t_xi,
            c_virtual,
            m_eps: self.m_eps,
            comm_delay: self.comm_delay,
        })
    }
}

fn mode_mismatch(op: &'static str, mode: ControlMode) -> ModelError {
    ModelError::ModeMismatch { op, mode: mode.to_string() }
}

/// Droop law for all sources: `p^G = -Q̃·[ω; mV] + p_nom`.
///
/// `omega` is indexed by bus (only AC entries are read) and `v` by DC slot.
/// Converter AC buses always get zero generation.
pub fn droop_generation(
    omega: &[f64],
    v: &[f64],
    ctl: &Controllers,
    net: &ValidatedNetwork,
) -> Result<Vec<f64>, ModelError> {
    if ctl.mode == ControlMode::Secondary {
        return Err(mode_mismatch("droop_generation", ctl.mode));
    }
    let p = (0..net.bus_count())
        .map(|j| match net.bus(j).kind {
            BusKind::AcConverter => 0.0,
            BusKind::AcGenerator => -ctl.q[j] * omega[j] + ctl.p_nom[j],
            BusKind::Dc => -ctl.q[j] * ctl.m * v[net.dc_slot(j).unwrap()] + ctl.p_nom[j],
        })
        .collect();
    Ok(p)
}

/// ILC frequency under the primary law: ω_i = m·V_j.
pub fn ilc_primary_frequency(v_dc: f64, m: f64) -> f64 {
    m * v_dc
}

/// Dual-droop ILC power (AC-to-DC positive): `K^ω·ω_i - K^V·V_j`.
pub fn dual_droop_power(omega_i: f64, v_j: f64, k_omega: f64, k_v: f64) -> f64 {
    k_omega * omega_i - k_v * v_j
}

/// Capacitance-weighted voltage `Σ C_j·V_j` of DC subsystem `k`.
/// `v` is indexed by DC slot.
pub fn weighted_average_voltage(v: &[f64], net: &ValidatedNetwork, k: usize) -> Result<f64, NetworkError> {
    let sub = net
        .subsystems()
        .get(k)
        .filter(|s| s.domain == Domain::Dc)
        .ok_or_else(|| NetworkError::UnknownSubsystem(format!("#{k}")))?;
    Ok(sub.buses.iter().map(|&b| net.capacitance(b) * v[net.dc_slot(b).unwrap()]).sum())
}

/// Weighted average voltage of every DC subsystem, in [`ValidatedNetwork::dc_subsystems`] order.
pub fn weighted_average_voltages(v: &[f64], net: &ValidatedNetwork) -> Vec<f64> {
    net.dc_subsystems().into_iter().map(|k| weighted_average_voltage(v, net, k).unwrap()).collect()
}

/// Virtual frequency per bus: ω_j on AC buses, m·V̄_k on every bus of DC subsystem k.
///
/// `omega` is indexed by bus; `v_bar` follows [`ValidatedNetwork::dc_subsystems`].
pub fn virtual_frequency(omega: &[f64], v_bar: &[f64], m: f64, net: &ValidatedNetwork) -> Vec<f64> {
    let dc_subs = net.dc_subsystems();
    (0..net.bus_count())
        .map(|j| match net.bus(j).kind.domain() {
            Domain::Ac => omega[j],
            Domain::Dc => {
                let k = net.subsystem_of(j);
                m * v_bar[dc_subs.iter().position(|&s| s == k).unwrap()]
            }
        })
        .collect()
}

/// Consensus dynamics `T_ξ·ξ̇ = -𝓛ξ - Q̃ω̂` over the communication nodes.
///
/// `neighbour_xi` holds the values received from neighbours; pass `xi`
/// itself when there is no communication delay. `q` and `omega_hat` are
/// indexed by communication node.
pub fn consensus_rhs(
    xi: &[f64],
    neighbour_xi: &[f64],
    omega_hat: &[f64],
    q: &[f64],
    t_xi: &[f64],
    links: &[(usize, usize)],
) -> Vec<f64> {
    let mut out: Vec<f64> = (0..xi.len()).map(|i| -q[i] * omega_hat[i]).collect();
    for &(a, b) in links {
        out[a] -= xi[a] - neighbour_xi[b];
        out[b] -= xi[b] - neighbour_xi[a];
    }
    for (o, t) in out.iter_mut().zip(t_xi) {
        *o /= t;
    }
    out
}

/// Secondary generation `p^G_j = Q̃_jj·ξ_j - C^V_j·V̇_j` per bus.
///
/// `xi` is indexed by communication node, `v_dot` by DC slot.
pub fn secondary_generation(
    xi: &[f64],
    v_dot: &[f64],
    ctl: &Controllers,
    net: &ValidatedNetwork,
) -> Result<Vec<f64>, ModelError> {
    if ctl.mode != ControlMode::Secondary {
        return Err(mode_mismatch("secondary_generation", ctl.mode));
    }
    let p = (0..net.bus_count())
        .map(|j| {
            if net.bus(j).kind == BusKind::AcConverter {
                return 0.0;
            }
            let base = net.comm_slot(j).map_or(0.0, |s| ctl.q[j] * xi[s]);
            match net.dc_slot(j) {
                Some(s) => base - ctl.c_virtual[s] * v_dot[s],
                None => base,
            }
        })
        .collect();
    Ok(p)
}
