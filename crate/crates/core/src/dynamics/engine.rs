use crate::controllers::{
    consensus_rhs, droop_generation, dual_droop_power, ilc_primary_frequency, secondary_generation, virtual_frequency,
    weighted_average_voltages, ControlMode, Controllers,
};
use crate::error::ModelError;
use crate::network::{Domain, ValidatedNetwork};

use super::state::{StateLayout, SystemState};

/// Signals exchanged over the communication layer, as seen by the receivers.
///
/// Used to inject delayed copies of `V̄` (per DC subsystem) and of the
/// neighbours' `ξ` (per communication node).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Exchange {
    pub v_bar: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Algebraic signals computed alongside the state derivative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DerivedOutputs {
    /// Generation per bus.
    pub p_g: Vec<f64>,
    /// Net line inflow per bus.
    pub p_f: Vec<f64>,
    /// Power drawn from the AC side per converter (AC to DC positive).
    pub p_x: Vec<f64>,
    /// Power drawn from the DC side per converter; always `-p_x`.
    pub p_x_dc: Vec<f64>,
    /// Frequency deviation per bus; zero on DC buses.
    pub omega: Vec<f64>,
    /// Weighted average voltage per DC subsystem (undelayed).
    pub v_bar: Vec<f64>,
    /// Virtual frequency per bus (secondary mode only, else empty).
    pub omega_hat: Vec<f64>,
    /// Voltage derivative per DC bus.
    pub v_dot: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub derivative: SystemState,
    pub outputs: DerivedOutputs,
}

/// Line flows (`B sin η` on AC lines, `G(V_from - V_to)` on DC lines) per
/// line, and the net inflow per bus.
pub fn branch_flows(state: &SystemState, net: &ValidatedNetwork) -> (Vec<f64>, Vec<f64>) {
    let mut flows = vec![0.0; net.edges().len()];
    for (k, &e) in net.ac_edges().iter().enumerate() {
        flows[e] = net.edges()[e].weight * state.eta[k].sin();
    }
    for (e, edge) in net.edges().iter().enumerate() {
        if edge.domain == Domain::Dc {
            let vf = state.v[net.dc_slot(edge.from).unwrap()];
            let vt = state.v[net.dc_slot(edge.to).unwrap()];
            flows[e] = edge.weight * (vf - vt);
        }
    }
    let mut p_f = vec![0.0; net.bus_count()];
    for (e, edge) in net.edges().iter().enumerate() {
        p_f[edge.from] -= flows[e];
        p_f[edge.to] += flows[e];
    }
    (flows, p_f)
}

/// Converter powers implied by the lossless, inertia-free AC converter bus:
/// `p^X = p^G - p^L + p^F` evaluated at each converter's AC bus.
pub fn converter_transfers(net: &ValidatedNetwork, p_g: &[f64], p_l: &[f64], p_f: &[f64]) -> Vec<f64> {
    net.converters().iter().map(|c| p_g[c.ac_bus] - p_l[c.ac_bus] + p_f[c.ac_bus]).collect()
}

/// Evaluates the closed-loop right-hand side and derived outputs.
///
/// `exchange` overrides the communicated signals; `None` means no delay.
pub fn evaluate(
    state: &SystemState,
    net: &ValidatedNetwork,
    ctl: &Controllers,
    loads: &[f64],
    exchange: Option<&Exchange>,
) -> Result<Evaluation, ModelError> {
    let layout = StateLayout::new(net, ctl.mode);
    layout.check(state)?;
    if loads.len() != net.bus_count() {
        return Err(ModelError::DimensionMismatch { what: "loads", expected: net.bus_count(), got: loads.len() });
    }
    let n = net.bus_count();
    let m = ctl.m;
    let v_bar = weighted_average_voltages(&state.v, net);
    let v_bar_rx = exchange.map_or(&v_bar, |x| &x.v_bar);
    let dc_subs = net.dc_subsystems();

    let mut omega = vec![0.0; n];
    for (k, &b) in net.generators().iter().enumerate() {
        omega[b] = state.omega_g[k];
    }
    for (x, c) in net.converters().iter().enumerate() {
        omega[c.ac_bus] = match ctl.mode {
            ControlMode::Primary => ilc_primary_frequency(state.v[net.dc_slot(c.dc_bus).unwrap()], m),
            ControlMode::DualDroop => state.omega_x[x],
            ControlMode::Secondary => {
                let k = net.subsystem_of(c.dc_bus);
                m * v_bar_rx[dc_subs.iter().position(|&s| s == k).unwrap()]
            }
        };
    }

    let (_, p_f) = branch_flows(state, net);

    let mut p_g = match ctl.mode {
        ControlMode::Secondary => secondary_generation(&state.xi, &vec![0.0; layout.n_dc], ctl, net)?,
        _ => droop_generation(&omega, &state.v, ctl, net)?,
    };

    let p_x = match ctl.mode {
        ControlMode::DualDroop => net
            .converters()
            .iter()
            .enumerate()
            .map(|(x, c)| {
                let vj = state.v[net.dc_slot(c.dc_bus).unwrap()];
                dual_droop_power(state.omega_x[x], vj, ctl.k_omega[x], ctl.k_v[x])
            })
            .collect(),
        _ => converter_transfers(net, &p_g, loads, &p_f),
    };
    let mut p_x_bus = vec![0.0; n];
    for (x, c) in net.converters().iter().enumerate() {
        p_x_bus[c.ac_bus] += p_x[x];
        p_x_bus[c.dc_bus] -= p_x[x];
    }

    let mut v_dot = vec![0.0; layout.n_dc];
    for (s, &b) in net.dc_buses().iter().enumerate() {
        let net_in = p_g[b] - loads[b] + p_f[b] - p_x_bus[b];
        let c_total = net.capacitance(b) + if ctl.mode == ControlMode::Secondary { ctl.c_virtual[s] } else { 0.0 };
        v_dot[s] = net_in / c_total;
    }
    if ctl.mode == ControlMode::Secondary {
        p_g = secondary_generation(&state.xi, &v_dot, ctl, net)?;
    }

    let mut d = layout.zeros(state.t);
    for (k, &e) in net.ac_edges().iter().enumerate() {
        let edge = net.edges()[e];
        d.eta[k] = omega[edge.from] - omega[edge.to];
    }
    for (k, &b) in net.generators().iter().enumerate() {
        let imbalance = p_g[b] - loads[b] + p_f[b] - net.damping(b) * state.omega_g[k];
        d.omega_g[k] = imbalance / net.inertia(b);
    }
    d.v.copy_from_slice(&v_dot);
    if ctl.mode == ControlMode::DualDroop {
        for (x, c) in net.converters().iter().enumerate() {
            d.omega_x[x] = (p_g[c.ac_bus] - loads[c.ac_bus] + p_f[c.ac_bus] - p_x[x]) / ctl.m_eps;
        }
    }

    let mut omega_hat = Vec::new();
    if ctl.mode == ControlMode::Secondary {
        omega_hat = virtual_frequency(&omega, v_bar_rx, m, net);
        let nodes = net.comm_nodes();
        let oh: Vec<f64> = nodes.iter().map(|&b| omega_hat[b]).collect();
        let q: Vec<f64> = nodes.iter().map(|&b| ctl.q[b]).collect();
        let nb = exchange.map_or(&state.xi, |x| &x.xi);
        d.xi = consensus_rhs(&state.xi, nb, &oh, &q, &ctl.t_xi, net.comm_links());
    }

    let p_x_dc = p_x.iter().map(|p| -p).collect();
    Ok(Evaluation { derivative: d, outputs: DerivedOutputs { p_g, p_f, p_x, p_x_dc, omega, v_bar, omega_hat, v_dot } })
}

/// State derivative without communication delay.
pub fn rhs(
    state: &SystemState,
    net: &ValidatedNetwork,
    ctl: &Controllers,
    loads: &[f64],
) -> Result<SystemState, ModelError> {
    Ok(evaluate(state, net, ctl, loads, None)?.derivative)
}
