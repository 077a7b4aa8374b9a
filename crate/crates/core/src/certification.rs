//! Lyapunov certificates and invariant checks evaluated along trajectories.
//!
//! Failures are recorded in the report; nothing here aborts a run.

use std::f64::consts::FRAC_PI_2;

use crate::controllers::{weighted_average_voltages, ControlMode, Controllers};
use crate::dynamics::{SystemState, Trajectory};
use crate::error::{ModelError, SolveError};
use crate::network::ValidatedNetwork;
use crate::numerics::inf_norm;
use crate::steady_state::{find_equilibrium, EquilibriumPoint};

/// Relative tolerance of the per-step Lyapunov check: `ΔW <= 1e-9·(1 + W)`.
pub const TOL_W_REL: f64 = 1e-9;
/// Bound on `Ẇ + (ω^G)ᵀDω^G` in secondary mode.
pub const TOL_DISSIPATION: f64 = 1e-6;
/// Bound on the net line inflow of each subsystem.
pub const TOL_CONSERVATION: f64 = 1e-12;

pub const CHECK_LYAPUNOV: &str = "lyapunov_monotone";
pub const CHECK_DISSIPATION: &str = "dissipation_bound";
pub const CHECK_CONSERVATION: &str = "flow_conservation";
pub const CHECK_ILC: &str = "ilc_lossless";
pub const CHECK_SECURITY: &str = "security_margin";
pub const CHECK_TERMINAL: &str = "terminal_convergence";

fn mode_mismatch(op: &'static str, mode: ControlMode) -> ModelError {
    ModelError::ModeMismatch { op, mode: mode.to_string() }
}

/// `Σ B [cos η* − cos η − (η − η*) sin η*]` over AC lines.
pub fn potential_energy(eta: &[f64], eta_star: &[f64], net: &ValidatedNetwork) -> f64 {
    net.ac_edges()
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let (x, xs) = (eta[k], eta_star[k]);
            net.edges()[e].weight * (xs.cos() - x.cos() - (x - xs) * xs.sin())
        })
        .sum()
}

fn kinetic(state: &SystemState, eq: &EquilibriumPoint, net: &ValidatedNetwork) -> f64 {
    net.generators()
        .iter()
        .enumerate()
        .map(|(k, &b)| 0.5 * net.inertia(b) * (state.omega_g[k] - eq.state.omega_g[k]).powi(2))
        .sum()
}

/// Primary-mode Lyapunov function: kinetic + potential + `½ m (V−V*)ᵀC(V−V*)`.
pub fn lyapunov_primary(
    state: &SystemState,
    eq: &EquilibriumPoint,
    net: &ValidatedNetwork,
    ctl: &Controllers,
) -> Result<f64, ModelError> {
    if ctl.mode != ControlMode::Primary {
        return Err(mode_mismatch("lyapunov_primary", ctl.mode));
    }
    let w_v: f64 = net
        .dc_buses()
        .iter()
        .enumerate()
        .map(|(s, &b)| 0.5 * ctl.m * net.capacitance(b) * (state.v[s] - eq.state.v[s]).powi(2))
        .sum();
    Ok(kinetic(state, eq, net) + potential_energy(&state.eta, &eq.state.eta, net) + w_v)
}

/// Secondary-mode Lyapunov function: kinetic + potential + `½ m V̄ᵀV̄` + `½ (ξ−ξ*)ᵀT_ξ(ξ−ξ*)`.
pub fn lyapunov_secondary(
    state: &SystemState,
    eq: &EquilibriumPoint,
    net: &ValidatedNetwork,
    ctl: &Controllers,
) -> Result<f64, ModelError> {
    if ctl.mode != ControlMode::Secondary {
        return Err(mode_mismatch("lyapunov_secondary", ctl.mode));
    }
    let w_g: f64 =
        net.generators().iter().enumerate().map(|(k, &b)| 0.5 * net.inertia(b) * state.omega_g[k].powi(2)).sum();
    let w_v: f64 = weighted_average_voltages(&state.v, net).iter().map(|vb| 0.5 * ctl.m * vb * vb).sum();
    let w_xi: f64 = (0..state.xi.len()).map(|i| 0.5 * ctl.t_xi[i] * (state.xi[i] - eq.state.xi[i]).powi(2)).sum();
    Ok(w_g + potential_energy(&state.eta, &eq.state.eta, net) + w_v + w_xi)
}

/// The Lyapunov function of `ctl.mode`, if that mode has one.
pub fn lyapunov(state: &SystemState, eq: &EquilibriumPoint, net: &ValidatedNetwork, ctl: &Controllers) -> Option<f64> {
    match ctl.mode {
        ControlMode::Primary => lyapunov_primary(state, eq, net, ctl).ok(),
        ControlMode::Secondary => lyapunov_secondary(state, eq, net, ctl).ok(),
        ControlMode::DualDroop => None,
    }
}

/// Per-sample security margin `π/2 − max |η|`.
pub fn check_security(traj: &Trajectory) -> Vec<f64> {
    traj.samples.iter().map(|s| FRAC_PI_2 - inf_norm(&s.state.eta)).collect()
}

/// Equilibrium for the loads of every epoch of `traj`, warm-started from the
/// previous one.
pub fn epoch_equilibria(
    traj: &Trajectory,
    net: &ValidatedNetwork,
    ctl: &Controllers,
) -> Result<Vec<EquilibriumPoint>, SolveError> {
    let mut out: Vec<EquilibriumPoint> = Vec::with_capacity(traj.epochs.len());
    for epoch in &traj.epochs {
        let guess = out.last().map(|e| &e.state);
        out.push(find_equilibrium(net, ctl, &epoch.loads, guess)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub check: &'static str,
    pub value: f64,
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    /// False when the check does not apply to the run (e.g. no Lyapunov function).
    pub applicable: bool,
    pub passed: bool,
    /// Worst value seen (meaning depends on the check).
    pub worst: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub mode: ControlMode,
    pub times: Vec<f64>,
    /// Lyapunov value per sample against the equilibrium of that sample's
    /// load epoch; empty in dual-droop mode.
    pub w_series: Vec<f64>,
    /// Largest per-step increase of W (0 if W never increased).
    pub max_increase: f64,
    /// Per-sample `Ẇ + (ω^G)ᵀDω^G` estimate (secondary mode only).
    pub dissipation: Vec<f64>,
    pub security_margin: Vec<f64>,
    /// Per-sample largest |Σ p^F| over subsystems.
    pub conservation_residuals: Vec<f64>,
    /// Per-sample largest |p^X_ac + p^X_dc| over converters.
    pub ilc_residuals: Vec<f64>,
    pub terminal_error: f64,
    pub tol_conv: f64,
    pub violations: Vec<Violation>,
    pub checks: Vec<CheckSummary>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Plain-text PASS/FAIL summary, one line per check.
    pub fn summary(&self) -> String {
        let mut s = format!("certificate report ({} mode, {} samples)\n", self.mode, self.times.len());
        for c in &self.checks {
            let status = match (c.applicable, c.passed) {
                (false, _) => "SKIP",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            s.push_str(&format!("{status} {:<22} worst={:.6e} violations={}\n", c.name, c.worst, c.violations));
        }
        s.push_str(&format!("overall: {}\n", if self.passed() { "PASS" } else { "FAIL" }));
        s
    }
}

/// Runs the invariant suite over `traj`.
///
/// `equilibria` holds one equilibrium per load epoch of the trajectory (see
/// [`epoch_equilibria`]); the per-step Lyapunov check for step k→k+1 uses the
/// equilibrium of the epoch containing sample k.
pub fn certify_trajectory(
    traj: &Trajectory,
    equilibria: &[EquilibriumPoint],
    net: &ValidatedNetwork,
    ctl: &Controllers,
    tol_conv: f64,
) -> Result<CertificateReport, ModelError> {
    if equilibria.len() != traj.epochs.len() {
        return Err(ModelError::DimensionMismatch {
            what: "equilibria",
            expected: traj.epochs.len(),
            got: equilibria.len(),
        });
    }
    let times = traj.times();
    let n = traj.samples.len();
    let mut violations = Vec::new();
    let eq_of = |k: usize| &equilibria[traj.epoch_of(k)];

    // Lyapunov monotonicity. The secondary energy function is only a certificate for the
    // undelayed loop without virtual capacitance.
    let has_w = match ctl.mode {
        ControlMode::Primary => true,
        ControlMode::Secondary => ctl.comm_delay == 0.0 && ctl.c_virtual.iter().all(|&c| c == 0.0),
        ControlMode::DualDroop => false,
    };
    let mut w_series = Vec::new();
    let mut max_increase = 0.0f64;
    let mut dissipation = Vec::new();
    let mut lyap_count = 0;
    let mut diss_count = 0;
    let mut worst_diss = f64::NEG_INFINITY;
    if has_w {
        let w = |k: usize, eq: &EquilibriumPoint| lyapunov(&traj.samples[k].state, eq, net, ctl).unwrap();
        w_series = (0..n).map(|k| w(k, eq_of(k))).collect();
        let damping = |k: usize| -> f64 {
            net.generators()
                .iter()
                .enumerate()
                .map(|(g, &b)| net.damping(b) * traj.samples[k].state.omega_g[g].powi(2))
                .sum()
        };
        for k in 0..n.saturating_sub(1) {
            let eq = eq_of(k);
            let w0 = w_series[k];
            let w1 = w(k + 1, eq);
            let dw = w1 - w0;
            max_increase = max_increase.max(dw);
            if dw > TOL_W_REL * (1.0 + w0) {
                lyap_count += 1;
                violations.push(Violation { t: times[k + 1], check: CHECK_LYAPUNOV, value: dw });
            }
            if ctl.mode == ControlMode::Secondary {
                let d = dw / traj.dt + 0.5 * (damping(k) + damping(k + 1));
                dissipation.push(d);
                worst_diss = worst_diss.max(d);
                if d > TOL_DISSIPATION {
                    diss_count += 1;
                    violations.push(Violation { t: times[k + 1], check: CHECK_DISSIPATION, value: d });
                }
            }
        }
    }

    // conservation and converter losslessness
    let mut conservation_residuals = Vec::with_capacity(n);
    let mut ilc_residuals = Vec::with_capacity(n);
    let (mut cons_count, mut ilc_count) = (0, 0);
    for (k, s) in traj.samples.iter().enumerate() {
        let o = &s.outputs;
        let c = net
            .subsystems()
            .iter()
            .map(|sub| sub.buses.iter().map(|&b| o.p_f[b]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        if c > TOL_CONSERVATION {
            cons_count += 1;
            violations.push(Violation { t: times[k], check: CHECK_CONSERVATION, value: c });
        }
        conservation_residuals.push(c);
        let r = o.p_x.iter().zip(&o.p_x_dc).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        if r != 0.0 {
            ilc_count += 1;
            violations.push(Violation { t: times[k], check: CHECK_ILC, value: r });
        }
        ilc_residuals.push(r);
    }

    // security
    let security_margin = check_security(traj);
    let mut sec_count = 0;
    for (k, &m) in security_margin.iter().enumerate() {
        if m <= 0.0 {
            sec_count += 1;
            violations.push(Violation { t: times[k], check: CHECK_SECURITY, value: m });
        }
    }

    // terminal convergence
    let terminal_error = traj.final_state().max_abs_diff(&eq_of(n - 1).state);
    let terminal_ok = terminal_error < tol_conv;
    if !terminal_ok {
        violations.push(Violation { t: times[n - 1], check: CHECK_TERMINAL, value: terminal_error });
    }

    let summary = |name, applicable, count: usize, worst| CheckSummary {
        name,
        applicable,
        passed: count == 0,
        worst,
        violations: count,
    };
    let secondary = has_w && ctl.mode == ControlMode::Secondary;
    let checks = vec![
        summary(CHECK_LYAPUNOV, has_w, lyap_count, max_increase),
        summary(CHECK_DISSIPATION, secondary, diss_count, if secondary { worst_diss } else { 0.0 }),
        summary(CHECK_CONSERVATION, true, cons_count, conservation_residuals.iter().fold(0.0, |a: f64, b| a.max(*b))),
        summary(CHECK_ILC, true, ilc_count, ilc_residuals.iter().fold(0.0, |a: f64, b| a.max(*b))),
        summary(CHECK_SECURITY, true, sec_count, security_margin.iter().fold(f64::INFINITY, |a: f64, b| a.min(*b))),
        summary(CHECK_TERMINAL, true, usize::from(!terminal_ok), terminal_error),
    ];

    Ok(CertificateReport {
        mode: ctl.mode,
        times,
        w_series,
        max_increase,
        dissipation,
        security_margin,
        conservation_residuals,
        ilc_residuals,
        terminal_error,
        tol_conv,
        violations,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerConfig;
    use crate::dynamics::{integrate, Disturbance, DisturbanceSchedule, IntegrationSettings, LoadProfile, StateLayout};
    use crate::network::Bus;
    use crate::network::{tests::t1_spec, validate_network, Line, NetworkSpec};
    use proptest::prelude::*;

    fn ctl(mode: ControlMode, net: &ValidatedNetwork) -> Controllers {
        ControllerConfig { mode, ..ControllerConfig::default() }.resolve(net).unwrap()
    }

    fn origin_eq(net: &ValidatedNetwork, c: &Controllers) -> EquilibriumPoint {
        find_equilibrium(net, c, &[0.0; 4], None).unwrap()
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 1e-14 {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, depth - 1) + simpson(f, m, b, fm, frm, fb, right, depth - 1)
    }

    fn quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 40)
    }

    fn one_edge(b: f64) -> ValidatedNetwork {
        validate_network(&NetworkSpec {
            buses: vec![Bus::ac_generator("g1", "ac", 1.0, 1.0, 1.0), Bus::ac_generator("g2", "ac", 1.0, 1.0, 1.0)],
            lines: vec![Line::ac("g1", "g2", b)],
            ..NetworkSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn potential_single_edge_value() {
        let net = one_edge(1.0);
        let w = potential_energy(&[std::f64::consts::FRAC_PI_6], &[0.0], &net);
        assert!((w - 0.133975).abs() < 1e-6);
        assert!((w - (1.0 - (3.0f64).sqrt() / 2.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn potential_matches_quadrature(b in 0.1f64..50.0, eta in -1.5f64..1.5, eta_s in -1.5f64..1.5) {
            let net = one_edge(b);
            let closed = potential_energy(&[eta], &[eta_s], &net);
            let numeric = quad(&|p: f64| b * (p.sin() - eta_s.sin()), eta_s, eta);
            prop_assert!((closed - numeric).abs() < 1e-10, "{} vs {}", closed, numeric);
        }

        #[test]
        fn primary_w_positive_away_from_equilibrium(
            eta in -1.4f64..1.4, w in -1.0f64..1.0, v1 in -1.0f64..1.0, v2 in -1.0f64..1.0,
        ) {
            let net = validate_network(&t1_spec()).unwrap();
            let c = ctl(ControlMode::Primary, &net);
            let eq = origin_eq(&net, &c);
            let s = SystemState { t: 0.0, eta: vec![eta], omega_g: vec![w], v: vec![v1, v2], ..SystemState::default() };
            let val = lyapunov_primary(&s, &eq, &net, &c).unwrap();
            if s.max_abs() > 0.0 { prop_assert!(val > 0.0); }
        }
    }

    #[test]
    fn lyapunov_term_isolation() {
        let net = validate_network(&t1_spec()).unwrap();
        let c = ctl(ControlMode::Primary, &net);
        let eq = origin_eq(&net, &c);
        assert_eq!(lyapunov_primary(&eq.state, &eq, &net, &c).unwrap(), 0.0);
        let mut s = eq.state.clone();
        s.omega_g[0] = 0.3;
        assert!((lyapunov_primary(&s, &eq, &net, &c).unwrap() - 0.5 * 0.09).abs() < 1e-15);
        assert!(lyapunov_secondary(&s, &eq, &net, &c).is_err());

        let cs = ctl(ControlMode::Secondary, &net);
        let eqs = origin_eq(&net, &cs);
        assert_eq!(lyapunov_secondary(&eqs.state, &eqs, &net, &cs).unwrap(), 0.0);
        let mut s = eqs.state.clone();
        s.xi = vec![0.1, -0.2, 0.3, 0.0];
        assert!((lyapunov_secondary(&s, &eqs, &net, &cs).unwrap() - 0.5 * 0.14).abs() < 1e-15);
        let mut s = eqs.state.clone();
        s.v = vec![0.1, -0.1];
        assert_eq!(lyapunov_secondary(&s, &eqs, &net, &cs).unwrap(), 0.0);
    }

    #[test]
    fn security_margin_values() {
        let net = validate_network(&t1_spec()).unwrap();
        let c = ctl(ControlMode::Primary, &net);
        let mut s0 = StateLayout::new(&net, ControlMode::Primary).zeros(0.0);
        let tr = integrate(
            &s0,
            &net,
            &c,
            &LoadProfile::constant(vec![0.0; 4]),
            IntegrationSettings { t_end: 0.01, dt: 1e-3, substeps: None },
        )
        .unwrap();
        assert!(check_security(&tr).iter().all(|m| *m == FRAC_PI_2));
        s0.eta[0] = std::f64::consts::FRAC_PI_3;
        let mut tr2 = tr.clone();
        tr2.samples[0].state = s0;
        assert!((check_security(&tr2)[0] - std::f64::consts::FRAC_PI_6).abs() < 1e-15);
    }

    fn step_run(mode: ControlMode) -> (ValidatedNetwork, Controllers, Trajectory) {
        let net = validate_network(&t1_spec()).unwrap();
        let c = ControllerConfig { mode, t_xi: 0.5, ..ControllerConfig::default() }.resolve(&net).unwrap();
        let profile = DisturbanceSchedule::new(vec![Disturbance { time: 1.0, bus: "a2".into(), delta: 0.2 }])
            .resolve(&net)
            .unwrap();
        let s0 = StateLayout::new(&net, mode).zeros(0.0);
        // the slowest secondary-mode eigenvalue of T1 is about -0.32 1/s
        let t_end = if mode == ControlMode::Secondary { 80.0 } else { 30.0 };
        let tr = integrate(&s0, &net, &c, &profile, IntegrationSettings { t_end, dt: 1e-3, substeps: None }).unwrap();
        (net, c, tr)
    }

    #[test]
    fn t1_primary_step_is_certified() {
        let (net, c, tr) = step_run(ControlMode::Primary);
        let eqs = epoch_equilibria(&tr, &net, &c).unwrap();
        let rep = certify_trajectory(&tr, &eqs, &net, &c, 1e-6).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        assert!(rep.security_margin.iter().all(|m| *m > 0.0));
        assert_eq!(rep.w_series.len(), tr.samples.len());
    }

    #[test]
    fn t1_secondary_step_is_certified() {
        let (net, c, tr) = step_run(ControlMode::Secondary);
        let eqs = epoch_equilibria(&tr, &net, &c).unwrap();
        let rep = certify_trajectory(&tr, &eqs, &net, &c, 1e-6).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
    }

    #[test]
    fn constant_equilibrium_trajectory_has_zero_w() {
        let net = validate_network(&t1_spec()).unwrap();
        let c = ctl(ControlMode::Primary, &net);
        let loads = vec![0.0, 0.2, 0.0, 0.0];
        let eq = find_equilibrium(&net, &c, &loads, None).unwrap();
        let tr = integrate(
            &eq.state,
            &net,
            &c,
            &LoadProfile::constant(loads),
            IntegrationSettings { t_end: 1.0, dt: 1e-3, substeps: None },
        )
        .unwrap();
        let rep = certify_trajectory(&tr, &[eq], &net, &c, 1e-6).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        assert!(rep.w_series.iter().all(|w| w.abs() < 1e-18));
        assert!(rep.summary().contains("overall: PASS"));
    }

    #[test]
    fn dual_droop_skips_lyapunov_checks() {
        let net = validate_network(&t1_spec()).unwrap();
        let c = ControllerConfig {
            mode: ControlMode::DualDroop,
            dual_droop: vec![crate::controllers::DualDroopGains { converter: "x1".into(), k_omega: 2.0, k_v: 4.0 }],
            ..ControllerConfig::default()
        }
        .resolve(&net)
        .unwrap();
        let s0 = StateLayout::new(&net, c.mode).zeros(0.0);
        let tr = integrate(
            &s0,
            &net,
            &c,
            &LoadProfile::constant(vec![0.0; 4]),
            IntegrationSettings { t_end: 0.1, dt: 1e-3, substeps: None },
        )
        .unwrap();
        let eqs = epoch_equilibria(&tr, &net, &c).unwrap();
        let rep = certify_trajectory(&tr, &eqs, &net, &c, 1e-6).unwrap();
        assert!(rep.w_series.is_empty());
        assert!(!rep.check(CHECK_LYAPUNOV).unwrap().applicable);
        assert!(rep.summary().contains("SKIP"));
    }

    #[test]
    fn virtual_capacitance_is_outside_the_energy_certificate() {
        let net = validate_network(&t1_spec()).unwrap();
        let mut cfg = ControllerConfig { mode: ControlMode::Secondary, t_xi: 0.5, ..ControllerConfig::default() };
        cfg.c_virtual.insert("d2".into(), 0.5);
        let c = cfg.resolve(&net).unwrap();
        let profile = LoadProfile::constant(vec![0.0, 0.2, 0.0, 0.0]);
        let s0 = StateLayout::new(&net, c.mode).zeros(0.0);
        let tr =
            integrate(&s0, &net, &c, &profile, IntegrationSettings { t_end: 80.0, dt: 1e-3, substeps: None }).unwrap();
        let eqs = epoch_equilibria(&tr, &net, &c).unwrap();
        let rep = certify_trajectory(&tr, &eqs, &net, &c, 1e-6).unwrap();
        assert!(!rep.check(CHECK_LYAPUNOV).unwrap().applicable);
        assert!(!rep.check(CHECK_DISSIPATION).unwrap().applicable);
        assert!(rep.passed(), "{}", rep.summary());
    }
}
