//! Equilibria of the closed loop, optimal dispatch and power-sharing metrics.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::controllers::{ControlMode, Controllers};
use crate::dynamics::{evaluate, DerivedOutputs, StateLayout, SystemState};
use crate::error::{ModelError, SolveError};
use crate::network::{BusKind, Domain, ValidatedNetwork};
use crate::numerics::{fd_jacobian, inf_norm};

/// Newton stops once the residual ∞-norm is below this.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const POLISH_STEPS: usize = 2;

/// A solution of the equilibrium conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumPoint {
    pub state: SystemState,
    /// ∞-norm of the full closed-loop right-hand side at `state`.
    pub residual_norm: f64,
    /// Whether every AC angle difference satisfies `|η| < π/2`.
    pub security_ok: bool,
    pub max_angle: f64,
    pub derived: DerivedOutputs,
    /// Newton steps taken.
    pub iterations: usize,
}

/// Solution of the economic dispatch problem.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatchSolution {
    /// Optimal generation per bus.
    pub p_g_star: Vec<f64>,
    /// `½ Σ (p_j)² / q_j` over buses with `q_j > 0`.
    pub cost: f64,
    /// Uniform marginal `p_j / q_j`.
    pub multiplier: f64,
}

/// Minimises `½ Σ p_j²/q_j` subject to `Σ p_j = Σ (p^L_j + p^u_j)`; buses
/// with `q_j = 0` produce nothing.
pub fn optimal_dispatch(p_l: &[f64], p_u: &[f64], q_tilde: &[f64]) -> Result<DispatchSolution, SolveError> {
    let n = q_tilde.len();
    for (what, v) in [("p_l", p_l), ("p_u", p_u)] {
        if v.len() != n {
            return Err(ModelError::DimensionMismatch { what, expected: n, got: v.len() }.into());
        }
    }
    let q_sum: f64 = q_tilde.iter().sum();
    if q_sum.is_nan() || q_sum <= 0.0 {
        return Err(SolveError::AllCostsInfinite);
    }
    let demand: f64 = p_l.iter().zip(p_u).map(|(l, u)| l + u).sum();
    let multiplier = demand / q_sum;
    let p_g_star: Vec<f64> = q_tilde.iter().map(|q| q * multiplier).collect();
    let cost = p_g_star.iter().zip(q_tilde).filter(|(_, &q)| q > 0.0).map(|(p, q)| 0.5 * p * p / q).sum();
    Ok(DispatchSolution { p_g_star, cost, multiplier })
}

/// Relative error `‖p_g - p*‖₂ / max(‖p*‖₂, 1e-12)`.
pub fn power_sharing_error(p_g_steady: &[f64], dispatch: &DispatchSolution) -> f64 {
    let diff: f64 = p_g_steady.iter().zip(&dispatch.p_g_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = dispatch.p_g_star.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Damping power `D_j ω_j` per bus (generator buses only).
pub fn damping_power(state: &SystemState, net: &ValidatedNetwork) -> Vec<f64> {
    let mut p_u = vec![0.0; net.bus_count()];
    for (k, &b) in net.generators().iter().enumerate() {
        p_u[b] = net.damping(b) * state.omega_g[k];
    }
    p_u
}

/// Optimal dispatch for `p_l` with the damping power of `eq`.
///
/// The equilibrium itself does not depend on the dispatch, so evaluating
/// the damping power at the solved frequencies is already the joint fixed point.
pub fn dispatch_at(eq: &EquilibriumPoint, net: &ValidatedNetwork, p_l: &[f64]) -> Result<DispatchSolution, SolveError> {
    optimal_dispatch(p_l, &damping_power(&eq.state, net), &net.q_tilde())
}

/// Unknowns of the Newton problem and their mapping to a [`SystemState`].
struct Unknowns {
    layout: StateLayout,
    /// Angle slot per bus; `None` for DC buses and the reference bus of each AC subsystem.
    theta_slot: Vec<Option<usize>>,
    /// (bus, reference bus) pairs whose frequencies must agree.
    sync: Vec<(usize, usize)>,
    n_theta: usize,
}

impl Unknowns {
    fn new(net: &ValidatedNetwork, mode: ControlMode) -> Self {
        let mut theta_slot = vec![None; net.bus_count()];
        let mut sync = Vec::new();
        let mut n_theta = 0;
        for k in net.ac_subsystems() {
            let sub = &net.subsystems()[k];
            let reference = *sub.buses.iter().min().unwrap();
            for &b in &sub.buses {
                if b != reference {
                    theta_slot[b] = Some(n_theta);
                    n_theta += 1;
                    sync.push((b, reference));
                }
            }
        }
        Unknowns { layout: StateLayout::new(net, mode), theta_slot, sync, n_theta }
    }

    fn len(&self) -> usize {
        self.n_theta + self.layout.len() - self.layout.n_eta
    }

    fn to_state(&self, z: &[f64], net: &ValidatedNetwork) -> SystemState {
        let theta = |b: usize| self.theta_slot[b].map_or(0.0, |s| z[s]);
        let l = &self.layout;
        let mut rest = z[self.n_theta..].iter().copied();
        let mut take = |n: usize| rest.by_ref().take(n).collect::<Vec<f64>>();
        let omega_g = take(l.n_gen);
        let omega_x = take(l.n_x);
        let v = take(l.n_dc);
        let xi = take(l.n_xi);
        let eta = net
            .ac_edges()
            .iter()
            .map(|&e| {
                let edge = net.edges()[e];
                theta(edge.from) - theta(edge.to)
            })
            .collect();
        SystemState { t: 0.0, eta, omega_g, v, xi, omega_x }
    }

    /// Bus angles consistent with `state.eta` along a BFS spanning tree.
    fn pack_state(&self, state: &SystemState, net: &ValidatedNetwork) -> Vec<f64> {
        let mut theta = vec![f64::NAN; net.bus_count()];
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.bus_count()];
        for (k, &e) in net.ac_edges().iter().enumerate() {
            let edge = net.edges()[e];
            adj[edge.from].push((edge.to, -state.eta[k]));
            adj[edge.to].push((edge.from, state.eta[k]));
        }
        for k in net.ac_subsystems() {
            let reference = *net.subsystems()[k].buses.iter().min().unwrap();
            theta[reference] = 0.0;
            let mut queue = VecDeque::from([reference]);
            while let Some(b) = queue.pop_front() {
                for &(nb, d) in &adj[b] {
                    if theta[nb].is_nan() {
                        theta[nb] = theta[b] + d;
                        queue.push_back(nb);
                    }
                }
            }
        }
        let mut z = vec![0.0; self.n_theta];
        for (b, slot) in self.theta_slot.iter().enumerate() {
            if let Some(s) = slot {
                z[*s] = theta[b];
            }
        }
        z.extend_from_slice(&state.omega_g);
        z.extend_from_slice(&state.omega_x);
        z.extend_from_slice(&state.v);
        z.extend_from_slice(&state.xi);
        z
    }

    fn residual(
        &self,
        z: &[f64],
        net: &ValidatedNetwork,
        ctl: &Controllers,
        p_l: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        let s = self.to_state(z, net);
        let ev = evaluate(&s, net, ctl, p_l, None)?;
        let d = ev.derivative;
        let mut r = Vec::with_capacity(self.len());
        r.extend_from_slice(&d.omega_g);
        r.extend_from_slice(&d.omega_x);
        r.extend_from_slice(&d.v);
        r.extend_from_slice(&d.xi);
        r.extend(self.sync.iter().map(|&(b, reference)| ev.outputs.omega[b] - ev.outputs.omega[reference]));
        Ok(r)
    }
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn make_point(
    state: SystemState,
    net: &ValidatedNetwork,
    ctl: &Controllers,
    p_l: &[f64],
    iterations: usize,
) -> Result<EquilibriumPoint, SolveError> {
    let ev = evaluate(&state, net, ctl, p_l, None)?;
    let layout = StateLayout::new(net, ctl.mode);
    let residual_norm = inf_norm(&layout.pack(&ev.derivative));
    let max_angle = inf_norm(&state.eta);
    Ok(EquilibriumPoint {
        state,
        residual_norm,
        security_ok: max_angle < FRAC_PI_2,
        max_angle,
        derived: ev.outputs,
        iterations,
    })
}

/// Damped Newton solve of the equilibrium conditions for loads `p_l`.
///
/// One angle per AC subsystem (its lowest-index bus) is pinned to zero.
/// Starts from `initial_guess`, or from the origin when `None`.
pub fn find_equilibrium(
    net: &ValidatedNetwork,
    ctl: &Controllers,
    p_l: &[f64],
    initial_guess: Option<&SystemState>,
) -> Result<EquilibriumPoint, SolveError> {
    let u = Unknowns::new(net, ctl.mode);
    let mut z = match initial_guess {
        Some(s) => {
            u.layout.check(s)?;
            u.pack_state(s, net)
        }
        None => vec![0.0; u.len()],
    };
    let res = |z: &[f64]| u.residual(z, net, ctl, p_l);
    let mut r = res(&z)?;
    let mut iterations = 0;
    let mut converged = inf_norm(&r) < NEWTON_TOL;
    let mut polish = 0;

    while iterations < NEWTON_MAX_ITER && !(converged && polish >= POLISH_STEPS) {
        let jac = fd_jacobian(&z, 1e-6, res)?;
        let step = match jac.lu().solve(&-DVector::from_column_slice(&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ if converged => break,
            _ => return Err(SolveError::SingularJacobian { iteration: iterations }),
        };
        iterations += 1;
        let base = norm2(&r);
        let trial = |alpha: f64| -> Vec<f64> { z.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect() };
        if converged {
            // polishing: only full steps that still reduce the residual
            let zt = trial(1.0);
            let rt = res(&zt)?;
            if norm2(&rt) >= base {
                break;
            }
            z = zt;
            r = rt;
            polish += 1;
            continue;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let zt = trial(alpha);
            let rt = res(&zt)?;
            if norm2(&rt) < base {
                accepted = Some((zt, rt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((zt, rt)) = accepted else { break };
        z = zt;
        r = rt;
        converged = inf_norm(&r) < NEWTON_TOL;
    }

    let point = make_point(u.to_state(&z, net), net, ctl, p_l, iterations)?;
    if !converged {
        return Err(SolveError::NoConvergence { residual: inf_norm(&r), best: Box::new(point) });
    }
    if !point.security_ok {
        return Err(SolveError::SecurityViolation { max_angle: point.max_angle, point: Box::new(point) });
    }
    Ok(point)
}

/// Steady-state metrics of one resistance-scaled network.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepMetrics {
    pub error: f64,
    /// Largest |ω| over AC buses.
    pub omega_max: f64,
    /// Largest |V̄| over DC subsystems.
    pub vbar_max: f64,
    pub security_ok: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub scale: f64,
    pub outcome: Result<SweepMetrics, SolveError>,
}

#[derive(Clone, Debug)]
pub struct ResistanceSweep {
    pub points: Vec<SweepPoint>,
    /// All points solved and the error strictly decreases with the scale
    /// (points are compared in order of decreasing scale).
    pub monotone_decreasing: bool,
}

/// Steady-state metrics of an equilibrium.
pub fn sweep_metrics(eq: &EquilibriumPoint, net: &ValidatedNetwork, p_l: &[f64]) -> Result<SweepMetrics, SolveError> {
    let dispatch = dispatch_at(eq, net, p_l)?;
    let omega_max = (0..net.bus_count())
        .filter(|&b| net.bus(b).kind.domain() == Domain::Ac)
        .map(|b| eq.derived.omega[b].abs())
        .fold(0.0, f64::max);
    Ok(SweepMetrics {
        error: power_sharing_error(&eq.derived.p_g, &dispatch),
        omega_max,
        vbar_max: inf_norm(&eq.derived.v_bar),
        security_ok: eq.security_ok,
        iterations: eq.iterations,
    })
}

/// Solves the equilibrium for each DC resistance scale factor (conductances
/// divided by the factor) and reports the power-sharing error.
pub fn resistance_sweep(
    net: &ValidatedNetwork,
    ctl: &Controllers,
    p_l: &[f64],
    scale_factors: &[f64],
) -> Result<ResistanceSweep, SolveError> {
    for &s in scale_factors {
        if !(s.is_finite() && s > 0.0) {
            return Err(ModelError::InvalidSettings(format!("scale factors must be > 0, got {s}")).into());
        }
    }
    let points: Vec<SweepPoint> = scale_factors
        .par_iter()
        .map(|&scale| {
            let outcome =
                net.with_dc_resistance_scaled(scale).map_err(|e| SolveError::Model(e.into())).and_then(|scaled| {
                    let eq = find_equilibrium(&scaled, ctl, p_l, None)?;
                    sweep_metrics(&eq, &scaled, p_l)
                });
            SweepPoint { scale, outcome }
        })
        .collect();
    let mut ordered: Vec<&SweepPoint> = points.iter().collect();
    ordered.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let monotone_decreasing = ordered.iter().all(|p| p.outcome.is_ok())
        && ordered.windows(2).all(|w| {
            let (a, b) = (w[0].outcome.as_ref().unwrap(), w[1].outcome.as_ref().unwrap());
            b.error < a.error
        });
    Ok(ResistanceSweep { points, monotone_decreasing })
}

/// True if bus `b` can be dispatched at all.
pub fn is_source(net: &ValidatedNetwork, b: usize) -> bool {
    net.bus(b).kind != BusKind::AcConverter && net.bus(b).inverse_cost > 0.0
}
