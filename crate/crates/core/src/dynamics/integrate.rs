use crate::controllers::{weighted_average_voltages, ControlMode, Controllers};
use crate::error::ModelError;
use crate::network::ValidatedNetwork;
use crate::numerics::{fd_jacobian, spectral_radius};

use super::delay::DelayLine;
use super::engine::{evaluate, DerivedOutputs, Exchange};
use super::schedule::LoadProfile;
use super::state::{StateLayout, SystemState};
use super::DIVERGENCE_LIMIT;

/// Target bound on `h·ρ(J)` for the internal RK4 step.
const STEP_RHO_BOUND: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationSettings {
    pub t_end: f64,
    /// Sampling interval; loads change only on this grid.
    pub dt: f64,
    /// RK4 steps per sampling interval; `None` picks a stable count.
    pub substeps: Option<usize>,
}

/// A load vector that holds from sample `first_sample` until the next epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadEpoch {
    pub first_sample: usize,
    pub loads: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: SystemState,
    pub outputs: DerivedOutputs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub mode: ControlMode,
    pub dt: f64,
    pub substeps: usize,
    pub samples: Vec<Sample>,
    pub epochs: Vec<LoadEpoch>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn final_state(&self) -> &SystemState {
        &self.samples.last().expect("trajectory has at least one sample").state
    }

    /// Index into [`Self::epochs`] of the loads acting at sample `k`.
    pub fn epoch_of(&self, k: usize) -> usize {
        self.epochs.partition_point(|e| e.first_sample <= k) - 1
    }

    pub fn loads_at(&self, k: usize) -> &[f64] {
        &self.epochs[self.epoch_of(k)].loads
    }
}

/// RK4 substeps per sampling interval keeping `h·ρ(J) <= 1` at `state`.
pub fn stable_substeps(
    state: &SystemState,
    net: &ValidatedNetwork,
    ctl: &Controllers,
    loads: &[f64],
    dt: f64,
) -> Result<usize, ModelError> {
    let layout = StateLayout::new(net, ctl.mode);
    let x = layout.pack(state);
    let jac = fd_jacobian(&x, 1e-6, |z| {
        let s = layout.unpack(z, state.t);
        Ok::<_, ModelError>(layout.pack(&evaluate(&s, net, ctl, loads, None)?.derivative))
    })?;
    let rho = spectral_radius(&jac);
    Ok(((dt * rho / STEP_RHO_BOUND).ceil() as usize).max(1))
}

struct Comms {
    v_bar: DelayLine<Vec<f64>>,
    xi: DelayLine<Vec<f64>>,
}

impl Comms {
    fn push(&mut self, s: &SystemState, net: &ValidatedNetwork) -> Exchange {
        Exchange { v_bar: self.v_bar.push(weighted_average_voltages(&s.v, net)), xi: self.xi.push(s.xi.clone()) }
    }
}

/// Integrates the closed loop from `initial` to `settings.t_end` with RK4.
///
/// Samples are stored every `dt`. The loads of `profile` are applied on the
/// sampling grid: a step at time τ acts from the first sample at or after τ.
/// Communication delay (secondary mode) is taken from `ctl.comm_delay` and
/// applied to the weighted average voltages and to the neighbours' ξ; the
/// delayed values are held over each internal step.
pub fn integrate(
    initial: &SystemState,
    net: &ValidatedNetwork,
    ctl: &Controllers,
    profile: &LoadProfile,
    settings: IntegrationSettings,
) -> Result<Trajectory, ModelError> {
    let layout = StateLayout::new(net, ctl.mode);
    layout.check(initial)?;
    let t0 = initial.t;
    let dt = settings.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ModelError::InvalidSettings(format!("dt must be > 0, got {dt}")));
    }
    if !(settings.t_end.is_finite() && settings.t_end > t0) {
        return Err(ModelError::InvalidSettings(format!(
            "t_end ({}) must exceed the initial time ({t0})",
            settings.t_end
        )));
    }
    if !initial.is_finite() {
        return Err(ModelError::NonFiniteState { t: t0 });
    }
    let n_steps = ((settings.t_end - t0) / dt).round().max(1.0) as usize;
    let grid_tol = 1e-9 * dt;

    let mut loads = profile.loads_at(t0, grid_tol);
    let substeps = match settings.substeps {
        Some(0) => return Err(ModelError::InvalidSettings("substeps must be >= 1".into())),
        Some(n) => n,
        None => stable_substeps(initial, net, ctl, &loads, dt)?,
    };
    let h = dt / substeps as f64;

    let mut comms = if ctl.mode == ControlMode::Secondary && ctl.comm_delay > 0.0 {
        Some(Comms { v_bar: DelayLine::new(ctl.comm_delay, h)?, xi: DelayLine::new(ctl.comm_delay, h)? })
    } else {
        None
    };

    let mut epochs = vec![LoadEpoch { first_sample: 0, loads: loads.clone() }];
    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut x = layout.pack(initial);
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];

    let f = |x: &[f64], t: f64, loads: &[f64], ex: Option<&Exchange>, out: &mut Vec<f64>| {
        let s = layout.unpack(x, t);
        let ev = evaluate(&s, net, ctl, loads, ex)?;
        *out = layout.pack(&ev.derivative);
        Ok::<_, ModelError>(())
    };

    for k in 0..=n_steps {
        let t_k = t0 + k as f64 * dt;
        let now = profile.loads_at(t_k, grid_tol);
        if now != loads {
            loads = now;
            epochs.push(LoadEpoch { first_sample: k, loads: loads.clone() });
        }
        let state = layout.unpack(&x, t_k);
        let mut exchange = comms.as_mut().map(|c| c.push(&state, net));
        let outputs = evaluate(&state, net, ctl, &loads, exchange.as_ref())?.outputs;
        samples.push(Sample { state, outputs });
        if k == n_steps {
            break;
        }
        for sub in 0..substeps {
            let t = t_k + sub as f64 * h;
            if sub > 0 {
                if let Some(c) = comms.as_mut() {
                    exchange = Some(c.push(&layout.unpack(&x, t), net));
                }
            }
            let ex = exchange.as_ref();
            f(&x, t, &loads, ex, &mut k1)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            f(&tmp, t + 0.5 * h, &loads, ex, &mut k2)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            f(&tmp, t + 0.5 * h, &loads, ex, &mut k3)?;
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            f(&tmp, t + h, &loads, ex, &mut k4)?;
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
                return Err(ModelError::NonFiniteState { t: t + h });
            }
        }
    }

    Ok(Trajectory { mode: ctl.mode, dt, substeps, samples, epochs })
}
