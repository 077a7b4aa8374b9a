use serde::{Deserialize, Serialize};

use crate::error::{ModelError, NetworkError};
use crate::network::ValidatedNetwork;

/// A step change of the load at one bus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub bus: String,
    #[serde(rename = "delta_pu")]
    pub delta: f64,
}

/// Load steps, nondecreasing in time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisturbanceSchedule {
    pub steps: Vec<Disturbance>,
}

impl DisturbanceSchedule {
    pub fn new(steps: Vec<Disturbance>) -> Self {
        DisturbanceSchedule { steps }
    }

    /// Resolves bus ids against `net`, on top of the network's nominal loads.
    pub fn resolve(&self, net: &ValidatedNetwork) -> Result<LoadProfile, ModelError> {
        let mut steps = Vec::with_capacity(self.steps.len());
        let mut last = f64::NEG_INFINITY;
        for d in &self.steps {
            if !d.time.is_finite() || d.time < last {
                return Err(ModelError::InvalidSettings(format!(
                    "disturbance times must be finite and nondecreasing (at {} s)",
                    d.time
                )));
            }
            if !d.delta.is_finite() {
                return Err(ModelError::InvalidSettings("disturbance size must be finite".into()));
            }
            last = d.time;
            let bus = net.bus_index(&d.bus).ok_or_else(|| NetworkError::UnknownBus(d.bus.clone()))?;
            steps.push((d.time, bus, d.delta));
        }
        Ok(LoadProfile { base: net.nominal_loads(), steps })
    }
}

/// Piecewise-constant load vector over time.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProfile {
    base: Vec<f64>,
    steps: Vec<(f64, usize, f64)>,
}

impl LoadProfile {
    pub fn constant(loads: Vec<f64>) -> Self {
        LoadProfile { base: loads, steps: Vec::new() }
    }

    /// Loads with every step whose time is `<= t + tol` applied.
    pub fn loads_at(&self, t: f64, tol: f64) -> Vec<f64> {
        let mut loads = self.base.clone();
        for &(time, bus, delta) in &self.steps {
            if time <= t + tol {
                loads[bus] += delta;
            }
        }
        loads
    }

    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{tests::t1_spec, validate_network};

    #[test]
    fn steps_accumulate_left_continuously() {
        let net = validate_network(&t1_spec()).unwrap();
        let sched = DisturbanceSchedule::new(vec![
            Disturbance { time: 1.0, bus: "a2".into(), delta: 0.2 },
            Disturbance { time: 2.0, bus: "a2".into(), delta: -0.1 },
        ]);
        let p = sched.resolve(&net).unwrap();
        assert_eq!(p.loads_at(0.999, 0.0)[1], 0.0);
        assert_eq!(p.loads_at(1.0, 0.0)[1], 0.2);
        assert!((p.loads_at(5.0, 0.0)[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unordered_or_unknown_steps_are_rejected() {
        let net = validate_network(&t1_spec()).unwrap();
        let sched = DisturbanceSchedule::new(vec![
            Disturbance { time: 2.0, bus: "a2".into(), delta: 0.2 },
            Disturbance { time: 1.0, bus: "a2".into(), delta: 0.2 },
        ]);
        assert!(sched.resolve(&net).is_err());
        let sched = DisturbanceSchedule::new(vec![Disturbance { time: 1.0, bus: "zz".into(), delta: 0.2 }]);
        assert!(sched.resolve(&net).is_err());
    }
}
