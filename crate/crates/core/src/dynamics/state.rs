use crate::controllers::ControlMode;
use crate::error::ModelError;
use crate::network::ValidatedNetwork;

/// Dynamic state of the closed loop as flat vectors in the network's index order.
///
/// `xi` is populated only in secondary mode, `omega_x` only in dual-droop
/// mode. Angles live entirely in `eta`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemState {
    pub t: f64,
    /// Angle difference per AC line (rad).
    pub eta: Vec<f64>,
    /// Frequency deviation per AC generator bus (rad/s).
    pub omega_g: Vec<f64>,
    /// Voltage deviation per DC bus (p.u.).
    pub v: Vec<f64>,
    /// Consensus variable per communication node.
    pub xi: Vec<f64>,
    /// Frequency deviation per converter AC bus (rad/s).
    pub omega_x: Vec<f64>,
}

impl SystemState {
    fn parts(&self) -> [&Vec<f64>; 5] {
        [&self.eta, &self.omega_g, &self.v, &self.xi, &self.omega_x]
    }

    /// Largest absolute entry-wise difference; `t` is ignored.
    pub fn max_abs_diff(&self, other: &SystemState) -> f64 {
        self.parts()
            .iter()
            .zip(other.parts())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.parts().iter().flat_map(|p| p.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.parts().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }
}

/// Sizes of each state block for a given network and controller family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLayout {
    pub n_eta: usize,
    pub n_gen: usize,
    pub n_dc: usize,
    pub n_xi: usize,
    pub n_x: usize,
}

impl StateLayout {
    pub fn new(net: &ValidatedNetwork, mode: ControlMode) -> Self {
        StateLayout {
            n_eta: net.ac_edges().len(),
            n_gen: net.generators().len(),
            n_dc: net.dc_buses().len(),
            n_xi: if mode == ControlMode::Secondary { net.comm_nodes().len() } else { 0 },
            n_x: if mode == ControlMode::DualDroop { net.converters().len() } else { 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.n_eta + self.n_gen + self.n_dc + self.n_xi + self.n_x
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(&self, t: f64) -> SystemState {
        SystemState {
            t,
            eta: vec![0.0; self.n_eta],
            omega_g: vec![0.0; self.n_gen],
            v: vec![0.0; self.n_dc],
            xi: vec![0.0; self.n_xi],
            omega_x: vec![0.0; self.n_x],
        }
    }

    pub fn check(&self, s: &SystemState) -> Result<(), ModelError> {
        let pairs = [
            ("eta", self.n_eta, s.eta.len()),
            ("omega_g", self.n_gen, s.omega_g.len()),
            ("v", self.n_dc, s.v.len()),
            ("xi", self.n_xi, s.xi.len()),
            ("omega_x", self.n_x, s.omega_x.len()),
        ];
        for (what, expected, got) in pairs {
            if expected != got {
                return Err(ModelError::DimensionMismatch { what, expected, got });
            }
        }
        Ok(())
    }

    pub fn pack(&self, s: &SystemState) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        x.extend_from_slice(&s.eta);
        x.extend_from_slice(&s.omega_g);
        x.extend_from_slice(&s.v);
        x.extend_from_slice(&s.xi);
        x.extend_from_slice(&s.omega_x);
        x
    }

    pub fn unpack(&self, x: &[f64], t: f64) -> SystemState {
        let mut it = x.iter().copied();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<f64>>();
        SystemState {
            t,
            eta: take(self.n_eta),
            omega_g: take(self.n_gen),
            v: take(self.n_dc),
            xi: take(self.n_xi),
            omega_x: take(self.n_x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{tests::t1_spec, validate_network};

    #[test]
    fn layout_sizes_follow_mode() {
        let net = validate_network(&t1_spec()).unwrap();
        let p = StateLayout::new(&net, ControlMode::Primary);
        assert_eq!((p.n_eta, p.n_gen, p.n_dc, p.n_xi, p.n_x), (1, 1, 2, 0, 0));
        let s = StateLayout::new(&net, ControlMode::Secondary);
        assert_eq!(s.n_xi, 4);
        let d = StateLayout::new(&net, ControlMode::DualDroop);
        assert_eq!(d.n_x, 1);
        assert!(p.check(&s.zeros(0.0)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pack_unpack_roundtrip(x in proptest::collection::vec(-10.0f64..10.0, 8)) {
            let net = validate_network(&t1_spec()).unwrap();
            let layout = StateLayout::new(&net, ControlMode::Secondary);
            proptest::prop_assert_eq!(layout.pack(&layout.unpack(&x, 0.5)), x);
        }
    }
}
