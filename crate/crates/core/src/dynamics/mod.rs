//! Closed-loop network dynamics and their fixed-step integration.

mod delay;
mod engine;
mod integrate;
mod schedule;
mod state;

pub use delay::DelayLine;
pub use engine::{branch_flows, converter_transfers, evaluate, rhs, DerivedOutputs, Evaluation, Exchange};
pub use integrate::{integrate, stable_substeps, IntegrationSettings, LoadEpoch, Sample, Trajectory};
pub use schedule::{Disturbance, DisturbanceSchedule, LoadProfile};
pub use state::{StateLayout, SystemState};

/// Divergence threshold on any state entry.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
