//! Simulation and analysis of hybrid AC/DC networks interconnected by
//! converters, under decentralised primary control and distributed
//! secondary control.
//!
//! The crate is organised bottom-up: [`network`] validates the topology,
//! [`controllers`] holds the control laws, [`dynamics`] evaluates and
//! integrates the closed loop, [`steady_state`] solves for equilibria and
//! optimal dispatch, [`certification`] checks Lyapunov and power-balance
//! properties along trajectories, and [`scenario`] ties everything to JSON
//! scenario files and CSV exports.

pub mod certification;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod numerics;
pub mod scenario;
pub mod steady_state;

pub use controllers::{ControlMode, ControllerConfig, Controllers, DualDroopGains};
pub use dynamics::{integrate, IntegrationSettings, SystemState, Trajectory};
pub use error::{ModelError, NetworkError, ScenarioError, SolveError};
pub use network::{validate_network, Bus, BusKind, Converter, Domain, Line, NetworkSpec, ValidatedNetwork};
