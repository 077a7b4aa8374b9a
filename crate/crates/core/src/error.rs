use thiserror::Error;

/// Structural problems found while validating a [`crate::network::NetworkSpec`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("invalid parameter `{field}` on `{element}`: {reason}")]
    InvalidParameter { element: String, field: &'static str, reason: String },
    #[error("subsystem `{0}` mixes AC and DC buses")]
    MixedSubsystem(String),
    #[error("subsystem `{subsystem}` is disconnected: bus `{bus}` is unreachable")]
    DisconnectedSubsystem { subsystem: String, bus: String },
    #[error("line {from}-{to} joins buses of different domains or does not match its kind")]
    MixedDomainLine { from: String, to: String },
    #[error("line {from}-{to} crosses subsystems; subsystems may only meet at converters")]
    CrossSubsystemLine { from: String, to: String },
    #[error("dangling converter: {0}")]
    DanglingConverter(String),
    #[error("AC converter bus `{0}` must have zero inverse cost")]
    NonzeroCostAtConverterBus(String),
    #[error("communication graph is disconnected: bus `{0}` is unreachable")]
    DisconnectedCommGraph(String),
}

/// Errors raised by the dynamics engine and the controller laws.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch in `{what}`: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("operation `{op}` is not available in {mode} mode")]
    ModeMismatch { op: &'static str, mode: String },
    #[error("state became non-finite or diverged at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error("negative delay {0} s")]
    NegativeDelay(f64),
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Errors raised by the steady-state solvers.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("all inverse costs are zero; no source can be dispatched")]
    AllCostsInfinite,
    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("Newton iteration did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64, best: Box<crate::steady_state::EquilibriumPoint> },
    #[error("equilibrium violates the security constraint (max |eta| = {max_angle})")]
    SecurityViolation { max_angle: f64, point: Box<crate::steady_state::EquilibriumPoint> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors raised while reading or running a scenario.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("validation error: {0}")]
    Validation(#[from] NetworkError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("solver error: {0}")]
    Solve(#[from] SolveError),
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}

impl ScenarioError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema { path: path.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ScenarioError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code for this error: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse { .. }
            | ScenarioError::Schema { .. }
            | ScenarioError::Validation(_)
            | ScenarioError::Io { .. }
            | ScenarioError::UnknownParameter(_) => 2,
            ScenarioError::Model(ModelError::NonFiniteState { .. }) => 3,
            ScenarioError::Model(_) => 2,
            ScenarioError::Solve(_) => 3,
        }
    }
}
