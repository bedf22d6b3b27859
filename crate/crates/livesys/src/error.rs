use thiserror::Error;

use crate::core_state::{AgentIndex, ConfigId};

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum LiveError {
    #[error("unknown configuration id {0}")]
    UnknownConfiguration(ConfigId),

    #[error("configuration definition invalid: {0}")]
    InvalidConfiguration(String),

    #[error("configuration id collision: {id} maps to two distinct configurations")]
    ConfigIdCollision { id: ConfigId },

    #[error("state does not match configuration {config}: {reason}")]
    MalformedState { config: ConfigId, reason: String },

    #[error("transition at impulse {k} from {from} produced unregistered configuration")]
    InadmissibleTransition { from: ConfigId, k: u64 },

    #[error("no transition defined for configuration {from} at impulse {k}")]
    MissingTransition { from: ConfigId, k: u64 },

    #[error("no jump rule registered for {from} -> {to}")]
    MissingJumpRule { from: ConfigId, to: ConfigId },

    #[error("no vector field registered for configuration {0}")]
    MissingField(ConfigId),

    #[error("arrival set intersects the pre-impulse configuration at impulse {k} (agents {agents:?})")]
    ArrivalOverlap { k: u64, agents: Vec<AgentIndex> },

    #[error("departure set is not contained in the pre-impulse configuration at impulse {k} (agents {agents:?})")]
    DepartureNotPresent { k: u64, agents: Vec<AgentIndex> },

    #[error("impulse {k} empties the configuration")]
    EmptyConfiguration { k: u64 },

    #[error("missing arrival channel value for agent {agent} at impulse {k}")]
    MissingArrivalValue { agent: AgentIndex, k: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("impulse at t = {t_k} inside the probe window (0, {window}]; shrink dt")]
    ProbeWindow { t_k: f64, window: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error(
        "boundedness probe rejected: sample value {value} at (s = {s}, t = {t}) exceeds declared bound {bound}"
    )]
    UnboundedSample { s: f64, t: f64, value: f64, bound: f64 },

    #[error("decay-time oracle undefined for (eps = {eps}, r = {r})")]
    TauUndefined { eps: f64, r: f64 },

    #[error("majorant postcondition failed: g({s}, {t}) = {g} > beta = {beta}")]
    NotMajorized { s: f64, t: f64, g: f64, beta: f64 },

    #[error("schedule invalid: {0}")]
    InvalidSchedule(String),

    #[error("signal invalid: {0}")]
    InvalidSignal(String),

    #[error("scenario invalid: {0}")]
    Scenario(String),

    #[error("matrix is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),

    #[error("solved matrix is not positive definite (lambda_min = {0}); source matrix not Hurwitz?")]
    NotDefinite(f64),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LiveError>;
