use crate::model::ModelVector;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid objective: {0}")]
    InvalidObjective(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("penalty must be positive and finite, got {0}")]
    InvalidPenalty(f64),

    #[error("need at least 2 workers, got {0}")]
    TooFewWorkers(usize),

    #[error("odd worker count {0} is not supported without the odd-count override")]
    OddWorkerCount(usize),

    #[error("inner solver hit its cap of {iterations} iterations (gradient norm {grad_norm:e})")]
    InnerSolverCap { iterations: usize, grad_norm: f64, last: ModelVector },

    #[error("worker {worker} produced a non-finite iterate")]
    NonFinite { worker: usize },

    #[error("normal matrix is not positive definite")]
    SingularSystem,

    #[error("invalid chain: {0}")]
    InvalidChain(&'static str),

    #[error("chain construction failed: no finite-cost candidate from worker {from}")]
    Disconnected { from: usize },

    #[error("worker {sender} may not send to {receiver} under the current policy")]
    LocalityViolation { sender: usize, receiver: usize },

    #[error("message for round {message} posted during round {current}")]
    WrongRound { message: u64, current: u64 },

    #[error("message from worker {0} has no receivers")]
    NoReceivers(usize),

    #[error("unknown worker {0} in transmission log")]
    UnknownWorker(usize),

    #[error("reference duals are required for the Lyapunov value")]
    MissingReference,
}
