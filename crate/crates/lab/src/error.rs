use bondperc_core::{EventError, ExactError, LatticeError};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid --{flag}: {reason}")]
    InvalidArgument { flag: &'static str, reason: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error(
        "no consecutive radii in {radii:?} agree within epsilon = {epsilon} (last gap {last_gap})"
    )]
    NonConvergence {
        radii: Vec<usize>,
        epsilon: f64,
        last_gap: f64,
    },
    #[error("self-check failed at replicate {replicate}: {detail}")]
    SelfCheck { replicate: u64, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl LabError {
    /// Process exit code: 1 for a violated identity, 2 for bad arguments,
    /// 3 for every other failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Exact(ExactError::IdentityViolation { .. }) => 1,
            LabError::InvalidArgument { .. } | LabError::Lattice(_) | LabError::Event(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) fn invalid(flag: &'static str, reason: impl Into<String>) -> LabError {
    LabError::InvalidArgument {
        flag,
        reason: reason.into(),
    }
}
