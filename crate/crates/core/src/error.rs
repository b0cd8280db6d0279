use alloc::string::String;

/// Errors raised while building boxes, validating probabilities or
/// enumerating configurations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("dimension must be between 1 and {max}, got {dim}")]
    InvalidDimension { dim: usize, max: usize },
    #[error("box radius must be at least 1, got {0}")]
    InvalidRadius(usize),
    #[error("box B({radius}) in dimension {dim} exceeds the size budget ({what} > {budget})")]
    SizeOverflow {
        dim: usize,
        radius: usize,
        what: &'static str,
        budget: u64,
    },
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("exhaustive enumeration over {bonds} bonds exceeds the cap of {cap} bonds")]
    EnumerationCapExceeded { bonds: usize, cap: usize },
    #[error("box B({inner}) does not fit inside B({outer}) in dimension {dim}")]
    NotASubBox { dim: usize, inner: usize, outer: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("bond ({v1}, {v2}) along axis {axis} is not a bond of the box")]
    BondOutsideBox { v1: usize, v2: usize, axis: usize },
    #[error("arm radius must be at least 2 so that both endpoints lie in the arm box, got {0}")]
    ArmRadiusTooSmall(usize),
    #[error("arm box of radius {arm_radius} around vertex {center} does not fit inside B({radius})")]
    ArmBoxDoesNotFit {
        center: usize,
        arm_radius: usize,
        radius: usize,
    },
    #[error("window radius {window} must lie in 1..={radius}")]
    InvalidWindow { window: usize, radius: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{identity} identity violated at the coefficient of p^{index}: lhs {lhs}, rhs {rhs}")]
    IdentityViolation {
        identity: &'static str,
        index: usize,
        lhs: String,
        rhs: String,
    },
    #[error("filtration order is not a permutation of 0..{bonds}")]
    InvalidOrder { bonds: usize },
    #[error("configuration belongs to B({found}) in dimension {found_dim}, expected B({expected}) in dimension {expected_dim}")]
    ForeignConfig {
        expected_dim: usize,
        expected: usize,
        found_dim: usize,
        found: usize,
    },
}
