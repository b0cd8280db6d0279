//! Exact enumeration of small boxes. Every quantity is a polynomial in `p`
//! with integer coefficients, or an exact rational at a rational `p`, so the
//! identity checks compare integers rather than floats.

mod enumeration;
mod identities;
mod martingale;
mod poly;

pub use enumeration::{exact_mean_mn, exact_prob_gn, exact_variance_mn, EnumerationTally, ExactAnalysis};
pub use identities::{
    check_martingale_structure, russo_report, variance_report, verify_russo_identity,
    verify_variance_identity, IdentityReport, MartingaleStructureReport,
};
pub use martingale::{compute_martingale_deltas, FiltrationOrder, MartingaleTable, MAX_MARTINGALE_BONDS};
pub use poly::PolyP;
