//! Exact identity checks on small boxes, with the enumeration split across
//! workers.

use bondperc_core::exact::{
    check_martingale_structure, russo_report, variance_report, EnumerationTally, ExactAnalysis,
    IdentityReport, MartingaleStructureReport,
};
use bondperc_core::lattice::enumeration_size;
use bondperc_core::BoxSpec;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::LabError;
use crate::parallel::Workers;

/// Largest box whose martingale differences are checked configuration by
/// configuration.
pub const MARTINGALE_CHECK_BONDS: usize = 16;

/// Enumerates `spec` in `chunks` index ranges on `workers` and merges the
/// tallies in range order.
pub fn parallel_exact_analysis(
    spec: &BoxSpec,
    cap: usize,
    workers: &Workers,
) -> Result<ExactAnalysis, LabError> {
    let total = enumeration_size(spec, cap)?;
    let chunks = total.min(256);
    let width = total.div_ceil(chunks);
    let parts = workers.map_replicates(chunks, || (), |_, c| {
        let mut t = EnumerationTally::new(spec);
        t.accumulate_range(c * width..(c + 1) * width, cap).map(|_| t)
    });
    let mut merged = EnumerationTally::new(spec);
    for part in parts {
        merged.merge(&part?);
    }
    Ok(merged.finish())
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityJson {
    pub identity: &'static str,
    pub holds: bool,
    pub first_difference: Option<usize>,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

impl From<&IdentityReport> for IdentityJson {
    fn from(r: &IdentityReport) -> Self {
        Self {
            identity: r.identity,
            holds: r.holds(),
            first_difference: r.first_difference(),
            lhs: r.lhs.to_decimal_strings(),
            rhs: r.rhs.to_decimal_strings(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MismatchJson {
    pub step: usize,
    pub observed: String,
    pub claimed: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleJson {
    pub p: String,
    pub holds: bool,
    pub configurations: u64,
    pub nonzero_off_event: u64,
    pub off_value_on_event: u64,
    pub martingale_property: bool,
    pub second_moment_mismatches: Vec<MismatchJson>,
}

impl From<&MartingaleStructureReport> for MartingaleJson {
    fn from(r: &MartingaleStructureReport) -> Self {
        Self {
            p: r.p.to_string(),
            holds: r.holds(),
            configurations: r.configs,
            nonzero_off_event: r.nonzero_off_event,
            off_value_on_event: r.off_value_on_event,
            martingale_property: r.martingale_property,
            second_moment_mismatches: r
                .second_moment_mismatches
                .iter()
                .map(|(t, a, b)| MismatchJson {
                    step: *t,
                    observed: a.to_string(),
                    claimed: b.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactVerifyReport {
    pub d: usize,
    pub n: usize,
    pub bonds: usize,
    pub configurations: u64,
    pub mean: Vec<String>,
    pub variance: Vec<String>,
    pub russo: IdentityJson,
    pub variance_identity: IdentityJson,
    /// Empty when the box is above [`MARTINGALE_CHECK_BONDS`].
    pub martingale: Vec<MartingaleJson>,
    pub all_hold: bool,
}

/// Russo and variance identities, and the martingale-difference structure
/// at `p` in {1/4, 1/2, 3/4} for boxes small enough.
pub fn exact_verify(spec: &BoxSpec, cap: usize, workers: &Workers) -> Result<ExactVerifyReport, LabError> {
    let analysis = parallel_exact_analysis(spec, cap, workers)?;
    let russo = russo_report(&analysis);
    let variance = variance_report(&analysis);
    let mut martingale = Vec::new();
    if spec.bond_count() <= MARTINGALE_CHECK_BONDS {
        for (a, b) in [(1, 4), (1, 2), (3, 4)] {
            let p = BigRational::new(a.into(), b.into());
            martingale.push(MartingaleJson::from(&check_martingale_structure(spec, &p, cap)?));
        }
    }
    let all_hold = russo.holds() && variance.holds() && martingale.iter().all(|m| m.holds);
    Ok(ExactVerifyReport {
        d: spec.dim(),
        n: spec.radius(),
        bonds: spec.bond_count(),
        configurations: enumeration_size(spec, cap)?,
        mean: analysis.mean.to_decimal_strings(),
        variance: analysis.variance.to_decimal_strings(),
        russo: IdentityJson::from(&russo),
        variance_identity: IdentityJson::from(&variance),
        martingale,
        all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bondperc_core::lattice::DEFAULT_ENUMERATION_CAP as CAP;

    #[test]
    fn parallel_split_matches_sequential() {
        let spec = BoxSpec::new(2, 1).unwrap();
        let seq = ExactAnalysis::compute(&spec, CAP).unwrap();
        for w in [1, 3] {
            assert_eq!(parallel_exact_analysis(&spec, CAP, &Workers::new(w).unwrap()).unwrap(), seq);
        }
    }

    #[test]
    fn line_report_holds() {
        let report = exact_verify(&BoxSpec::new(1, 2).unwrap(), CAP, &Workers::new(2).unwrap()).unwrap();
        assert!(report.all_hold);
        assert_eq!(report.mean, ["5", "-4"]);
        assert_eq!(report.martingale.len(), 3);
    }
}
