use alloc::string::ToString;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::martingale::{FiltrationOrder, MartingaleTable};
use super::{ExactAnalysis, PolyP};
use crate::clusters::PathSearch;
use crate::error::ExactError;
use crate::lattice::{BondConfig, BoxSpec};

/// Both sides of a claimed polynomial identity `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub dim: usize,
    pub radius: usize,
    pub lhs: PolyP,
    pub rhs: PolyP,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }

    /// Lowest power of `p` whose coefficients differ.
    pub fn first_difference(&self) -> Option<usize> {
        self.lhs.first_difference(&self.rhs)
    }

    pub fn check(&self) -> Result<(), ExactError> {
        match self.first_difference() {
            None => Ok(()),
            Some(index) => Err(ExactError::IdentityViolation {
                identity: self.identity,
                index,
                lhs: self.lhs.coeff(index).to_string(),
                rhs: self.rhs.coeff(index).to_string(),
            }),
        }
    }

    /// Whether `rhs - lhs >= 0` at `points + 1` equally spaced rationals
    /// in `[0, 1]`.
    pub fn rhs_dominates_on_grid(&self, points: u32) -> bool {
        let gap = &self.rhs - &self.lhs;
        (0..=points.max(1)).all(|i| {
            !gap.eval_rational(&BigRational::new(i.into(), points.max(1).into()))
                .is_negative()
        })
    }
}

/// `d/dp E_p(M_n) = -sum_b P_p(G_n(b))`.
pub fn russo_report(analysis: &ExactAnalysis) -> IdentityReport {
    IdentityReport {
        identity: "Russo",
        dim: analysis.spec.dim(),
        radius: analysis.spec.radius(),
        lhs: analysis.mean.derivative(),
        rhs: -&analysis.sum_prob_gn(),
    }
}

/// `Var_p(M_n) = (p (1-p)^2 + p^2 (1-p)) sum_b P_p(G_n(b))`.
///
/// The right-hand side is the Efron-Stein bound on the variance; equality
/// holds when every `G_n(b)` is certain (the line) but fails in general.
pub fn variance_report(analysis: &ExactAnalysis) -> IdentityReport {
    let p = PolyP::p();
    let q = PolyP::one_minus_p();
    let prefactor = &(&p * &(&q * &q)) + &(&(&p * &p) * &q);
    IdentityReport {
        identity: "variance",
        dim: analysis.spec.dim(),
        radius: analysis.spec.radius(),
        lhs: analysis.variance.clone(),
        rhs: &prefactor * &analysis.sum_prob_gn(),
    }
}

pub fn verify_russo_identity(spec: &BoxSpec, cap: usize) -> Result<IdentityReport, ExactError> {
    let report = russo_report(&ExactAnalysis::compute(spec, cap)?);
    report.check()?;
    Ok(report)
}

pub fn verify_variance_identity(spec: &BoxSpec, cap: usize) -> Result<IdentityReport, ExactError> {
    let report = variance_report(&ExactAnalysis::compute(spec, cap)?);
    report.check()?;
    Ok(report)
}

/// Outcome of checking, at one rational `p`, the claimed closed form of the
/// martingale differences: `Delta_t = 0` off `G_n(b_t)`,
/// `Delta_t` in `{+p, -(1-p)}` on it, and
/// `E_p(Delta_t^2) = p(1-p) P_p(G_n(b_t))` per bond.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleStructureReport {
    pub p: BigRational,
    pub configs: u64,
    /// (config, step) pairs with `G_n(b_t)` false but `Delta_t != 0`.
    pub nonzero_off_event: u64,
    /// (config, step) pairs with `G_n(b_t)` true but `Delta_t` not in
    /// `{+p, -(1-p)}`.
    pub off_value_on_event: u64,
    /// Steps `t` where `E_p(Delta_t^2)` differs from
    /// `p(1-p) P_p(G_n(b_t))`, with both values.
    pub second_moment_mismatches: Vec<(usize, BigRational, BigRational)>,
    /// The martingale property itself, checked independently.
    pub martingale_property: bool,
}

impl MartingaleStructureReport {
    pub fn holds(&self) -> bool {
        self.nonzero_off_event == 0
            && self.off_value_on_event == 0
            && self.second_moment_mismatches.is_empty()
            && self.martingale_property
    }

    pub fn check(&self) -> Result<(), ExactError> {
        if let Some((t, lhs, rhs)) = self.second_moment_mismatches.first() {
            return Err(ExactError::IdentityViolation {
                identity: "per-bond second moment",
                index: *t,
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            });
        }
        if !self.holds() {
            return Err(ExactError::IdentityViolation {
                identity: "martingale difference values",
                index: 0,
                lhs: alloc::format!(
                    "{} nonzero off the event, {} off-value on it",
                    self.nonzero_off_event,
                    self.off_value_on_event
                ),
                rhs: "0 and 0".into(),
            });
        }
        Ok(())
    }
}

/// Checks the claimed closed form of the martingale differences on every
/// configuration of `spec` in canonical reveal order.
pub fn check_martingale_structure(
    spec: &BoxSpec,
    p: &BigRational,
    cap: usize,
) -> Result<MartingaleStructureReport, ExactError> {
    let k = spec.bond_count();
    let table = MartingaleTable::new(spec, FiltrationOrder::canonical(k), p, cap)?;
    let analysis = ExactAnalysis::compute(spec, cap)?;
    let one = BigRational::from_integer(BigInt::from(1));
    let plus = p.clone();
    let minus = p - &one;

    let mut search = PathSearch::new();
    let bonds: Vec<_> = spec.bonds().collect();
    let mut config = BondConfig::all_closed(spec);
    let (mut nonzero_off_event, mut off_value_on_event) = (0, 0);
    let configs = 1u64 << k;
    for x in 0..configs {
        config.set_bits(x);
        for (t, delta) in table.deltas(&config)?.into_iter().enumerate() {
            let b = &bonds[t];
            let gn = !search.connected(&config, b.v1, b.v2, &[t], None);
            if !gn && !delta.is_zero() {
                nonzero_off_event += 1;
            }
            if gn && delta != plus && delta != minus {
                off_value_on_event += 1;
            }
        }
    }

    let prefactor = p * (&one - p);
    let second_moment_mismatches = table
        .delta_second_moments()
        .into_iter()
        .enumerate()
        .filter_map(|(t, got)| {
            let claimed = &prefactor * analysis.prob_gn[t].eval_rational(p);
            (got != claimed).then_some((t, got, claimed))
        })
        .collect();

    Ok(MartingaleStructureReport {
        p: p.clone(),
        configs,
        nonzero_off_event,
        off_value_on_event,
        second_moment_mismatches,
        martingale_property: table.check_martingale_property().is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_ENUMERATION_CAP as CAP;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn russo_holds_on_small_boxes() {
        for (d, n) in [(1, 1), (1, 2), (1, 3), (2, 1)] {
            let spec = BoxSpec::new(d, n).unwrap();
            let report = verify_russo_identity(&spec, CAP).unwrap();
            assert!(report.holds());
        }
        let line = verify_russo_identity(&BoxSpec::new(1, 3).unwrap(), CAP).unwrap();
        assert_eq!(line.lhs, PolyP::constant(-6));
    }

    #[test]
    fn variance_identity_holds_on_lines() {
        for n in 1..=3i64 {
            let spec = BoxSpec::new(1, n as usize).unwrap();
            let report = verify_variance_identity(&spec, CAP).unwrap();
            assert_eq!(report.rhs, PolyP::from_coeffs([0, 2 * n, -2 * n]));
        }
    }

    // On the 3x3 box the claimed identity is false: the exact variance at
    // p = 1/2 is 35475783/16777216, the right-hand side 4929/2048.
    #[test]
    fn variance_identity_fails_on_the_square() {
        let spec = BoxSpec::new(2, 1).unwrap();
        let err = verify_variance_identity(&spec, CAP).unwrap_err();
        assert!(matches!(err, ExactError::IdentityViolation { identity: "variance", index: 4, .. }));
        let report = variance_report(&ExactAnalysis::compute(&spec, CAP).unwrap());
        assert_eq!(report.rhs.eval_rational(&rat(1, 2)), rat(4929, 2048));
        assert_eq!(report.lhs.eval_rational(&rat(1, 2)), rat(35475783, 16777216));
        // it is an upper bound
        assert!(report.rhs_dominates_on_grid(64));
    }

    #[test]
    fn martingale_structure_on_lines() {
        for n in 1..=3 {
            let spec = BoxSpec::new(1, n).unwrap();
            for p in [rat(1, 4), rat(1, 2), rat(3, 4)] {
                let report = check_martingale_structure(&spec, &p, CAP).unwrap();
                assert!(report.holds(), "{report:?}");
            }
        }
    }

    #[test]
    fn martingale_structure_fails_on_the_square() {
        let spec = BoxSpec::new(2, 1).unwrap();
        let report = check_martingale_structure(&spec, &rat(1, 2), CAP).unwrap();
        assert_eq!(report.configs, 4096);
        assert!(report.martingale_property);
        assert!(report.nonzero_off_event > 0);
        assert!(report.off_value_on_event > 0);
        // only the last revealed bond has the claimed second moment
        let steps: Vec<usize> = report.second_moment_mismatches.iter().map(|m| m.0).collect();
        assert_eq!(steps, (0..11).collect::<Vec<_>>());
        assert!(report.check().is_err());
    }
}
