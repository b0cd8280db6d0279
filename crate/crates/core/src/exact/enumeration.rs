use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::BigInt;

use super::PolyP;
use crate::clusters::{ClusterCounter, PathSearch};
use crate::error::LatticeError;
use crate::lattice::{enumeration_size, Bond, BondConfig, BoxSpec};

/// Sums over configurations grouped by number of open bonds, the form from
/// which every exact quantity is expanded: a tally `t[j]` stands for
/// `sum_j t[j] p^j (1-p)^(k-j)`.
///
/// Tallies over disjoint index ranges merge by addition, so the enumeration
/// can be split across workers and the result does not depend on the split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationTally {
    spec: BoxSpec,
    configs: Vec<u128>,
    sum_m: Vec<u128>,
    sum_m2: Vec<u128>,
    no_bypass: Vec<Vec<u128>>,
}

impl EnumerationTally {
    pub fn new(spec: &BoxSpec) -> Self {
        let k = spec.bond_count();
        Self {
            spec: spec.clone(),
            configs: vec![0; k + 1],
            sum_m: vec![0; k + 1],
            sum_m2: vec![0; k + 1],
            no_bypass: vec![vec![0; k + 1]; k],
        }
    }

    /// Adds the configurations with binary index in `range`.
    pub fn accumulate_range(&mut self, range: Range<u64>, cap: usize) -> Result<(), LatticeError> {
        let total = enumeration_size(&self.spec, cap)?;
        let (start, end) = (range.start.min(total), range.end.min(total));
        let k = self.spec.bond_count();
        let bonds: Vec<Bond> = self.spec.bonds().collect();
        let mut config = BondConfig::all_closed(&self.spec);
        let mut counter = ClusterCounter::new();
        let mut search = PathSearch::new();
        for x in start..end {
            config.set_bits(x);
            let j = x.count_ones() as usize;
            let m = counter.count(&config) as u128;
            self.configs[j] += 1;
            self.sum_m[j] += m;
            self.sum_m2[j] += m * m;
            for (i, b) in bonds.iter().enumerate().take(k) {
                if !search.connected(&config, b.v1, b.v2, &[i], None) {
                    self.no_bypass[i][j] += 1;
                }
            }
        }
        Ok(())
    }

    /// # Panics
    /// If the tallies belong to different boxes.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.spec, other.spec, "tallies from different boxes");
        let add = |a: &mut [u128], b: &[u128]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.configs, &other.configs);
        add(&mut self.sum_m, &other.sum_m);
        add(&mut self.sum_m2, &other.sum_m2);
        for (a, b) in self.no_bypass.iter_mut().zip(&other.no_bypass) {
            add(a, b);
        }
    }

    pub fn finish(&self) -> ExactAnalysis {
        let bernstein = |t: &[u128]| {
            let big: Vec<BigInt> = t.iter().map(|&c| BigInt::from(c)).collect();
            PolyP::from_bernstein(&big)
        };
        let mean = bernstein(&self.sum_m);
        let second_moment = bernstein(&self.sum_m2);
        let variance = &second_moment - &(&mean * &mean);
        ExactAnalysis {
            spec: self.spec.clone(),
            total: bernstein(&self.configs),
            mean,
            second_moment,
            variance,
            prob_gn: self.no_bypass.iter().map(|t| bernstein(t)).collect(),
        }
    }
}

/// Exact moments of `M_n` and the no-bypass probabilities of every bond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAnalysis {
    pub spec: BoxSpec,
    /// Total probability of all configurations; the constant 1 when the
    /// whole index range was tallied.
    pub total: PolyP,
    pub mean: PolyP,
    pub second_moment: PolyP,
    pub variance: PolyP,
    /// `P_p(G_n(b))` per bond in canonical order.
    pub prob_gn: Vec<PolyP>,
}

impl ExactAnalysis {
    /// Enumerates all `2^k` configurations of `spec`.
    pub fn compute(spec: &BoxSpec, cap: usize) -> Result<Self, LatticeError> {
        let mut tally = EnumerationTally::new(spec);
        tally.accumulate_range(0..enumeration_size(spec, cap)?, cap)?;
        Ok(tally.finish())
    }

    pub fn sum_prob_gn(&self) -> PolyP {
        self.prob_gn.iter().cloned().sum()
    }
}

pub fn exact_mean_mn(spec: &BoxSpec, cap: usize) -> Result<PolyP, LatticeError> {
    Ok(ExactAnalysis::compute(spec, cap)?.mean)
}

pub fn exact_variance_mn(spec: &BoxSpec, cap: usize) -> Result<PolyP, LatticeError> {
    Ok(ExactAnalysis::compute(spec, cap)?.variance)
}

/// `P_p(G_n(b))`. Only the `k - 1` bonds other than `b` are enumerated,
/// since the event never reads `b`.
pub fn exact_prob_gn(spec: &BoxSpec, bond: &Bond, cap: usize) -> Result<PolyP, LatticeError> {
    enumeration_size(spec, cap)?;
    let b_idx = spec.index_of(bond).expect("bond outside the box");
    let k = spec.bond_count();
    let mut counts = vec![0u128; k];
    let mut config = BondConfig::all_closed(spec);
    let mut search = PathSearch::new();
    let low_mask = (1u64 << b_idx) - 1;
    for y in 0..(1u64 << (k - 1)) {
        // spread y over the bits other than b_idx, leaving b closed
        let x = (y & low_mask) | ((y & !low_mask) << 1);
        config.set_bits(x);
        if !search.connected(&config, bond.v1, bond.v2, &[b_idx], None) {
            counts[y.count_ones() as usize] += 1;
        }
    }
    let big: Vec<BigInt> = counts.into_iter().map(BigInt::from).collect();
    Ok(PolyP::from_bernstein(&big))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_ENUMERATION_CAP as CAP;
    use num_rational::BigRational;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn analysis(d: usize, n: usize) -> ExactAnalysis {
        ExactAnalysis::compute(&BoxSpec::new(d, n).unwrap(), CAP).unwrap()
    }

    #[test]
    fn line_boxes() {
        for n in 1..=3i64 {
            let a = analysis(1, n as usize);
            assert_eq!(a.total, PolyP::one());
            assert_eq!(a.mean, PolyP::from_coeffs([2 * n + 1, -2 * n]));
            assert_eq!(a.variance, PolyP::from_coeffs([0, 2 * n, -2 * n]));
            assert!(a.prob_gn.iter().all(|g| *g == PolyP::one()));
        }
    }

    // Reference polynomials from an independent brute-force enumeration.
    #[test]
    fn square_box_matches_reference() {
        let a = analysis(2, 1);
        assert_eq!(a.total, PolyP::one());
        assert_eq!(a.mean, PolyP::from_coeffs([9, -12, 0, 0, 4, 0, 4, -4, 5, -8, -2, 8, -3]));
        assert_eq!(
            a.variance,
            PolyP::from_coeffs([
                0, 12, -12, 0, -28, 32, -44, 108, -143, 232, -142, -200, 201, 24, -40, 40, -49, 0,
                44, -136, 154, -16, -76, 48, -9,
            ])
        );
        let spoke = PolyP::from_coeffs([1, 0, 0, -2, 0, -2, 3, -2, 6, -1, -6, 3]);
        let ring = PolyP::from_coeffs([1, 0, 0, -1, 0, -2, 2, -4, 6, 3, -8, 3]);
        for (i, g) in a.prob_gn.iter().enumerate() {
            let expected = if [2, 6, 7, 8].contains(&i) { &spoke } else { &ring };
            assert_eq!(g, expected, "bond {i}");
        }
        assert_eq!(spoke.eval_rational(&rat(1, 2)), rat(1507, 2048));
        assert_eq!(ring.eval_rational(&rat(1, 2)), rat(1711, 2048));
        assert_eq!(a.mean.eval_rational(&rat(1, 4)), rat(100938493, 16777216));
        assert_eq!(a.variance.eval_rational(&rat(1, 2)), rat(35475783, 16777216));
        assert_eq!(
            a.variance.eval_rational(&rat(1, 4)),
            rat(609747060404727, 281474976710656)
        );
    }

    #[test]
    fn endpoint_values() {
        let a = analysis(2, 1);
        assert_eq!(a.mean.eval_f64(0.0), 9.0);
        assert_eq!(a.mean.eval_f64(1.0), 1.0);
        assert_eq!(a.variance.eval_f64(0.0), 0.0);
        assert_eq!(a.variance.eval_f64(1.0), 0.0);
        for g in &a.prob_gn {
            assert_eq!(g.eval_f64(1.0), 0.0);
            assert!(g.is_probability_on_grid(64));
        }
        for i in 0..=32 {
            assert!(a.variance.eval_rational(&rat(i, 32)) >= rat(0, 1));
        }
    }

    #[test]
    fn single_bond_route_agrees() {
        let spec = BoxSpec::new(2, 1).unwrap();
        let a = ExactAnalysis::compute(&spec, CAP).unwrap();
        for (i, b) in spec.bonds().enumerate() {
            assert_eq!(exact_prob_gn(&spec, &b, CAP).unwrap(), a.prob_gn[i]);
        }
        assert_eq!(exact_mean_mn(&spec, CAP).unwrap(), a.mean);
        assert_eq!(exact_variance_mn(&spec, CAP).unwrap(), a.variance);
    }

    #[test]
    fn partitioned_tally_is_split_independent() {
        let spec = BoxSpec::new(2, 1).unwrap();
        let whole = ExactAnalysis::compute(&spec, CAP).unwrap();
        for parts in [2u64, 3, 7] {
            let chunk = 4096u64.div_ceil(parts);
            let mut merged = EnumerationTally::new(&spec);
            for s in 0..parts {
                let mut t = EnumerationTally::new(&spec);
                t.accumulate_range(s * chunk..(s + 1) * chunk, CAP).unwrap();
                merged.merge(&t);
            }
            assert_eq!(merged.finish(), whole);
        }
        let mut half = EnumerationTally::new(&spec);
        half.accumulate_range(0..2048, CAP).unwrap();
        assert_ne!(half.finish().total, PolyP::one());
    }

    #[test]
    fn cap_is_enforced() {
        let spec = BoxSpec::new(2, 2).unwrap();
        assert_eq!(
            exact_mean_mn(&spec, CAP),
            Err(LatticeError::EnumerationCapExceeded { bonds: 40, cap: 24 })
        );
        assert!(exact_prob_gn(&spec, &spec.origin_bond(), CAP).is_err());
    }
}
