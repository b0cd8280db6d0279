//! Doob martingale of `M_n` along a bond-revealing filtration, at an exact
//! rational `p = a / b`.
//!
//! With bonds revealed in the order `order[0], order[1], ...`, let
//! `g_t(x) = E_p(M_n | first t bonds = x)`. Conditional means are stored
//! scaled to integers, `G_t(x) = b^(k - t) g_t(x)`, and built bottom-up from
//! the cluster-count table through
//! `G_t(x) = a G_{t+1}(x, open) + (b - a) G_{t+1}(x, closed)`.
//! The difference revealed at step `t` is `Delta_t = g_{t+1} - g_t`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::clusters::{ClusterCounter, PathSearch};
use crate::error::ExactError;
use crate::lattice::{enumeration_size, BondConfig, BoxSpec, Probability};

/// Largest box the martingale tables are built for: the level tables hold
/// `2^(k+1)` big integers.
pub const MAX_MARTINGALE_BONDS: usize = 20;

/// The order in which bonds are revealed: `order[t]` is the canonical index
/// of the bond revealed at step `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationOrder {
    order: Vec<usize>,
}

impl FiltrationOrder {
    pub fn canonical(bonds: usize) -> Self {
        Self {
            order: (0..bonds).collect(),
        }
    }

    pub fn new(order: Vec<usize>) -> Result<Self, ExactError> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || core::mem::replace(&mut seen[i], true) {
                return Err(ExactError::InvalidOrder { bonds: order.len() });
            }
        }
        Ok(Self { order })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Packs the states of `config` in reveal order: bit `t` is the state of
    /// bond `order[t]`.
    pub fn pack(&self, config: &BondConfig) -> u64 {
        self.order
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &i)| acc | (u64::from(config.is_open(i)) << t))
    }

    fn unpack(&self, y: u64) -> u64 {
        self.order
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &i)| acc | (((y >> t) & 1) << i))
    }
}

/// Conditional means of `M_n` for every prefix of a filtration.
#[derive(Clone, Debug)]
pub struct MartingaleTable {
    spec: BoxSpec,
    order: FiltrationOrder,
    num: BigInt,
    den: BigInt,
    /// `levels[t][x]` is `G_t(x)` for a prefix `x` of length `t`.
    levels: Vec<Vec<BigInt>>,
}

impl MartingaleTable {
    /// # Panics
    /// If `p` lies outside `[0, 1]`.
    pub fn new(
        spec: &BoxSpec,
        order: FiltrationOrder,
        p: &BigRational,
        cap: usize,
    ) -> Result<Self, ExactError> {
        assert!(
            !p.is_negative() && *p <= BigRational::one(),
            "probability outside [0, 1]"
        );
        let k = spec.bond_count();
        let total = enumeration_size(spec, cap.min(MAX_MARTINGALE_BONDS))?;
        if order.len() != k {
            return Err(ExactError::InvalidOrder { bonds: k });
        }
        let (num, den) = (p.numer().clone(), p.denom().clone());
        let rest = &den - &num;

        let mut counter = ClusterCounter::new();
        let mut config = BondConfig::all_closed(spec);
        let mut top = Vec::with_capacity(total as usize);
        for y in 0..total {
            config.set_bits(order.unpack(y));
            top.push(BigInt::from(counter.count(&config)));
        }
        let mut levels = vec![Vec::new(); k + 1];
        levels[k] = top;
        for t in (0..k).rev() {
            let above = &levels[t + 1];
            let half = 1usize << t;
            let level = (0..half)
                .map(|x| &num * &above[x | half] + &rest * &above[x])
                .collect();
            levels[t] = level;
        }
        Ok(Self {
            spec: spec.clone(),
            order,
            num,
            den,
            levels,
        })
    }

    /// Canonical order at `p`, which is converted to its exact binary value.
    pub fn at_probability(spec: &BoxSpec, p: Probability, cap: usize) -> Result<Self, ExactError> {
        let exact = BigRational::from_float(p.value()).expect("validated probability");
        Self::new(spec, FiltrationOrder::canonical(spec.bond_count()), &exact, cap)
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn order(&self) -> &FiltrationOrder {
        &self.order
    }

    pub fn p(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    fn bonds(&self) -> usize {
        self.levels.len() - 1
    }

    fn den_pow(&self, e: usize) -> BigInt {
        num_traits::pow(self.den.clone(), e)
    }

    /// `E_p(M_n | first t revealed bonds = prefix)`.
    pub fn conditional_mean(&self, t: usize, prefix: u64) -> BigRational {
        BigRational::new(
            self.levels[t][prefix as usize].clone(),
            self.den_pow(self.bonds() - t),
        )
    }

    pub fn mean(&self) -> BigRational {
        self.conditional_mean(0, 0)
    }

    /// `b^(k - t) Delta_t` for the given prefix and state of the bond
    /// revealed at step `t`.
    fn scaled_delta(&self, t: usize, prefix: u64, open: bool) -> BigInt {
        let x = prefix as usize | (usize::from(open) << t);
        &self.den * &self.levels[t + 1][x] - &self.levels[t][prefix as usize]
    }

    pub fn delta(&self, t: usize, prefix: u64, open: bool) -> BigRational {
        BigRational::new(self.scaled_delta(t, prefix, open), self.den_pow(self.bonds() - t))
    }

    /// The differences `Delta_0, ..., Delta_{k-1}` along `config`, indexed by
    /// reveal step.
    pub fn deltas(&self, config: &BondConfig) -> Result<Vec<BigRational>, ExactError> {
        self.check_config(config)?;
        let y = self.order.pack(config);
        Ok((0..self.bonds())
            .map(|t| {
                let prefix = y & ((1u64 << t) - 1);
                self.delta(t, prefix, (y >> t) & 1 == 1)
            })
            .collect())
    }

    fn check_config(&self, config: &BondConfig) -> Result<(), ExactError> {
        let other = config.spec();
        if other != &self.spec {
            return Err(ExactError::ForeignConfig {
                expected_dim: self.spec.dim(),
                expected: self.spec.radius(),
                found_dim: other.dim(),
                found: other.radius(),
            });
        }
        Ok(())
    }

    /// Checks `p Delta_t(x, open) + (1 - p) Delta_t(x, closed) = 0` for every
    /// step and prefix.
    pub fn check_martingale_property(&self) -> Result<(), ExactError> {
        let rest = &self.den - &self.num;
        for t in 0..self.bonds() {
            for x in 0..(1u64 << t) {
                let open = self.scaled_delta(t, x, true);
                let closed = self.scaled_delta(t, x, false);
                let mix = &self.num * &open + &rest * &closed;
                if !mix.is_zero() {
                    return Err(ExactError::IdentityViolation {
                        identity: "martingale",
                        index: t,
                        lhs: mix.to_string(),
                        rhs: "0".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `E_p(Delta_t^2)` for every reveal step.
    pub fn delta_second_moments(&self) -> Vec<BigRational> {
        let k = self.bonds();
        let rest = &self.den - &self.num;
        let num_pows: Vec<BigInt> = (0..=k).map(|e| num_traits::pow(self.num.clone(), e)).collect();
        let rest_pows: Vec<BigInt> = (0..=k).map(|e| num_traits::pow(rest.clone(), e)).collect();
        (0..k)
            .map(|t| {
                let mut acc = BigInt::zero();
                for x in 0..(1u64 << t) {
                    let o = x.count_ones() as usize;
                    let open = self.scaled_delta(t, x, true);
                    let closed = self.scaled_delta(t, x, false);
                    let branch = &self.num * &open * &open + &rest * &closed * &closed;
                    acc += &num_pows[o] * &rest_pows[t - o] * branch;
                }
                // prefix weight b^t, branch weight b, squared scale b^(2(k-t))
                BigRational::new(acc, self.den_pow(t + 1 + 2 * (k - t)))
            })
            .collect()
    }

    /// `sum_t E_p(Delta_t^2)`, which equals `Var_p(M_n)` by orthogonality of
    /// martingale differences.
    pub fn variance_via_deltas(&self) -> BigRational {
        self.delta_second_moments()
            .into_iter()
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    /// `P_p(G_n(order[t]) | first t bonds = x)` for every prefix `x`, scaled
    /// by `b^(k - t)`.
    fn scaled_no_bypass_given_prefix(&self, t: usize) -> Vec<BigInt> {
        let k = self.bonds();
        let bond_idx = self.order.as_slice()[t];
        let bond = self.spec.bond(bond_idx);
        let mut search = PathSearch::new();
        let mut config = BondConfig::all_closed(&self.spec);
        let mut level: Vec<BigInt> = (0..1u64 << k)
            .map(|y| {
                config.set_bits(self.order.unpack(y));
                let bypass = search.connected(&config, bond.v1, bond.v2, &[bond_idx], None);
                BigInt::from(u8::from(!bypass))
            })
            .collect();
        let rest = &self.den - &self.num;
        for s in (t..k).rev() {
            let half = 1usize << s;
            level = (0..half)
                .map(|x| &self.num * &level[x | half] + &rest * &level[x])
                .collect();
        }
        level
    }

    /// Checks `Delta_t = (p - c_t) P_p(G_n(b_t) | F_t)` for every step, prefix
    /// and state `c_t` (1 for open) of the revealed bond `b_t`.
    pub fn check_conditional_no_bypass_form(&self) -> Result<(), ExactError> {
        for t in 0..self.bonds() {
            let h = self.scaled_no_bypass_given_prefix(t);
            for x in 0..(1u64 << t) {
                for open in [false, true] {
                    let lhs = &self.den * self.scaled_delta(t, x, open);
                    let factor = if open { &self.num - &self.den } else { self.num.clone() };
                    let rhs = factor * &h[x as usize];
                    if lhs != rhs {
                        return Err(ExactError::IdentityViolation {
                            identity: "conditional no-bypass form",
                            index: t,
                            lhs: lhs.to_string(),
                            rhs: rhs.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The martingale differences of `config` at `p`, one per bond in
/// canonical order, rounded to `f64` after exact evaluation.
pub fn compute_martingale_deltas(
    spec: &BoxSpec,
    p: Probability,
    config: &BondConfig,
    cap: usize,
) -> Result<Vec<f64>, ExactError> {
    use num_traits::ToPrimitive;
    let table = MartingaleTable::at_probability(spec, p, cap)?;
    Ok(table
        .deltas(config)?
        .iter()
        .map(|d| d.to_f64().unwrap_or(f64::NAN))
        .collect())
}
