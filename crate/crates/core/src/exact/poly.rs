use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial in `p` with arbitrary-precision integer coefficients,
/// `coeffs[j]` multiplying `p^j`. Trailing zeros are never stored, so the
/// zero polynomial has no coefficients and equality is structural.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PolyP {
    coeffs: Vec<BigInt>,
}

impl PolyP {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        Self::from_coeffs([c])
    }

    /// The polynomial `p`.
    pub fn p() -> Self {
        Self::from_coeffs([0, 1])
    }

    /// The polynomial `1 - p`.
    pub fn one_minus_p() -> Self {
        Self::from_coeffs([1, -1])
    }

    pub fn from_coeffs<I>(coeffs: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<BigInt>,
    {
        Self::from_big(coeffs.into_iter().map(Into::into).collect())
    }

    pub fn from_big(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Expands `sum_j counts[j] p^j (1-p)^(s-j)` with `s = counts.len() - 1`.
    pub fn from_bernstein(counts: &[BigInt]) -> Self {
        let Some(s) = counts.len().checked_sub(1) else {
            return Self::zero();
        };
        // binom[t] = C(s - j, t), rebuilt per j
        let mut out = alloc::vec![BigInt::zero(); s + 1];
        let mut binom: Vec<BigInt> = Vec::with_capacity(s + 1);
        for (j, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let width = s - j;
            binom.clear();
            binom.push(BigInt::one());
            for t in 1..=width {
                let next = &binom[t - 1] * BigInt::from(width - t + 1) / BigInt::from(t);
                binom.push(next);
            }
            for (t, b) in binom.iter().enumerate() {
                let term = c * b;
                if t % 2 == 0 {
                    out[j + t] += term;
                } else {
                    out[j + t] -= term;
                }
            }
        }
        Self::from_big(out)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> BigInt {
        self.coeffs.get(j).cloned().unwrap_or_default()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn derivative(&self) -> Self {
        Self::from_big(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * BigInt::from(j))
                .collect(),
        )
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::from_big(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Lowest power at which `self` and `other` differ.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len).find(|&j| self.coeff(j) != other.coeff(j))
    }

    /// Exact value at a rational point (Horner).
    pub fn eval_rational(&self, p: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * p + BigRational::from_integer(c.clone());
        }
        acc
    }

    /// Value at `p`, computed exactly at the binary value of `p` and rounded
    /// once at the end.
    ///
    /// # Panics
    /// If `p` is not finite.
    pub fn eval_f64(&self, p: f64) -> f64 {
        let exact = BigRational::from_float(p).expect("finite evaluation point");
        self.eval_rational(&exact).to_f64().unwrap_or(f64::NAN)
    }

    /// Whether the values at `points + 1` equally spaced rationals in
    /// `[0, 1]` all lie in `[0, 1]`.
    pub fn is_probability_on_grid(&self, points: u32) -> bool {
        let points = points.max(1);
        (0..=points).all(|i| {
            let v = self.eval_rational(&BigRational::new(i.into(), points.into()));
            !v.is_negative() && v <= BigRational::one()
        })
    }

    /// Coefficients as decimal strings, lowest power first.
    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for PolyP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            match (first, c.is_negative()) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            first = false;
            let unit = mag.is_one();
            match j {
                0 => write!(f, "{mag}")?,
                1 if unit => f.write_str("p")?,
                1 => write!(f, "{mag}p")?,
                _ if unit => write!(f, "p^{j}")?,
                _ => write!(f, "{mag}p^{j}")?,
            }
        }
        Ok(())
    }
}

impl Add for &PolyP {
    type Output = PolyP;
    fn add(self, rhs: &PolyP) -> PolyP {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        PolyP::from_big((0..len).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl Sub for &PolyP {
    type Output = PolyP;
    fn sub(self, rhs: &PolyP) -> PolyP {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        PolyP::from_big((0..len).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl Mul for &PolyP {
    type Output = PolyP;
    fn mul(self, rhs: &PolyP) -> PolyP {
        if self.is_zero() || rhs.is_zero() {
            return PolyP::zero();
        }
        let mut out = alloc::vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyP::from_big(out)
    }
}

impl Neg for &PolyP {
    type Output = PolyP;
    fn neg(self) -> PolyP {
        PolyP::from_big(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for PolyP {
            type Output = PolyP;
            fn $m(self, rhs: PolyP) -> PolyP {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl core::iter::Sum for PolyP {
    fn sum<I: Iterator<Item = PolyP>>(iter: I) -> PolyP {
        iter.fold(PolyP::zero(), |acc, x| &acc + &x)
    }
}
