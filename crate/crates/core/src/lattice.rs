//! Geometry of the box `B(n) = [-n, n]^d` with free boundary, the canonical
//! vertex and bond orders, and reproducible sampling of bond configurations.
//!
//! Vertices are numbered row-major over the shifted coordinates `x + n`
//! (the last axis varies fastest). Bonds are ordered lexicographically by
//! (lower endpoint index, axis), which is also the filtration order used by
//! the exact martingale computations.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::LatticeError;

/// Largest supported dimension. `3^MAX_DIM` already exceeds any sane budget.
pub const MAX_DIM: usize = 20;

/// Default cap on the number of vertices of a box.
pub const DEFAULT_VERTEX_BUDGET: u64 = 1 << 27;

/// Default cap on the number of bonds for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Hard ceiling for enumeration: configurations are indexed by a `u64`.
pub const MAX_ENUMERATION_BONDS: usize = 63;

/// The box `B(n)` in `Z^d` together with its vertex and bond indexers.
///
/// Cloning is cheap; the per-vertex bond offsets are shared.
#[derive(Clone)]
pub struct BoxSpec {
    dim: usize,
    radius: usize,
    side: usize,
    strides: [usize; MAX_DIM],
    vertex_count: usize,
    bond_count: usize,
    // Index of the first bond whose lower endpoint is vertex v.
    bond_base: Arc<[u32]>,
}

impl PartialEq for BoxSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.radius == other.radius
    }
}

impl Eq for BoxSpec {}

impl fmt::Debug for BoxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoxSpec")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("vertices", &self.vertex_count)
            .field("bonds", &self.bond_count)
            .finish()
    }
}

impl BoxSpec {
    /// Builds `B(radius)` in dimension `dim` under the default vertex budget.
    pub fn new(dim: usize, radius: usize) -> Result<Self, LatticeError> {
        Self::with_budget(dim, radius, DEFAULT_VERTEX_BUDGET)
    }

    pub fn with_budget(dim: usize, radius: usize, max_vertices: u64) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::InvalidDimension { dim, max: MAX_DIM });
        }
        if radius == 0 {
            return Err(LatticeError::InvalidRadius(radius));
        }
        let overflow = |what, budget| LatticeError::SizeOverflow {
            dim,
            radius,
            what,
            budget,
        };
        let budget = max_vertices.min(u32::MAX as u64);
        let side = radius
            .checked_mul(2)
            .and_then(|s| s.checked_add(1))
            .ok_or(overflow("vertices", budget))?;
        let mut vertices: u64 = 1;
        for _ in 0..dim {
            vertices = vertices
                .checked_mul(side as u64)
                .filter(|&v| v <= budget)
                .ok_or(overflow("vertices", budget))?;
        }
        // |B_e(n)| = 2 d n (2n+1)^(d-1)
        let bonds = (2 * dim as u64)
            .checked_mul(radius as u64)
            .and_then(|b| b.checked_mul(vertices / side as u64))
            .filter(|&b| b <= u32::MAX as u64)
            .ok_or(overflow("bonds", u32::MAX as u64))?;

        let mut strides = [0usize; MAX_DIM];
        let mut s = 1usize;
        for a in (0..dim).rev() {
            strides[a] = s;
            s *= side;
        }

        let vertex_count = vertices as usize;
        let mut base = Vec::with_capacity(vertex_count);
        let mut digits = [0usize; MAX_DIM];
        let mut running: u32 = 0;
        for _ in 0..vertex_count {
            base.push(running);
            running += digits[..dim].iter().filter(|&&d| d + 1 < side).count() as u32;
            advance(&mut digits[..dim], side);
        }
        debug_assert_eq!(running as u64, bonds);

        Ok(Self {
            dim,
            radius,
            side,
            strides,
            vertex_count,
            bond_count: bonds as usize,
            bond_base: base.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Number of vertices along each axis, `2n + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn bond_count(&self) -> usize {
        self.bond_count
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Shifted coordinate (`x_axis + n`, in `0..side`) of vertex `v`.
    #[inline]
    pub fn digit(&self, v: usize, axis: usize) -> usize {
        (v / self.strides[axis]) % self.side
    }

    #[inline]
    pub fn digits(&self, v: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rest = v;
        for a in (0..self.dim).rev() {
            out[a] = rest % self.side;
            rest /= self.side;
        }
        out
    }

    /// Lattice coordinate of `v` along `axis`, in `-n..=n`.
    pub fn coordinate(&self, v: usize, axis: usize) -> i64 {
        self.digit(v, axis) as i64 - self.radius as i64
    }

    pub fn coordinates(&self, v: usize) -> Vec<i64> {
        (0..self.dim).map(|a| self.coordinate(v, a)).collect()
    }

    pub fn vertex_at(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let n = self.radius as i64;
        coords.iter().enumerate().try_fold(0usize, |acc, (a, &x)| {
            (-n..=n)
                .contains(&x)
                .then(|| acc + (x + n) as usize * self.strides[a])
        })
    }

    pub fn origin(&self) -> usize {
        self.radius * self.strides[..self.dim].iter().sum::<usize>()
    }

    /// The bond from the origin to `(1, 0, ..., 0)`.
    pub fn origin_bond(&self) -> Bond {
        let v1 = self.origin();
        Bond {
            v1,
            v2: v1 + self.strides[0],
            axis: 0,
        }
    }

    /// Canonical index of the bond with lower endpoint `v` along `axis`.
    #[inline]
    pub fn bond_index_at(&self, v: usize, axis: usize) -> Option<usize> {
        if v >= self.vertex_count || axis >= self.dim {
            return None;
        }
        let digits = self.digits(v);
        if digits[axis] + 1 >= self.side {
            return None;
        }
        let before = digits[..axis].iter().filter(|&&d| d + 1 < self.side).count();
        Some(self.bond_base[v] as usize + before)
    }

    pub fn index_of(&self, bond: &Bond) -> Option<usize> {
        if !self.contains_bond(bond) {
            return None;
        }
        self.bond_index_at(bond.v1, bond.axis)
    }

    pub fn contains_bond(&self, bond: &Bond) -> bool {
        bond.axis < self.dim
            && bond.v1 < self.vertex_count
            && self.digit(bond.v1, bond.axis) + 1 < self.side
            && bond.v2 == bond.v1 + self.strides[bond.axis]
    }

    /// The bond with canonical index `i`.
    ///
    /// # Panics
    /// If `i >= bond_count()`.
    pub fn bond(&self, i: usize) -> Bond {
        assert!(i < self.bond_count, "bond index {i} out of range");
        let v1 = self.bond_base.partition_point(|&b| b as usize <= i) - 1;
        let mut offset = i - self.bond_base[v1] as usize;
        let digits = self.digits(v1);
        for axis in 0..self.dim {
            if digits[axis] + 1 < self.side {
                if offset == 0 {
                    return Bond {
                        v1,
                        v2: v1 + self.strides[axis],
                        axis,
                    };
                }
                offset -= 1;
            }
        }
        unreachable!("bond offsets are inconsistent with the geometry")
    }

    pub fn bonds(&self) -> impl Iterator<Item = Bond> + '_ {
        (0..self.bond_count).map(move |i| self.bond(i))
    }

    /// Visits every bond in canonical order as `(index, v1, v2, axis)`.
    #[inline]
    pub fn for_each_bond(&self, mut f: impl FnMut(usize, usize, usize, usize)) {
        let dim = self.dim;
        let mut digits = [0usize; MAX_DIM];
        let mut idx = 0;
        for v in 0..self.vertex_count {
            for a in 0..dim {
                if digits[a] + 1 < self.side {
                    f(idx, v, v + self.strides[a], a);
                    idx += 1;
                }
            }
            advance(&mut digits[..dim], self.side);
        }
    }

    /// Visits the bonds incident to `v` as `(neighbour, bond index, axis,
    /// neighbour digit along axis)`.
    #[inline]
    pub fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
        let digits = self.digits(v);
        let mut before = 0;
        for a in 0..self.dim {
            let s = self.strides[a];
            let d = digits[a];
            let forward = d + 1 < self.side;
            if forward {
                f(v + s, self.bond_base[v] as usize + before, a, d + 1);
            }
            if d > 0 {
                let w = v - s;
                f(w, self.bond_base[w] as usize + before, a, d - 1);
            }
            if forward {
                before += 1;
            }
        }
    }

    /// Whether the box of radius `r` around `center` lies inside this box.
    pub fn window_fits(&self, center: usize, r: usize) -> bool {
        center < self.vertex_count
            && (0..self.dim).all(|a| {
                let d = self.digit(center, a);
                d >= r && d + r < self.side
            })
    }
}

fn advance(digits: &mut [usize], side: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < side {
            return;
        }
        *d = 0;
    }
}

/// A bond `{v1, v2}` with `v2 = v1 + e_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond {
    pub v1: usize,
    pub v2: usize,
    pub axis: usize,
}

/// An axis-aligned sub-box `center + B(radius)` used to restrict searches.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    low: [usize; MAX_DIM],
    high: [usize; MAX_DIM],
    dim: usize,
}

impl Window {
    /// The window `center + B(radius)`, clipped to the box.
    pub fn around(spec: &BoxSpec, center: usize, radius: usize) -> Self {
        let digits = spec.digits(center);
        let mut low = [0usize; MAX_DIM];
        let mut high = [0usize; MAX_DIM];
        for a in 0..spec.dim {
            low[a] = digits[a].saturating_sub(radius);
            high[a] = (digits[a] + radius).min(spec.side - 1);
        }
        Self {
            low,
            high,
            dim: spec.dim,
        }
    }

    /// The sub-box `B(radius)` centred at the origin.
    pub fn centered(spec: &BoxSpec, radius: usize) -> Self {
        Self::around(spec, spec.origin(), radius)
    }

    #[inline]
    pub fn contains_digit(&self, axis: usize, digit: usize) -> bool {
        self.low[axis] <= digit && digit <= self.high[axis]
    }

    pub fn contains(&self, spec: &BoxSpec, v: usize) -> bool {
        let digits = spec.digits(v);
        (0..self.dim).all(|a| self.contains_digit(a, digits[a]))
    }
}

/// A probability in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self, LatticeError> {
        if p.is_finite() && (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(LatticeError::InvalidProbability(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One open/closed assignment over the bonds of a box, packed one bit per
/// bond in canonical order. A set bit means the bond is open.
#[derive(Clone, PartialEq, Eq)]
pub struct BondConfig {
    spec: BoxSpec,
    words: Vec<u64>,
}

impl fmt::Debug for BondConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BondConfig")
            .field("spec", &self.spec)
            .field("open", &self.open_count())
            .finish()
    }
}

impl BondConfig {
    pub fn all_closed(spec: &BoxSpec) -> Self {
        Self {
            spec: spec.clone(),
            words: vec![0; spec.bond_count.div_ceil(64)],
        }
    }

    pub fn all_open(spec: &BoxSpec) -> Self {
        let mut config = Self::all_closed(spec);
        config.words.fill(!0);
        config.mask_tail();
        config
    }

    pub fn from_fn(spec: &BoxSpec, mut open: impl FnMut(usize) -> bool) -> Self {
        let mut config = Self::all_closed(spec);
        for i in 0..spec.bond_count {
            if open(i) {
                config.set_open(i, true);
            }
        }
        config
    }

    /// The configuration whose bit `i` is the state of bond `i`. Bits at or
    /// above the bond count are ignored.
    pub fn from_bits(spec: &BoxSpec, bits: u64) -> Self {
        let mut config = Self::all_closed(spec);
        if let Some(w) = config.words.first_mut() {
            *w = bits;
        }
        config.mask_tail();
        config
    }

    /// Overwrites the configuration in place with the one [`from_bits`]
    /// would build. Bonds past the first 64 are closed.
    ///
    /// [`from_bits`]: BondConfig::from_bits
    pub fn set_bits(&mut self, bits: u64) {
        self.words.fill(0);
        if let Some(w) = self.words.first_mut() {
            *w = bits;
        }
        self.mask_tail();
    }

    fn mask_tail(&mut self) {
        let rem = self.spec.bond_count % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn bond_count(&self) -> usize {
        self.spec.bond_count
    }

    #[inline]
    pub fn is_open(&self, bond: usize) -> bool {
        (self.words[bond >> 6] >> (bond & 63)) & 1 == 1
    }

    #[inline]
    pub fn set_open(&mut self, bond: usize, open: bool) {
        assert!(bond < self.spec.bond_count, "bond index {bond} out of range");
        let mask = 1u64 << (bond & 63);
        if open {
            self.words[bond >> 6] |= mask;
        } else {
            self.words[bond >> 6] &= !mask;
        }
    }

    pub fn open_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The low 64 bits of the packed configuration (the enumeration index
    /// for boxes with at most 64 bonds).
    pub fn bits(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    /// Restriction to the concentric sub-box `inner`.
    pub fn restricted_to(&self, inner: &BoxSpec) -> Result<BondConfig, LatticeError> {
        let outer = &self.spec;
        if inner.dim != outer.dim || inner.radius > outer.radius {
            return Err(LatticeError::NotASubBox {
                dim: outer.dim,
                inner: inner.radius,
                outer: outer.radius,
            });
        }
        let shift = outer.radius - inner.radius;
        Ok(BondConfig::from_fn(inner, |i| {
            let b = inner.bond(i);
            let digits = inner.digits(b.v1);
            let v: usize = (0..inner.dim)
                .map(|a| (digits[a] + shift) * outer.strides[a])
                .sum();
            let j = outer
                .bond_index_at(v, b.axis)
                .expect("sub-box bond lies inside the outer box");
            self.is_open(j)
        }))
    }
}

/// Addresses one replicate's random stream: a ChaCha8 generator keyed by
/// `master_seed` on stream `replicate_index`. The stream is a pure function
/// of the pair, so replicates can be produced in any order or thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngContract {
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl RngContract {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            replicate_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

/// Mixes an experiment label into a master seed so that different
/// experiments driven by the same user seed draw unrelated streams.
pub fn derive_seed(master_seed: u64, domain: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master_seed ^ domain.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws 64 independent Bernoulli(p) bits at a time.
///
/// Each lane compares a lazily drawn 64-bit uniform `U` against
/// `t = floor(p * 2^64)`, most significant bit first, and is open iff
/// `U < t`. All 64 lanes share each random word, so a word of bonds costs
/// one draw at `p = 1/2` and a handful for generic `p`. The open probability
/// is exactly `t / 2^64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondSampler {
    AllClosed,
    AllOpen,
    Threshold { t: u64, lowest_bit: u32 },
}

impl BondSampler {
    pub fn new(p: Probability) -> Self {
        const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
        let scaled = p.value() * TWO_POW_64;
        if scaled >= TWO_POW_64 {
            return BondSampler::AllOpen;
        }
        let t = scaled as u64;
        if t == 0 {
            BondSampler::AllClosed
        } else {
            BondSampler::Threshold {
                t,
                lowest_bit: t.trailing_zeros(),
            }
        }
    }

    #[inline]
    pub fn word<R: RngCore>(&self, rng: &mut R) -> u64 {
        match *self {
            BondSampler::AllClosed => 0,
            BondSampler::AllOpen => !0,
            BondSampler::Threshold { t, lowest_bit } => {
                let mut open = 0u64;
                let mut undecided = !0u64;
                let mut bit = 63;
                loop {
                    let r = rng.next_u64();
                    if (t >> bit) & 1 == 1 {
                        open |= undecided & !r;
                        undecided &= r;
                    } else {
                        undecided &= !r;
                    }
                    // Below the lowest set bit of t, every undecided lane
                    // has U >= t.
                    if undecided == 0 || bit == lowest_bit {
                        return open;
                    }
                    bit -= 1;
                }
            }
        }
    }

    /// Overwrites `config` with a fresh sample from `rng`.
    pub fn fill<R: RngCore>(&self, config: &mut BondConfig, rng: &mut R) {
        for w in config.words.iter_mut() {
            *w = self.word(rng);
        }
        config.mask_tail();
    }
}

/// Samples a configuration with every bond open independently with
/// probability `p`, deterministically from `contract`.
pub fn sample_config(spec: &BoxSpec, p: Probability, contract: RngContract) -> BondConfig {
    let mut config = BondConfig::all_closed(spec);
    BondSampler::new(p).fill(&mut config, &mut contract.rng());
    config
}

/// All `2^k` configurations of a box, in binary counter order: the `x`-th
/// configuration has bond `i` open iff bit `i` of `x` is set.
#[derive(Clone, Debug)]
pub struct ConfigEnumerator {
    spec: BoxSpec,
    next: u64,
    end: u64,
}

impl ConfigEnumerator {
    pub fn new(spec: &BoxSpec, cap: usize) -> Result<Self, LatticeError> {
        let total = enumeration_size(spec, cap)?;
        Ok(Self {
            spec: spec.clone(),
            next: 0,
            end: total,
        })
    }

    /// Only the configurations with index in `range` (clamped to `0..2^k`).
    pub fn range(spec: &BoxSpec, cap: usize, range: Range<u64>) -> Result<Self, LatticeError> {
        let total = enumeration_size(spec, cap)?;
        Ok(Self {
            spec: spec.clone(),
            next: range.start.min(total),
            end: range.end.min(total),
        })
    }
}

impl Iterator for ConfigEnumerator {
    type Item = BondConfig;

    fn next(&mut self) -> Option<BondConfig> {
        (self.next < self.end).then(|| {
            let config = BondConfig::from_bits(&self.spec, self.next);
            self.next += 1;
            config
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ConfigEnumerator {}

/// `2^k` when `k` is within `cap`.
pub fn enumeration_size(spec: &BoxSpec, cap: usize) -> Result<u64, LatticeError> {
    let k = spec.bond_count;
    if k > cap || k > MAX_ENUMERATION_BONDS {
        return Err(LatticeError::EnumerationCapExceeded {
            bonds: k,
            cap: cap.min(MAX_ENUMERATION_BONDS),
        });
    }
    Ok(1u64 << k)
}

pub fn enumerate_configs(spec: &BoxSpec, cap: usize) -> Result<ConfigEnumerator, LatticeError> {
    ConfigEnumerator::new(spec, cap)
}
