//! Detectors for the bond events used in the variance analysis of `M_n`:
//!
//! * `G_n(b)`: no open path joins the endpoints of `b` inside `B(n)` without
//!   using `b` itself (no bypass);
//! * `E_n(b)`: `b` is pivotal for the open connection of its own endpoints;
//! * `D(b, m)`: two vertex-disjoint open arms, one from each endpoint of
//!   `b`, reach the boundary of `v1(b) + B(m - 1)` without using `b`.
//!
//! `G_n` and `E_n` coincide on every configuration; they are implemented
//! independently so the equivalence can be checked rather than assumed.

use alloc::vec::Vec;

use crate::clusters::PathSearch;
use crate::error::EventError;
use crate::lattice::{Bond, BondConfig, BoxSpec, Window, MAX_DIM};

fn checked_index(spec: &BoxSpec, bond: &Bond) -> Result<usize, EventError> {
    spec.index_of(bond).ok_or(EventError::BondOutsideBox {
        v1: bond.v1,
        v2: bond.v2,
        axis: bond.axis,
    })
}

/// `G_n(b)`: the endpoints of `bond` are not joined by open bonds other than
/// `bond` itself. The state of `bond` is never read.
///
/// # Panics
/// If `bond` is not a bond of the configuration's box.
pub fn event_gn(config: &BondConfig, bond: &Bond) -> bool {
    no_bypass(config, bond, None, &mut PathSearch::new())
}

/// `G_n(b)` with the search confined to `window` when one is given.
pub fn no_bypass(
    config: &BondConfig,
    bond: &Bond,
    window: Option<&Window>,
    search: &mut PathSearch,
) -> bool {
    let idx = checked_index(config.spec(), bond).expect("bond outside the box");
    !search.connected(config, bond.v1, bond.v2, &[idx], window)
}

/// `E_n(b)`: switching `bond` alone changes whether its endpoints are
/// connected by open paths in `B(n)`.
///
/// # Panics
/// If `bond` is not a bond of the configuration's box.
pub fn event_pivotal_en(config: &BondConfig, bond: &Bond) -> bool {
    let idx = checked_index(config.spec(), bond).expect("bond outside the box");
    let mut search = PathSearch::new();
    let mut flipped = config.clone();
    flipped.set_open(idx, true);
    let with_bond = search.connected(&flipped, bond.v1, bond.v2, &[], None);
    flipped.set_open(idx, false);
    let without_bond = search.connected(&flipped, bond.v1, bond.v2, &[], None);
    with_bond != without_bond
}

/// `G_m(b)` for each radius in `radii` (strictly increasing), where `G_m`
/// looks for a bypass inside the concentric window `B(m)` only.
///
/// Because a bypass inside `B(m)` is also one inside every larger window,
/// the returned flags are non-increasing and the search stops at the first
/// radius with a bypass.
pub fn no_bypass_profile(
    config: &BondConfig,
    bond: &Bond,
    radii: &[usize],
    search: &mut PathSearch,
) -> Result<Vec<bool>, EventError> {
    let spec = config.spec();
    let idx = checked_index(spec, bond)?;
    let mut out = Vec::with_capacity(radii.len());
    let mut bypassed = false;
    for &m in radii {
        if m == 0 || m > spec.radius() {
            return Err(EventError::InvalidWindow {
                window: m,
                radius: spec.radius(),
            });
        }
        if !bypassed {
            let window = Window::centered(spec, m);
            bypassed = search.connected(config, bond.v1, bond.v2, &[idx], Some(&window));
        }
        out.push(!bypassed);
    }
    Ok(out)
}

/// `D(b, m)`: see [`TwoArmDetector::detect`].
pub fn event_two_arm_d(config: &BondConfig, bond: &Bond, m: usize) -> Result<bool, EventError> {
    TwoArmDetector::new().detect(config, bond, m)
}

/// Which event an [`EventProbe`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    PivotalEn,
    NoBypassGn,
    TwoArmD { arm_radius: usize },
}

/// A validated (box, bond, event) triple.
#[derive(Clone, Debug)]
pub struct EventProbe {
    spec: BoxSpec,
    bond: Bond,
    kind: EventKind,
}

impl EventProbe {
    pub fn new(spec: &BoxSpec, bond: Bond, kind: EventKind) -> Result<Self, EventError> {
        checked_index(spec, &bond)?;
        if let EventKind::TwoArmD { arm_radius } = kind {
            arm_box_fits(spec, &bond, arm_radius)?;
        }
        Ok(Self {
            spec: spec.clone(),
            bond,
            kind,
        })
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn bond(&self) -> Bond {
        self.bond
    }

    /// # Panics
    /// If `config` belongs to a different box than the probe.
    pub fn evaluate(&self, config: &BondConfig) -> bool {
        assert_eq!(config.spec(), &self.spec, "configuration from a different box");
        match self.kind {
            EventKind::PivotalEn => event_pivotal_en(config, &self.bond),
            EventKind::NoBypassGn => event_gn(config, &self.bond),
            EventKind::TwoArmD { arm_radius } => event_two_arm_d(config, &self.bond, arm_radius)
                .expect("arm box validated at construction"),
        }
    }
}

fn arm_box_fits(spec: &BoxSpec, bond: &Bond, m: usize) -> Result<(), EventError> {
    if m < 2 {
        return Err(EventError::ArmRadiusTooSmall(m));
    }
    if !spec.window_fits(bond.v1, m - 1) {
        return Err(EventError::ArmBoxDoesNotFit {
            center: bond.v1,
            arm_radius: m,
            radius: spec.radius(),
        });
    }
    Ok(())
}

/// Two-arm detection by unit-capacity max-flow (Menger).
///
/// Every vertex of the arm box is split into `in -> out` with capacity one.
/// A super-source feeds `v1(b)` and `v2(b)` with one unit each, and every
/// boundary vertex drains into the sink. A flow of value two is exactly a
/// pair of vertex-disjoint open arms, one per endpoint. Scratch buffers are
/// kept between calls.
#[derive(Clone, Debug, Default)]
pub struct TwoArmDetector {
    flow: UnitFlow,
}

impl TwoArmDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether two vertex-disjoint open paths, one starting at `v1(b)` and
    /// one at `v2(b)`, both reach the boundary of `v1(b) + B(m - 1)` without
    /// using `b`. Requires `m >= 2` (so the arm box contains `v2(b)`) and the
    /// arm box to fit inside the configuration's box.
    pub fn detect(&mut self, config: &BondConfig, bond: &Bond, m: usize) -> Result<bool, EventError> {
        let spec = config.spec();
        let b_idx = checked_index(spec, bond)?;
        arm_box_fits(spec, bond, m)?;
        let r = m - 1;

        // An endpoint strictly inside the arm box needs an open bond other
        // than b to start its arm.
        let has_exit = |v: usize| {
            let mut any = false;
            spec.for_each_incident(v, |_, idx, _, _| any |= idx != b_idx && config.is_open(idx));
            any
        };
        if !has_exit(bond.v1) || (r > 1 && !has_exit(bond.v2)) {
            return Ok(false);
        }

        let dim = spec.dim();
        let len = 2 * r + 1;
        let center = spec.digits(bond.v1);
        let mut local_stride = [0usize; MAX_DIM];
        let mut s = 1;
        for a in (0..dim).rev() {
            local_stride[a] = s;
            s *= len;
        }
        let local_count = s;
        let source = 2 * local_count;
        let sink = source + 1;
        self.flow.reset(sink + 1);

        let corner: usize = (0..dim).map(|a| (center[a] - r) * spec.stride(a)).sum();
        let mut local = [0usize; MAX_DIM];
        for x in 0..local_count {
            let g: usize = corner + (0..dim).map(|a| local[a] * spec.stride(a)).sum::<usize>();
            self.flow.add_edge(2 * x, 2 * x + 1);
            if local[..dim].iter().any(|&d| d == 0 || d == 2 * r) {
                self.flow.add_edge(2 * x + 1, sink);
            }
            for a in 0..dim {
                if local[a] < 2 * r {
                    let idx = spec
                        .bond_index_at(g, a)
                        .expect("arm box lies inside the box");
                    if idx != b_idx && config.is_open(idx) {
                        let y = x + local_stride[a];
                        self.flow.add_edge(2 * x + 1, 2 * y);
                        self.flow.add_edge(2 * y + 1, 2 * x);
                    }
                }
            }
            for a in (0..dim).rev() {
                local[a] += 1;
                if local[a] < len {
                    break;
                }
                local[a] = 0;
            }
        }
        let centre_local: usize = (0..dim).map(|a| r * local_stride[a]).sum();
        let v2_local = centre_local + local_stride[bond.axis];
        self.flow.add_edge(source, 2 * centre_local);
        self.flow.add_edge(source, 2 * v2_local);

        Ok(self.flow.max_flow(source, sink, 2) == 2)
    }
}

const NONE: u32 = u32::MAX;

/// Residual graph with unit capacities, stored as intrusive edge lists.
#[derive(Clone, Debug, Default)]
struct UnitFlow {
    head: Vec<u32>,
    next: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<u8>,
    via: Vec<u32>,
    queue: Vec<u32>,
}

impl UnitFlow {
    fn reset(&mut self, nodes: usize) {
        self.head.clear();
        self.head.resize(nodes, NONE);
        self.next.clear();
        self.to.clear();
        self.cap.clear();
    }

    fn push_arc(&mut self, from: usize, to: usize, cap: u8) {
        let e = self.to.len() as u32;
        self.to.push(to as u32);
        self.cap.push(cap);
        self.next.push(self.head[from]);
        self.head[from] = e;
    }

    /// Arc `from -> to` of capacity one; its reverse is the arc at `e ^ 1`.
    fn add_edge(&mut self, from: usize, to: usize) {
        self.push_arc(from, to, 1);
        self.push_arc(to, from, 0);
    }

    fn augment(&mut self, source: usize, sink: usize) -> bool {
        self.via.clear();
        self.via.resize(self.head.len(), NONE);
        self.queue.clear();
        self.queue.push(source as u32);
        let mut qh = 0;
        while qh < self.queue.len() {
            let u = self.queue[qh] as usize;
            qh += 1;
            let mut e = self.head[u];
            while e != NONE {
                let w = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && w != source && self.via[w] == NONE {
                    self.via[w] = e;
                    if w == sink {
                        let mut v = sink;
                        while v != source {
                            let arc = self.via[v] as usize;
                            self.cap[arc] -= 1;
                            self.cap[arc ^ 1] += 1;
                            v = self.to[arc ^ 1] as usize;
                        }
                        return true;
                    }
                    self.queue.push(w as u32);
                }
                e = self.next[e as usize];
            }
        }
        false
    }

    fn max_flow(&mut self, source: usize, sink: usize, limit: u32) -> u32 {
        let mut flow = 0;
        while flow < limit && self.augment(source, sink) {
            flow += 1;
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_configs, sample_config, Probability, RngContract};
    use alloc::vec;
    use proptest::prelude::*;

    fn square() -> BoxSpec {
        BoxSpec::new(2, 1).unwrap()
    }

    #[test]
    fn no_bypass_on_a_line() {
        for n in 1..=3 {
            let spec = BoxSpec::new(1, n).unwrap();
            for config in enumerate_configs(&spec, 24).unwrap() {
                for b in spec.bonds() {
                    assert!(event_gn(&config, &b));
                }
            }
        }
    }

    #[test]
    fn square_examples() {
        let spec = square();
        for i in 0..spec.bond_count() {
            let b = spec.bond(i);
            let mut all_but_b = BondConfig::all_open(&spec);
            all_but_b.set_open(i, false);
            assert!(!event_gn(&all_but_b, &b));
            assert!(!event_gn(&BondConfig::all_open(&spec), &b));
            let only_b = BondConfig::from_fn(&spec, |j| j == i);
            assert!(event_gn(&only_b, &b));
            assert!(!event_pivotal_en(&BondConfig::all_open(&spec), &b));
        }
        let line = BoxSpec::new(1, 2).unwrap();
        for b in line.bonds() {
            assert!(event_pivotal_en(&BondConfig::all_closed(&line), &b));
        }
    }

    #[test]
    fn pivotality_equals_no_bypass_exhaustively() {
        let boxes = [(1, 1), (1, 2), (1, 3), (2, 1)];
        for (d, n) in boxes {
            let spec = BoxSpec::new(d, n).unwrap();
            for config in enumerate_configs(&spec, 24).unwrap() {
                for b in spec.bonds() {
                    assert_eq!(event_pivotal_en(&config, &b), event_gn(&config, &b));
                }
            }
        }
    }

    #[test]
    fn probe_validation() {
        let spec = BoxSpec::new(2, 3).unwrap();
        let b0 = spec.origin_bond();
        assert!(EventProbe::new(&spec, b0, EventKind::TwoArmD { arm_radius: 3 }).is_ok());
        assert_eq!(
            EventProbe::new(&spec, b0, EventKind::TwoArmD { arm_radius: 1 }).unwrap_err(),
            EventError::ArmRadiusTooSmall(1)
        );
        assert!(matches!(
            EventProbe::new(&spec, b0, EventKind::TwoArmD { arm_radius: 5 }),
            Err(EventError::ArmBoxDoesNotFit { .. })
        ));
        let bogus = Bond { v1: b0.v1, v2: b0.v1 + 2, axis: 0 };
        assert!(matches!(
            EventProbe::new(&spec, bogus, EventKind::NoBypassGn),
            Err(EventError::BondOutsideBox { .. })
        ));
        let probe = EventProbe::new(&spec, b0, EventKind::NoBypassGn).unwrap();
        assert!(probe.evaluate(&BondConfig::all_closed(&spec)));
    }

    #[test]
    fn two_arm_examples() {
        let spec = BoxSpec::new(2, 4).unwrap();
        let b0 = spec.origin_bond();
        assert!(event_two_arm_d(&BondConfig::all_open(&spec), &b0, 2).unwrap());
        assert!(event_two_arm_d(&BondConfig::all_open(&spec), &b0, 5).unwrap());
        assert!(!event_two_arm_d(&BondConfig::all_closed(&spec), &b0, 3).unwrap());

        // A single straight ray from v1 = origin to the left boundary of the
        // arm box; v2 = (1, 0) has no arm.
        let m = 4;
        let ray = BondConfig::from_fn(&spec, |i| {
            let b = spec.bond(i);
            let (c1, c2) = (spec.coordinates(b.v1), spec.coordinates(b.v2));
            b.axis == 0 && c1[1] == 0 && c2[0] <= 0 && c1[0] >= -(m as i64 - 1)
        });
        assert!(!event_two_arm_d(&ray, &b0, m).unwrap());
        // adding a second ray from v2 to the right makes D occur
        let mut both = ray.clone();
        for i in 0..spec.bond_count() {
            let b = spec.bond(i);
            let (c1, c2) = (spec.coordinates(b.v1), spec.coordinates(b.v2));
            if b.axis == 0 && c1[1] == 0 && c1[0] >= 1 && c2[0] < m as i64 {
                both.set_open(i, true);
            }
        }
        assert!(event_two_arm_d(&both, &b0, m).unwrap());
    }

    #[test]
    fn two_arm_ignores_the_probed_bond() {
        // Both arms must leave through different vertices: a single arm from v1
        // that v2 can only reach through b does not count.
        let spec = BoxSpec::new(2, 3).unwrap();
        let b0 = spec.origin_bond();
        let idx = spec.index_of(&b0).unwrap();
        let mut config = BondConfig::from_fn(&spec, |i| {
            let b = spec.bond(i);
            let (c1, c2) = (spec.coordinates(b.v1), spec.coordinates(b.v2));
            b.axis == 0 && c1[1] == 0 && c2[0] <= 0
        });
        config.set_open(idx, true);
        assert!(!event_two_arm_d(&config, &b0, 3).unwrap());
    }

    /// Brute-force oracle: enumerate every simple open path from each endpoint
    /// to the arm-box boundary and look for a vertex-disjoint pair.
    fn two_arm_oracle(config: &BondConfig, bond: &Bond, m: usize) -> bool {
        let spec = config.spec();
        let b_idx = spec.index_of(bond).unwrap();
        let r = m - 1;
        let c = spec.coordinates(bond.v1);
        let in_box = |v: usize| {
            spec.coordinates(v)
                .iter()
                .zip(&c)
                .all(|(x, y)| (x - y).unsigned_abs() as usize <= r)
        };
        let on_boundary = |v: usize| {
            spec.coordinates(v)
                .iter()
                .zip(&c)
                .any(|(x, y)| (x - y).unsigned_abs() as usize == r)
        };
        fn arms(
            spec: &BoxSpec,
            config: &BondConfig,
            b_idx: usize,
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
            in_box: &dyn Fn(usize) -> bool,
            on_boundary: &dyn Fn(usize) -> bool,
        ) {
            let v = *path.last().unwrap();
            if on_boundary(v) {
                out.push(path.clone());
                return;
            }
            let mut next = Vec::new();
            spec.for_each_incident(v, |w, idx, _, _| {
                if idx != b_idx && config.is_open(idx) && in_box(w) && !path.contains(&w) {
                    next.push(w);
                }
            });
            for w in next {
                path.push(w);
                arms(spec, config, b_idx, path, out, in_box, on_boundary);
                path.pop();
            }
        }
        let mut from_v1 = Vec::new();
        arms(spec, config, b_idx, &mut vec![bond.v1], &mut from_v1, &in_box, &on_boundary);
        let mut from_v2 = Vec::new();
        arms(spec, config, b_idx, &mut vec![bond.v2], &mut from_v2, &in_box, &on_boundary);
        from_v1
            .iter()
            .any(|a| from_v2.iter().any(|b| a.iter().all(|v| !b.contains(v))))
    }

    #[test]
    fn two_arm_matches_path_enumeration() {
        let spec = BoxSpec::new(2, 3).unwrap();
        let mut detector = TwoArmDetector::new();
        let mut hits = 0;
        for rep in 0..600 {
            let p = [0.45, 0.55, 0.65][rep % 3];
            let config = sample_config(&spec, Probability::new(p).unwrap(), RngContract::new(17, rep as u64));
            for b in [spec.origin_bond(), Bond { v1: spec.vertex_at(&[-1, 0]).unwrap(), v2: spec.vertex_at(&[-1, 1]).unwrap(), axis: 1 }] {
                for m in 2..=3 {
                    let fast = detector.detect(&config, &b, m).unwrap();
                    assert_eq!(fast, two_arm_oracle(&config, &b, m), "rep {rep} m {m}");
                    hits += usize::from(fast);
                }
            }
        }
        assert!(hits > 50, "oracle comparison should exercise positive cases");
    }

    #[test]
    fn profile_is_monotone_and_matches_restriction() {
        let big = BoxSpec::new(2, 6).unwrap();
        let mut search = PathSearch::new();
        for rep in 0..200 {
            let config = sample_config(&big, Probability::new(0.5).unwrap(), RngContract::new(5, rep));
            let radii = [1, 2, 3, 4, 6];
            let profile = no_bypass_profile(&config, &big.origin_bond(), &radii, &mut search).unwrap();
            assert!(profile.windows(2).all(|w| w[0] >= w[1]));
            for (&m, &flag) in radii.iter().zip(&profile) {
                let inner = BoxSpec::new(2, m).unwrap();
                let restricted = config.restricted_to(&inner).unwrap();
                assert_eq!(flag, event_gn(&restricted, &inner.origin_bond()));
            }
        }
        let cfg = BondConfig::all_open(&big);
        assert!(no_bypass_profile(&cfg, &big.origin_bond(), &[7], &mut search).is_err());
    }

    proptest! {
        #[test]
        fn pivotality_equals_no_bypass_sampled(radius in 2usize..=5, p in 0.0f64..=1.0, seed: u64, pick: usize) {
            let spec = BoxSpec::new(2, radius).unwrap();
            let config = sample_config(&spec, Probability::new(p).unwrap(), RngContract::new(seed, 9));
            let b = spec.bond(pick % spec.bond_count());
            prop_assert_eq!(event_pivotal_en(&config, &b), event_gn(&config, &b));
        }

        #[test]
        fn no_bypass_is_decreasing(radius in 1usize..=4, seed: u64, pick: usize, extra: usize) {
            let spec = BoxSpec::new(2, radius).unwrap();
            let config = sample_config(&spec, Probability::new(0.5).unwrap(), RngContract::new(seed, 2));
            let b = spec.bond(pick % spec.bond_count());
            let mut more = config.clone();
            more.set_open(extra % spec.bond_count(), true);
            // opening a bond never creates G_n
            prop_assert!(event_gn(&config, &b) || !event_gn(&more, &b));
        }

        #[test]
        fn two_arm_is_increasing_and_needs_an_arm(seed: u64, extra: usize, m in 2usize..=4) {
            let spec = BoxSpec::new(2, 4).unwrap();
            let b0 = spec.origin_bond();
            let config = sample_config(&spec, Probability::new(0.55).unwrap(), RngContract::new(seed, 4));
            let mut more = config.clone();
            more.set_open(extra % spec.bond_count(), true);
            let before = event_two_arm_d(&config, &b0, m).unwrap();
            prop_assert!(!before || event_two_arm_d(&more, &b0, m).unwrap());
            if before {
                // v1 must reach the arm-box boundary on its own
                let window = Window::around(&spec, b0.v1, m - 1);
                let idx = spec.index_of(&b0).unwrap();
                let mut search = PathSearch::new();
                let reaches = (0..spec.vertex_count())
                    .filter(|&v| window.contains(&spec, v))
                    .filter(|&v| (0..2).any(|a| spec.coordinate(v, a).unsigned_abs() as usize == m - 1))
                    .any(|v| search.connected(&config, b0.v1, v, &[idx], Some(&window)));
                prop_assert!(reaches);
            }
        }
    }
}
