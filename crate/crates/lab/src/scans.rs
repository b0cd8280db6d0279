//! Growing-radius scans of the no-bypass event `G_m(b0)` and the two-arm
//! event `D(b0, m)`, and the derivative `kappa'(p) = -d P(G(b0))`.
//!
//! Each replicate samples one configuration on the box of the largest radius
//! and evaluates every radius on it. The estimates are therefore coupled:
//! on every replicate the indicators are monotone in `m`, so the point
//! estimates are exactly non-increasing.

use bondperc_core::lattice::derive_seed;
use bondperc_core::{no_bypass_profile, BoxSpec, PathSearch, Probability, TwoArmDetector};
use serde::Serialize;

use crate::error::{invalid, LabError};
use crate::montecarlo::{check_replicates, domain, Sampler};
use crate::parallel::Workers;
use crate::stats::EstimateSummary;

/// One radius of a scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub d: usize,
    pub p: f64,
    pub m: usize,
    pub estimate: EstimateSummary,
}

fn check_radii(radii: &[usize], min: usize) -> Result<(), LabError> {
    if radii.is_empty() {
        return Err(invalid("radii", "at least one radius is required"));
    }
    if radii[0] < min {
        return Err(invalid("radii", format!("radii must be at least {min}")));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radii", "radii must be strictly increasing"));
    }
    Ok(())
}

/// Successes per radius from per-replicate monotone profiles.
fn tally(profiles: &[Vec<bool>], radii: &[usize]) -> Vec<u64> {
    let mut hits = vec![0u64; radii.len()];
    for profile in profiles {
        for (h, &flag) in hits.iter_mut().zip(profile) {
            *h += u64::from(flag);
        }
    }
    hits
}

/// `P_p(G_m(b0))` for each radius, where `b0` joins the origin to its
/// neighbour along the first axis.
pub fn estimate_g_infinity(
    dim: usize,
    p: Probability,
    radii: &[usize],
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<Vec<ScanRow>, LabError> {
    check_radii(radii, 1)?;
    check_replicates(replicates, 1)?;
    let spec = BoxSpec::new(dim, *radii.last().unwrap())?;
    let bond = spec.origin_bond();
    let seed = derive_seed(master_seed, domain::NO_BYPASS);
    let profiles = workers.map_replicates(
        replicates,
        || (Sampler::new(&spec, p, seed), PathSearch::new()),
        |(sampler, search), i| {
            no_bypass_profile(sampler.draw(i), &bond, radii, search)
                .expect("radii validated against the box")
        },
    );
    Ok(rows(dim, p, radii, &tally(&profiles, radii), replicates, master_seed))
}

/// `P_p(D(b0, m))` for each radius. The box has radius `max(m) - 1`, the
/// smallest that holds every arm box.
pub fn two_arm_decay_scan(
    dim: usize,
    p: Probability,
    radii: &[usize],
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<Vec<ScanRow>, LabError> {
    check_radii(radii, 2)?;
    check_replicates(replicates, 1)?;
    let spec = BoxSpec::new(dim, *radii.last().unwrap() - 1)?;
    let bond = spec.origin_bond();
    let seed = derive_seed(master_seed, domain::TWO_ARM);
    let profiles = workers.map_replicates(
        replicates,
        || (Sampler::new(&spec, p, seed), TwoArmDetector::new()),
        |(sampler, detector), i| {
            let config = sampler.draw(i);
            // D(b, m) shrinks as m grows: arms to a far boundary cross every
            // nearer one.
            let mut alive = true;
            radii
                .iter()
                .map(|&m| {
                    alive = alive
                        && detector
                            .detect(config, &bond, m)
                            .expect("arm boxes fit by construction");
                    alive
                })
                .collect::<Vec<bool>>()
        },
    );
    Ok(rows(dim, p, radii, &tally(&profiles, radii), replicates, master_seed))
}

fn rows(
    d: usize,
    p: Probability,
    radii: &[usize],
    hits: &[u64],
    replicates: u64,
    seed: u64,
) -> Vec<ScanRow> {
    radii
        .iter()
        .zip(hits)
        .map(|(&m, &h)| ScanRow {
            d,
            p: p.value(),
            m,
            estimate: EstimateSummary::proportion(h, replicates as usize, seed),
        })
        .collect()
}

/// `kappa'(p)` from a `G_m(b0)` scan and the stopping rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaPrime {
    pub rows: Vec<ScanRow>,
    pub epsilon: f64,
    /// Index into `rows` of the radius whose estimate was used.
    pub selected: usize,
    pub kappa_prime: EstimateSummary,
}

impl KappaPrime {
    pub fn selected_radius(&self) -> usize {
        self.rows[self.selected].m
    }

    /// The selected `P(G_m(b0))` estimate.
    pub fn no_bypass(&self) -> EstimateSummary {
        self.rows[self.selected].estimate
    }
}

/// The first consecutive pair of schedule radii whose estimates differ by
/// less than `epsilon` stops the scan; the larger radius's estimate is used.
pub fn select_converged(rows: &[ScanRow], epsilon: f64) -> Result<usize, LabError> {
    let mut last_gap = f64::NAN;
    for (i, w) in rows.windows(2).enumerate() {
        last_gap = (w[0].estimate.point - w[1].estimate.point).abs();
        if last_gap < epsilon {
            return Ok(i + 1);
        }
    }
    Err(LabError::NonConvergence {
        radii: rows.iter().map(|r| r.m).collect(),
        epsilon,
        last_gap,
    })
}

pub fn estimate_kappa_prime(
    dim: usize,
    p: Probability,
    radii: &[usize],
    replicates: u64,
    master_seed: u64,
    epsilon: f64,
    workers: &Workers,
) -> Result<KappaPrime, LabError> {
    if radii.len() < 2 {
        return Err(invalid("radii", "the stopping rule needs at least two radii"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let rows = estimate_g_infinity(dim, p, radii, replicates, master_seed, workers)?;
    let selected = select_converged(&rows, epsilon)?;
    let kappa_prime = rows[selected].estimate.scaled(-(dim as f64));
    Ok(KappaPrime {
        rows,
        epsilon,
        selected,
        kappa_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    #[test]
    fn no_bypass_extremes() {
        let w = Workers::new(2).unwrap();
        for row in estimate_g_infinity(2, prob(0.0), &[1, 2, 4], 50, 3, &w).unwrap() {
            assert_eq!(row.estimate.point, 1.0);
        }
        for row in estimate_g_infinity(2, prob(1.0), &[1, 2, 4], 50, 3, &w).unwrap() {
            assert_eq!(row.estimate.point, 0.0);
        }
        let line = estimate_kappa_prime(1, prob(0.37), &[4, 8, 16], 50, 3, 0.005, &w).unwrap();
        assert_eq!(line.kappa_prime.point, -1.0);
        let closed = estimate_kappa_prime(3, prob(0.0), &[2, 4], 10, 3, 0.005, &w).unwrap();
        assert_eq!(closed.kappa_prime.point, -3.0);
    }

    #[test]
    fn scans_are_non_increasing() {
        let w = Workers::new(2).unwrap();
        let g = estimate_g_infinity(2, prob(0.5), &[2, 4, 8, 16], 400, 5, &w).unwrap();
        assert!(g.windows(2).all(|r| r[0].estimate.point >= r[1].estimate.point));
        let d = two_arm_decay_scan(2, prob(0.5), &[2, 4, 8], 400, 5, &w).unwrap();
        assert!(d.windows(2).all(|r| r[0].estimate.point >= r[1].estimate.point));
    }

    #[test]
    fn two_arm_extremes() {
        let w = Workers::new(1).unwrap();
        for row in two_arm_decay_scan(2, prob(0.0), &[2, 4, 8], 20, 1, &w).unwrap() {
            assert_eq!(row.estimate.point, 0.0);
        }
        for row in two_arm_decay_scan(2, prob(1.0), &[2, 4, 8], 20, 1, &w).unwrap() {
            assert_eq!(row.estimate.point, 1.0);
        }
    }

    #[test]
    fn argument_validation() {
        let w = Workers::new(1).unwrap();
        assert!(estimate_g_infinity(2, prob(0.5), &[4, 4], 10, 0, &w).is_err());
        assert!(estimate_g_infinity(2, prob(0.5), &[], 10, 0, &w).is_err());
        assert!(two_arm_decay_scan(2, prob(0.5), &[1, 4], 10, 0, &w).is_err());
        assert!(estimate_kappa_prime(2, prob(0.5), &[4], 10, 0, 0.005, &w).is_err());
        assert!(estimate_kappa_prime(2, prob(0.5), &[4, 8], 10, 0, 0.0, &w).is_err());
    }

    #[test]
    fn stopping_rule() {
        let row = |m, point| ScanRow {
            d: 2,
            p: 0.5,
            m,
            estimate: EstimateSummary::new(point, 0.0, 10, 0),
        };
        let rows = [row(4, 0.7), row(8, 0.6), row(16, 0.598), row(32, 0.597)];
        assert_eq!(select_converged(&rows, 0.005).unwrap(), 2);
        assert!(matches!(
            select_converged(&rows[..2], 0.005),
            Err(LabError::NonConvergence { .. })
        ));
    }
}
