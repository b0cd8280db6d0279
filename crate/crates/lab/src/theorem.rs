//! Empirical variance density against the predicted limit
//! `-(p^2(1-p) + p(1-p)^2) kappa'(p)`.

use bondperc_core::{BoxSpec, Probability};
use serde::Serialize;

use crate::error::LabError;
use crate::montecarlo::{estimate_moments_mn, Moments};
use crate::parallel::Workers;
use crate::scans::{estimate_kappa_prime, KappaPrime};
use crate::stats::EstimateSummary;

/// Default growing-box schedule for `kappa'`.
pub fn default_radii(dim: usize) -> Vec<usize> {
    if dim <= 2 {
        vec![4, 8, 16, 32, 64, 128]
    } else {
        vec![4, 8, 16, 32]
    }
}

/// `p^2(1-p) + p(1-p)^2`, which simplifies to `p(1-p)`.
pub fn prefactor(p: f64) -> f64 {
    let q = 1.0 - p;
    let long = p * p * q + p * q * q;
    let short = p * q;
    assert!(
        (long - short).abs() <= 4.0 * f64::EPSILON * short.max(f64::MIN_POSITIVE),
        "p^2(1-p) + p(1-p)^2 = {long} but p(1-p) = {short}"
    );
    short
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremComparison {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub replicates: u64,
    pub seed: u64,
    pub moments: Moments,
    pub empirical_density: EstimateSummary,
    pub kappa: KappaPrime,
    pub predicted_limit: f64,
    pub predicted_stderr: f64,
    pub gap: f64,
    pub gap_in_stderr: f64,
}

pub fn compare_to_theorem(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    radii: &[usize],
    epsilon: f64,
    workers: &Workers,
) -> Result<TheoremComparison, LabError> {
    let moments = estimate_moments_mn(spec, p, replicates, master_seed, workers)?;
    let empirical_density = moments.variance.scaled(1.0 / spec.vertex_count() as f64);
    let kappa = estimate_kappa_prime(
        spec.dim(),
        p,
        radii,
        replicates,
        master_seed,
        epsilon,
        workers,
    )?;
    let c = prefactor(p.value());
    let predicted = kappa.kappa_prime.scaled(-c);
    let gap = empirical_density.point - predicted.point;
    let combined = (empirical_density.variance_of_point + predicted.variance_of_point).sqrt();
    let gap_in_stderr = if combined > 0.0 {
        gap / combined
    } else if gap == 0.0 {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    };
    Ok(TheoremComparison {
        d: spec.dim(),
        n: spec.radius(),
        p: p.value(),
        replicates,
        seed: master_seed,
        moments,
        empirical_density,
        kappa,
        predicted_limit: predicted.point,
        predicted_stderr: predicted.stderr,
        gap,
        gap_in_stderr,
    })
}
