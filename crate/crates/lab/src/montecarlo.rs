//! Replicated estimates of the moments of `M_n`, the variance density, the
//! cluster density via inverse cluster sizes, and the CLT check.

use bondperc_core::lattice::derive_seed;
use bondperc_core::{BondConfig, BondSampler, BoxSpec, ClusterCounter, Probability, RngContract};
use serde::Serialize;

use crate::error::{invalid, LabError};
use crate::parallel::Workers;
use crate::stats::{ks_distance_to_normal, EstimateSummary};

/// Most replicates a single experiment may request; every sampled value
/// is kept in memory.
pub const MAX_REPLICATES: u64 = 10_000_000;

/// Seed domains, mixed into the master seed per experiment.
pub mod domain {
    pub const CLUSTER_COUNT: u64 = 1;
    pub const NO_BYPASS: u64 = 2;
    pub const INVERSE_CLUSTER: u64 = 3;
    pub const TWO_ARM: u64 = 4;
}

pub(crate) fn check_replicates(replicates: u64, min: u64) -> Result<(), LabError> {
    if replicates < min {
        return Err(invalid("replicates", format!("must be at least {min}, got {replicates}")));
    }
    if replicates > MAX_REPLICATES {
        return Err(invalid(
            "replicates",
            format!("at most {MAX_REPLICATES} per experiment, got {replicates}"),
        ));
    }
    Ok(())
}

/// Per-worker sampling scratch for one box.
pub(crate) struct Sampler {
    pub config: BondConfig,
    sampler: BondSampler,
    seed: u64,
}

impl Sampler {
    pub fn new(spec: &BoxSpec, p: Probability, seed: u64) -> Self {
        Self {
            config: BondConfig::all_closed(spec),
            sampler: BondSampler::new(p),
            seed,
        }
    }

    /// Fills `config` with replicate `i`'s configuration.
    pub fn draw(&mut self, i: u64) -> &BondConfig {
        let mut rng = RngContract::new(self.seed, i).rng();
        self.sampler.fill(&mut self.config, &mut rng);
        &self.config
    }
}

/// `M_n` for replicates `0..replicates`, in replicate order.
pub fn sample_mn(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<Vec<f64>, LabError> {
    check_replicates(replicates, 1)?;
    let seed = derive_seed(master_seed, domain::CLUSTER_COUNT);
    Ok(workers.map_replicates(
        replicates,
        || (Sampler::new(spec, p, seed), ClusterCounter::new()),
        |(sampler, counter), i| counter.count(sampler.draw(i)) as f64,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: EstimateSummary,
    pub variance: EstimateSummary,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Sample mean and Bessel-corrected variance of `M_n`.
pub fn estimate_moments_mn(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<Moments, LabError> {
    check_replicates(replicates, 2)?;
    let samples = sample_mn(spec, p, replicates, master_seed, workers)?;
    Ok(Moments {
        mean: EstimateSummary::mean_of(&samples, master_seed),
        variance: EstimateSummary::variance_of(&samples, master_seed),
        samples,
    })
}

/// `Var(M_n) / (2n+1)^d`.
pub fn variance_density(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<EstimateSummary, LabError> {
    let m = estimate_moments_mn(spec, p, replicates, master_seed, workers)?;
    Ok(m.variance.scaled(1.0 / spec.vertex_count() as f64))
}

/// Cluster density as the average of `(2n+1)^-d sum_v 1/|C(v)|`.
///
/// Each replicate also checks that the vertices in clusters of size `s`
/// number a multiple of `s`, and that `sum_v 1/|C(v)|` equals `M_n`.
pub fn estimate_kappa_inverse_cluster(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    workers: &Workers,
) -> Result<EstimateSummary, LabError> {
    check_replicates(replicates, 1)?;
    let seed = derive_seed(master_seed, domain::INVERSE_CLUSTER);
    let volume = spec.vertex_count() as f64;
    let per_replicate = workers.map_replicates(
        replicates,
        || (Sampler::new(spec, p, seed), ClusterCounter::new()),
        |(sampler, counter), i| -> Result<f64, LabError> {
            let labeling = counter.labeling(sampler.draw(i));
            let mut inverse_sum = 0.0;
            let mut by_size = std::collections::BTreeMap::<u32, u64>::new();
            for v in 0..spec.vertex_count() {
                let s = labeling.size_of_vertex(v);
                inverse_sum += 1.0 / f64::from(s);
                *by_size.entry(s).or_default() += 1;
            }
            let mut clusters = 0u64;
            for (&s, &vertices) in &by_size {
                if vertices % u64::from(s) != 0 {
                    return Err(LabError::SelfCheck {
                        replicate: i,
                        detail: format!("{vertices} vertices lie in clusters of size {s}"),
                    });
                }
                clusters += vertices / u64::from(s);
            }
            let m = labeling.count as f64;
            if clusters != labeling.count as u64 || (inverse_sum - m).abs() > 1e-9 * volume {
                return Err(LabError::SelfCheck {
                    replicate: i,
                    detail: format!("sum of inverse sizes {inverse_sum} but {m} clusters"),
                });
            }
            Ok(inverse_sum / volume)
        },
    );
    let values = per_replicate.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(EstimateSummary::mean_of(&values, master_seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltResult {
    pub ks_distance: f64,
    pub threshold: f64,
    pub pass: bool,
    pub replicates: u64,
}

/// Kolmogorov-Smirnov distance of standardised `M_n` samples to the
/// standard normal; passes when below `threshold`.
pub fn clt_check(
    spec: &BoxSpec,
    p: Probability,
    replicates: u64,
    master_seed: u64,
    threshold: f64,
    workers: &Workers,
) -> Result<CltResult, LabError> {
    check_replicates(replicates, 500)?;
    let samples = sample_mn(spec, p, replicates, master_seed, workers)?;
    let ks_distance = ks_distance_to_normal(&samples).ok_or_else(|| {
        LabError::DegenerateSample(format!("M_n is constant over {replicates} replicates"))
    })?;
    Ok(CltResult {
        ks_distance,
        threshold,
        pass: ks_distance < threshold,
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    #[test]
    fn extremes_are_exact() {
        let w = Workers::new(2).unwrap();
        let spec = BoxSpec::new(2, 3).unwrap();
        let closed = estimate_moments_mn(&spec, prob(0.0), 20, 1, &w).unwrap();
        assert_eq!(closed.mean.point, 49.0);
        assert_eq!(closed.variance.point, 0.0);
        let open = estimate_moments_mn(&spec, prob(1.0), 20, 1, &w).unwrap();
        assert_eq!(open.mean.point, 1.0);
        assert_eq!(open.variance.point, 0.0);
        assert_eq!(variance_density(&spec, prob(0.0), 5, 1, &w).unwrap().point, 0.0);
    }

    #[test]
    fn line_matches_binomial() {
        let w = Workers::new(1).unwrap();
        let n = 50;
        let spec = BoxSpec::new(1, n).unwrap();
        let p = 0.3;
        let m = estimate_moments_mn(&spec, prob(p), 2000, 11, &w).unwrap();
        let v = 2.0 * n as f64 + 1.0;
        assert!(m.mean.scaled(1.0 / v).z_score(1.0 - p + p / v).abs() < 4.0);
        let density = m.variance.scaled(1.0 / v);
        assert!(density.z_score(p * (1.0 - p) * 2.0 * n as f64 / v).abs() < 4.0);
    }

    #[test]
    fn inverse_cluster_extremes_and_identity() {
        let w = Workers::new(2).unwrap();
        let spec = BoxSpec::new(2, 4).unwrap();
        assert_eq!(estimate_kappa_inverse_cluster(&spec, prob(0.0), 3, 0, &w).unwrap().point, 1.0);
        let all_open = estimate_kappa_inverse_cluster(&spec, prob(1.0), 3, 0, &w).unwrap();
        assert!((all_open.point - 1.0 / 81.0).abs() < 1e-15);
        let k = estimate_kappa_inverse_cluster(&spec, prob(0.5), 200, 0, &w).unwrap();
        assert!(k.point > 0.0 && k.point < 1.0);
    }

    #[test]
    fn clt_rejects_degenerate_and_small_samples() {
        let w = Workers::new(1).unwrap();
        let spec = BoxSpec::new(1, 5).unwrap();
        assert!(matches!(
            clt_check(&spec, prob(0.0), 500, 0, 0.05, &w),
            Err(LabError::DegenerateSample(_))
        ));
        assert!(matches!(
            clt_check(&spec, prob(0.5), 10, 0, 0.05, &w),
            Err(LabError::InvalidArgument { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_samples() {
        let spec = BoxSpec::new(2, 8).unwrap();
        let a = sample_mn(&spec, prob(0.4), 300, 9, &Workers::new(1).unwrap()).unwrap();
        let b = sample_mn(&spec, prob(0.4), 300, 9, &Workers::new(5).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(check_replicates(MAX_REPLICATES + 1, 1).is_err());
    }
}
