use std::collections::VecDeque;

use bondperc_core::exact::{exact_mean_mn, exact_prob_gn, ExactAnalysis};
use bondperc_core::lattice::DEFAULT_ENUMERATION_CAP as CAP;
use bondperc_core::{
    count_clusters, enumerate_configs, event_gn, event_pivotal_en, sample_config, BondConfig,
    BoxSpec, PolyP, Probability, RngContract,
};

/// Breadth-first component count over an explicit adjacency list.
fn components_by_bfs(config: &BondConfig) -> usize {
    let spec = config.spec();
    let mut adj = vec![Vec::new(); spec.vertex_count()];
    for (i, b) in spec.bonds().enumerate() {
        if config.is_open(i) {
            adj[b.v1].push(b.v2);
            adj[b.v2].push(b.v1);
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

#[test]
fn union_find_agrees_with_bfs() {
    for (d, n) in [(1, 7), (2, 5), (3, 3), (4, 2)] {
        let spec = BoxSpec::new(d, n).unwrap();
        for (k, p) in [0.2, 0.5, 0.8].into_iter().enumerate() {
            for r in 0..20 {
                let config = sample_config(&spec, Probability::new(p).unwrap(), RngContract::new(k as u64, r));
                assert_eq!(count_clusters(&config).count, components_by_bfs(&config), "d={d} n={n} p={p} r={r}");
            }
        }
    }
}

#[test]
fn sampling_is_a_pure_function_of_seed_and_replicate() {
    let spec = BoxSpec::new(2, 20).unwrap();
    let p = Probability::new(0.5).unwrap();
    let a = sample_config(&spec, p, RngContract::new(9, 3));
    assert_eq!(a, sample_config(&spec, p, RngContract::new(9, 3)));
    assert_ne!(a, sample_config(&spec, p, RngContract::new(9, 4)));
    assert_ne!(a, sample_config(&spec, p, RngContract::new(10, 3)));
}

#[test]
fn line_mean_is_vertices_minus_expected_open_bonds() {
    for n in 1..=4 {
        let spec = BoxSpec::new(1, n).unwrap();
        let k = 2 * n as i64;
        assert_eq!(exact_mean_mn(&spec, CAP).unwrap(), PolyP::from_coeffs([k + 1, -k]));
    }
}

#[test]
fn mean_derivative_is_minus_sum_of_no_bypass_probabilities() {
    for (d, n) in [(1, 3), (2, 1)] {
        let spec = BoxSpec::new(d, n).unwrap();
        let analysis = ExactAnalysis::compute(&spec, CAP).unwrap();
        let per_bond: PolyP = spec.bonds().map(|b| exact_prob_gn(&spec, &b, CAP).unwrap()).sum();
        assert_eq!(per_bond, analysis.sum_prob_gn());
        assert_eq!(analysis.mean.derivative(), -&per_bond);
    }
}

#[test]
fn pivotal_and_no_bypass_agree_on_every_square_configuration() {
    let spec = BoxSpec::new(2, 1).unwrap();
    for config in enumerate_configs(&spec, CAP).unwrap() {
        for b in spec.bonds() {
            assert_eq!(event_pivotal_en(&config, &b), event_gn(&config, &b));
        }
    }
}
