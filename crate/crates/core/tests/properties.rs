//! Invariants checked on generated inputs against independent oracles.

use nalgebra::DMatrix;
use proptest::prelude::*;
use tspsdp::bound::{round_bound, ROUNDING_SLACK};
use tspsdp::circulant::{circulant_eigenvalues, CirculantCoefficients};
use tspsdp::conic::SolverConfig;
use tspsdp::held_karp::{
    cut_weight, global_min_cut, held_karp_bound, separate, CutPool, HeldKarpConfig, SeparationResult,
};
use tspsdp::instances::{brute_force_tsp, parse_tsplib, random_integral_instance, to_tsplib_full_matrix};
use tspsdp::relaxations::{solve_cvetkovic, solve_new_sdp, spanning_tree_minor, NewSdpOptions};
use tspsdp::{DistanceMatrix, ExactMatrix};

fn symmetric_weights(n: usize, max: u32) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0..=max, n * (n - 1) / 2).prop_map(move |v| {
        let mut w = DMatrix::zeros(n, n);
        let mut it = v.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let x = f64::from(it.next().unwrap());
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
        w
    })
}

/// Adjacency of a Hamiltonian cycle or of two disjoint cycles, each of
/// length at least 3.
fn two_factor(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    let split = prop_oneof![Just(0usize), 3..=n - 3];
    (Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), split).prop_map(move |(perm, split)| {
        let mut x = DMatrix::zeros(n, n);
        let cycles: Vec<&[usize]> = if split == 0 {
            vec![&perm[..]]
        } else {
            vec![&perm[..split], &perm[split..]]
        };
        for c in cycles {
            for k in 0..c.len() {
                let (u, v) = (c[k], c[(k + 1) % c.len()]);
                x[(u, v)] = 1.0;
                x[(v, u)] = 1.0;
            }
        }
        x
    })
}

fn exhaustive_min_cut(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    (1u32..(1 << (n - 1)))
        .map(|mask| {
            let shore: Vec<usize> = (0..n - 1).filter(|&b| mask & (1 << b) != 0).collect();
            cut_weight(w, &shore)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Spanning trees by deletion-contraction on a multigraph edge list.
fn count_trees(n: usize, edges: &[(usize, usize)]) -> i128 {
    fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
    if n == 1 {
        return 1;
    }
    if !connected(n, edges) {
        return 0;
    }
    let Some(pos) = edges.iter().position(|&(a, b)| a != b) else {
        return 0;
    };
    let (a, b) = edges[pos];
    let mut rest = edges.to_vec();
    rest.remove(pos);
    let deleted = count_trees(n, &rest);
    // Contract b into a and relabel n-1 as b.
    let relabel = |v: usize| {
        let v = if v == b { a } else { v };
        if v == n - 1 {
            b
        } else {
            v
        }
    };
    let contracted: Vec<(usize, usize)> = rest
        .iter()
        .map(|&(x, y)| (relabel(x), relabel(y)))
        .filter(|(x, y)| x != y)
        .collect();
    deleted + count_trees(n - 1, &contracted)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_cut_matches_exhaustive(w in (2usize..=9).prop_flat_map(|n| symmetric_weights(n, 6))) {
        let cut = global_min_cut(&w).unwrap();
        prop_assert_eq!(cut.weight, exhaustive_min_cut(&w));
        prop_assert_eq!(cut_weight(&w, &cut.subset), cut.weight);
        prop_assert!(!cut.subset.is_empty() && cut.subset.len() < w.nrows());
    }

    #[test]
    fn canonical_shore_ignores_complement(
        (n, mask) in (3usize..=10).prop_flat_map(|n| (Just(n), 1u32..(1 << n) - 1))
    ) {
        let pool = CutPool::new(n);
        let subset: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let complement: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) == 0).collect();
        let c = pool.canonical(&subset).unwrap();
        prop_assert_eq!(&c, &pool.canonical(&complement).unwrap());
        prop_assert!(2 * c.len() <= n);
        if 2 * c.len() == n {
            prop_assert!(!c.contains(&0));
        }
        let mut pool = pool;
        prop_assert!(pool.insert(&subset).unwrap());
        prop_assert!(!pool.insert(&complement).unwrap());
        prop_assert_eq!(pool.len(), 1);
    }

    #[test]
    fn circulant_eigenvalues_match_numeric(c in (3usize..=12).prop_flat_map(|n| prop::collection::vec(-5i32..=5, n / 2 + 1).prop_map(move |h| (n, h)))) {
        let (n, half) = c;
        let coeffs: Vec<f64> = (0..n).map(|k| f64::from(half[k.min(n - k)])).collect();
        let circ = CirculantCoefficients::new(coeffs).unwrap();
        prop_assert!(circ.is_symmetric());
        let mut analytic: Vec<f64> = circulant_eigenvalues(&circ).iter().map(|z| {
            assert!(z.im.abs() < 1e-9);
            z.re
        }).collect();
        let mut numeric: Vec<f64> = circ.to_matrix().symmetric_eigenvalues().iter().copied().collect();
        analytic.sort_by(f64::total_cmp);
        numeric.sort_by(f64::total_cmp);
        for (a, b) in analytic.iter().zip(&numeric) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn tsplib_full_matrix_round_trips(n in 3usize..=12, seed in any::<u64>()) {
        let d = random_integral_instance(n, seed, 1000);
        let parsed = parse_tsplib(&to_tsplib_full_matrix("t", &d)).unwrap();
        prop_assert_eq!(parsed.distances.matrix(), d.matrix());
    }

    #[test]
    fn integral_rounding_is_a_ceiling(raw in -1e6f64..1e6) {
        let r = round_bound(raw, true);
        prop_assert_eq!(r.fract(), 0.0);
        prop_assert!(r >= raw - ROUNDING_SLACK);
        prop_assert!(r < raw - ROUNDING_SLACK + 1.0);
    }

    #[test]
    fn matrix_tree_count_matches_deletion_contraction(
        (n, mask) in (2usize..=6).prop_flat_map(|n| (Just(n), 0u32..(1 << (n * (n - 1) / 2))))
    ) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &e)| e).collect();
        let adj = ExactMatrix::from_fn(n, n, |i, j| i64::from(edges.contains(&(i.min(j), i.max(j))) && i != j));
        prop_assert_eq!(spanning_tree_minor(&adj).unwrap(), count_trees(n, &edges));
    }

    #[test]
    fn separation_reports_the_cut_it_finds(
        (_, a, b, lambda) in (6usize..=10).prop_flat_map(|n| (Just(n), two_factor(n), two_factor(n), 0.0f64..=1.0))
    ) {
        let x = &a * lambda + &b * (1.0 - lambda);
        let best = exhaustive_min_cut(&x);
        match separate(&x, 1e-6).unwrap() {
            SeparationResult::Violated { subset, weight } => {
                prop_assert!((cut_weight(&x, &subset) - weight).abs() < 1e-12);
                prop_assert!(weight < 2.0 - 1e-6);
                prop_assert!((weight - best).abs() < 1e-9);
            }
            SeparationResult::Satisfied { min_cut_weight } => {
                prop_assert!((min_cut_weight - best).abs() < 1e-9);
                prop_assert!(best >= 2.0 - 1e-6);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bounds_are_ordered_and_below_the_optimum(n in 5usize..=7, seed in any::<u64>()) {
        let d: DistanceMatrix = random_integral_instance(n, seed, 20);
        let cfg = SolverConfig::default();
        let opt = brute_force_tsp(&d).unwrap().length;
        let c = solve_cvetkovic(&d, &cfg).unwrap().bound.raw;
        let s = solve_new_sdp(&d, NewSdpOptions::default(), &cfg).unwrap().bound.raw;
        let h = held_karp_bound(&d, &HeldKarpConfig::default()).unwrap().bound.raw;
        let slack = |v: f64| 1e-6 * (1.0 + v.abs());
        prop_assert!(c <= opt + slack(opt) && s <= opt + slack(opt) && h <= opt + slack(opt));
        prop_assert!(s >= c - slack(c), "scheme {s} below single-matrix {c}");
    }
}
