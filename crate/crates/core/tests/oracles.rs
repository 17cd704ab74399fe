mod common;

use centrality_embed::centrality::{betweenness_with, closeness, BetweennessNorm};
use centrality_embed::dissimilarity::{
    commute_kernel, double_centered_kernel, ectd_delta, shortest_path_delta, DissimilarityMatrix,
    DissimilarityMetric, KernelMatrix,
};
use centrality_embed::embedding::Embedding;
use centrality_embed::graph::{geodesic_distances, Graph};
use centrality_embed::lle::{kkt_residuals, solve_weights};
use centrality_embed::mds::{block_update, default_tie_vector, stress, BlockProblem};
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn geodesics_match_floyd_warshall() {
    let mut r = rng(1);
    for _ in 0..40 {
        let g = small_connected(&mut r, 2, 15);
        let d = geodesic_distances(&g).unwrap();
        let fw = floyd_warshall(&g);
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                assert_eq!(f64::from(d.get(i, j)), fw[(i, j)]);
            }
        }
    }
}

#[test]
fn closeness_and_betweenness_match_path_enumeration() {
    let mut r = rng(2);
    for _ in 0..60 {
        let g = small_connected(&mut r, 2, 8);
        let c = closeness(&g).unwrap();
        for (a, b) in c.values.iter().zip(oracle_closeness(&g)) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        let (global, conventional) = oracle_betweenness(&g);
        let bg = betweenness_with(&g, BetweennessNorm::Global).unwrap();
        let bc = betweenness_with(&g, BetweennessNorm::Conventional).unwrap();
        for i in 0..g.node_count() {
            assert!((bg.values[i] - global[i]).abs() <= 1e-12);
            assert!((bc.values[i] - conventional[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn commute_times_match_first_passage_system() {
    let mut r = rng(3);
    for _ in 0..15 {
        let g = small_connected(&mut r, 2, 20);
        let k = commute_kernel(&g).unwrap();
        let oracle = oracle_commute_times(&g);
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                let want = oracle[(i, j)];
                let got = k.commute_time(i, j);
                assert!((got - want).abs() <= 1e-8 * want.max(1.0), "({i},{j}) {got} vs {want}");
            }
        }
    }
}

#[test]
fn ectd_is_square_root_of_commute_time() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let d = ectd_delta(&g).unwrap();
    // path of two edges: commute time between ends is 2|E| · 2 = 8
    assert!((d.get(0, 2) - 8f64.sqrt()).abs() < 1e-12);
    assert!((d.get(0, 1) - 4f64.sqrt()).abs() < 1e-12);
}

#[test]
fn double_centering_recovers_planted_gram_matrix() {
    let mut r = rng(4);
    for _ in 0..10 {
        let n = r.random_range(3..30);
        let p = r.random_range(1..4);
        let mut pts = random_points(&mut r, n, p);
        center(&mut pts);
        let delta = DMatrix::from_fn(n, n, |i, j| euclidean(&pts[i], &pts[j]));
        let delta = DissimilarityMatrix::new(DissimilarityMetric::ShortestPath, delta).unwrap();
        let h = double_centered_kernel(&delta);
        for i in 0..n {
            for j in 0..n {
                let gram: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| a * b).sum();
                assert!((h.h[(i, j)] - gram).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn commute_kernel_equals_double_centered_ectd() {
    let mut r = rng(5);
    for _ in 0..5 {
        let g = small_connected(&mut r, 3, 60);
        let k = commute_kernel(&g).unwrap();
        let direct = KernelMatrix::from_commute(&k);
        let via_delta = double_centered_kernel(&ectd_delta(&g).unwrap());
        assert!((direct.h - via_delta.h).amax() <= 1e-8);
    }
}

#[test]
fn shortest_path_delta_matches_floyd_warshall() {
    let mut r = rng(6);
    let g = small_connected(&mut r, 10, 20);
    let d = shortest_path_delta(&g).unwrap();
    assert_eq!(d.matrix(), &floyd_warshall(&g));
}

#[test]
fn stress_matches_pair_sum() {
    let mut r = rng(7);
    let n = 12;
    let pts = random_points(&mut r, n, 2);
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 + ((i + j) % 3) as f64 });
    let delta = DissimilarityMatrix::new(DissimilarityMetric::ShortestPath, d.clone()).unwrap();
    let emb = Embedding::from_rows(&pts).unwrap();
    assert!((stress(&emb, &delta) - brute_stress(&pts, &d)).abs() < 1e-12);
}

/// With two fixed neighbors the block surrogate can be minimized over the
/// ball by a fine polar grid; the closed-form update must do at least as well
/// and land at the same point.
#[test]
fn three_node_block_update_matches_grid_search() {
    let mut r = rng(8);
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    for _ in 0..20 {
        let pts = random_points(&mut r, 3, 2);
        let d = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 0.5 + ((i * j + i + j) % 3) as f64 * 0.4 });
        let delta = DissimilarityMatrix::new(DissimilarityMetric::ShortestPath, d).unwrap();
        let state = Embedding::from_rows(&pts).unwrap();
        let lambda = [0.0, 1.0, 10.0][r.random_range(0..3)];
        let radius = r.random_range(0.05..1.5);
        let node = r.random_range(0..3);
        let tie = default_tie_vector(2);
        let problem = BlockProblem {
            node,
            state: &state,
            delta: &delta,
            graph: &g,
            lambda,
            tie: &tie,
        };
        let anchor = state.row(node).to_vec();
        let got = block_update(&problem, radius);
        assert!(got.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius + 1e-12);

        let mut best = (f64::INFINITY, vec![0.0, 0.0]);
        let steps = 1500;
        for a in 0..steps {
            let theta = 2.0 * std::f64::consts::PI * a as f64 / steps as f64;
            for s in 0..=300 {
                let rho = radius * s as f64 / 300.0;
                let x = [rho * theta.cos(), rho * theta.sin()];
                let v = problem.surrogate(&x, &anchor);
                if v < best.0 {
                    best = (v, x.to_vec());
                }
            }
        }
        let got_value = problem.surrogate(&got, &anchor);
        assert!(got_value <= best.0 + 1e-9, "{got_value} > grid {}", best.0);
        let gap = euclidean(&got, &best.1);
        assert!(gap < 0.02 * radius.max(0.1), "update {got:?} vs grid {:?}", best.1);
    }
}

#[test]
fn closed_form_weights_match_barrier_solver() {
    let mut r = rng(9);
    let mut active = 0;
    for _ in 0..40 {
        let qp = random_qp(&mut r);
        let sol = solve_weights(&qp.block, &qp.column, qp.radius).unwrap();
        active += usize::from(sol.active);
        let reference = barrier_qp(&qp.block, &qp.column, qp.radius);
        let f_ref = qp_objective(&qp.block, &qp.column, &reference);
        let f_got = qp_objective(&qp.block, &qp.column, &sol.w);
        assert!((f_got - f_ref).abs() <= 1e-6 * f_ref.abs().max(1.0), "{f_got} vs {f_ref}");
        let res = kkt_residuals(&qp.block, &qp.column, qp.radius, &sol);
        assert!(res.max() <= 1e-8, "{res:?}");
    }
    assert!(active > 10, "only {active} instances had a binding norm constraint");
}
