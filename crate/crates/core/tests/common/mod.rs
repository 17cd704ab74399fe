//! Independent reference implementations shared by the integration tests.
//! None of these call into the library's numerical code.

#![allow(dead_code, clippy::needless_range_loop)]

use centrality_embed::embedding::seeded_rng;
use centrality_embed::generate::random_connected;
use centrality_embed::graph::Graph;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed ^ 0x5eed_0000_0000)
}

/// Connected graph with a random size in `min_n..=max_n` and random density.
pub fn small_connected(rng: &mut ChaCha8Rng, min_n: usize, max_n: usize) -> Graph {
    let n = rng.random_range(min_n..=max_n);
    let p = rng.random_range(0.0..0.6);
    random_connected(n, p, rng.random()).unwrap()
}

/// Every shortest path between every ordered pair, by exhaustive DFS over
/// simple paths. `paths[s][t]` holds node sequences from `s` to `t`.
pub fn all_shortest_paths(g: &Graph) -> Vec<Vec<Vec<Vec<usize>>>> {
    let n = g.node_count();
    let mut best: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![Vec::new(); n]; n];
    for s in 0..n {
        let mut stack = vec![s];
        let mut on_path = vec![false; n];
        on_path[s] = true;
        dfs(g, &mut stack, &mut on_path, &mut best[s]);
    }
    best
}

fn dfs(g: &Graph, stack: &mut Vec<usize>, on_path: &mut [bool], best: &mut [Vec<Vec<usize>>]) {
    let v = *stack.last().unwrap();
    let len = stack.len();
    let current = &mut best[v];
    match current.first().map(|p| p.len()) {
        Some(l) if l < len => {}
        Some(l) if l == len => current.push(stack.clone()),
        _ => *current = vec![stack.clone()],
    }
    for &w in g.neighbors(v) {
        if !on_path[w] {
            on_path[w] = true;
            stack.push(w);
            dfs(g, stack, on_path, best);
            stack.pop();
            on_path[w] = false;
        }
    }
}

/// Floyd–Warshall hop distances; `f64::INFINITY` when unreachable.
pub fn floyd_warshall(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if g.has_edge(i, j) {
            1.0
        } else {
            f64::INFINITY
        }
    });
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

pub fn oracle_closeness(g: &Graph) -> Vec<f64> {
    let paths = all_shortest_paths(g);
    (0..g.node_count())
        .map(|s| {
            let total: usize = paths[s].iter().filter(|p| !p.is_empty()).map(|p| p[0].len() - 1).sum();
            1.0 / total as f64
        })
        .collect()
}

/// (global, conventional) betweenness from explicit path lists, unordered pairs.
pub fn oracle_betweenness(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let paths = all_shortest_paths(g);
    let mut counts = vec![0.0; n];
    let mut fractions = vec![0.0; n];
    for s in 0..n {
        for t in (s + 1)..n {
            let list = &paths[s][t];
            let sigma = list.len() as f64;
            for p in list {
                for &v in &p[1..p.len() - 1] {
                    counts[v] += 1.0;
                    fractions[v] += 1.0 / sigma;
                }
            }
        }
    }
    let total: f64 = counts.iter().sum();
    let global = counts
        .iter()
        .map(|c| if total > 0.0 { c / total } else { 0.0 })
        .collect();
    let pairs = if n >= 3 { ((n - 1) * (n - 2)) as f64 / 2.0 } else { 1.0 };
    let conventional = fractions.iter().map(|f| if n >= 3 { f / pairs } else { 0.0 }).collect();
    (global, conventional)
}

/// Mean first-passage times to `target` from every node of a random walk
/// with transition matrix `D⁻¹A`: solve `(I - P_TT) m = 𝟙` on the other nodes.
pub fn hitting_times(g: &Graph, target: usize) -> Vec<f64> {
    let n = g.node_count();
    let others: Vec<usize> = (0..n).filter(|&v| v != target).collect();
    let m = others.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    for (r, &i) in others.iter().enumerate() {
        let deg = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            if j != target {
                let c = others.binary_search(&j).unwrap();
                a[(r, c)] -= 1.0 / deg;
            }
        }
    }
    let sol = a.lu().solve(&DVector::from_element(m, 1.0)).expect("walk is absorbing");
    let mut out = vec![0.0; n];
    for (r, &i) in others.iter().enumerate() {
        out[i] = sol[r];
    }
    out
}

/// Commute times `m(j|i) + m(i|j)` for all pairs.
pub fn oracle_commute_times(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let hits: Vec<Vec<f64>> = (0..n).map(|t| hitting_times(g, t)).collect();
    DMatrix::from_fn(n, n, |i, j| hits[j][i] + hits[i][j])
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn center(points: &mut [Vec<f64>]) {
    let n = points.len() as f64;
    let p = points[0].len();
    for k in 0..p {
        let mean = points.iter().map(|r| r[k]).sum::<f64>() / n;
        points.iter_mut().for_each(|r| r[k] -= mean);
    }
}

/// Random constrained reconstruction instance: positive definite `H`, `h`,
/// and a radius between the smallest attainable norm and 1.3 times the norm
/// of the equality-only minimizer, so most instances bind.
pub struct QpInstance {
    pub block: DMatrix<f64>,
    pub column: DVector<f64>,
    pub radius: f64,
}

pub fn random_qp(rng: &mut ChaCha8Rng) -> QpInstance {
    let k = rng.random_range(2..=6);
    let rows = k + rng.random_range(0..4);
    let a = DMatrix::from_fn(rows, k, |_, _| rng.random_range(-1.0..1.0));
    let block = a.transpose() * &a + DMatrix::identity(k, k) * 0.05;
    let column = DVector::from_fn(k, |_, _| rng.random_range(-2.0..2.0));
    let (q_min, q_eq) = reference_norms(&block, &column);
    let s: f64 = rng.random_range(0.05..1.3);
    let radius = (q_min + s * (q_eq - q_min)).sqrt();
    QpInstance { block, column, radius }
}

/// Smallest `wᵀHw` over `𝟙ᵀw = 1`, and `wᵀHw` at the equality-only minimizer
/// of `wᵀHw - 2hᵀw`, both from the bordered KKT system solved by LU.
pub fn reference_norms(block: &DMatrix<f64>, column: &DVector<f64>) -> (f64, f64) {
    let k = block.nrows();
    let solve = |rhs: &DVector<f64>| {
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(&(block * 2.0));
        for i in 0..k {
            m[(i, k)] = 1.0;
            m[(k, i)] = 1.0;
        }
        let mut r = DVector::zeros(k + 1);
        r.rows_mut(0, k).copy_from(rhs);
        r[k] = 1.0;
        let sol = m.lu().solve(&r).unwrap();
        sol.rows(0, k).into_owned()
    };
    let w_min = solve(&DVector::zeros(k));
    let w_eq = solve(&(column * 2.0));
    (w_min.dot(&(block * &w_min)), w_eq.dot(&(block * &w_eq)))
}

pub fn qp_objective(block: &DMatrix<f64>, column: &DVector<f64>, w: &DVector<f64>) -> f64 {
    w.dot(&(block * w)) - 2.0 * column.dot(w)
}

/// Log-barrier Newton method for `min wᵀHw - 2hᵀw` s.t. `𝟙ᵀw = 1`,
/// `wᵀHw <= f²`. The equality is removed by the parametrization
/// `w = w₀ + Z y`; the barrier weight grows until the duality gap bound
/// `1/t` is below `1e-13`.
pub fn barrier_qp(block: &DMatrix<f64>, column: &DVector<f64>, radius: f64) -> DVector<f64> {
    let k = block.nrows();
    let bound = radius * radius;
    // Z: columns e_i - e_{k-1}, a basis of {v : 𝟙ᵀv = 0}.
    let z = DMatrix::from_fn(k, k - 1, |r, c| {
        if r == c {
            1.0
        } else if r == k - 1 {
            -1.0
        } else {
            0.0
        }
    });
    // Strictly feasible start: the minimum-norm point.
    let (q_min, _) = reference_norms(block, column);
    assert!(q_min < bound, "instance must be strictly feasible");
    let w0 = {
        let ones = DVector::from_element(k, 1.0);
        let x = block.clone().lu().solve(&ones).unwrap();
        &x / x.sum()
    };
    let hz = block * &z;
    let zhz = z.transpose() * &hz;
    let mut y = DVector::zeros(k - 1);
    let w_of = |y: &DVector<f64>| &w0 + &z * y;
    let phi = |y: &DVector<f64>, t: f64| -> f64 {
        let w = w_of(y);
        let slack = bound - w.dot(&(block * &w));
        if slack <= 0.0 {
            f64::INFINITY
        } else {
            t * qp_objective(block, column, &w) - slack.ln()
        }
    };
    let mut t = 1.0;
    while 1.0 / t > 1e-13 {
        for _ in 0..200 {
            let w = w_of(&y);
            let hw = block * &w;
            let slack = bound - w.dot(&hw);
            let g_obj = (&hw - column) * 2.0;
            let g_con = &hw * 2.0;
            let grad = z.transpose() * (&g_obj * t + &g_con / slack);
            let zg = z.transpose() * &g_con;
            let hess = &zhz * (2.0 * t + 2.0 / slack) + &zg * zg.transpose() / (slack * slack);
            let step = match hess.clone().cholesky() {
                Some(c) => -c.solve(&grad),
                None => -hess.lu().solve(&grad).unwrap(),
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let mut s = 1.0;
            let f0 = phi(&y, t);
            while phi(&(&y + &step * s), t) > f0 - 0.25 * s * decrement {
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
            y += &step * s;
        }
        t *= 8.0;
    }
    w_of(&y)
}

/// Sum over unordered pairs of `(‖x_i - x_j‖ - δ_ij)²`, written out directly.
pub fn brute_stress(rows: &[Vec<f64>], delta: &DMatrix<f64>) -> f64 {
    let n = rows.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += (euclidean(&rows[i], &rows[j]) - delta[(i, j)]).powi(2);
        }
    }
    s
}
