//! Centrality-constrained locally linear embedding.
//!
//! Stage one reconstructs every node from its `n`-hop neighborhood. The
//! weights minimize `wᵀH_i w - 2h_iᵀw` subject to `𝟙ᵀw = 1` and
//! `wᵀH_i w <= f(c_i)²`, where `H` is an inner-product kernel over the nodes.
//! The problem has a closed-form KKT solution.
//!
//! Stage two places each node on its sphere `‖x_i‖ = f(c_i)` in the direction
//! of its weighted neighbor average, sweeping nodes Gauss–Seidel style.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dissimilarity::{double_centered_kernel, ridge_submatrix, DissimilarityMatrix, KernelMatrix};
use crate::embedding::{
    gaussian_init, norm, Embedding, InitScaling, NoObserver, Solution, SolveTrace, SweepObserver,
    Tolerance, TraceRecord,
};
use crate::error::{Error, Result};
use crate::graph::{n_hop_neighborhood, Graph};
use crate::mds::{smoothness_term, stress};

/// Slack allowed on `γ* >= 0` when picking the root for `μ*`.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Primal/dual solution of one node's weight problem.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub w: DVector<f64>,
    /// Multiplier of the norm constraint.
    pub gamma: f64,
    /// Multiplier of the sum-to-one constraint.
    pub mu: f64,
    /// Whether the norm constraint binds.
    pub active: bool,
}

/// Solves the constrained reconstruction problem for one node.
///
/// `block` must be positive definite; it is factored once with Cholesky and
/// reused for every `H_i⁻¹` product. The equality-only minimizer is tried first.
/// If it violates the norm bound, the constraint is active. `μ*` is then the
/// root of its quadratic that gives `γ* >= 0`.
pub fn solve_weights(block: &DMatrix<f64>, column: &DVector<f64>, radius: f64) -> Result<KktSolution> {
    let k = block.nrows();
    if k == 0 || block.ncols() != k || column.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "block {}x{} with column of length {}",
            block.nrows(),
            block.ncols(),
            column.len()
        )));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be finite and >= 0, got {radius}")));
    }
    let chol = block
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{k}x{k} neighborhood block")))?;

    if k == 1 {
        let w = DVector::from_element(1, 1.0);
        let mu = 2.0 * (column[0] - block[(0, 0)]);
        return Ok(KktSolution {
            w,
            gamma: 0.0,
            mu,
            active: false,
        });
    }

    let ones = DVector::from_element(k, 1.0);
    let inv_h = chol.solve(column);
    let inv_1 = chol.solve(&ones);
    let a = inv_1.sum();
    let b = inv_h.sum();
    let c = column.dot(&inv_h);
    if !(a > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("1ᵀH⁻¹1 = {a:e}")));
    }
    let bound = radius * radius;

    // Both branches subtract nearly equal vectors when H_i is ill-conditioned,
    // so 𝟙ᵀw drifts from 1. Projecting back along H⁻¹𝟙 (the H-metric
    // projection onto the constraint) restores it at negligible cost to wᵀHw.
    let resum = |mut w: DVector<f64>| {
        let drift = 1.0 - w.sum();
        w.axpy(drift / a, &inv_1, 1.0);
        w
    };

    let shift = (b - 1.0) / a;
    let w_eq = resum(&inv_h - &inv_1 * shift);
    let q_eq = w_eq.dot(&(block * &w_eq));
    if q_eq <= bound {
        return Ok(KktSolution {
            w: w_eq,
            gamma: 0.0,
            mu: 2.0 * shift,
            active: false,
        });
    }

    // With the norm constraint binding, (1 + γ)² = (a c - b²) / (a f² - 1).
    let excess = a * bound - 1.0;
    let spread = (a * c - b * b).max(0.0);
    let discriminant = spread / (a * a * excess);
    if !(excess > 0.0) || !discriminant.is_finite() || discriminant < 0.0 {
        return Err(Error::InconsistentKkt {
            discriminant: if excess > 0.0 { discriminant } else { -spread / (a * a) },
            reason: "radius is below the smallest norm any sum-to-one weighting attains",
        });
    }
    let root = discriminant.sqrt();
    let candidates = [2.0 * b / a + 2.0 * root, 2.0 * b / a - 2.0 * root];
    let admissible: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&mu| (mu, b - 0.5 * mu * a - 1.0))
        .filter(|&(_, gamma)| gamma >= -ROOT_TOLERANCE)
        .collect();
    let (mu, gamma) = match admissible.as_slice() {
        [one] => *one,
        [] => {
            return Err(Error::InconsistentKkt {
                discriminant,
                reason: "no root of the multiplier quadratic gives a nonnegative γ",
            })
        }
        _ => {
            return Err(Error::InconsistentKkt {
                discriminant,
                reason: "both roots of the multiplier quadratic give a nonnegative γ",
            })
        }
    };
    let gamma = gamma.max(0.0);
    let w = resum((&inv_h - &inv_1 * (0.5 * mu)) / (1.0 + gamma));
    Ok(KktSolution {
        w,
        gamma,
        mu,
        active: true,
    })
}

/// Weights minimizing `wᵀH_i w` on `𝟙ᵀw = 1`; the closest the norm bound can
/// get to being satisfied when it is unattainable.
pub fn minimum_norm_weights(block: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = block.nrows();
    let chol = block
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{k}x{k} neighborhood block")))?;
    let inv_1 = chol.solve(&DVector::from_element(k, 1.0));
    let a = inv_1.sum();
    Ok(inv_1 / a)
}

/// Relative violations of the five optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub norm_bound: f64,
    pub sum_to_one: f64,
    pub dual_sign: f64,
    pub complementary: f64,
    pub stationarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        [
            self.norm_bound,
            self.sum_to_one,
            self.dual_sign,
            self.complementary,
            self.stationarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(
    block: &DMatrix<f64>,
    column: &DVector<f64>,
    radius: f64,
    sol: &KktSolution,
) -> KktResiduals {
    let bound = radius * radius;
    let hw = block * &sol.w;
    let q = sol.w.dot(&hw);
    let scale = bound.max(q).max(f64::MIN_POSITIVE);
    let k = sol.w.len();
    let grad = &hw * (1.0 + sol.gamma) + DVector::from_element(k, 0.5 * sol.mu) - column;
    let grad_scale = column
        .norm()
        .max((1.0 + sol.gamma) * hw.norm())
        .max(0.5 * sol.mu.abs() * (k as f64).sqrt())
        .max(f64::MIN_POSITIVE);
    KktResiduals {
        norm_bound: (q - bound).max(0.0) / scale,
        sum_to_one: (sol.w.sum() - 1.0).abs(),
        dual_sign: (-sol.gamma).max(0.0),
        complementary: (sol.gamma * (q - bound)).abs() / ((1.0 + sol.gamma) * scale),
        stationarity: grad.norm() / grad_scale,
    }
}

/// Sparse row-stochastic reconstruction weights; row `i` lives on `N_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<WeightRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub columns: Vec<usize>,
    pub values: Vec<f64>,
}

impl WeightMatrix {
    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &WeightRow {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.columns
            .binary_search(&j)
            .map(|k| row.values[k])
            .unwrap_or(0.0)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].values.iter().sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.columns.len()).sum()
    }

    /// CSV triples `i,j,w_ij` with node labels.
    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("i,j,w_ij\n");
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, w) in row.columns.iter().zip(&row.values) {
                out.push_str(&format!("{},{},{}\n", g.label(i), g.label(j), w));
            }
        }
        out
    }
}

/// What to do when a node's radius is too small for any sum-to-one weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfeasiblePolicy {
    /// Fail the whole weight stage.
    Error,
    /// Use [`minimum_norm_weights`] for that row.
    #[default]
    MinimumNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LleConfig {
    /// Neighborhood radius in hops, `n >= 1`.
    pub hops: usize,
    /// Diagonal ridge; `None` picks a scale-aware default per block.
    pub ridge: Option<f64>,
    pub tolerance: Tolerance,
    pub max_outer_iters: usize,
    pub seed: u64,
    pub dim: usize,
    /// Record raw stress per sweep (quadratic cost) when dissimilarities are given.
    pub track_stress: bool,
    pub infeasible: InfeasiblePolicy,
}

impl Default for LleConfig {
    fn default() -> Self {
        LleConfig {
            hops: 1,
            ridge: None,
            tolerance: Tolerance::default(),
            max_outer_iters: 100,
            seed: 0,
            dim: 2,
            track_stress: false,
            infeasible: InfeasiblePolicy::MinimumNorm,
        }
    }
}

impl LleConfig {
    fn validate(&self) -> Result<()> {
        if self.hops == 0 {
            return Err(Error::InvalidParameter("hop count must be >= 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        if let Some(s) = self.ridge {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {s}")));
            }
        }
        self.tolerance.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightDiagnostics {
    pub active_rows: usize,
    pub inactive_rows: usize,
    /// Rows whose norm bound was unattainable and got minimum-norm weights.
    pub fallback_rows: Vec<usize>,
    pub max_ridge: f64,
}

enum RowOutcome {
    Solved(KktSolution),
    Fallback(DVector<f64>),
}

/// Solves every node's weight problem over its `hops`-hop neighborhood.
pub fn build_weight_matrix(
    g: &Graph,
    kernel: &KernelMatrix,
    radii: &[f64],
    config: &LleConfig,
) -> Result<(WeightMatrix, WeightDiagnostics)> {
    config.validate()?;
    let n = g.node_count();
    if kernel.node_count() != n || radii.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} nodes, kernel {}, radii {}",
            kernel.node_count(),
            radii.len()
        )));
    }
    let rows: Vec<Result<(Vec<usize>, RowOutcome, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nbhd = n_hop_neighborhood(g, i, config.hops);
            if nbhd.is_empty() {
                return Err(Error::EmptyNeighborhood {
                    node: g.label(i).to_string(),
                    hops: config.hops,
                });
            }
            let ridged = ridge_submatrix(kernel, &nbhd, config.ridge)?;
            let outcome = match solve_weights(&ridged.block, &ridged.column, radii[i]) {
                Ok(sol) => RowOutcome::Solved(sol),
                Err(Error::InconsistentKkt { .. }) if config.infeasible == InfeasiblePolicy::MinimumNorm => {
                    RowOutcome::Fallback(minimum_norm_weights(&ridged.block)?)
                }
                Err(e) => return Err(e),
            };
            Ok((nbhd.members, outcome, ridged.sigma))
        })
        .collect();

    let mut diagnostics = WeightDiagnostics::default();
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.into_iter().enumerate() {
        let (columns, outcome, sigma) = row?;
        diagnostics.max_ridge = diagnostics.max_ridge.max(sigma);
        let values = match outcome {
            RowOutcome::Solved(sol) => {
                if sol.active {
                    diagnostics.active_rows += 1;
                } else {
                    diagnostics.inactive_rows += 1;
                }
                sol.w
            }
            RowOutcome::Fallback(w) => {
                diagnostics.fallback_rows.push(i);
                w
            }
        };
        out.push(WeightRow {
            columns,
            values: values.iter().copied().collect(),
        });
    }
    if !diagnostics.fallback_rows.is_empty() {
        log::warn!(
            "{} node(s) have radii below their attainable reconstruction norm; used minimum-norm weights",
            diagnostics.fallback_rows.len()
        );
    }
    Ok((WeightMatrix { rows: out }, diagnostics))
}

/// New position of node `i`: the weighted neighbor average `v` rescaled onto the
/// sphere of radius `radius`, or the current position when `v = 0`.
pub fn embedding_update(i: usize, state: &Embedding, weights: &WeightMatrix, radius: f64) -> Vec<f64> {
    let p = state.dim();
    let mut v = vec![0.0; p];
    let row = weights.row(i);
    for (&j, &w) in row.columns.iter().zip(&row.values) {
        for (acc, x) in v.iter_mut().zip(state.row(j)) {
            *acc += w * x;
        }
    }
    let len = norm(&v);
    if len > 0.0 {
        let s = radius / len;
        v.iter_mut().for_each(|c| *c *= s);
        v
    } else {
        state.row(i).to_vec()
    }
}

/// `Σ_i ‖x_i - Σ_j w_ij x_j‖²`.
pub fn reconstruction_error(x: &Embedding, weights: &WeightMatrix) -> f64 {
    let p = x.dim();
    let mut total = 0.0;
    let mut v = vec![0.0; p];
    for i in 0..x.node_count() {
        v.copy_from_slice(x.row(i));
        let row = weights.row(i);
        for (&j, &w) in row.columns.iter().zip(&row.values) {
            for (acc, xj) in v.iter_mut().zip(x.row(j)) {
                *acc -= w * xj;
            }
        }
        total += v.iter().map(|c| c * c).sum::<f64>();
    }
    total
}

/// Where the inner-product kernel comes from.
#[derive(Debug, Clone, Copy)]
pub enum KernelSource<'a> {
    /// Double-center the squared dissimilarities.
    Dissimilarity(&'a DissimilarityMatrix),
    /// Use a ready kernel such as `Ω L†`.
    Kernel(&'a KernelMatrix),
}

#[derive(Debug, Clone)]
pub struct LleSolution {
    pub solution: Solution,
    pub weights: WeightMatrix,
    pub diagnostics: WeightDiagnostics,
    /// Wall time of the weight stage, in seconds.
    pub weight_seconds: f64,
}

pub fn solve_cclle(g: &Graph, source: KernelSource<'_>, radii: &[f64], config: &LleConfig) -> Result<LleSolution> {
    solve_cclle_observed(g, source, radii, config, &mut NoObserver)
}

pub fn solve_cclle_observed(
    g: &Graph,
    source: KernelSource<'_>,
    radii: &[f64],
    config: &LleConfig,
    observer: &mut dyn SweepObserver,
) -> Result<LleSolution> {
    config.validate()?;
    if let Some(bad) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(format!("radius {bad} is not finite and >= 0")));
    }
    let started = Instant::now();
    let (weights, diagnostics, delta) = match source {
        KernelSource::Dissimilarity(delta) => {
            if delta.node_count() != g.node_count() {
                return Err(Error::DimensionMismatch(format!(
                    "graph has {} nodes, dissimilarities {}",
                    g.node_count(),
                    delta.node_count()
                )));
            }
            let kernel = double_centered_kernel(delta);
            let (w, d) = build_weight_matrix(g, &kernel, radii, config)?;
            (w, d, Some(delta))
        }
        KernelSource::Kernel(kernel) => {
            let (w, d) = build_weight_matrix(g, kernel, radii, config)?;
            (w, d, None)
        }
    };
    let weight_seconds = started.elapsed().as_secs_f64();
    let solution = sweep_embedding(g, &weights, radii, config, delta, observer)?;
    Ok(LleSolution {
        solution,
        weights,
        diagnostics,
        weight_seconds,
    })
}

/// Second stage alone: sphere-projected sweeps for fixed weights.
pub fn sweep_embedding(
    g: &Graph,
    weights: &WeightMatrix,
    radii: &[f64],
    config: &LleConfig,
    delta: Option<&DissimilarityMatrix>,
    observer: &mut dyn SweepObserver,
) -> Result<Solution> {
    config.validate()?;
    let n = g.node_count();
    if weights.node_count() != n || radii.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} nodes, weights {}, radii {}",
            weights.node_count(),
            radii.len()
        )));
    }
    let eps = config.tolerance.resolve(n, config.dim);
    let mut x = gaussian_init(radii, config.dim, config.seed, InitScaling::OntoSphere);
    let record = |x: &Embedding, iteration: usize, step: f64| TraceRecord {
        iteration,
        stress: match (config.track_stress, delta) {
            (true, Some(d)) => Some(stress(x, d)),
            _ => None,
        },
        objective: reconstruction_error(x, weights),
        smoothness: smoothness_term(x, g),
        step,
    };
    let mut trace = SolveTrace {
        initial: Some(record(&x, 0, 0.0)),
        ..SolveTrace::default()
    };

    for iteration in 1..=config.max_outer_iters {
        let started = Instant::now();
        let previous = x.clone();
        for i in 0..n {
            let updated = embedding_update(i, &x, weights, radii[i]);
            x.row_mut(i).copy_from_slice(&updated);
        }
        trace.sweep_seconds.push(started.elapsed().as_secs_f64());
        if !x.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        let step = x.frobenius_distance(&previous);
        trace.records.push(record(&x, iteration, step));
        observer.on_sweep(iteration, &x);
        if step <= eps {
            trace.converged = true;
            break;
        }
    }
    Ok(Solution {
        embedding: x.centered(),
        raw: x,
        trace,
    })
}
