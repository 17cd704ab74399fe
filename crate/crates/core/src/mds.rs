//! Centrality-constrained stress minimization.
//!
//! Each node's coordinates must lie in a ball of radius `f(c_i)` around the
//! origin. The solver sweeps the nodes Gauss–Seidel style. For node `i` the
//! non-smooth part `-Σ δ_ij ‖x - x_j‖` of its block cost is linearized at the
//! node's previous position, which turns the block problem into an isotropic
//! quadratic whose constrained minimizer is a scaled average projected onto
//! the ball. The linearization touches the block cost at the previous position
//! and lies above it everywhere else, so the penalized stress never increases
//! from one sweep to the next. An optional Laplacian penalty `λ Tr(XᵀLX)` pulls
//! adjacent nodes together.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::embedding::{
    gaussian_init, norm, seeded_rng, Embedding, InitScaling, NoObserver, Solution, SolveTrace,
    SweepObserver, Tolerance, TraceRecord,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::dissimilarity::DissimilarityMatrix;

/// Below this length two points are treated as coincident.
pub const COINCIDENT_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Ascending,
    /// Fresh seeded permutation every sweep.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsConfig {
    pub dim: usize,
    /// Weight of the smoothness penalty, `λ >= 0`.
    pub lambda: f64,
    pub tolerance: Tolerance,
    pub max_outer_iters: usize,
    pub seed: u64,
    /// Subgradient used when a node coincides with another; defaults to the
    /// normalized all-ones vector.
    pub tie_vector: Option<Vec<f64>>,
    pub sweep_order: SweepOrder,
}

impl Default for MdsConfig {
    fn default() -> Self {
        MdsConfig {
            dim: 2,
            lambda: 0.0,
            tolerance: Tolerance::default(),
            max_outer_iters: 500,
            seed: 0,
            tie_vector: None,
            sweep_order: SweepOrder::Ascending,
        }
    }
}

/// `(1/√p) · 𝟙`.
pub fn default_tie_vector(p: usize) -> Vec<f64> {
    vec![1.0 / (p as f64).sqrt(); p]
}

/// Raw stress `½ Σ_i Σ_j (‖x_i - x_j‖ - δ_ij)²`.
pub fn stress(x: &Embedding, delta: &DissimilarityMatrix) -> f64 {
    let n = x.node_count();
    let mut total = 0.0;
    for i in 0..n {
        let row = delta.row(i);
        for j in (i + 1)..n {
            total += (x.distance(i, j) - row[j]).powi(2);
        }
    }
    // each unordered pair appears twice in the double sum, halved by the ½
    total
}

/// `Tr(XᵀLX) = ½ Σ_ij a_ij ‖x_i - x_j‖²`.
pub fn smoothness_term(x: &Embedding, g: &Graph) -> f64 {
    g.edges().map(|(i, j)| x.distance(i, j).powi(2)).sum()
}

/// Stress plus `λ · Tr(XᵀLX)`.
pub fn relaxed_objective(x: &Embedding, delta: &DissimilarityMatrix, g: &Graph, lambda: f64) -> f64 {
    let s = stress(x, delta);
    if lambda > 0.0 {
        s + lambda * smoothness_term(x, g)
    } else {
        s
    }
}

/// An element of the subdifferential of `‖x - x_j‖` at `x`: the unit direction
/// away from `x_j`, or `tie` when the points coincide.
pub fn subgradient_term(x: &[f64], xj: &[f64], tie: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = x.iter().zip(xj).map(|(a, b)| a - b).collect();
    let len = norm(&diff);
    if len > COINCIDENT_TOLERANCE {
        diff.into_iter().map(|d| d / len).collect()
    } else {
        tie.to_vec()
    }
}

/// The per-block problem for node `i` given the current mixed iterate, where
/// rows `j` already updated this sweep hold `x_jʳ` and the rest `x_jʳ⁻¹`.
pub struct BlockProblem<'a> {
    pub node: usize,
    pub state: &'a Embedding,
    pub delta: &'a DissimilarityMatrix,
    pub graph: &'a Graph,
    pub lambda: f64,
    pub tie: &'a [f64],
}

impl BlockProblem<'_> {
    fn curvature(&self) -> f64 {
        let n = self.state.node_count() as f64;
        n - 1.0 + self.lambda * self.graph.degree(self.node) as f64
    }

    /// `Σ_{j≠i} (1 + λ a_ij) x_j`.
    fn pull(&self) -> Vec<f64> {
        let p = self.state.dim();
        let mut acc = vec![0.0; p];
        for j in 0..self.state.node_count() {
            if j == self.node {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(self.state.row(j)) {
                *a += v;
            }
        }
        if self.lambda > 0.0 {
            for &j in self.graph.neighbors(self.node) {
                for (a, v) in acc.iter_mut().zip(self.state.row(j)) {
                    *a += self.lambda * v;
                }
            }
        }
        acc
    }

    fn quadratic_part(&self, x: &[f64]) -> f64 {
        let pull = self.pull();
        0.5 * self.curvature() * x.iter().map(|v| v * v).sum::<f64>()
            - x.iter().zip(&pull).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Block cost `Ψ(x) = ψ₁(x) - ψ₂(x)`, half the objective's dependence on
    /// `x_i` up to a constant.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let row = self.delta.row(self.node);
        let concave: f64 = (0..self.state.node_count())
            .filter(|&j| j != self.node)
            .map(|j| row[j] * crate::embedding::distance(x, self.state.row(j)))
            .sum();
        self.quadratic_part(x) - concave
    }

    /// Convex upper bound `Φ(x, x₀)`: `ψ₂` replaced by its linearization at `x₀`.
    pub fn surrogate(&self, x: &[f64], anchor: &[f64]) -> f64 {
        let row = self.delta.row(self.node);
        let mut linear = 0.0;
        for j in 0..self.state.node_count() {
            if j == self.node || row[j] == 0.0 {
                continue;
            }
            let xj = self.state.row(j);
            let g = subgradient_term(anchor, xj, self.tie);
            let offset: f64 = g.iter().zip(x.iter().zip(anchor)).map(|(g, (a, b))| g * (a - b)).sum();
            linear += row[j] * (crate::embedding::distance(anchor, xj) + offset);
        }
        self.quadratic_part(x) - linear
    }

    /// Unconstrained minimizer of the surrogate anchored at the node's
    /// current row.
    pub fn unconstrained_minimizer(&self) -> Vec<f64> {
        let i = self.node;
        let xi = self.state.row(i);
        let row = self.delta.row(i);
        let p = self.state.dim();
        let mut acc = vec![0.0; p];
        let mut diff = vec![0.0; p];
        for j in 0..self.state.node_count() {
            if j == i {
                continue;
            }
            let xj = self.state.row(j);
            let mut len2 = 0.0;
            for k in 0..p {
                acc[k] += xj[k];
                diff[k] = xi[k] - xj[k];
                len2 += diff[k] * diff[k];
            }
            let d = row[j];
            if d == 0.0 {
                continue;
            }
            let len = len2.sqrt();
            if len > COINCIDENT_TOLERANCE {
                let s = d / len;
                for k in 0..p {
                    acc[k] += s * diff[k];
                }
            } else {
                for k in 0..p {
                    acc[k] += d * self.tie[k];
                }
            }
        }
        if self.lambda > 0.0 {
            for &j in self.graph.neighbors(i) {
                for (a, v) in acc.iter_mut().zip(self.state.row(j)) {
                    *a += self.lambda * v;
                }
            }
        }
        let c = self.curvature();
        acc.iter_mut().for_each(|v| *v /= c);
        acc
    }
}

/// Scales `x` back onto the ball of radius `r` when it lies outside.
pub fn project_to_ball(mut x: Vec<f64>, r: f64) -> Vec<f64> {
    let len = norm(&x);
    if len > r {
        if r <= 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let s = r / len;
            x.iter_mut().for_each(|v| *v *= s);
        }
    }
    x
}

/// New position of node `i`: surrogate minimizer projected onto its ball.
pub fn block_update(problem: &BlockProblem<'_>, radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return vec![0.0; problem.state.dim()];
    }
    project_to_ball(problem.unconstrained_minimizer(), radius)
}

fn validate(g: &Graph, delta: &DissimilarityMatrix, radii: &[f64], config: &MdsConfig) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::TooFewNodes { required: 2, actual: n });
    }
    if delta.node_count() != n || radii.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} nodes, dissimilarities {}, radii {}",
            delta.node_count(),
            radii.len()
        )));
    }
    if let Some(bad) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(format!("radius {bad} is not finite and >= 0")));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", config.lambda)));
    }
    if config.dim == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
    }
    config.tolerance.validate()?;
    let tie = config
        .tie_vector
        .clone()
        .unwrap_or_else(|| default_tie_vector(config.dim));
    if tie.len() != config.dim || norm(&tie) > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "tie vector must have length {} and norm <= 1",
            config.dim
        )));
    }
    Ok(tie)
}

pub fn solve_ccmds(
    g: &Graph,
    delta: &DissimilarityMatrix,
    radii: &[f64],
    config: &MdsConfig,
) -> Result<Solution> {
    solve_ccmds_observed(g, delta, radii, config, &mut NoObserver)
}

/// Runs the constrained stress solver from a seeded Gaussian start scaled into
/// the balls, then centers the result.
pub fn solve_ccmds_observed(
    g: &Graph,
    delta: &DissimilarityMatrix,
    radii: &[f64],
    config: &MdsConfig,
    observer: &mut dyn SweepObserver,
) -> Result<Solution> {
    let tie = validate(g, delta, radii, config)?;
    let n = g.node_count();
    let eps = config.tolerance.resolve(n, config.dim);
    let lambda = config.lambda;

    let mut x = gaussian_init(radii, config.dim, config.seed, InitScaling::IntoBall);
    let record = |x: &Embedding, iteration: usize, step: f64| {
        let s = stress(x, delta);
        let smooth = smoothness_term(x, g);
        TraceRecord {
            iteration,
            stress: Some(s),
            objective: s + lambda * smooth,
            smoothness: smooth,
            step,
        }
    };
    let mut trace = SolveTrace {
        initial: Some(record(&x, 0, 0.0)),
        ..SolveTrace::default()
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = match config.sweep_order {
        SweepOrder::Shuffled { seed } => Some(seeded_rng(seed)),
        SweepOrder::Ascending => None,
    };

    for iteration in 1..=config.max_outer_iters {
        let started = Instant::now();
        let previous = x.clone();
        if let Some(rng) = shuffle_rng.as_mut() {
            order.shuffle(rng);
        }
        for &i in &order {
            let updated = {
                let problem = BlockProblem {
                    node: i,
                    state: &x,
                    delta,
                    graph: g,
                    lambda,
                    tie: &tie,
                };
                block_update(&problem, radii[i])
            };
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
