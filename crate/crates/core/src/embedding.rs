//! Coordinate storage, initialization and solver telemetry shared by both layouts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Name of the random generator behind every seeded draw. Changing the
/// generator or its version changes all golden outputs.
pub const RNG_NAME: &str = "rand_chacha::ChaCha8Rng/0.9 seed_from_u64";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `N × p` coordinates stored row-major, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    p: usize,
    coords: Vec<f64>,
    pub centered: bool,
}

impl Embedding {
    pub fn zeros(n: usize, p: usize) -> Self {
        Embedding {
            n,
            p,
            coords: vec![0.0; n * p],
            centered: false,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged coordinate rows".into()));
        }
        Ok(Embedding {
            n: rows.len(),
            p,
            coords: rows.concat(),
            centered: false,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self, i: usize) -> f64 {
        norm(self.row(i))
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.row(i), self.row(j))
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Column means.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.p];
        for i in 0..self.n {
            for (acc, v) in c.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        c.iter_mut().for_each(|v| *v /= self.n.max(1) as f64);
        c
    }

    /// `(I - 𝟙𝟙ᵀ/N) X`.
    pub fn centered(&self) -> Embedding {
        let c = self.centroid();
        let mut out = self.clone();
        for i in 0..self.n {
            for (v, m) in out.row_mut(i).iter_mut().zip(&c) {
                *v -= m;
            }
        }
        out.centered = true;
        out
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Embedding) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// CSV with header `node_id,x,y[,z]`.
    pub fn to_csv(&self, g: &Graph) -> String {
        const AXES: [&str; 3] = ["x", "y", "z"];
        let mut out = String::from("node_id");
        for k in 0..self.p {
            out.push(',');
            match AXES.get(k) {
                Some(a) => out.push_str(a),
                None => out.push_str(&format!("x{k}")),
            }
        }
        out.push('\n');
        for i in 0..self.n {
            out.push_str(g.label(i));
            for v in self.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Reads `node_id,x,y[,z]` rows back, ordered by the graph's node ids.
    pub fn from_csv(text: &str, g: &Graph) -> Result<Embedding> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        let p = header.split(',').count().saturating_sub(1);
        if p == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `node_id,x,y[,z]`".into(),
            });
        }
        let index: std::collections::HashMap<&str, usize> =
            g.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut emb = Embedding::zeros(g.node_count(), p);
        let mut seen = vec![false; g.node_count()];
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |message: String| Error::Parse { line: idx + 1, message };
            if fields.len() != p + 1 {
                return Err(bad(format!("expected {} fields", p + 1)));
            }
            let i = *index
                .get(fields[0])
                .ok_or_else(|| bad(format!("unknown node `{}`", fields[0])))?;
            for (k, f) in fields[1..].iter().enumerate() {
                emb.row_mut(i)[k] = f.trim().parse().map_err(|e| bad(format!("{e}")))?;
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("no coordinates for node `{}`", g.label(missing)),
            });
        }
        Ok(emb)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// How a radius is imposed on the Gaussian starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScaling {
    /// Shrink rows that fall outside their ball, `min(1, f/‖x‖)`.
    IntoBall,
    /// Rescale every row onto its sphere.
    OntoSphere,
}

/// Standard normal rows from `seed`, then scaled to respect `radii`.
pub fn gaussian_init(radii: &[f64], p: usize, seed: u64, scaling: InitScaling) -> Embedding {
    let n = radii.len();
    let mut rng = seeded_rng(seed);
    let coords: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut emb = Embedding {
        n,
        p,
        coords,
        centered: false,
    };
    for (i, &r) in radii.iter().enumerate() {
        let len = emb.norm(i);
        if len == 0.0 {
            continue;
        }
        let scale = match scaling {
            InitScaling::IntoBall => (r / len).min(1.0),
            InitScaling::OntoSphere => r / len,
        };
        emb.row_mut(i).iter_mut().for_each(|v| *v *= scale);
    }
    emb
}

/// Stopping threshold on `‖Xʳ - Xʳ⁻¹‖_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    /// `value · sqrt(N · p)`.
    ScaleAware(f64),
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::ScaleAware(1e-4)
    }
}

impl Tolerance {
    pub fn resolve(self, n: usize, p: usize) -> f64 {
        match self {
            Tolerance::ScaleAware(v) => v * ((n * p) as f64).sqrt(),
            Tolerance::Absolute(v) => v,
        }
    }

    pub(crate) fn validate(self) -> Result<()> {
        let v = match self {
            Tolerance::ScaleAware(v) | Tolerance::Absolute(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("epsilon must be positive, got {v}")))
        }
    }
}

/// Objective bookkeeping for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Raw stress; `None` when no dissimilarities were available or tracking is off.
    pub stress: Option<f64>,
    /// The quantity the solver decreases (relaxed stress plus smoothness, or
    /// reconstruction error).
    pub objective: f64,
    pub smoothness: f64,
    /// `‖Xʳ - Xʳ⁻¹‖_F`; zero for the initial record.
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Values at the starting point.
    pub initial: Option<TraceRecord>,
    /// One record per completed outer iteration.
    pub records: Vec<TraceRecord>,
    /// Wall time of each sweep, in seconds.
    pub sweep_seconds: Vec<f64>,
    pub converged: bool,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.initial
            .iter()
            .chain(&self.records)
            .map(|r| r.objective)
            .collect()
    }

    /// CSV `iter,stress,objective,smoothness,step_frobenius`; a missing stress
    /// is left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,stress,objective,smoothness,step_frobenius\n");
        for r in &self.records {
            let stress = r.stress.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration, stress, r.objective, r.smoothness, r.step
            ));
        }
        out
    }
}

/// Observer invoked after every outer sweep with the uncentered iterate.
pub trait SweepObserver {
    fn on_sweep(&mut self, iteration: usize, state: &Embedding);
}

impl<F: FnMut(usize, &Embedding)> SweepObserver for F {
    fn on_sweep(&mut self, iteration: usize, state: &Embedding) {
        self(iteration, state)
    }
}

pub(crate) struct NoObserver;

impl SweepObserver for NoObserver {
    fn on_sweep(&mut self, _: usize, _: &Embedding) {}
}

/// Final layout of a solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Centered coordinates.
    pub embedding: Embedding,
    /// Last iterate before centering.
    pub raw: Embedding,
    pub trace: SolveTrace,
}
