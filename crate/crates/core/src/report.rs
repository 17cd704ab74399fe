//! Layout quality and run-time summaries.

use std::fmt::Write as _;

use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mds::smoothness_term;
use crate::pipeline::{embed_graph, Algorithm, EmbedSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeLengthReport {
    pub edges: usize,
    pub mean: f64,
    pub max: f64,
    /// `Tr(XᵀLX)`, the sum of squared edge lengths.
    pub smoothness: f64,
}

/// Mean and max Euclidean edge length. A graph without edges reports zeros.
pub fn edge_length_report(emb: &Embedding, g: &Graph) -> EdgeLengthReport {
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    for (i, j) in g.edges() {
        let d = emb.distance(i, j);
        sum += d;
        max = max.max(d);
        count += 1;
    }
    EdgeLengthReport {
        edges: count,
        mean: if count > 0 { sum / count as f64 } else { 0.0 },
        max,
        smoothness: smoothness_term(emb, g),
    }
}

/// One benchmarked graph. Times are wall-clock seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub nodes: usize,
    pub edges: usize,
    pub centrality: f64,
    pub dissimilarity: f64,
    pub kernel: f64,
    pub weights: f64,
    pub sweeps: usize,
    pub mean_sweep: f64,
    pub solve: f64,
    pub total: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RuntimeTable {
    pub rows: Vec<RuntimeRow>,
}

impl RuntimeTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,algorithm,nodes,edges,centrality_s,dissimilarity_s,kernel_s,weights_s,sweeps,mean_sweep_s,solve_s,total_s,converged\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6},{}",
                r.label,
                r.algorithm,
                r.nodes,
                r.edges,
                r.centrality,
                r.dissimilarity,
                r.kernel,
                r.weights,
                r.sweeps,
                r.mean_sweep,
                r.solve,
                r.total,
                r.converged
            );
        }
        out
    }
}

/// Runs the full embedding pipeline on each graph and times every stage.
pub fn runtime_report(graphs: &[(String, Graph)], settings: &EmbedSettings) -> Result<RuntimeTable> {
    if graphs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a runtime table needs at least 2 graphs, got {}",
            graphs.len()
        )));
    }
    let mut table = RuntimeTable::default();
    for (label, g) in graphs {
        let out = embed_graph(g, settings)?;
        let t = &out.timings;
        table.rows.push(RuntimeRow {
            label: label.clone(),
            algorithm: settings.algorithm,
            nodes: g.node_count(),
            edges: g.edge_count(),
            centrality: t.centrality,
            dissimilarity: t.dissimilarity,
            kernel: t.kernel,
            weights: t.weights,
            sweeps: t.sweeps.len(),
            mean_sweep: t.mean_sweep(),
            solve: t.solve,
            total: t.total,
            converged: out.solution.trace.converged,
        });
    }
    Ok(table)
}
