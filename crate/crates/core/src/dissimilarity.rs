//! Node dissimilarities, the commute-time kernel and double-centered kernels.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Neighborhood, UNREACHABLE};

/// Largest graph for which the Laplacian pseudoinverse is formed densely.
pub const MAX_COMMUTE_NODES: usize = 5_000;

/// Largest matrix written to or read from CSV.
pub const MAX_CSV_NODES: usize = 2_000;

/// Relative threshold below which Laplacian eigenvalues count as zero.
pub const EIGEN_ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissimilarityMetric {
    SharedNeighbors,
    AdjacencyRows,
    ShortestPath,
    Ectd,
}

impl DissimilarityMetric {
    pub fn name(self) -> &'static str {
        match self {
            DissimilarityMetric::SharedNeighbors => "shared_neighbors",
            DissimilarityMetric::AdjacencyRows => "adjacency_rows",
            DissimilarityMetric::ShortestPath => "shortest_path",
            DissimilarityMetric::Ectd => "ectd",
        }
    }
}

impl fmt::Display for DissimilarityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DissimilarityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared_neighbors" => Ok(Self::SharedNeighbors),
            "adjacency_rows" => Ok(Self::AdjacencyRows),
            "shortest_path" => Ok(Self::ShortestPath),
            "ectd" => Ok(Self::Ectd),
            other => Err(Error::Config(format!("unknown dissimilarity metric `{other}`"))),
        }
    }
}

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub metric: DissimilarityMetric,
    delta: DMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Wraps a matrix after checking symmetry, sign and the zero diagonal.
    pub fn new(metric: DissimilarityMetric, delta: DMatrix<f64>) -> Result<Self> {
        if !delta.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "dissimilarity matrix is {}x{}",
                delta.nrows(),
                delta.ncols()
            )));
        }
        let n = delta.nrows();
        for i in 0..n {
            if delta[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("delta[{i},{i}] is not zero")));
            }
            for j in 0..i {
                let v = delta[(i, j)];
                if !(v >= 0.0 && v.is_finite()) || v != delta[(j, i)] {
                    return Err(Error::InvalidParameter(format!(
                        "delta[{i},{j}] = {v} is negative, non-finite or asymmetric"
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix { metric, delta })
    }

    pub fn node_count(&self) -> usize {
        self.delta.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.delta[(i, j)]
    }

    /// Column `i`, which equals row `i` by symmetry.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.node_count();
        &self.delta.as_slice()[i * n..(i + 1) * n]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// Elementwise square `Δ⁽²⁾`.
    pub fn squared(&self) -> DMatrix<f64> {
        self.delta.map(|v| v * v)
    }

    pub fn max(&self) -> f64 {
        self.delta.max()
    }

    pub fn to_csv(&self, labels: &[String]) -> Result<String> {
        let n = self.node_count();
        if n > MAX_CSV_NODES {
            return Err(Error::TooLarge {
                what: "dense dissimilarity CSV",
                limit: MAX_CSV_NODES,
                actual: n,
                hint: "recompute the matrix from the edge list instead",
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!("{} labels for {n} nodes", labels.len())));
        }
        let mut out = format!("# metric={}\nnode_id", self.metric);
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..n {
            out.push_str(&labels[i]);
            for v in self.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Reads the format written by [`to_csv`](Self::to_csv); returns the
    /// matrix and its node labels.
    pub fn from_csv(text: &str) -> Result<(Self, Vec<String>)> {
        let bad = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate();
        let metric = match lines.next() {
            Some((_, l)) if l.starts_with("# metric=") => l["# metric=".len()..].trim().parse()?,
            _ => return Err(bad(1, "missing `# metric=` header".into())),
        };
        let labels: Vec<String> = match lines.next() {
            Some((_, l)) => l.split(',').skip(1).map(str::to_string).collect(),
            None => return Err(bad(2, "missing label row".into())),
        };
        let n = labels.len();
        if n > MAX_CSV_NODES {
            return Err(Error::TooLarge {
                what: "dense dissimilarity CSV",
                limit: MAX_CSV_NODES,
                actual: n,
                hint: "recompute the matrix from the edge list instead",
            });
        }
        let mut delta = DMatrix::zeros(n, n);
        let mut rows = 0;
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if rows == n {
                return Err(bad(idx + 1, "more rows than labels".into()));
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(bad(idx + 1, format!("expected {} fields, found {}", n + 1, fields.len())));
            }
            for (j, f) in fields[1..].iter().enumerate() {
                delta[(rows, j)] = f
                    .trim()
                    .parse()
                    .map_err(|e| bad(idx + 1, format!("column {}: {e}", j + 1)))?;
            }
            rows += 1;
        }
        if rows != n {
            return Err(bad(text.lines().count(), format!("expected {n} rows, found {rows}")));
        }
        Ok((Self::new(metric, delta)?, labels))
    }
}

pub fn compute_delta(g: &Graph, metric: DissimilarityMetric) -> Result<DissimilarityMatrix> {
    match metric {
        DissimilarityMetric::SharedNeighbors => shared_neighbor_delta(g),
        DissimilarityMetric::AdjacencyRows => adjacency_row_delta(g),
        DissimilarityMetric::ShortestPath => shortest_path_delta(g),
        DissimilarityMetric::Ectd => ectd_delta(g),
    }
}

fn require_pair(g: &Graph) -> Result<()> {
    if g.node_count() < 2 {
        return Err(Error::TooFewNodes {
            required: 2,
            actual: g.node_count(),
        });
    }
    Ok(())
}

/// Size of the symmetric difference of two sorted neighbor lists.
fn symmetric_difference_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

fn symmetric_from_rows(n: usize, entry: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let cols: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let entry = &entry;
            (0..n).map(move |i| if i == j { 0.0 } else { entry(i.min(j), i.max(j)) })
        })
        .collect();
    DMatrix::from_vec(n, n, cols)
}

/// Unshared one-hop neighbors, normalized by the sum of the two largest degrees.
pub fn shared_neighbor_delta(g: &Graph) -> Result<DissimilarityMatrix> {
    require_pair(g)?;
    let mut degrees = g.degrees();
    degrees.sort_unstable();
    let n = g.node_count();
    let denom = (degrees[n - 1] + degrees[n - 2]) as f64;
    if denom == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let delta = symmetric_from_rows(n, |i, j| {
        symmetric_difference_len(g.neighbors(i), g.neighbors(j)) as f64 / denom
    });
    DissimilarityMatrix::new(DissimilarityMetric::SharedNeighbors, delta)
}

/// Euclidean distance between adjacency rows.
pub fn adjacency_row_delta(g: &Graph) -> Result<DissimilarityMatrix> {
    require_pair(g)?;
    let delta = symmetric_from_rows(g.node_count(), |i, j| {
        (symmetric_difference_len(g.neighbors(i), g.neighbors(j)) as f64).sqrt()
    });
    DissimilarityMatrix::new(DissimilarityMetric::AdjacencyRows, delta)
}

/// Hop-count distances.
pub fn shortest_path_delta(g: &Graph) -> Result<DissimilarityMatrix> {
    require_pair(g)?;
    g.require_connected()?;
    let n = g.node_count();
    let cols: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|s| {
            g.bfs_distances(s).into_iter().map(|d| {
                debug_assert_ne!(d, UNREACHABLE);
                f64::from(d)
            })
        })
        .collect();
    DissimilarityMatrix::new(DissimilarityMetric::ShortestPath, DMatrix::from_vec(n, n, cols))
}

/// Laplacian pseudoinverse `L†` and graph volume `Ω = Σ a_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommuteKernel {
    pub pinv: DMatrix<f64>,
    pub volume: f64,
}

impl CommuteKernel {
    /// Average commute time `Ω (e_i - e_j)ᵀ L† (e_i - e_j)`.
    pub fn commute_time(&self, i: usize, j: usize) -> f64 {
        let l = &self.pinv;
        (self.volume * (l[(i, i)] + l[(j, j)] - 2.0 * l[(i, j)])).max(0.0)
    }
}

/// Pseudoinverse via a symmetric eigendecomposition of `L`.
///
/// Eigenvalues at or below `1e-9 · λ_max` are treated as zero. More than one
/// such eigenvalue means the graph is disconnected.
pub fn commute_kernel(g: &Graph) -> Result<CommuteKernel> {
    require_pair(g)?;
    let n = g.node_count();
    if n > MAX_COMMUTE_NODES {
        return Err(Error::TooLarge {
            what: "commute-time kernel",
            limit: MAX_COMMUTE_NODES,
            actual: n,
            hint: "use the shortest_path dissimilarity for graphs this large",
        });
    }
    let eig = SymmetricEigen::new(g.laplacian());
    let lambda_max = eig.eigenvalues.max();
    let tol = EIGEN_ZERO_TOLERANCE * lambda_max;
    let zeros = eig.eigenvalues.iter().filter(|&&l| l <= tol).count();
    if zeros > 1 || lambda_max <= 0.0 {
        return Err(Error::SpectralDisconnected { zero_eigenvalues: zeros });
    }
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if lambda > tol { 1.0 / lambda } else { 0.0 };
        scaled.column_mut(k).scale_mut(s);
    }
    let mut pinv = &scaled * eig.eigenvectors.transpose();
    // symmetrize away rounding
    pinv = (&pinv + pinv.transpose()) * 0.5;
    Ok(CommuteKernel {
        pinv,
        volume: 2.0 * g.edge_count() as f64,
    })
}

/// Euclidean commute-time distance, `sqrt(n(i, j))`.
pub fn ectd_delta(g: &Graph) -> Result<DissimilarityMatrix> {
    let kernel = commute_kernel(g)?;
    Ok(ectd_from_kernel(&kernel))
}

pub fn ectd_from_kernel(kernel: &CommuteKernel) -> DissimilarityMatrix {
    let n = kernel.pinv.nrows();
    let delta = symmetric_from_rows(n, |i, j| kernel.commute_time(i, j).sqrt());
    DissimilarityMatrix {
        metric: DissimilarityMetric::Ectd,
        delta,
    }
}

/// Inner-product surrogate `H`, symmetric and double-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub h: DMatrix<f64>,
}

impl KernelMatrix {
    /// `Ω · L†`.
    pub fn from_commute(kernel: &CommuteKernel) -> Self {
        KernelMatrix {
            h: &kernel.pinv * kernel.volume,
        }
    }

    pub fn node_count(&self) -> usize {
        self.h.nrows()
    }
}

/// `H = -½ J Δ⁽²⁾ J` with `J = I - 𝟙𝟙ᵀ/N`.
pub fn double_centered_kernel(delta: &DissimilarityMatrix) -> KernelMatrix {
    let n = delta.node_count();
    let sq = delta.squared();
    // Δ⁽²⁾ is symmetric, so column means equal row means
    let means: Vec<f64> = (0..n).map(|j| sq.column(j).sum() / n as f64).collect();
    let grand = means.iter().sum::<f64>() / n as f64;
    let h = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - means[i] - means[j] + grand));
    KernelMatrix { h }
}

/// Neighborhood block of the kernel with a diagonal ridge.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgedBlock {
    /// `H_{N_i,N_i} + σ I`.
    pub block: DMatrix<f64>,
    /// `H_{N_i,i}`.
    pub column: DVector<f64>,
    /// Ridge actually applied.
    pub sigma: f64,
}

/// Scale-aware default ridge: `1e-8 · (trace / K + 1)`.
pub fn default_ridge(block: &DMatrix<f64>) -> f64 {
    let k = block.nrows().max(1) as f64;
    1e-8 * (block.trace() / k + 1.0)
}

/// Extracts `H_i` and `h_i` for a neighborhood and adds `σ I`.
///
/// `sigma = None` uses [`default_ridge`]. When the kernel is not positive
/// semidefinite (non-Euclidean dissimilarities), the ridge is raised past the
/// most negative eigenvalue of the block so that the result is positive definite.
pub fn ridge_submatrix(h: &KernelMatrix, nbhd: &Neighborhood, sigma: Option<f64>) -> Result<RidgedBlock> {
    let members = &nbhd.members;
    let k = members.len();
    if k == 0 {
        return Err(Error::EmptyNeighborhood {
            node: nbhd.center.to_string(),
            hops: nbhd.hops,
        });
    }
    if let Some(s) = sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge must be finite and >= 0, got {s}")));
        }
    }
    let raw = DMatrix::from_fn(k, k, |a, b| h.h[(members[a], members[b])]);
    let column = DVector::from_fn(k, |a, _| h.h[(members[a], nbhd.center)]);
    let base = sigma.unwrap_or_else(|| default_ridge(&raw));

    let mut applied = base;
    let mut block = add_diagonal(&raw, applied);
    if block.clone().cholesky().is_none() {
        let lambda_min = SymmetricEigen::new(raw.clone()).eigenvalues.min();
        let floor = if base > 0.0 { base } else { default_ridge(&raw) };
        applied = (-lambda_min).max(0.0) + floor;
        block = add_diagonal(&raw, applied);
        let mut attempts = 0;
        while block.clone().cholesky().is_none() {
            attempts += 1;
            if attempts > 60 {
                return Err(Error::NotPositiveDefinite(format!(
                    "neighborhood block of node {} stays indefinite after ridge {applied:e}",
                    nbhd.center
                )));
            }
            applied = applied * 2.0 + floor;
            block = add_diagonal(&raw, applied);
        }
    }
    Ok(RidgedBlock {
        block,
        column,
        sigma: applied,
    })
}

fn add_diagonal(m: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::n_hop_neighborhood;

    fn k3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn shared_neighbors_k3() {
        let d = shared_neighbor_delta(&k3()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 0.5 };
                assert_eq!(d.get(i, j), expected);
            }
        }
    }

    #[test]
    fn identical_neighborhoods_have_zero_dissimilarity() {
        // leaves of a star share the center as their only neighbor
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let d = shared_neighbor_delta(&star).unwrap();
        assert_eq!(d.get(1, 2), 0.0);
        let d = adjacency_row_delta(&star).unwrap();
        assert_eq!(d.get(2, 3), 0.0);
    }

    #[test]
    fn adjacency_rows_k3() {
        let d = adjacency_row_delta(&k3()).unwrap();
        assert!((d.get(0, 1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shortest_paths() {
        assert_eq!(shortest_path_delta(&path(3)).unwrap().get(0, 2), 2.0);
        let d = shortest_path_delta(&k3()).unwrap();
        assert_eq!(d.get(1, 2), 1.0);
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(shortest_path_delta(&g), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn single_edge_pseudoinverse() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let k = commute_kernel(&g).unwrap();
        assert_eq!(k.volume, 2.0);
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((&k.pinv - expected).abs().max() < 1e-14);
        let d = ectd_delta(&g).unwrap();
        assert!((d.get(0, 1) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn pseudoinverse_annihilates_ones() {
        let k = commute_kernel(&path(6)).unwrap();
        let ones = DVector::from_element(6, 1.0);
        assert!((&k.pinv * ones).amax() < 1e-12);
    }

    #[test]
    fn disconnected_commute_kernel() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            commute_kernel(&g),
            Err(Error::SpectralDisconnected { zero_eigenvalues: 2 })
        ));
    }

    #[test]
    fn zero_delta_gives_zero_kernel() {
        let d = DissimilarityMatrix::new(DissimilarityMetric::ShortestPath, DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(double_centered_kernel(&d).h, DMatrix::zeros(4, 4));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(DissimilarityMatrix::new(DissimilarityMetric::Ectd, asym).is_err());
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(DissimilarityMatrix::new(DissimilarityMetric::Ectd, diag).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(DissimilarityMatrix::new(DissimilarityMetric::Ectd, neg).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = path(4);
        let d = ectd_delta(&g).unwrap();
        let text = d.to_csv(g.labels()).unwrap();
        assert!(text.starts_with("# metric=ectd\n"));
        let (back, labels) = DissimilarityMatrix::from_csv(&text).unwrap();
        assert_eq!(labels, g.labels());
        assert_eq!(back, d);
    }

    #[test]
    fn ridge_cases() {
        let kernel = KernelMatrix {
            h: DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 2.0, 0.3, 0.1, 0.3, 2.0]),
        };
        let nb = n_hop_neighborhood(&k3(), 0, 1);
        let r = ridge_submatrix(&kernel, &nb, Some(0.0)).unwrap();
        assert_eq!(r.block, DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 2.0]));
        assert_eq!(r.column.as_slice(), &[0.5, 0.1]);
        assert_eq!(r.sigma, 0.0);

        let zero = KernelMatrix { h: DMatrix::zeros(3, 3) };
        let r = ridge_submatrix(&zero, &nb, Some(1e-6)).unwrap();
        assert_eq!(r.block, DMatrix::identity(2, 2) * 1e-6);

        let empty = Neighborhood {
            center: 0,
            hops: 1,
            members: vec![],
        };
        assert!(matches!(
            ridge_submatrix(&zero, &empty, None),
            Err(Error::EmptyNeighborhood { .. })
        ));
    }

    #[test]
    fn indefinite_block_is_lifted() {
        let kernel = KernelMatrix {
            h: DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]),
        };
        let nb = n_hop_neighborhood(&k3(), 0, 1);
        let r = ridge_submatrix(&kernel, &nb, Some(1e-6)).unwrap();
        let min = SymmetricEigen::new(r.block.clone()).eigenvalues.min();
        assert!(min > 0.0 && r.sigma > 1.0);
    }
}
