//! Seeded synthetic graphs for benchmarks and tests.

use rand::Rng;

use crate::embedding::seeded_rng;
use crate::error::Result;
use crate::graph::Graph;

/// G(n, p). May be disconnected.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Random recursive tree plus independent extra edges with probability `p`.
/// Always connected.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Points uniform in the unit square joined when closer than `radius`.
/// Components are stitched to the first one through their closest pair, so
/// the result is connected. Returns the graph and the points.
pub fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<(Graph, Vec<[f64; 2]>)> {
    let mut rng = seeded_rng(seed);
    let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let dist = |a: usize, b: usize| {
        let (p, q) = (points[a], points[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(i, j) < radius {
                edges.push((i, j));
            }
        }
    }
    loop {
        let g = Graph::from_edges(n, edges.iter().copied())?;
        let comp = g.components();
        if comp.iter().all(|&c| c == 0) {
            return Ok((g, points));
        }
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| comp[i] == 0) {
            for j in (0..n).filter(|&j| comp[j] != 0) {
                let d = dist(i, j);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        edges.push((best.1, best.2));
    }
}

/// Ring plus uniformly random chords, average degree close to `avg_degree`.
pub fn sparse_ring(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    let mut rng = seeded_rng(seed);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let chords = ((avg_degree - 2.0).max(0.0) * n as f64 / 2.0).round() as usize;
    for _ in 0..chords {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        edges.push((a, b));
    }
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_connected() {
        assert_eq!(random_connected(30, 0.05, 3).unwrap(), random_connected(30, 0.05, 3).unwrap());
        assert!(random_connected(30, 0.0, 9).unwrap().is_connected());
        let (g, pts) = random_geometric(80, 0.1, 5).unwrap();
        assert!(g.is_connected());
        assert_eq!(pts.len(), 80);
        let ring = sparse_ring(500, 6.0, 1).unwrap();
        assert!(ring.is_connected());
        let avg = 2.0 * ring.edge_count() as f64 / 500.0;
        assert!((avg - 6.0).abs() < 0.5, "{avg}");
        assert_eq!(erdos_renyi(10, 1.0, 0).unwrap().edge_count(), 45);
    }
}
