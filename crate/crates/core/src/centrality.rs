//! Node centralities and the radial targets derived from them.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{diameter, Graph, UNREACHABLE};

/// Sources per reduction chunk. Fixed so that sums do not depend on the
/// number of worker threads.
const SOURCE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityMeasure {
    Degree,
    Closeness,
    Betweenness,
}

impl fmt::Display for CentralityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CentralityMeasure::Degree => "degree",
            CentralityMeasure::Closeness => "closeness",
            CentralityMeasure::Betweenness => "betweenness",
        })
    }
}

impl FromStr for CentralityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(Self::Degree),
            "closeness" => Ok(Self::Closeness),
            "betweenness" => Ok(Self::Betweenness),
            other => Err(Error::Config(format!("unknown centrality measure `{other}`"))),
        }
    }
}

/// How betweenness scores are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetweennessNorm {
    /// Raw counts of shortest paths through each interior node, divided by
    /// the total over all nodes. Scores sum to 1.
    #[default]
    Global,
    /// Freeman pair dependencies `σ_jk(i) / σ_jk` over unordered pairs,
    /// divided by `(N-1)(N-2)/2`.
    Conventional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub measure: CentralityMeasure,
    pub values: Vec<f64>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("node_id,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", g.label(i), v));
        }
        out
    }
}

pub fn compute(g: &Graph, measure: CentralityMeasure, norm: BetweennessNorm) -> Result<CentralityVector> {
    match measure {
        CentralityMeasure::Degree => Ok(degree_centrality(g)),
        CentralityMeasure::Closeness => closeness(g),
        CentralityMeasure::Betweenness => betweenness_with(g, norm),
    }
}

pub fn degree_centrality(g: &Graph) -> CentralityVector {
    CentralityVector {
        measure: CentralityMeasure::Degree,
        values: g.degrees().into_iter().map(|d| d as f64).collect(),
    }
}

/// Inverse total hop distance to every other node.
pub fn closeness(g: &Graph) -> Result<CentralityVector> {
    g.require_connected()?;
    let values = (0..g.node_count())
        .into_par_iter()
        .map(|s| {
            let total: u64 = g.bfs_distances(s).iter().map(|&d| u64::from(d)).sum();
            if total == 0 {
                0.0
            } else {
                1.0 / total as f64
            }
        })
        .collect();
    Ok(CentralityVector {
        measure: CentralityMeasure::Closeness,
        values,
    })
}

pub fn betweenness(g: &Graph) -> Result<CentralityVector> {
    betweenness_with(g, BetweennessNorm::Global)
}

pub fn betweenness_with(g: &Graph, norm: BetweennessNorm) -> Result<CentralityVector> {
    g.require_connected()?;
    let n = g.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut scratch = BrandesScratch::new(n);
            for &s in chunk {
                scratch.accumulate(g, s, norm, &mut acc);
            }
            acc
        })
        .collect();
    let mut raw = vec![0.0; n];
    for part in partials {
        for (r, p) in raw.iter_mut().zip(part) {
            *r += p;
        }
    }

    let values = match norm {
        BetweennessNorm::Global => {
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                raw.iter().map(|v| v / total).collect()
            } else {
                vec![0.0; n]
            }
        }
        BetweennessNorm::Conventional => {
            if n < 3 {
                vec![0.0; n]
            } else {
                // every unordered pair was visited from both endpoints
                let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
                raw.iter().map(|v| v / 2.0 / pairs).collect()
            }
        }
    };
    Ok(CentralityVector {
        measure: CentralityMeasure::Betweenness,
        values,
    })
}

struct BrandesScratch {
    dist: Vec<u32>,
    sigma: Vec<f64>,
    below: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            dist: vec![UNREACHABLE; n],
            sigma: vec![0.0; n],
            below: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    /// Adds the contribution of all shortest paths starting at `s`.
    fn accumulate(&mut self, g: &Graph, s: usize, norm: BetweennessNorm, acc: &mut [f64]) {
        self.dist.fill(UNREACHABLE);
        self.sigma.fill(0.0);
        self.below.fill(0.0);
        self.order.clear();

        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            let next = self.dist[v] + 1;
            for &w in g.neighbors(v) {
                if self.dist[w] == UNREACHABLE {
                    self.dist[w] = next;
                    self.queue.push_back(w);
                }
                if self.dist[w] == next {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }

        // Walk the shortest-path DAG bottom-up. For the global form `below[v]`
        // counts DAG paths from v to any deeper node, so `sigma[v] * below[v]`
        // is the number of shortest s-t paths through v. For the conventional
        // form it is the usual Brandes dependency.
        for &w in self.order.iter().rev() {
            let dw = self.dist[w];
            for &v in g.neighbors(w) {
                if self.dist[v] != UNREACHABLE && self.dist[v] + 1 == dw {
                    self.below[v] += match norm {
                        BetweennessNorm::Global => 1.0 + self.below[w],
                        BetweennessNorm::Conventional => {
                            self.sigma[v] / self.sigma[w] * (1.0 + self.below[w])
                        }
                    };
                }
            }
            if w != s {
                acc[w] += match norm {
                    BetweennessNorm::Global => self.sigma[w] * self.below[w],
                    BetweennessNorm::Conventional => self.below[w],
                };
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusTransform {
    /// `diam/2 · (1 - (c - min c) / (max c - min c))`.
    DiameterLinear,
    /// `alpha · exp(-beta · c)`.
    Exponential { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusMap {
    pub transform: RadiusTransform,
    pub floor: f64,
    pub radii: Vec<f64>,
}

pub fn radius_map(c: &CentralityVector, g: &Graph, transform: RadiusTransform) -> Result<RadiusMap> {
    radius_map_with_floor(c, g, transform, 0.0)
}

/// Maps centralities to target radii; higher centrality gives a smaller radius.
///
/// The linear form divides by the centrality range `max c - min c`. The most
/// central node lands exactly on the origin unless `floor > 0`.
pub fn radius_map_with_floor(
    c: &CentralityVector,
    g: &Graph,
    transform: RadiusTransform,
    floor: f64,
) -> Result<RadiusMap> {
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius floor must be finite and >= 0, got {floor}")));
    }
    if c.len() != g.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} centralities for {} nodes",
            c.len(),
            g.node_count()
        )));
    }
    let radii: Vec<f64> = match transform {
        RadiusTransform::DiameterLinear => {
            let half = f64::from(diameter(g)?) / 2.0;
            let (lo, hi) = (c.min(), c.max());
            let range = hi - lo;
            if range > 0.0 {
                c.values
                    .iter()
                    .map(|&v| half * (1.0 - (v - lo) / range))
                    .collect()
            } else {
                vec![half; c.len()]
            }
        }
        RadiusTransform::Exponential { alpha, beta } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
            }
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
            }
            c.values.iter().map(|&v| alpha * (-beta * v).exp()).collect()
        }
    };
    Ok(RadiusMap {
        transform,
        floor,
        radii: radii.into_iter().map(|r| r.max(floor)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges, from `min c` to `max c`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, count) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], count));
        }
        out
    }
}

/// Equal-width histogram over `[min c, max c]`; the last bin is closed.
pub fn centrality_histogram(c: &CentralityVector, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let (lo, hi) = (c.min(), c.max());
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + width * k as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for &v in &c.values {
        let k = if width > 0.0 {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn k3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn closeness_small() {
        assert!(close(&closeness(&path(3)).unwrap().values, &[1.0 / 3.0, 0.5, 1.0 / 3.0]));
        assert!(close(&closeness(&k3()).unwrap().values, &[0.5; 3]));
    }

    #[test]
    fn closeness_rejects_disconnected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(closeness(&g), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn betweenness_small() {
        assert!(close(&betweenness(&star(3)).unwrap().values, &[1.0, 0.0, 0.0, 0.0]));
        assert!(close(&betweenness(&k3()).unwrap().values, &[0.0; 3]));
        assert!(close(&betweenness(&path(4)).unwrap().values, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn conventional_betweenness_on_path() {
        // node 1 of P4 lies on pairs (0,2), (0,3): 2 / 3 pairs
        let v = betweenness_with(&path(4), BetweennessNorm::Conventional).unwrap().values;
        assert!(close(&v, &[0.0, 2.0 / 3.0, 2.0 / 3.0, 0.0]));
    }

    #[test]
    fn global_and_conventional_differ_with_multiple_paths() {
        // 4-cycle plus pendant: pair (0,2) has two shortest paths
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4)]).unwrap();
        let global = betweenness(&g).unwrap().values;
        assert!((global.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let conv = betweenness_with(&g, BetweennessNorm::Conventional).unwrap().values;
        assert!(conv.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn degree_small() {
        assert_eq!(degree_centrality(&star(3)).values, vec![3.0, 1.0, 1.0, 1.0]);
        assert_eq!(degree_centrality(&k3()).values, vec![2.0; 3]);
    }

    #[test]
    fn diameter_linear_on_path() {
        let c = closeness(&path(3)).unwrap();
        let r = radius_map(&c, &path(3), RadiusTransform::DiameterLinear).unwrap();
        assert!(close(&r.radii, &[1.0, 0.0, 1.0]));
    }

    #[test]
    fn uniform_centrality_gives_half_diameter() {
        let c = closeness(&k3()).unwrap();
        let r = radius_map(&c, &k3(), RadiusTransform::DiameterLinear).unwrap();
        assert_eq!(r.radii, vec![0.5; 3]);
    }

    #[test]
    fn exponential_transform() {
        let c = degree_centrality(&star(3));
        let r = radius_map(&c, &star(3), RadiusTransform::Exponential { alpha: 1.0, beta: 0.0 }).unwrap();
        assert_eq!(r.radii, vec![1.0; 4]);
        let r = radius_map(&c, &star(3), RadiusTransform::Exponential { alpha: 2.0, beta: 1.0 }).unwrap();
        assert!((r.radii[0] - 2.0 * (-3.0f64).exp()).abs() < 1e-15);
        for bad in [
            RadiusTransform::Exponential { alpha: 0.0, beta: 1.0 },
            RadiusTransform::Exponential { alpha: 1.0, beta: -1.0 },
        ] {
            assert!(matches!(radius_map(&c, &star(3), bad), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn floor_lifts_zero_radius() {
        let c = closeness(&path(3)).unwrap();
        let r = radius_map_with_floor(&c, &path(3), RadiusTransform::DiameterLinear, 0.1).unwrap();
        assert!(close(&r.radii, &[1.0, 0.1, 1.0]));
    }

    #[test]
    fn histograms() {
        let uniform = CentralityVector {
            measure: CentralityMeasure::Degree,
            values: vec![2.0; 5],
        };
        let h = centrality_histogram(&uniform, 4).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);

        let two = CentralityVector {
            measure: CentralityMeasure::Degree,
            values: vec![0.0, 1.0],
        };
        assert_eq!(centrality_histogram(&two, 2).unwrap().counts, vec![1, 1]);
        assert!(centrality_histogram(&two, 0).is_err());
    }
}
