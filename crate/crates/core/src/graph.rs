//! Undirected simple graphs, edge-list parsing and hop-count geometry.
//!
//! Nodes carry arbitrary string labels externally and dense `0..N` ids internally.
//! Ids follow first appearance in the input. Adjacency lists are kept sorted,
//! so every traversal in this crate visits neighbors in ascending id order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Distance value used for unreachable node pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Above this node count, all-pairs hop distances are not materialized.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on nodes labelled `"0".."n-1"`. Self-loops are dropped and
    /// repeated or reversed pairs collapse into one undirected edge.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels<I>(labels: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Graph {
            labels,
            adjacency,
            edge_count: edge_count / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Dense 0/1 adjacency matrix `A`.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut a = DMatrix::zeros(n, n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Dense Laplacian `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency_matrix();
        for i in 0..self.node_count() {
            l[(i, i)] = self.degree(i) as f64;
        }
        l
    }

    /// `xᵀ L x` evaluated edge by edge.
    pub fn laplacian_quadratic_form(&self, x: &[f64]) -> f64 {
        self.edges().map(|(i, j)| (x[i] - x[j]).powi(2)).sum()
    }

    /// Hop counts from `source`; unreachable nodes get [`UNREACHABLE`].
    pub fn bfs_distances(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &w in &self.adjacency[v] {
                if dist[w] == UNREACHABLE {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Component index per node, numbered in order of lowest member id.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Errors with a representative pair of nodes when the graph has more than
    /// one component.
    pub fn require_connected(&self) -> Result<()> {
        let comp = self.components();
        match comp.iter().position(|&c| c != 0) {
            None => Ok(()),
            Some(other) => Err(Error::Disconnected {
                a: self.labels[0].clone(),
                b: self.labels[other].clone(),
            }),
        }
    }

    /// Serializes as an edge list that [`parse_edge_list`] reads back.
    ///
    /// Isolated nodes cannot be expressed in this format and are lost.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{} {}", self.labels[i], self.labels[j]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject repeated or reversed edges instead of symmetrizing them.
    pub strict_directed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub edge_lines: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

/// Reads an edge list: one `a b` pair per line, `#` starts a comment.
///
/// Directed input is symmetrized (`A + Aᵀ` clamped to 0/1) unless
/// `strict_directed` is set.
pub fn parse_edge_list<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<(Graph, ParseReport)> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    let mut report = ParseReport::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node tokens, found {}", tokens.len()),
            });
        }
        report.edge_lines += 1;
        let mut intern = |tok: &str| -> usize {
            if let Some(&id) = ids.get(tok) {
                return id;
            }
            let id = labels.len();
            labels.push(tok.to_string());
            ids.insert(tok.to_string(), id);
            id
        };
        let a = intern(tokens[0]);
        let b = intern(tokens[1]);
        if a == b {
            report.self_loops_dropped += 1;
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            if opts.strict_directed {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate edge {} {}", tokens[0], tokens[1]),
                });
            }
            report.duplicates_collapsed += 1;
            continue;
        }
        edges.push(key);
    }

    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if report.self_loops_dropped > 0 {
        warn!("dropped {} self-loop(s)", report.self_loops_dropped);
    }
    let graph = Graph::with_labels(labels, edges)?;
    Ok((graph, report))
}

pub fn parse_edge_str(text: &str) -> Result<Graph> {
    parse_edge_list(text.as_bytes(), &ParseOptions::default()).map(|(g, _)| g)
}

/// Dense all-pairs hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.get(i, j) != UNREACHABLE
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> u32 {
        self.data
            .iter()
            .copied()
            .filter(|&d| d != UNREACHABLE)
            .max()
            .unwrap_or(0)
    }

    /// Space-separated rows; unreachable pairs are written as `inf`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|&d| if d == UNREACHABLE { "inf".to_string() } else { d.to_string() })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn geodesic_distances(g: &Graph) -> Result<DistanceMatrix> {
    geodesic_distances_capped(g, DEFAULT_DENSE_CAP)
}

/// All-pairs BFS. Refuses graphs larger than `cap`; use
/// [`Graph::bfs_distances`] per source instead.
pub fn geodesic_distances_capped(g: &Graph, cap: usize) -> Result<DistanceMatrix> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::TooLarge {
            what: "dense geodesic matrix",
            limit: cap,
            actual: n,
            hint: "compute distances per source instead",
        });
    }
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| g.bfs_distances(s)).collect();
    Ok(DistanceMatrix {
        n,
        data: rows.concat(),
    })
}

/// Longest finite shortest path. Requires a connected graph.
pub fn diameter(g: &Graph) -> Result<u32> {
    g.require_connected()?;
    let diam = (0..g.node_count())
        .into_par_iter()
        .map(|s| g.bfs_distances(s).into_iter().max().unwrap_or(0))
        .max()
        .unwrap_or(0);
    Ok(diam)
}

/// Nodes within `hops` hops of `center`, excluding `center`, ascending by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    pub hops: usize,
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn n_hop_neighborhood(g: &Graph, center: usize, hops: usize) -> Neighborhood {
    let mut visited: HashMap<usize, usize> = HashMap::new();
    visited.insert(center, 0);
    let mut frontier = vec![center];
    for depth in 1..=hops {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in g.neighbors(v) {
                if let std::collections::hash_map::Entry::Vacant(e) = visited.entry(w) {
                    e.insert(depth);
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let mut members: Vec<usize> = visited.into_keys().filter(|&v| v != center).collect();
    members.sort_unstable();
    Neighborhood {
        center,
        hops,
        members,
    }
}
