//! Post-hoc refinement of vectors toward their neighbours in a relation graph.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{read_file, Error, Result};
use crate::io::VectorSet;
use crate::knowledge::AnnotationMap;

pub const DEFAULT_ITERATIONS: usize = 10;

/// Undirected graph over word types with a weight `alpha` per vertex and a
/// weight `beta` per edge endpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrofitGraph {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    alpha: Vec<f64>,
    /// `(j, beta_ij)` for every neighbour `j` of `i`, in insertion order.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl RetrofitGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.vertices.len();
        self.index.insert(name.to_owned(), i);
        self.vertices.push(name.to_owned());
        self.alpha.push(1.0);
        self.neighbors.push(Vec::new());
        i
    }

    /// Add the undirected edge `{a, b}` if absent. Both endpoint weights are
    /// set to 1 until [`RetrofitGraph::normalize_by_degree`] or
    /// [`RetrofitGraph::set_beta`] changes them.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<()> {
        if a == b {
            return Err(Error::Invalid(format!("self-loop on `{a}`")));
        }
        let i = self.add_vertex(a);
        let j = self.add_vertex(b);
        if !self.neighbors[i].iter().any(|&(n, _)| n == j) {
            self.neighbors[i].push((j, 1.0));
            self.neighbors[j].push((i, 1.0));
        }
        Ok(())
    }

    /// `beta_ij = 1 / degree(i)` for every edge endpoint.
    pub fn normalize_by_degree(&mut self) {
        for adj in &mut self.neighbors {
            let w = 1.0 / adj.len() as f64;
            for (_, b) in adj.iter_mut() {
                *b = w;
            }
        }
    }

    pub fn set_alpha(&mut self, vertex: &str, alpha: f64) -> Result<()> {
        let i = self.vertex(vertex)?;
        self.alpha[i] = alpha;
        Ok(())
    }

    pub fn set_all_alpha(&mut self, alpha: f64) {
        self.alpha.fill(alpha);
    }

    /// Set the weight of the `i` end of edge `{i, j}`.
    pub fn set_beta(&mut self, i: &str, j: &str, beta: f64) -> Result<()> {
        let (a, b) = (self.vertex(i)?, self.vertex(j)?);
        let slot = self.neighbors[a]
            .iter_mut()
            .find(|(n, _)| *n == b)
            .ok_or_else(|| Error::Invalid(format!("no edge between `{i}` and `{j}`")))?;
        slot.1 = beta;
        Ok(())
    }

    fn vertex(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownToken(name.to_owned()))
    }

    /// Graph from word pairs with default weights.
    pub fn from_edges<A: AsRef<str>, B: AsRef<str>>(
        edges: impl IntoIterator<Item = (A, B)>,
    ) -> Result<Self> {
        let mut g = RetrofitGraph::new();
        for (a, b) in edges {
            g.add_edge(a.as_ref(), b.as_ref())?;
        }
        g.normalize_by_degree();
        Ok(g)
    }

    /// Plain `word<TAB>word` edge list; `#` lines and blank lines are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut g = RetrofitGraph::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 2 || f.iter().any(|s| s.is_empty()) {
                return Err(Error::parse(i + 1, "expected `word<TAB>word`"));
            }
            g.add_edge(f[0], f[1])
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        g.normalize_by_degree();
        Ok(g)
    }

    pub fn from_edge_file(path: &Path) -> Result<Self> {
        Self::parse_edge_list(&read_file(path)?).map_err(|e| Error::in_file(path, e))
    }

    /// Every pair of tokens sharing an annotation becomes an edge.
    pub fn from_annotations(map: &AnnotationMap) -> Self {
        let mut g = RetrofitGraph::new();
        for name in map.annotation_names() {
            let members = map.carriers(name);
            for (k, a) in members.iter().enumerate() {
                for b in &members[k + 1..] {
                    g.add_edge(a, b).expect("carriers are distinct");
                }
            }
        }
        g.normalize_by_degree();
        g
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, vertex: &str) -> Option<&[(usize, f64)]> {
        self.index
            .get(vertex)
            .map(|&i| self.neighbors[i].as_slice())
    }

    /// Row of each vertex in `vectors`.
    fn rows(&self, vectors: &VectorSet) -> Result<Vec<usize>> {
        self.vertices
            .iter()
            .map(|v| {
                vectors
                    .index_of(v)
                    .ok_or_else(|| Error::MissingVector(v.clone()))
            })
            .collect()
    }
}

/// Coordinate updates `q_i = (alpha_i q̂_i + Σ_j beta_ij q_j) / (alpha_i + Σ_j beta_ij)`
/// over the graph vertices in order, `iterations` times. Vectors outside the
/// graph, isolated vertices and vertices whose weights sum to zero keep their
/// input values.
pub fn retrofit(q_hat: &VectorSet, graph: &RetrofitGraph, iterations: usize) -> Result<VectorSet> {
    retrofit_observed(q_hat, graph, iterations, |_, _| {})
}

/// [`retrofit`], calling `observe(sweep, q)` after each sweep.
pub fn retrofit_observed(
    q_hat: &VectorSet,
    graph: &RetrofitGraph,
    iterations: usize,
    mut observe: impl FnMut(usize, &VectorSet),
) -> Result<VectorSet> {
    if iterations == 0 {
        return Err(Error::Invalid(
            "retrofitting needs at least one iteration".into(),
        ));
    }
    let rows = graph.rows(q_hat)?;
    let dim = q_hat.dim();
    let mut q = q_hat.clone();
    let mut acc = vec![0.0; dim];
    for sweep in 1..=iterations {
        for (i, adj) in graph.neighbors.iter().enumerate() {
            let beta_sum: f64 = adj.iter().map(|&(_, b)| b).sum();
            let denom = graph.alpha[i] + beta_sum;
            if adj.is_empty() || beta_sum == 0.0 || denom == 0.0 {
                continue;
            }
            let alpha = graph.alpha[i];
            for (a, &x) in acc.iter_mut().zip(q_hat.row(rows[i])) {
                *a = alpha * x;
            }
            for &(j, b) in adj {
                for (a, &x) in acc.iter_mut().zip(q.row(rows[j])) {
                    *a += b * x;
                }
            }
            for (out, &a) in q.row_mut(rows[i]).iter_mut().zip(&acc) {
                *out = a / denom;
            }
        }
        observe(sweep, &q);
    }
    Ok(q)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `Σ_i alpha_i ||q_i - q̂_i||² + Σ_{i<j, {i,j} ∈ E} (beta_ij + beta_ji)/2 · ||q_i - q_j||²`,
/// each undirected edge counted once. Vectors outside the graph contribute nothing.
pub fn objective_value(q: &VectorSet, q_hat: &VectorSet, graph: &RetrofitGraph) -> Result<f64> {
    let rows_q = graph.rows(q)?;
    let rows_hat = graph.rows(q_hat)?;
    let mut total = 0.0;
    for (i, adj) in graph.neighbors.iter().enumerate() {
        let qi = q.row(rows_q[i]);
        total += graph.alpha[i] * squared_distance(qi, q_hat.row(rows_hat[i]));
        for &(j, b_ij) in adj {
            if j <= i {
                continue;
            }
            let b_ji = graph.neighbors[j]
                .iter()
                .find(|&&(n, _)| n == i)
                .map_or(0.0, |&(_, b)| b);
            total += 0.5 * (b_ij + b_ji) * squared_distance(qi, q.row(rows_q[j]));
        }
    }
    Ok(total)
}
