//! Network analysis: degree, eigenvector, and Katz centrality on the
//! one-mode object projection, and motion-frequency statistics on the
//! universal graph.
//!
//! All analyses are read-only over immutable graphs. Centrality operates
//! on the projection's multiplicity edges; eigenvector centrality is
//! computed on the symmetrized matrix A + Aᵀ because the projection is
//! largely acyclic and a directed dominant eigenvector degenerates on DAGs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{FoonGraph, Node, ObjectGraph, ObjectNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Degree,
    Eigenvector,
    Katz,
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measure::Degree => f.write_str("degree"),
            Measure::Eigenvector => f.write_str("eigenvector"),
            Measure::Katz => f.write_str("katz"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("centrality requires a non-empty graph")]
    EmptyGraph,
    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        /// Last normalized iterate, in node order.
        last: Vec<f64>,
    },
    #[error("alpha {alpha} is out of range: must satisfy 0 <= alpha < 1/{lambda_max:.6} (1/lambda_max)")]
    AlphaOutOfRange { alpha: f64, lambda_max: f64 },
}

/// Centrality scores for every node of a projection, sorted descending
/// (ties by node label), plus the parameters the run used.
#[derive(Debug, Clone)]
pub struct CentralityReport {
    pub measure: Measure,
    entries: Vec<(ObjectNode, f64)>,
    pub parameters: BTreeMap<String, f64>,
}

impl CentralityReport {
    fn new(
        measure: Measure,
        graph: &ObjectGraph,
        scores: Vec<f64>,
        parameters: BTreeMap<String, f64>,
    ) -> Self {
        let mut entries: Vec<(ObjectNode, f64)> = graph
            .nodes()
            .iter()
            .cloned()
            .zip(scores)
            .collect();
        entries.sort_by(|(na, sa), (nb, sb)| {
            sb.partial_cmp(sa)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| na.label().cmp(&nb.label()))
        });
        CentralityReport {
            measure,
            entries,
            parameters,
        }
    }

    /// Entries in descending score order.
    pub fn entries(&self) -> &[(ObjectNode, f64)] {
        &self.entries
    }

    pub fn score(&self, node: &ObjectNode) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == node).map(|(_, s)| *s)
    }

    /// CSV rendering: `node,score`, descending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,score\n");
        for (node, score) in &self.entries {
            out.push_str(&csv_field(&node.label()));
            out.push(',');
            out.push_str(&format!("{score}\n"));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Total-degree centrality: in-degree plus out-degree, counting edge
/// multiplicities. A self-loop contributes to both.
pub fn degree_centrality(graph: &ObjectGraph) -> CentralityReport {
    let mut scores = vec![0.0; graph.node_count()];
    for ((from, to), mult) in graph.edges() {
        scores[from] += mult as f64;
        scores[to] += mult as f64;
    }
    CentralityReport::new(Measure::Degree, graph, scores, BTreeMap::new())
}

/// Eigenvector centrality by power iteration on A + Aᵀ.
///
/// Iterates are normalized to unit Euclidean norm; convergence is declared
/// when successive normalized iterates differ by less than `tolerance` in
/// max-norm. Iteration runs on the spectrum-shifted matrix (A + Aᵀ + I),
/// which has the same eigenvectors and converges on bipartite-like graphs
/// where ±λ eigenvalue pairs would otherwise oscillate.
pub fn eigenvector_centrality(
    graph: &ObjectGraph,
    tolerance: f64,
    max_iterations: usize,
) -> Result<CentralityReport, AnalysisError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(AnalysisError::EmptyGraph);
    }
    // Symmetrized multiplicity edges, kept sparse.
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for ((from, to), mult) in graph.edges() {
        *sym.entry((from, to)).or_insert(0.0) += mult as f64;
        *sym.entry((to, from)).or_insert(0.0) += mult as f64;
    }

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for iteration in 0..max_iterations {
        // y = (S + I) x
        let mut y = x.clone();
        for (&(i, j), &w) in &sym {
            y[i] += w * x[j];
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break; // edgeless graph: any vector is an eigenvector of S = 0
        }
        for v in &mut y {
            *v /= norm;
        }
        let diff = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if diff < tolerance {
            let mut params = BTreeMap::new();
            params.insert("tolerance".into(), tolerance);
            params.insert("max_iterations".into(), max_iterations as f64);
            params.insert("iterations".into(), (iteration + 1) as f64);
            return Ok(CentralityReport::new(Measure::Eigenvector, graph, x, params));
        }
    }
    if sym.is_empty() {
        let mut params = BTreeMap::new();
        params.insert("tolerance".into(), tolerance);
        params.insert("max_iterations".into(), max_iterations as f64);
        return Ok(CentralityReport::new(Measure::Eigenvector, graph, x, params));
    }
    Err(AnalysisError::NoConvergence {
        iterations: max_iterations,
        last: x,
    })
}

/// Spectral-radius estimate of the directed multiplicity matrix by power
/// iteration from a positive start vector. Returns 0 for nilpotent graphs.
pub fn spectral_radius_estimate(graph: &ObjectGraph) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 0.0;
    }
    let edges: Vec<((usize, usize), f64)> = graph
        .edges()
        .map(|(k, m)| (k, m as f64))
        .collect();
    let mut x = vec![1.0; n];
    let mut estimate = 0.0;
    for _ in 0..500 {
        let mut y = vec![0.0; n];
        for &((i, j), w) in &edges {
            y[j] += w * x[i];
        }
        let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0; // nilpotent: all walks die out
        }
        let next = norm;
        for v in &mut y {
            *v /= norm;
        }
        let done = (next - estimate).abs() < 1e-12 * next.max(1.0);
        estimate = next;
        x = y;
        if done {
            break;
        }
    }
    estimate
}

/// Katz centrality: the fixed point of x = alpha Aᵀ x + beta 1, so incoming
/// edges confer centrality. Requires 0 <= alpha < 1/lambda_max (any alpha
/// when the graph is nilpotent). Iterated until the residual
/// ‖x − alpha Aᵀ x − beta 1‖∞ drops below 1e-10.
pub fn katz_centrality(
    graph: &ObjectGraph,
    alpha: f64,
    beta: f64,
) -> Result<CentralityReport, AnalysisError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(AnalysisError::EmptyGraph);
    }
    let lambda_max = spectral_radius_estimate(graph);
    if alpha < 0.0 || (lambda_max > 0.0 && alpha * lambda_max >= 1.0) {
        return Err(AnalysisError::AlphaOutOfRange { alpha, lambda_max });
    }

    let edges: Vec<((usize, usize), f64)> = graph
        .edges()
        .map(|(k, m)| (k, m as f64))
        .collect();
    let mut x = vec![beta; n];
    let max_iterations = 200_000;
    for iteration in 0..max_iterations {
        // y = alpha Aᵀ x + beta 1
        let mut y = vec![beta; n];
        for &((i, j), w) in &edges {
            y[j] += alpha * w * x[i];
        }
        let residual = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if residual < 1e-10 {
            let mut params = BTreeMap::new();
            params.insert("alpha".into(), alpha);
            params.insert("beta".into(), beta);
            params.insert("iterations".into(), (iteration + 1) as f64);
            return Ok(CentralityReport::new(Measure::Katz, graph, x, params));
        }
    }
    Err(AnalysisError::NoConvergence {
        iterations: max_iterations,
        last: x,
    })
}

/// Default Katz parameters for a graph: alpha = 0.85 / lambda_max when the
/// spectral radius is positive (0.1 for nilpotent graphs), beta = 1.
pub fn katz_defaults(graph: &ObjectGraph) -> (f64, f64) {
    let lambda_max = spectral_radius_estimate(graph);
    let alpha = if lambda_max > 0.0 { 0.85 / lambda_max } else { 0.1 };
    (alpha, 1.0)
}

/// Motion instance counts per label, sorted descending (ties alphabetical).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionHistogram {
    entries: Vec<(String, usize)>,
    total: usize,
}

impl MotionHistogram {
    /// Entries in descending count order.
    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn count(&self, label: &str) -> usize {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    }

    /// CSV rendering: `motion,count`, descending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("motion,count\n");
        for (label, count) in &self.entries {
            out.push_str(&csv_field(label));
            out.push_str(&format!(",{count}\n"));
        }
        out
    }
}

/// Counts motion-node instances per label across the whole graph.
pub fn motion_frequency(graph: &FoonGraph) -> MotionHistogram {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0;
    for (_, node) in graph.nodes() {
        if let Node::Motion(m) = node {
            *counts.entry(m.label().to_string()).or_insert(0) += 1;
            total += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = counts.into_iter().collect();
    entries.sort_by(|(la, ca), (lb, cb)| cb.cmp(ca).then_with(|| la.cmp(lb)));
    MotionHistogram { entries, total }
}
