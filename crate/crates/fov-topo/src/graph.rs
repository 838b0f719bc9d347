//! Directed-graph representation and the incidence/Laplacian algebra built on it,
//! up to the structural Lyapunov matrix and its positive-semidefiniteness
//! certificate.
//!
//! All incidence-derived products are computed in exact integer arithmetic and
//! only converted to `f64` at the boundary; floating point enters solely through
//! the eigenvalue solver. Edge order is fixed at construction and defines the
//! column order of every derived matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex count must be at least 1")]
    EmptyVertexSet,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate directed edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex index {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("operation requires at least one edge")]
    EmptyEdgeSet,
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("symmetric eigensolver did not converge for a {0}x{0} matrix")]
    EigenDidNotConverge(usize),
}

#[derive(Debug, Deserialize)]
struct RawDirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// A simple directed graph with a fixed vertex count and an ordered edge list.
///
/// Edge insertion order is part of the contract: it fixes the column order of
/// the incidence matrices and, through them, the layout of every Kronecker
/// construction downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDirectedGraph")]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawDirectedGraph> for DirectedGraph {
    type Error = GraphError;

    fn try_from(raw: RawDirectedGraph) -> Result<Self, GraphError> {
        DirectedGraph::new(raw.n, raw.edges)
    }
}

impl DirectedGraph {
    /// Builds a graph, rejecting self-loops, duplicate directed edges and
    /// out-of-range vertex indices.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyVertexSet);
        }
        for (k, &(tail, head)) in edges.iter().enumerate() {
            if tail >= n {
                return Err(GraphError::VertexOutOfRange { index: tail, n });
            }
            if head >= n {
                return Err(GraphError::VertexOutOfRange { index: head, n });
            }
            if tail == head {
                return Err(GraphError::SelfLoop(tail));
            }
            if edges[..k].contains(&(tail, head)) {
                return Err(GraphError::DuplicateEdge(tail, head));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Out-edges of `v` as `(edge index, head)` pairs, in edge order.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, &(tail, _))| tail == v)
            .map(|(k, &(_, head))| (k, head))
    }

    pub(crate) fn incidence_i64(&self) -> DMatrix<i64> {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (k, &(tail, head)) in self.edges.iter().enumerate() {
            b[(tail, k)] = 1;
            b[(head, k)] = -1;
        }
        b
    }

    pub(crate) fn outgoing_incidence_i64(&self) -> DMatrix<i64> {
        self.incidence_i64().map(|v| if v > 0 { v } else { 0 })
    }

    pub(crate) fn structural_lyapunov_i64(&self) -> DMatrix<i64> {
        let b = self.incidence_i64();
        let bp = self.outgoing_incidence_i64();
        &b * b.transpose() * bp * b.transpose()
    }

    /// Incidence matrix: +1 at each edge's tail row, -1 at its head row.
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        self.incidence_i64().map(|v| v as f64)
    }

    /// Incidence matrix with the incoming (-1) entries zeroed.
    pub fn outgoing_incidence_matrix(&self) -> DMatrix<f64> {
        self.outgoing_incidence_i64().map(|v| v as f64)
    }

    /// The undirected Laplacian `B Bᵀ` and the directed Laplacian `B B₊ᵀ`.
    pub fn laplacians(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let b = self.incidence_i64();
        let bp = self.outgoing_incidence_i64();
        let l = &b * b.transpose();
        let ld = &b * bp.transpose();
        (l.map(|v| v as f64), ld.map(|v| v as f64))
    }

    /// The edge Laplacian `Bᵀ B` and the directed edge Laplacian `Bᵀ B₊`.
    ///
    /// Errors on an empty edge set: the edge Laplacian of a graph without
    /// edges is not defined.
    pub fn edge_laplacians(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), GraphError> {
        if self.edges.is_empty() {
            return Err(GraphError::EmptyEdgeSet);
        }
        let b = self.incidence_i64();
        let bp = self.outgoing_incidence_i64();
        let le = b.transpose() * &b;
        let led = b.transpose() * &bp;
        Ok((le.map(|v| v as f64), led.map(|v| v as f64)))
    }

    /// The structural Lyapunov matrix `B Bᵀ B₊ Bᵀ`, exact for integer
    /// incidence inputs.
    pub fn structural_lyapunov_matrix(&self) -> DMatrix<f64> {
        self.structural_lyapunov_i64().map(|v| v as f64)
    }

    /// Returns the vertices of some cycle of the underlying undirected
    /// multigraph (a pair of antiparallel edges counts as a 2-cycle), or
    /// `None` if there is none.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let mut dsu = DisjointSet::new(self.n);
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for &(tail, head) in &self.edges {
            if dsu.find(tail) == dsu.find(head) {
                return Some(undirected_path(&adjacency, tail, head));
            }
            dsu.union(tail, head);
            adjacency[tail].push(head);
            adjacency[head].push(tail);
        }
        None
    }

    /// True iff the underlying undirected multigraph is acyclic, which is
    /// exactly the condition for `Bᵀ B` to be invertible.
    pub fn is_forest(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Tests positive semidefiniteness of the structural Lyapunov matrix.
    ///
    /// `S` is generally asymmetric; since `xᵀSx = xᵀ((S + Sᵀ)/2)x`, the test
    /// checks the smallest eigenvalue of the symmetric part against `-tol`.
    /// When `tol` is `None` it defaults to `1e-9 * max(1, ‖S‖_inf)`.
    pub fn certify_stability(&self, tol: Option<f64>) -> Result<StabilityCertificate, GraphError> {
        if let Some(t) = tol {
            if !t.is_finite() || t < 0.0 {
                return Err(GraphError::InvalidTolerance(t));
            }
        }
        let s = self.structural_lyapunov_matrix();
        let tolerance_used = tol.unwrap_or_else(|| 1e-9 * inf_norm(&s).max(1.0));
        let sym = (&s + s.transpose()) * 0.5;
        let min_eig_sym = min_symmetric_eigenvalue(&sym)?;

        let edge_laplacian_invertible = if self.edges.is_empty() {
            true
        } else {
            let b = self.incidence_matrix();
            let le = b.transpose() * &b;
            let eigs = symmetric_eigenvalues(&le)?;
            let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            min > max / EDGE_LAPLACIAN_CONDITION_LIMIT
        };

        Ok(StabilityCertificate {
            psd: min_eig_sym >= -tolerance_used,
            min_eig_sym,
            edge_laplacian_invertible,
            tolerance_used,
        })
    }
}

/// Condition-number threshold beyond which `Bᵀ B` is reported singular.
pub const EDGE_LAPLACIAN_CONDITION_LIMIT: f64 = 1e12;

/// Outcome of the stability certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    /// `min_eig_sym >= -tolerance_used`.
    pub psd: bool,
    /// Smallest eigenvalue of `(S + Sᵀ)/2`.
    pub min_eig_sym: f64,
    /// Whether `Bᵀ B` is numerically invertible (the graph is a forest).
    pub edge_laplacian_invertible: bool,
    pub tolerance_used: f64,
}

pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>, GraphError> {
    let n = m.nrows();
    nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000)
        .map(|e| e.eigenvalues.iter().cloned().collect())
        .ok_or(GraphError::EigenDidNotConverge(n))
}

pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Result<f64, GraphError> {
    Ok(symmetric_eigenvalues(m)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum())
        .fold(0.0, f64::max)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        self.parent[ra] = rb;
    }
}

/// BFS path from `from` to `to` over the given undirected adjacency.
fn undirected_path(adjacency: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    if from == to {
        return vec![from];
    }
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    prev[from] = from;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if prev[w] == usize::MAX {
                prev[w] = v;
                if w == to {
                    let mut path = vec![to];
                    let mut cur = to;
                    while cur != from {
                        cur = prev[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return path;
                }
                queue.push_back(w);
            }
        }
    }
    // Callers only ask for paths between vertices already known connected.
    unreachable!("no path between {from} and {to}")
}
