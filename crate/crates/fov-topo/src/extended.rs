//! The extended system: every agent is replicated once per (edge slot, point)
//! pair, giving Kronecker-structured incidence matrices, the coupling matrix
//! that ties all replicas of an agent to one velocity, the selector matrices
//! that zero the non-interacting replicas, the weight-flip identity, and the
//! factorization of the extended structural Lyapunov matrix.
//!
//! Two flat orderings of the replicated state appear throughout. The
//! *canonical* ordering is block-major by (edge slot, point index) with the
//! agent fastest, `flat = (slot * P + point) * n + agent`; under it the
//! extended incidence matrix is `I_{P|E|} ⊗ B`. The *agent-major* ordering,
//! `flat = agent * P|E| + slot * P + point`, is its perfect shuffle; under it
//! the coupling matrix is block diagonal (`I_n ⊗ J`) and the structural
//! factorization reads `S ⊗ J`. [`extended_structural_matrix`] computes the
//! full product in one ordering, shuffles, and compares against the factored
//! form, so any break of either convention is caught at run time.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{DirectedGraph, GraphError};

#[derive(Debug, Error)]
pub enum ExtendedError {
    #[error("extended constructions require at least one edge")]
    EmptyEdgeSet,
    #[error("replica count P must be at least 1")]
    InvalidReplicaCount,
    #[error("dimension argument must be at least 1")]
    InvalidDimension,
    #[error("edge Laplacian is singular: the graph contains a cycle through vertices {0:?}")]
    NotAForest(Vec<usize>),
    #[error("expected {expected} edge weights, got {got}")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("edge weight {index} must be positive and finite, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("extended edge Laplacian inversion failed")]
    SingularEdgeLaplacian,
    #[error(
        "structural factorization mismatch (max abs residual {residual}): \
         the flat-indexing convention is broken"
    )]
    IndexingMismatch { residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Canonical bijection between (agent, edge slot, point) triples and flat
/// replica indices. `points_per_slot` defaults to 4 in callers: the agent
/// itself plus its three virtual points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaIndexing {
    pub agents: usize,
    pub edge_slots: usize,
    pub points_per_slot: usize,
}

impl ReplicaIndexing {
    pub fn new(agents: usize, edge_slots: usize, points_per_slot: usize) -> Self {
        Self {
            agents,
            edge_slots,
            points_per_slot,
        }
    }

    /// Replica slots per agent: `P |E|`.
    pub fn slots(&self) -> usize {
        self.points_per_slot * self.edge_slots
    }

    /// Total flat indices: `n P |E|`.
    pub fn len(&self) -> usize {
        self.agents * self.slots()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical flat index: block-major by (edge slot, point), agent fastest.
    pub fn flat(&self, agent: usize, slot: usize, point: usize) -> usize {
        debug_assert!(agent < self.agents && slot < self.edge_slots && point < self.points_per_slot);
        (slot * self.points_per_slot + point) * self.agents + agent
    }

    /// Agent-major flat index, the perfect shuffle of [`Self::flat`].
    pub fn agent_major(&self, agent: usize, slot: usize, point: usize) -> usize {
        agent * self.slots() + slot * self.points_per_slot + point
    }

    /// Permutation matrix carrying canonical coordinates to agent-major ones.
    fn shuffle_i64(&self) -> DMatrix<i64> {
        let mut p = DMatrix::zeros(self.len(), self.len());
        for agent in 0..self.agents {
            for slot in 0..self.edge_slots {
                for point in 0..self.points_per_slot {
                    p[(
                        self.agent_major(agent, slot, point),
                        self.flat(agent, slot, point),
                    )] = 1;
                }
            }
        }
        p
    }
}

/// The replicated graph's incidence matrices under the canonical ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedGraph {
    pub base: DirectedGraph,
    /// `I_{P|E|} ⊗ B`, of size `nP|E| × P|E|²`.
    pub b_bar: DMatrix<f64>,
    /// `I_{P|E|} ⊗ B₊`, same shape.
    pub b_bar_plus: DMatrix<f64>,
    pub indexing: ReplicaIndexing,
}

/// Replicates the incidence matrices of `g` across `P |E|` slots.
pub fn build_extended_graph(g: &DirectedGraph, p: usize) -> Result<ExtendedGraph, ExtendedError> {
    let (b_bar, b_bar_plus, indexing) = extended_incidence_i64(g, p)?;
    Ok(ExtendedGraph {
        base: g.clone(),
        b_bar: b_bar.map(|v| v as f64),
        b_bar_plus: b_bar_plus.map(|v| v as f64),
        indexing,
    })
}

fn extended_incidence_i64(
    g: &DirectedGraph,
    p: usize,
) -> Result<(DMatrix<i64>, DMatrix<i64>, ReplicaIndexing), ExtendedError> {
    if g.edge_count() == 0 {
        return Err(ExtendedError::EmptyEdgeSet);
    }
    if p == 0 {
        return Err(ExtendedError::InvalidReplicaCount);
    }
    let indexing = ReplicaIndexing::new(g.vertex_count(), g.edge_count(), p);
    let eye = eye_i64(indexing.slots());
    let b_bar = kron_i64(&eye, &g.incidence_i64());
    let b_bar_plus = kron_i64(&eye, &g.outgoing_incidence_i64());
    Ok((b_bar, b_bar_plus, indexing))
}

/// The coupling matrix `I_n ⊗ J_{P|E|}`: block diagonal with one all-ones
/// block per agent, tying the agent's replicas to a single shared velocity.
/// Expressed in agent-major coordinates.
pub fn coupling_matrix(n: usize, p: usize, e: usize) -> Result<DMatrix<f64>, ExtendedError> {
    if n == 0 || p == 0 || e == 0 {
        return Err(ExtendedError::InvalidDimension);
    }
    Ok(coupling_matrix_i64(n, p, e).map(|v| v as f64))
}

fn coupling_matrix_i64(n: usize, p: usize, e: usize) -> DMatrix<i64> {
    kron_i64(&eye_i64(n), &ones_i64(p * e))
}

/// The same coupling expressed in canonical coordinates: `J_{P|E|} ⊗ I_n`.
pub(crate) fn canonical_coupling_i64(n: usize, p: usize, e: usize) -> DMatrix<i64> {
    kron_i64(&ones_i64(p * e), &eye_i64(n))
}

/// The extended structural matrix together with the residual of its
/// factorization check.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCheck {
    /// `S ⊗ J_{P|E|}`, in agent-major coordinates.
    pub matrix: DMatrix<f64>,
    /// Max elementwise deviation of the full product from the factored form.
    pub max_abs_residual: f64,
}

/// Computes `B̄ B̄ᵀ C B̄₊ B̄ᵀ` in exact integer arithmetic and verifies it
/// against the factored form `S ⊗ J_{P|E|}`. The product is evaluated under
/// the canonical ordering (with the coupling conjugated to match) and then
/// shuffled to agent-major, where the factorization is stated.
pub fn extended_structural_matrix_checked(
    g: &DirectedGraph,
    p: usize,
) -> Result<FactorizationCheck, ExtendedError> {
    let (b_bar, b_bar_plus, indexing) = extended_incidence_i64(g, p)?;
    let coupling = canonical_coupling_i64(indexing.agents, p, indexing.edge_slots);
    let product = &b_bar * b_bar.transpose() * coupling * b_bar_plus * b_bar.transpose();

    let shuffle = indexing.shuffle_i64();
    let product_am = &shuffle * product * shuffle.transpose();
    let factored = kron_i64(&g.structural_lyapunov_i64(), &ones_i64(indexing.slots()));

    let residual = (&product_am - &factored)
        .iter()
        .map(|v| (*v as f64).abs())
        .fold(0.0, f64::max);
    if residual > 1e-12 {
        return Err(ExtendedError::IndexingMismatch { residual });
    }
    Ok(FactorizationCheck {
        matrix: factored.map(|v| v as f64),
        max_abs_residual: residual,
    })
}

/// The extended structural Lyapunov matrix `S ⊗ J_{P|E|}`. The factorization
/// is asserted against the full product, not assumed.
pub fn extended_structural_matrix(
    g: &DirectedGraph,
    p: usize,
) -> Result<DMatrix<f64>, ExtendedError> {
    Ok(extended_structural_matrix_checked(g, p)?.matrix)
}

/// The gradient selector `H` and the state selector `T_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMatrices {
    /// Diagonal 0/1 matrix of size `P|E|² × P|E|²` keeping exactly the
    /// gradient slots whose edge-replica index equals their edge index.
    pub h: DMatrix<f64>,
    /// 0/1 matrix of size `nP|E| × 2P|E|` replicating each agent's per-edge
    /// compact state into the replica slots of its own edges and writing
    /// zero rows for every replica of a vertex outside the interaction set.
    pub t_x: DMatrix<f64>,
}

/// Builds both selector matrices under the canonical ordering.
pub fn build_selectors(g: &DirectedGraph, p: usize) -> Result<SelectorMatrices, ExtendedError> {
    if g.edge_count() == 0 {
        return Err(ExtendedError::EmptyEdgeSet);
    }
    if p == 0 {
        return Err(ExtendedError::InvalidReplicaCount);
    }
    Ok(SelectorMatrices {
        h: selector_h_i64(g.edge_count(), p).map(|v| v as f64),
        t_x: selector_t_x_i64(g, p).map(|v| v as f64),
    })
}

/// Columns of `B̄` are indexed by (replica slot, edge); the slot survives iff
/// it belongs to the replica of that same edge.
fn selector_h_i64(e: usize, p: usize) -> DMatrix<i64> {
    let dim = p * e * e;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i != j {
            return 0;
        }
        let slot = i / e; // slot = edge_replica * p + point
        let edge = i % e;
        i64::from(slot / p == edge)
    })
}

/// Compact state layout: agent-major, each agent contributing `P` points per
/// edge it participates in, edges in global order.
fn selector_t_x_i64(g: &DirectedGraph, p: usize) -> DMatrix<i64> {
    let n = g.vertex_count();
    let e = g.edge_count();
    let involved: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            g.edges()
                .iter()
                .enumerate()
                .filter(|(_, &(t, h))| t == i || h == i)
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + p * involved[i].len();
    }
    debug_assert_eq!(offsets[n], 2 * p * e);

    let indexing = ReplicaIndexing::new(n, e, p);
    let mut t_x = DMatrix::zeros(indexing.len(), 2 * p * e);
    for (edge, &(tail, head)) in g.edges().iter().enumerate() {
        for point in 0..p {
            for agent in [tail, head] {
                let rank = involved[agent].iter().position(|&k| k == edge).unwrap();
                let col = offsets[agent] + rank * p + point;
                t_x[(indexing.flat(agent, edge, point), col)] = 1;
            }
        }
    }
    t_x
}

/// The flipped weight matrix `Ŵ = B̄ (B̄ᵀB̄)⁻¹ H W̄ B̄ᵀ T_x`, which satisfies
/// `H W̄ B̄ᵀ T_x = B̄ᵀ Ŵ` whenever the edge Laplacian is invertible. `W̄`
/// carries one positive weight per original edge, replicated across slots.
pub fn flipped_weight(
    g: &DirectedGraph,
    p: usize,
    edge_weights: &[f64],
) -> Result<DMatrix<f64>, ExtendedError> {
    let (lhs, b_bar) = weighted_gradient_map(g, p, edge_weights)?;
    let le_bar = b_bar.transpose() * &b_bar;
    let le_inv = le_bar
        .try_inverse()
        .ok_or(ExtendedError::SingularEdgeLaplacian)?;
    Ok(&b_bar * le_inv * lhs)
}

/// Max elementwise residual of the weight-flip identity for the given graph
/// and weights.
pub fn lemma_identity_residual(
    g: &DirectedGraph,
    p: usize,
    edge_weights: &[f64],
) -> Result<f64, ExtendedError> {
    let (lhs, b_bar) = weighted_gradient_map(g, p, edge_weights)?;
    let w_hat = {
        let le_bar = b_bar.transpose() * &b_bar;
        let le_inv = le_bar
            .try_inverse()
            .ok_or(ExtendedError::SingularEdgeLaplacian)?;
        &b_bar * le_inv * &lhs
    };
    let rhs = b_bar.transpose() * w_hat;
    Ok((lhs - rhs).iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Shared construction of `H W̄ B̄ᵀ T_x` (the left side of the identity) and
/// `B̄`, with the Lemma precondition and weight validation.
fn weighted_gradient_map(
    g: &DirectedGraph,
    p: usize,
    edge_weights: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>), ExtendedError> {
    if let Some(cycle) = g.find_cycle() {
        return Err(ExtendedError::NotAForest(cycle));
    }
    if edge_weights.len() != g.edge_count() {
        return Err(ExtendedError::WeightCountMismatch {
            expected: g.edge_count(),
            got: edge_weights.len(),
        });
    }
    for (index, &value) in edge_weights.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(ExtendedError::NonPositiveWeight { index, value });
        }
    }
    let (b_bar_i, _, indexing) = extended_incidence_i64(g, p)?;
    let b_bar = b_bar_i.map(|v| v as f64);
    let e = indexing.edge_slots;

    // W̄ scales the gradient slot (replica r, edge q) by the weight of edge
    // q; in canonical column order that is I_{P|E|} ⊗ diag(w).
    let dim = indexing.slots() * e;
    let w_bar = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            edge_weights[i % e]
        } else {
            0.0
        }
    });
    let h = selector_h_i64(e, p).map(|v| v as f64);
    let t_x = selector_t_x_i64(g, p).map(|v| v as f64);
    Ok((h * w_bar * b_bar.transpose() * t_x, b_bar))
}

pub(crate) fn kron_i64(a: &DMatrix<i64>, b: &DMatrix<i64>) -> DMatrix<i64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub(crate) fn kron_f64(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn eye_i64(n: usize) -> DMatrix<i64> {
    DMatrix::from_fn(n, n, |i, j| i64::from(i == j))
}

fn ones_i64(n: usize) -> DMatrix<i64> {
    DMatrix::from_element(n, n, 1)
}
