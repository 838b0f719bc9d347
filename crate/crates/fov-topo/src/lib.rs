//! Topology control for multi-robot systems whose sensing is directed and
//! limited to circular field-of-view sectors.
//!
//! The crate is organized around five pieces:
//!
//! - [`graph`]: directed graphs, incidence/Laplacian algebra, the structural
//!   Lyapunov matrix and its positive-semidefiniteness certificate.
//! - [`fov`]: exact sector geometry, its disk-intersection approximation via
//!   rigidly attached virtual points, a numeric fitter, and sensing-graph
//!   construction.
//! - [`extended`]: the replicated extended system, Kronecker incidence
//!   matrices, coupling and selector matrices, and the weight-flip identity.
//! - [`control`]: barrier potentials with analytic gradients, the per-agent
//!   link-maintenance law, collision avoidance, system energy, and the
//!   energy-rate quadratic form.
//! - [`sim`]: a deterministic scenario engine with event detection and
//!   trajectory/energy logging.

pub mod control;
pub mod extended;
pub mod fov;
pub mod graph;
pub mod sim;

pub use fov::AgentPose;
pub use graph::DirectedGraph;
