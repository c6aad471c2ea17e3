//! Shortest walks in graphs of convex sets (GCS).
//!
//! A GCS pairs each vertex of a directed graph with a compact convex set and a
//! convex quadratic cost, and each edge with a coupling set over the product of
//! its endpoint sets. A walk may revisit vertices and picks a fresh point at
//! every visit.
//!
//! The crate is organized bottom-up:
//!
//! - [`conic`]: a thin modeling layer over a conic solver (LP, QP, SOC, PSD).
//! - [`sets`], [`quadratic`], [`gcs`], [`walk`]: the data model, validation and
//!   the convex restriction of a fixed walk.
//! - [`synthesis`]: S-procedure certificates and the SDP that produces convex
//!   quadratic lower bounds on the cost-to-go.
//! - [`search`]: lookahead greedy search, backtracking, trajectory
//!   reoptimization and cycle shortcutting.
//! - [`oracle`]: exhaustive walk enumeration and the layered-graph expansion.
//! - [`library`]: instance builders (Bézier planning, skill chaining, PWA
//!   control, and a small planar example).

pub mod conic;
pub mod error;
pub mod gcs;
pub mod io;
pub mod library;
pub mod oracle;
pub mod quadratic;
pub mod search;
pub mod sets;
pub mod synthesis;
pub mod tol;
pub mod walk;

pub use error::{GcsError, Result};
pub use gcs::{Edge, EdgeIdx, Gcs, GcsDocument, Vertex, VertexIdx};
pub use quadratic::QuadraticFunction;
pub use sets::ConvexSet;
pub use tol::Tolerances;
pub use walk::WalkSolution;
