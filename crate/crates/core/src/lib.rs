//! Force-directed layout engine for general undirected graphs.
//!
//! The crate is organised around three layers:
//!
//! * [`graph`] — weighted undirected graphs, shortest-path distances,
//!   connected components and diameters.
//! * [`forces`] + [`optimizer`] — six force rules blended into one composite
//!   field, minimised by a two-phase schedule (adaptive per-node steepest
//!   descent followed by conjugate-gradient steps under a global
//!   temperature).
//! * [`multilevel`], [`partition`], [`fuzzy`] — three coarsening pipelines
//!   (edge-collapse / independent-set matching, base-graph partitioning with
//!   circle-constrained expansion, and fuzzy membership matrices) that seed
//!   the optimizer level by level.
//!
//! All randomness flows from explicit `u64` seeds through ChaCha streams, so
//! every pipeline is a pure function of (graph, config, seed).

pub mod error;
pub mod forces;
pub mod fuzzy;
pub mod gen;
pub mod geometry;
pub mod graph;
pub mod multilevel;
pub mod optimizer;
pub mod partition;
pub mod seed;

pub use error::{Error, Result};
pub use forces::{ForceConfig, ForceField, ForceRule};
pub use geometry::Vec2;
pub use graph::{DistanceMatrix, DistanceMode, Graph, Layout, NodeId};
pub use optimizer::{OptimizerSettings, OptimizerState};
pub use seed::derive_seed;
