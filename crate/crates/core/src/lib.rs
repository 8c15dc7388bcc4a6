//! Wave scattering on thin-fiber networks through their limiting quantum graphs.
//!
//! A network of thin channels joined at junctions is modeled by a metric graph:
//! each channel carries finitely many propagating transverse modes, and each
//! junction couples them through a scattering matrix `T_v`. [`solver`] builds
//! and solves the graph problem, [`helmholtz`] computes junction matrices and
//! whole-network answers from a finite-difference discretization of the
//! Helmholtz equation, and [`spectrum`] runs sweeps over `lambda`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod bessel;
pub mod cross_section;
pub mod dense;
pub mod error;
pub mod graph;
pub mod helmholtz;
pub mod phase;
pub mod schema;
pub mod solver;
pub mod spectrum;

pub use dense::{CMatrix, C64};
pub use error::{Error, Result};
pub use graph::{
    global_ordering, validate_graph, Channel, ChannelLength, CrossSectionShape, End,
    GlobalModeOrdering, JunctionModel, JunctionSample, MetricGraph, Provenance, ValidationReport,
    Vertex, Violation,
};
pub use helmholtz::{Direction, JunctionMatrix, PlanarGeometry, Stub};
pub use solver::{
    EdgeWaveField, NetworkScattering, SolveRequest, Solution, VertexScatteringResolved,
};
pub use spectrum::{SweepResult, ThresholdFit};
