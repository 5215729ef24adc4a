//! Finite-resolution analysis of continuous flows.
//!
//! A planar vector field (or a user-supplied directed cell graph) is turned
//! into a multivalued cell map — a [`graph::FlowGraph`] — whose iterated
//! image filtration plays the role of the family of absorbing regions of the
//! flow. On top of that filtration the crate computes:
//!
//! * the eventual image (the minimal absorbing cell set) and its bar variant
//!   obtained by closing each filtration level under spatial adjacency
//!   ([`externology`]),
//! * recurrent components, a multi-resolution end tree and the basin
//!   decomposition induced by the end of each trajectory ([`ends`]),
//! * serialized analysis reports and basin images ([`report`], [`render`]).
//!
//! Numeric ingestion ([`dynamics`]) is generic over the scalar type through
//! [`scalar::Scalar`]; `f64` aliases for the public numeric types live at the
//! crate root.

pub mod dynamics;
pub mod ends;
pub mod externology;
pub mod graph;
pub mod render;
pub mod report;
pub mod scalar;

#[cfg(test)]
pub(crate) mod fixtures;

pub use ends::{BasinAssignment, BasinMap, ComponentPartition, EndTree};
pub use externology::AbsorbingFiltration;
pub use graph::{CellId, CellLabel, CellSet, FlowGraph};
pub use report::AnalysisReport;
pub use scalar::Scalar;

/// Double-precision vector field, the variant the CLI drives.
pub type VectorField64 = dynamics::VectorField<f64>;
/// Double-precision grid specification.
pub type GridSpec64 = dynamics::GridSpec<f64>;
/// Double-precision outer-approximation configuration.
pub type OuterApproxConfig64 = dynamics::OuterApproxConfig<f64>;
/// Double-precision point of the plane.
pub type Point64 = dynamics::Point<f64>;
