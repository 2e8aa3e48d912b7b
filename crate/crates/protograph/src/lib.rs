//! Multi-scale protein graphs with a self-contained learning core.
//!
//! A protein is represented on two coupled layers: a triangulated molecular
//! surface (one node per mesh vertex) and a residue-level structure graph,
//! joined by directed cross-layer edges on matching residue ids. The surface
//! can be compressed into "molecular superpixels" by greedy entropy-rate
//! maximization. A Weisfeiler-Lehman message passing network encodes the
//! layers for binding-affinity regression and reaction-class prediction.
//!
//! The numeric core (reverse-mode differentiation, Adam, metrics) is
//! implemented in this crate; no external learning framework is involved.

pub mod error;
pub mod geom;
pub mod io;
pub mod ligand;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod multiscale;
pub mod optim;
pub mod protein;
pub mod sasa;
pub mod split;
pub mod structure;
pub mod superpixel;
pub mod surface;
pub mod synth;
pub mod tables;
pub mod train;
pub mod tensor;

pub use error::{Error, Result};
