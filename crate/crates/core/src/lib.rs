//! Fundamental domains for properly discontinuous isometric group actions.
//!
//! The crate works over three proper geodesic spaces (the Euclidean plane, the
//! Poincaré disk and finite metric graphs). It decides properness conditions by
//! search, computes the quotient metric, builds Voronoi and Dirichlet tessellations,
//! and assembles an open fundamental region and a closed connected fundamental
//! domain from a G-invariant net and a lifted spanning tree.

pub mod action;
pub mod domains;
pub mod error;
pub mod geometry;
pub mod index;
pub mod netting;
pub mod properness;
pub mod quotient;
pub mod run;
pub mod scene;
pub mod svg;
pub mod voronoi;

pub use action::{ActionSystem, GroupElement, Guarantee, Isometry};
pub use error::{Error, Result};
pub use geometry::{Point, SpaceModel, Window};

/// Absolute tolerance for point equality and distance comparisons.
pub const TOL: f64 = 1e-9;
