//! Discrete laboratory for the L-infinity Rayleigh quotient on grid graphs.
//!
//! Domains are rasterized onto a lattice with an 8-neighbor stencil
//! (2-neighbor in 1D). Every module measures lengths with the same graph
//! metric, so discrete Lipschitz constants, geodesic distances and transport
//! costs are exactly dual to each other.

pub mod cli;
pub mod domain;
pub mod eigensolve;
pub mod error;
pub mod lipcalc;
pub mod measures;
pub mod metric;
pub mod transport;

pub use error::{Error, Result};
