//! Discretized domains, analytic shapes and field I/O.

mod field;
mod grid;
pub mod io;
mod shape;

pub use field::ScalarField;
pub use grid::{rasterize, Edge, GridDomain, NodeClass};
pub use io::{load_field, load_shape, save_field, save_pgm};
pub use shape::ShapeSpec;
