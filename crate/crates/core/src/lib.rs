//! Constraint-preserving hybrid finite elements for Maxwell's equations in two
//! space dimensions.
//!
//! The vector potential lives in a broken (element-wise) polynomial space.
//! Tangential continuity is imposed weakly through a continuous Lagrange
//! multiplier, whose optional post-processing yields a numerical magnetic
//! trace `Ĥ` and a div-conforming electric flux `D̂` that conserves charge
//! exactly on every cell.

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod frequencydomain;
pub mod io;
pub mod mesh;
pub mod recovery;
pub mod refelem;
pub mod solvers;
pub mod spaces;
pub mod timedomain;

pub use error::{Error, Result};
pub use mesh::{CellGeometry, Mesh, Rect};
