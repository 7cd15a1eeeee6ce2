//! Mixed finite elements for `H(div)` on cuboidal hexahedra with flat faces.

pub mod element;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod polyalg;
pub mod solver;
pub mod supplement;
pub mod verify;

pub use error::{HexError, Result};
