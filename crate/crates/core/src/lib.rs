//! C¹-Pₖ Fraeijs de Veubeke–Sander macro elements on quadrilateral meshes.
//!
//! Each quadrilateral is split by its diagonals into four triangles carrying
//! degree-`k` polynomials glued to a C¹ function. Two global families are
//! provided: the full C¹-Pₖ macro space ([`space::Family::Full`]) and a
//! condensed space sharing the higher normal-derivative data across edges
//! ([`space::Family::Condensed`]).

pub mod assembly;
pub mod element;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod poly;
pub mod space;
pub mod sparse;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
