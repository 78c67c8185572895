//! Numerical certification of transversality for critical relations of
//! rational maps.
//!
//! The library detects critical relations of a rational map, organizes them
//! into proper collections, differentiates the relation defects along the
//! tangent space of the appropriate map family, and certifies the rank of
//! the resulting Jacobian by its singular value spectrum. When the rank is
//! deficient it extracts the dual object: a quadratic differential that is
//! invariant under the push-forward operator of the map, which the flexible
//! Lattes family exhibits.

pub mod commands;
pub mod error;
pub mod fixtures;
pub mod lattes;
pub mod linalg;
pub mod moebius;
pub mod num;
pub mod poly;
pub mod qdiff;
pub mod ratmap;
pub mod relations;
pub mod report;
pub mod roots;
pub mod transversality;
pub mod util;

pub use error::{Error, Result};
pub use num::Pt;
pub use poly::Poly;
