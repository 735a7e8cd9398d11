//! Zonal multipliers and square functions for Sobolev spaces on the sphere
//! S^{d-1}.
//!
//! Functions are zonal (invariant under rotations fixing a pole) and band
//! limited, so every operator in the crate acts diagonally on the degree ℓ
//! of the spherical-harmonic expansion. The multipliers come from averaging
//! over geodesic caps of radius t, and the square functions integrate the
//! squared remainders of those averages against t^{-2α-1} dt.

pub mod capgeom;
pub mod cli;
pub mod error;
pub mod field;
pub mod io;
pub mod multipliers;
pub mod precision;
pub mod quad;
pub mod specfun;
pub mod squarefn;
pub mod verify;

pub use error::{Error, Result};
pub use field::ZonalField;
pub use multipliers::{MultiplierKind, ZonalMultiplier};
pub use precision::PrecisionContext;
pub use specfun::Degree;
pub use squarefn::{SquareProfile, ProfileKind};
