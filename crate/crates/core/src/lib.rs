//! Numerical toolkit for the `SL(2,R) × U(1)`-invariant pseudo-Kähler metrics
//! `g_f` on `H² × C` built from a profile function `f`.
//!
//! Points are `(z, w) = (x + iy, u + iv)` with `y > 0`; the invariant
//! combination is `t = y³|w|²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod curvature;
pub mod error;
pub mod fibration;
pub mod geometry;
pub mod hamilton;
pub mod numerics;
pub mod profile;

pub use actions::{IsometryElement, LieAlgebraElement, Moebius, NormalForm};
pub use curvature::{BoundScan, InverseMetricComponents, RicciComponents};
pub use error::{Error, Result};
pub use fibration::{ActionAngleCoords, BasePoint, PeriodLattice, SectionHandle, SectionKind};
pub use geometry::{AmbientPoint, FrameKind, FrameMatrix, TangentVector};
pub use hamilton::Hamiltonian;
pub use profile::{Derivatives, Profile, ProfileTable};
