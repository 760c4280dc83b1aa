//! Non-scattering anisotropic media built from Helmholtz fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`bessel`] evaluates fractional-order Bessel functions and their zeros.
//! * [`fields`] builds Helmholtz fields (plane waves, trigonometric products,
//!   fractional Bessel sums) with exact jets and branch-cut bookkeeping.
//! * [`nodal`] certifies signs, traces nodal curves, finds critical points and
//!   assembles Dirichlet domains.
//! * [`flow`] integrates gradient flows and assembles Neumann domains.
//! * [`spectra`] verifies cavity eigenpairs, builds interior transmission
//!   eigenpairs and computes sector spectra.
//! * [`media`] builds transformation media and checks explicit anisotropic
//!   examples.
//! * [`scatter`] solves the exterior scattering problem with a PML and runs
//!   refinement studies.

pub mod bessel;
pub mod error;
pub mod fields;
pub mod flow;
pub mod geometry;
pub mod media;
pub mod nodal;
pub mod scatter;
pub mod spectra;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
