//! Multiple scattering of time-harmonic waves by two (or more) smooth convex
//! sound-soft obstacles in the plane.
//!
//! The crate covers the whole numerical pipeline:
//!
//! * [`geometry`]: analytic boundary curves, scenes and closest points.
//! * [`special`]: Bessel and Hankel functions of real argument.
//! * [`linalg`]: dense complex matrices and LU factorization.
//! * [`cfie`]: Nyström discretization of the combined field integral equation.
//! * [`multiscatter`]: the iteration operator, Neumann iterates and the
//!   coupled reference solve.
//! * [`go_phase`]: geometrical-optics phases of the multiply reflected fields.
//! * [`krylov`]: ORTHODIR, the binomial and the stable iterate-based
//!   direction recursions, and Wynn epsilon acceleration.
//! * [`kirchhoff`]: the Kirchhoff beam operator and the preconditioned system.
//! * [`rate`]: closed-form and empirical convergence rates of the Neumann series.
//!
//! Only `core` and `alloc` are required; file formats and the command line
//! live in the companion `mscat` crate.

// Checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cfie;
mod error;
pub mod geometry;
pub mod go_phase;
pub mod kirchhoff;
pub mod krylov;
pub mod linalg;
mod math;
pub mod multiscatter;
pub mod rate;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Curve, Scene, Vec2};
pub use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
