//! Numerics for stable homogeneous cones of the fractional one-phase free
//! boundary problem.
//!
//! The crate is organised bottom-up:
//!
//! * [`quad`] – double-exponential and Gauss–Legendre quadrature.
//! * [`constants`] – closed-form constants and the integral identities behind them.
//! * [`fraclap`] – principal-value evaluation of the 1D fractional Laplacian.
//! * [`energy`] – the localized energy and its first variation in 1D.
//! * [`cone`] – geometry of the axially symmetric cones `{|x'| > β|x_n|}`.
//! * [`exponent`] – homogeneity exponent `λ(β)` via a weighted spherical
//!   eigenproblem, and the critical aperture.
//! * [`wos`] – walk-on-spheres for the isotropic `2s`-stable process.
//! * [`kernel`] – boundary kernel, its radial reduction and the mass `H₁`.
//! * [`stability`] – the `H₁ ≤ m(0)` verdict, the 2D Hardy scan and dimension
//!   arithmetic.
//! * [`cache`] – content-addressed JSON cache used by long computations.

pub mod cache;
pub mod cone;
pub mod constants;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod fraclap;
pub mod kernel;
mod linalg;
pub mod quad;
pub mod stability;
pub mod wos;

pub use error::{Error, Result};
