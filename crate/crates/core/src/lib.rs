//! Stochastic time-periodic Newtonian systems: Lyapunov certification,
//! superlinear-drift-safe simulation, and distributional periodicity testing.
//!
//! The library is organized around second-order systems in first-order form,
//!
//! ```text
//! dx = y dt,
//! dy = -[ M(x,y,t) y + grad_x V(x,t) + E(x,y,t) ] dt + Sigma(x,y,t) dB,
//! ```
//!
//! where the friction matrix `M` is either the Hessian of a scalar friction
//! function `F` or a general uniformly positive matrix field. Everything a
//! system needs is bundled in [`model::SystemSpec`]; the remaining modules
//! work on top of it:
//!
//! * [`model`] — evaluatable system definitions and the builtin catalog,
//! * [`polysys`] — multivariate polynomial machinery: leading forms,
//!   positive definiteness on the sphere, and the dissipativity constants,
//! * [`lyapunov`] — the mixed-energy Lyapunov function, its generator drift
//!   in closed form, and grid certification of the drift hypotheses,
//! * [`sde`] — Euler-Maruyama / tamed Euler ensembles with deterministic
//!   counter-based noise and stroboscopic snapshotting,
//! * [`stats`] — two-sample distances and permutation tests between
//!   stroboscopic snapshots.
//!
//! Core numerics are generic over the scalar type through [`scalar::Scalar`]
//! (`f32`, `f64`, and the extended-precision [`scalar::DoubleDouble`]);
//! concrete `f64` aliases are exported at the crate root.

pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod polysys;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{DoubleDouble, Scalar};

/// `f64` system specification.
pub type SystemSpec64 = model::SystemSpec<f64>;
/// `f64` scalar field.
pub type ScalarField64 = model::ScalarField<f64>;
/// `f64` time-dependent potential field.
pub type TimeScalarField64 = model::TimeScalarField<f64>;
/// `f64` multivariate polynomial.
pub type MultiPoly64 = polysys::MultiPoly<f64>;
/// `f64` Lyapunov certificate.
pub type Certificate64 = lyapunov::Certificate<f64>;
/// `f64` path state.
pub type PathState64 = sde::PathState<f64>;
/// `f64` empirical law (stroboscopic snapshot).
pub type EmpiricalLaw64 = sde::EmpiricalLaw<f64>;
