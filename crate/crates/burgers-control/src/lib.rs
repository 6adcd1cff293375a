//! Adjoint-based optimal control of the viscous Burgers equation on ℝ,
//! discretized by a moving-particle method with smoothed Dirac kernels.
//!
//! The state y solves ∂ₜy + y ∂ₓy − ν ∂ₓₓy = χ_c(x) u(t) from y(·,0) = y₀;
//! the control u minimizes ½‖y(T) − y_d‖²_{L²} + (σ/2)‖u‖²_{H¹(0,T)} inside
//! box bounds. Particles carry amplitudes of Gaussian kernels along the flow
//! characteristics; the adjoint runs backward on the frozen particle paths
//! and feeds a projected steepest-descent loop with Armijo line search. A
//! fine fixed-grid finite-difference solver provides the reference optimum
//! for the convergence studies.
//!
//! # Modules
//! - [`kernels`] — Gaussian Dirac-sequence kernels and moment verification.
//! - [`particles`] — particle fields, interpolation, seeding, weight transport.
//! - [`assembly`] — Galerkin mass/stiffness/load matrices and convection.
//! - [`forward`] / [`adjoint`] — state and adjoint time integration.
//! - [`control`] — control space, H¹(0,T) Riesz inverse, reduced gradient.
//! - [`optimize`] — projected steepest descent, particle/reference backends.
//! - [`reference`] — fine finite-difference oracle solver.
//! - [`analysis`] — norms, errors against the reference, slope fitting.
//! - [`config`], [`csvio`], [`experiments`] — configuration, file formats,
//!   and sweep orchestration used by the CLI and the examples.
//!
//! Run `cargo run --release -- optimize` for the benchmark optimization, or
//! see `examples/` for the library API.

pub mod adjoint;
pub mod analysis;
pub mod assembly;
pub mod config;
pub mod control;
pub mod csvio;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod kernels;
pub mod linalg;
pub mod optimize;
pub mod particles;
pub mod quadrature;
pub mod reference;
pub mod time;

pub use config::ProblemConfig;
pub use control::ControlFunction;
pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use particles::{ParticleField, SeedLayout};
pub use time::TimeGrid;
