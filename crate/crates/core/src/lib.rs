//! Crossed-field quantum dynamics: analytic stationary and drifting states of
//! a charged particle in perpendicular constant electric and magnetic fields,
//! with grid-based verification machinery.
//!
//! The library provides:
//!
//! * closed-form state families and their energies ([`states`]),
//! * spectral / finite-difference operators and time-evolution residual
//!   checks ([`deriv`], [`ops`]),
//! * split-step and Crank–Nicolson propagators ([`evolve`]),
//! * current-density and Hall-response observables ([`observables`]),
//! * a self-describing binary state container and TOML-driven scenario
//!   runner used by the `crossfield` binary ([`grid`], [`config`]).
//!
//! Everything works in the particle's natural parameter set (mass, charge,
//! light speed, ħ, field strengths); no unit system is assumed.

pub mod config;
pub mod deriv;
pub mod error;
pub mod evolve;
pub mod fourier;
pub mod grid;
pub mod hermite;
pub mod observables;
pub mod ops;
pub mod params;
pub mod scenario;
pub mod states;

pub use error::{Error, Result};
pub use grid::{Axis2, GridSpec, Mask, SampledState};
pub use params::{DriftConstants, PhysicalParams};
