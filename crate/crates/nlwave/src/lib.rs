//! Spectral Galerkin laboratory for the semilinear wave equation
//! `∂_t²u − Δu + J(‖∂_t u‖²)∂_t u + g(u) = h` on the box `(0, π)^d` with
//! Dirichlet boundary conditions.
//!
//! The crate provides the discrete substrate (sine eigenbasis, dealiased
//! transforms), a library of damping laws `J` and sources `g` with a
//! structural-condition checker, energy-consistent time integrators for the
//! wave flow and its parabolic companion, trajectory diagnostics (energy
//! balance, descent of the energy functional, dissipation ledgers, mixed
//! space-time norms), equilibrium continuation with linearized spectra and
//! unstable-manifold seeds, and orchestrated numerical experiments
//! (absorbing-ball probes, Lipschitz and quasi-stability estimates,
//! resolution studies).
//!
//! Start with the runnable examples (`cargo run --release --example
//! energy_identity`) or the `nlwave` binary, which drives the same probes
//! from a TOML configuration.

pub mod config;
pub mod diagnostics;
pub mod experiments;
pub mod integrator;
mod krylov;
pub mod model;
pub mod runner;
pub mod spectral;
pub mod steady;
pub mod trace;

pub use integrator::{
    integrate, parabolic_integrate, solve_damping_scalar, step, IntegratorConfig, IntegratorError,
    Observer, Scheme, StepRecord, Trajectory,
};
pub use model::{
    certified_constants, check_assumptions, eval_damping, eval_nonlinearity, AssumptionReport,
    DampingLaw, Forcing, Model, ModelError, Nonlinearity, StructuralConstants,
};
pub use spectral::{
    build_domain, build_domain_with, Field, ModalState, SpectralDomain, SpectralError,
};
