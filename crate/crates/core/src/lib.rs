//! Two positive solutions of the concave-convex Hamiltonian system
//!
//! ```text
//! -Δu = λ|v|^{r-1}v + |v|^{p-1}v,   -Δv = μ|u|^{s-1}u + |u|^{q-1}u   in Ω,   u = v = 0 on ∂Ω
//! ```
//!
//! computed through the fourth-order reduction `Δψ(μ, Δv) = f₊(λ, v)` with Navier
//! boundary data, where `ψ(μ, ·)` inverts `ζ ↦ μ|ζ|^{s-1}ζ + |ζ|^{q-1}ζ`.
//!
//! Module map:
//! - [`nonlinearity`]: closed forms for g, ψ, Ψ, f₊, F₊ and the explicit constants.
//! - [`grid`]: rectangle discretization, five-point Laplacian, norms, λ₁, Sobolev constants.
//! - [`energy`]: the reduced functional, its gradient, recovery of u and system residuals.
//! - [`solvers`]: ball minimization, mountain pass, sublinear problem, truncation, λ* tracing.
//! - [`verify`]: sampling suites for the inequalities and the energy geometry.
//! - [`io`]: CSV/JSON serialization of fields, results and curves.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod band;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod nonlinearity;
pub mod poisson;
pub mod solvers;
pub mod verify;

pub use energy::{EnergyReport, Forcing, Functional, ResidualReport};
pub use error::{Error, Result};
pub use grid::{EigenPair, Field, RectDomain};
pub use nonlinearity::{Exponents, SystemParams};
