//! Discretization and solvers for nonlocal quasilinear problems
//!
//! ```text
//! (P1)  -L_Φ u = λ |u|^{q-2} u         in Ω,  u = 0 in ℝ∖Ω
//! (P2)  -L_Φ u = λ |u|^{q-2} u + f     in Ω,  u = 0 in ℝ∖Ω
//! ```
//!
//! where `⟨-L_Φ u, v⟩ = ∬ Φ(u(x)-u(y)) (v(x)-v(y)) K(x,y) dx dy`, on a uniform
//! piecewise-linear mesh of an interval.

pub mod capacity;
pub mod error;
pub mod functionals;
pub mod kernels;
pub mod mesh;
pub mod quad;
pub mod reduce;
pub mod solvers;
pub mod suite;

pub use error::{Error, Result};
