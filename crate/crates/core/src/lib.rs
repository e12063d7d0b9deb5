//! Numerical laboratory for periodic Hamilton-Jacobi equations `u_t + H(x, Du) = 0` on the
//! flat torus: a monotone Lax-Friedrichs solver, additive-eigenvalue estimation, sampled checks
//! of convexity-type structural conditions on `H`, and large-time convergence diagnostics built
//! on a Lyapunov-type functional.

pub mod asymptotics;
pub mod conditions;
pub mod ergodic;
pub mod expr;
pub mod grid;
pub mod hamiltonian;
pub mod solver;

pub use expr::{EvalError, Expression, ParseError};
pub use grid::{GridError, GridFunction, TorusGrid};
pub use hamiltonian::{Hamiltonian, HamiltonianError, Property};
