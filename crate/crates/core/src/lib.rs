//! Positive symmetric solutions of `-u″ = g(t) f(u)` on `(0,1)` with
//! `u(0) = u(1) = 0`, localized in annuli `r < |u|_{H₀¹} < R` of a cone, found by
//! steepest descent on the Nehari set restricted to the cone.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cone;
pub mod energy;
pub mod error;
pub mod function_space;
pub mod green_operator;
pub mod hypotheses;
pub mod nehari;
pub mod par;
mod serde_f64;
pub mod solver;
pub mod verify_oracle;

pub use energy::Problem;
pub use error::{Error, Result};
pub use function_space::{Grid, GridFunction};
pub use green_operator::{Nonlinearity, WeightFunction};
pub use nehari::AnnulusSpec;
pub use par::Execution;
