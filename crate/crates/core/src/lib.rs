//! Free-group relations, displacement functions and the minimax constant
//! `alpha_n` bounding displacements in purely loxodromic Kleinian groups.

pub mod cli;
pub mod displacement;
pub mod error;
pub mod freegroup;
pub mod hyperbolic;
pub mod optimizer;
pub mod quartic;
pub mod relations;

pub use error::{Error, Result};
