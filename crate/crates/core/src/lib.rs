pub mod distributions;
pub mod error;
pub mod par;
pub mod quadrature;
pub mod special;
pub mod stein_beta;
pub mod stein_discrete;
pub mod sum;
pub mod verify;
pub mod wasserstein;

pub use error::{Error, Result};
