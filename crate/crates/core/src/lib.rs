pub mod bloch;
pub mod cli;
pub mod constants;
pub mod error;
pub mod ionization;
pub mod materials;
pub mod qed_mass;
pub mod quad;

pub use error::{Error, Result};
