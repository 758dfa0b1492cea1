pub mod chain;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod fermion;
pub mod linalg;
pub mod observables;
pub mod report;
pub mod sweep;
pub mod thermal;

pub use error::{Error, Result};
