//! Command-line plumbing for `kappa-ent`: state files, CSV sweeps, certificate
//! output and the property battery behind `check`.

pub mod battery;
pub mod error;
pub mod output;
pub mod statefile;
pub mod sweep;

pub use error::CliError;
