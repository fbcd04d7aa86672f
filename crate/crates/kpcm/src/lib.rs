//! KP hierarchy on truncated matrix microdifferential operators, the Sato
//! Grassmannian window model, spin Calogero-Moser dynamics, Weierstrass
//! elliptic functions, and the exact pole/particle correspondence between
//! rational KP solutions and Calogero-Moser motion.
//!
//! Start with the `examples/` directory: each example exercises one major
//! capability end to end. The `kpcm` binary exposes the same machinery as
//! config-driven subcommands.

pub mod cm;
pub mod config;
pub mod correspondence;
pub mod elliptic;
pub mod error;
pub mod kp;
pub mod matrix;
pub mod microdiff;
pub mod poly;
pub mod roots;
pub mod runner;
pub mod sampling;
pub mod sato;
pub mod scalar;
pub mod series;

pub use error::{CliError, CmError, CoreError, CorrError, MicroError, SatoError};
pub use matrix::Matrix;
pub use microdiff::{
    generalized_binomial, md_commutator, md_compose, md_residue, md_split, volterra_invert,
    MicroOp, TruncationPolicy,
};
pub use scalar::{Backend, GaussRational, Scalar};
pub use series::TruncatedSeries;
