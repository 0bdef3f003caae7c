//! Multiscale poroelasticity toolkit.
//!
//! Periodic cell problems are solved by finite elements ([`microcell`]), turned
//! into effective Biot coefficients ([`upscale`]), learned by small neural
//! networks ([`surrogate`]) and queried at every quadrature point of a 1D
//! column solver ([`macro1d`]) whose solid moduli and porosity evolve with the
//! localised microscopic strain ([`remodel`]).

pub mod error;
pub mod expcli;
pub mod hyperverify;
pub mod macro1d;
pub mod microcell;
pub mod remodel;
pub mod scales;
pub mod surrogate;
pub mod tensor;
pub mod upscale;

pub use error::{Error, Result};
