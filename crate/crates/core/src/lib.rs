//! Oriented random walks on the discrete Heisenberg group.
//!
//! The crate covers exact group arithmetic and the Cayley graph ([`group`]),
//! the uniform measure on oriented paths and its intersection statistics
//! ([`paths`]), the exact law of the walk's endpoint coordinates ([`oracle`]),
//! Fourier-side estimates ([`spectral`]), comparison models on `Z^d` and the
//! simple random walk ([`reference`]), and percolation with effective
//! resistance ([`percolation`]).

pub mod error;
pub mod fit;
pub mod group;
pub mod oracle;
pub mod paths;
pub mod percolation;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use group::{Generator, GroupElement};
