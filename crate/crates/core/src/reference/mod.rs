//! Comparison models: oriented walks on `Z^d` and simple random walk on the
//! Heisenberg group.

mod srw;
mod zd;

pub use srw::*;
pub use zd::*;
