//! Numerical toolkit for function spaces normed by a supremum of scaled
//! Lebesgue norms, `sup_p |f|_p / psi(p)` over an open interval of exponents.
//!
//! The crate provides the weight functions themselves ([`psi`]), decreasing
//! rearrangements and tail representations ([`tail`], [`catalog`]), the norm
//! and fundamental-function engines ([`gnorm`]), Orlicz-side comparisons
//! ([`duality`]), two-sided bridges between norm bounds and tail decay
//! ([`tail_bridge`]), Fourier-side operator audits ([`operators`]), and
//! dyadic martingale convergence audits ([`martingale`]).

pub mod error;
pub mod special;
pub mod quad;
pub mod optimize;
pub mod ladder;
pub mod support;
pub mod psi;
pub mod tail;
pub mod catalog;
pub mod gnorm;
pub mod duality;
pub mod tail_bridge;
pub mod series;
pub mod operators;
pub mod martingale;

pub use error::{Error, Result};
