//! Model-free price bounds for average-value (Asian-style) options.
//!
//! Everything here works over discrete marginal laws and martingale couplings
//! between them. The crate computes sharp upper and lower price bounds as
//! linear programs, extracts superhedging certificates from LP duals, checks
//! the geometric structure of optimal couplings, and provides the
//! continuous-time reductions (one constrained marginal, jump bridges,
//! three-step domination trials) that connect the static bounds to path-wise
//! statements.
//!
//! All numeric kernels are generic over [`scalar::Scalar`], instantiated by
//! `f64` (tolerance 1e-9) and by arbitrary-precision rationals (exact, zero
//! tolerance). The two instantiations share every code path, so any result
//! can be re-derived exactly.
//!
//! The crate is `no_std`-compatible (the default `std` feature only forwards
//! to dependencies); all containers come from `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(missing_docs)]

extern crate alloc;

pub mod asian;
pub mod btp;
pub mod lp;
pub mod measure;
pub mod mot;
pub mod scalar;
pub mod structure;

pub use measure::DiscreteMeasure;
pub use scalar::{Rational, Scalar};
