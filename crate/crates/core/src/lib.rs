//! Exact lattice-point enumeration in symmetric convex bodies, progressions
//! of several shapes, sumsets and doubling, and the convex-to-ellipsoid
//! covering transfer with exact verification.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `std` or `parallel`
//! for standard-library builds; `parallel` spreads Monte Carlo loops over
//! rayon without changing any result.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod bodies;
pub mod error;
pub mod fitting;
pub mod instances;
pub mod lattice;
pub mod lp;
pub mod minkowski;
pub mod num;
pub mod progressions;
pub mod rng;
pub mod setops;
pub mod transfer;

pub use bodies::{BodyKind, ExactReal, Support, SymmetricBody, VolumeEstimate, VolumeMethod};
pub use error::{Error, Result};
pub use num::Q;
