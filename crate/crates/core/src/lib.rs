//! Numerical toolkit for multi-prover quantum Merlin-Arthur verification at
//! desk scale: dense multipartite linear algebra, the separable cone and its
//! dual, product-state optimization, two-fold parallel repetition with an
//! explicit dual witness, an executable Bell-measurement protocol model, and
//! fixed-precision classical descriptions of small quantum proofs.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; `std` only adds parallel evaluation through rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bellqma;
pub mod eigen;
pub mod encoding;
pub mod error;
pub mod examples;
pub mod matrix;
pub mod operator;
pub mod product;
pub mod random;
pub mod repetition;
pub mod separable;
pub mod shape;

pub use error::{Error, Result};
pub use matrix::{CMatrix, C64};
pub use operator::{HermitianOperator, PureState};
pub use shape::MultipartiteShape;
