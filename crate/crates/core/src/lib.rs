//! Finite-volume quasi-energy operators for random Schrödinger and wave
//! equations with time-quasi-periodic forcing.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only speeds
//! up the dense kernels; `parallel` fans independent trials out over rayon.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod frequency;
pub mod greens;
pub mod lattice;
pub mod linalg;
pub mod measure;
pub mod msa;
pub mod operators;
pub mod par;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Region, RegionKind, SitePoint};
pub use operators::{
    assemble, Disorder, DisorderSample, DriveProfile, FrequencyVector, HamiltonianMatrix, Model,
    OperatorSpec,
};

/// Largest number of sites handled by dense factorizations.
pub const DENSE_CAP: usize = 4000;
