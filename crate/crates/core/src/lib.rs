//! Multiple-instance clustering of bags of patch embeddings.
//!
//! Each image is a [`Bag`] of instance embeddings. The crate provides
//! instance weighting ([`weights`]), bag distances ([`distances`]),
//! clustering backends ([`cluster`]) and evaluation ([`metrics`]).
//!
//! The crate is `no_std` and needs only `alloc`; file formats, parallel
//! drivers and the command-line tool live in the `mibag` crate.

#![no_std]

extern crate alloc;

pub mod bag;
pub mod cluster;
pub mod distances;
pub mod error;
mod linalg;
pub mod metrics;
pub mod pairwise;
pub mod weights;

pub use bag::{resize_mask_to_grid, Bag, Dataset, Mask, MaskSet};
pub use distances::{DistanceMatrix, HausdorffVariant, InnerAggregation, Measure, OuterAggregation};
pub use error::{Error, Result};
pub use weights::{Aggregator, WeightConfig, WeightVector};
