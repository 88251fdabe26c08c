//! Deterministic synthetic segmentation dataset engine.
//!
//! A single background image and a handful of alpha-matted foreground cutouts
//! are expanded into augmented pools, composited into labelled scenes with
//! hard-alpha pasting, optionally mixed with chained photometric augmentations,
//! and written out as PNG image/mask pairs with a line-delimited manifest.
//!
//! Every scene is a pure function of `(master_seed, index, config)`, so
//! generation can run on any number of workers and still produce identical
//! bytes.

pub mod augmix;
pub mod augops;
pub mod blend;
pub mod composer;
pub mod demo;
pub mod error;
pub mod imgcore;
pub mod manifest;
pub mod metrics;
pub mod seed;

pub use error::{Error, Result};
pub use imgcore::PixelBuffer;
