//! Find the contrast at which a fixed segmentation model works best, then
//! move new images to that contrast before segmenting them.
//!
//! The pipeline runs on synthetic brain phantoms with a ventricle
//! parcellation ground truth:
//!
//! 1. [`phantom`] generates subjects; [`contrast::render`] images them at a
//!    point `θ` of a two-parameter contrast space.
//! 2. [`search::grid_search`] scores a fixed [`segmenter::SegmenterModel`] over
//!    a grid of contrasts and picks the optimal operating contrast (OOC).
//! 3. [`evaluate::evaluate_ooc`] compares segmenting native images against
//!    segmenting them after [`contrast::harmonize`] to the OOC, with a paired
//!    [`stats::wilcoxon_signed_rank`] test per structure.
//!
//! All randomness is derived from explicit seeds, so results do not depend on
//! the number of worker threads.

pub mod cli;
pub mod cohort;
pub mod config;
pub mod contrast;
pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod phantom;
pub mod rng;
pub mod search;
pub mod segmenter;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
