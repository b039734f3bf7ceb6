//! Action classification for short video clips.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`detect`] finds selective spatio-temporal interest points: Harris corners,
//!    orientation-weighted surround suppression, a temporal-energy constraint and
//!    3D non-maxima suppression.
//! 2. [`sift3d`] describes each point with a 640-dimensional 3D-SIFT histogram.
//! 3. [`signature`] pools a clip's descriptors into one unit-norm vector.
//! 4. [`srkda`] learns a kernel discriminant projection by spectral regression.
//! 5. [`classify`] assigns clips to the nearest class centroid in the projected space.
//!
//! [`video`] handles frame directories, manifests, dataset splits and synthetic clips,
//! [`io`] owns the on-disk formats and [`cli`] ties everything together behind the
//! `flyact` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod config;
pub mod detect;
mod error;
mod filter;
pub mod io;
pub mod pipeline;
pub mod sift3d;
pub mod signature;
pub mod srkda;
pub mod video;

pub use error::{Error, Result};
