//! Vessel lumen segmentation and tracking for ultrasound video.
//!
//! Each frame is median- and Gaussian-filtered, a region is grown from a seed
//! pixel, its boundary is traced and resampled to equidistant points, and an
//! active contour refines it against the image edges. The next frame is seeded
//! at the centroid of the previous contour.

// `!(x > 0.0)` is used on purpose: it also rejects NaN parameters
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod filters;
pub mod geometry;
pub mod image;
pub mod linalg;
pub mod phantom;
pub mod region_grow;
pub mod snake;
pub mod tracker;

pub use error::{Error, Result};
pub use image::{Contour, Frame, Mask, Point};
