//! Batch driver for the illumination normalization chain: image files in,
//! invariant image, shadow-edge mask and recovered colour image out.

pub mod config;
pub mod io;
pub mod matching;
pub mod normalize;
pub mod render;
pub mod report;
