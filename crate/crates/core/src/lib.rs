#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chroma;
pub mod cii;
pub mod edge;
pub mod error;
pub mod features;
pub mod highlight;
pub mod image;
pub mod pipeline;
pub mod recover;
pub mod scene;
pub mod stats;
