//! Symmetric affine and rigid registration of fuzzy images using
//! α-cut distance stacks and average minimal distances.
//!
//! See the guide in `book/` for a walkthrough.

pub mod amd;
pub mod baseline;
pub mod dt;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod image;
pub mod linalg;
pub mod optimizer;
pub mod pyramid;
pub mod registration;
pub mod stack;
pub mod transform;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fuzzy-images.md")]
    mod fuzzy_images {}
    #[doc = include_str!("../../../book/src/distance-stacks.md")]
    mod distance_stacks {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/registration.md")]
    mod registration {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
