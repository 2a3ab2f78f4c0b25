//! Evaluation and convergence acceleration of two-variant continued fractions.
//!
//! The guide under `book/` walks through the pieces in order; its Rust snippets
//! run as doctests of this crate.

pub mod accel;
pub mod cf;
pub mod classify;
pub mod error;
pub mod gallery;
pub mod mp;
pub mod special;
pub mod tail;
pub mod validation;

pub use cf::TwoVariantCF;
pub use error::{Error, Result};
pub use mp::{Poly, PrecisionContext};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/precision.md")]
    mod precision {}
    #[doc = include_str!("../../../book/src/fractions.md")]
    mod fractions {}
    #[doc = include_str!("../../../book/src/subclasses.md")]
    mod subclasses {}
    #[doc = include_str!("../../../book/src/tail-model.md")]
    mod tail_model {}
    #[doc = include_str!("../../../book/src/acceleration.md")]
    mod acceleration {}
    #[doc = include_str!("../../../book/src/gallery.md")]
    mod gallery {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
