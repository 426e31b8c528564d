//! Book listings compiled as doctests.
//!
//! Each chapter of `book/src` becomes the documentation of an empty module,
//! so `cargo test -p projstab-guide` runs every code block in the book.

#[doc = include_str!("../../../book/src/introduction.md")]
#[cfg(doctest)]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data.md")]
#[cfg(doctest)]
pub mod data {}

#[doc = include_str!("../../../book/src/projector.md")]
#[cfg(doctest)]
pub mod projector {}

#[doc = include_str!("../../../book/src/training.md")]
#[cfg(doctest)]
pub mod training {}

#[doc = include_str!("../../../book/src/perturbation.md")]
#[cfg(doctest)]
pub mod perturbation {}

#[doc = include_str!("../../../book/src/stability.md")]
#[cfg(doctest)]
pub mod stability {}

#[doc = include_str!("../../../book/src/quality.md")]
#[cfg(doctest)]
pub mod quality {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
#[cfg(doctest)]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/pipeline.md")]
#[cfg(doctest)]
pub mod pipeline {}

#[doc = include_str!("../../../README.md")]
#[cfg(doctest)]
pub mod readme {}
