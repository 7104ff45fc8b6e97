//! Private online learning with expert advice under local differential
//! privacy: RW-FTPL, RW-AdaBatch, RW-Meta and the privacy accounting that
//! goes with them.

// `!(x > 0.0)` is how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod adabatch;
pub mod eval;
pub mod mechanism;
pub mod numerics;
pub mod privacy;
pub mod rwftpl;
pub mod rwmeta;
pub mod sim;
pub mod stream;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ftpl.md")]
    mod ftpl {}
    #[doc = include_str!("../../../book/src/adabatch.md")]
    mod adabatch {}
    #[doc = include_str!("../../../book/src/privacy.md")]
    mod privacy {}
    #[doc = include_str!("../../../book/src/meta.md")]
    mod meta {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
