//! Numerical building blocks shared by the algorithms and the accountant.

pub mod pchip;
pub mod quad;
pub mod root;
pub mod special;
pub mod stats;

pub use special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
