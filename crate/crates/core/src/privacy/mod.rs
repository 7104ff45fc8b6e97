//! f-DP accounting: Gaussian tradeoff curves, the worst-case gap law, the
//! proxy containing-batch-size distribution, and the mixture bound that
//! turns batch sizes into amplified tradeoff curves.

pub mod gap;
pub mod proxy;
pub mod tradeoff;

pub use gap::{gap_cdf, gap_pdf, GapLawParams, GapTable};
pub use proxy::{batch_threshold, heuristic_amplification, proxy_batch_distribution, DEFAULT_B_MAX};
pub use tradeoff::{
    amplified_tradeoff, default_alpha_grid, gaussian_beta, gaussian_tradeoff, to_approx_dp, BatchSizeDistribution,
    MixtureTradeoff, TradeoffCurve, TradeoffPoint,
};
