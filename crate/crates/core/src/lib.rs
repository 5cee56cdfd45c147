//! Time-series copula models for heteroskedastic data.
//!
//! The crate provides mixture pair-copulas whose cross-shaped densities
//! capture serial dependence in volatility, D-vine copulas for Markov-p
//! univariate and multivariate stationary series, volatility-copula
//! dependence metrics, maximum likelihood and adaptive MCMC estimation,
//! VaR forecasting with Christoffersen backtests, and simulators for the
//! ARCH/GARCH/SV benchmark processes.

pub mod bicop;
pub mod datagen;
pub mod dvine;
pub mod error;
pub mod forecast;
pub mod inference;
pub mod margins;
pub mod quad;
pub mod replicate;
pub mod special;
pub mod stats;
pub mod volcop;

pub use bicop::{Family, PairCopula};
pub use dvine::{ConditionalGrid, DVineSpec, VineState};
pub use error::{Error, Result};
