//! Refined Barndorff-Nielsen–Shephard toolkit.
//!
//! The crate simulates a stochastic volatility model whose variance is an
//! Ornstein–Uhlenbeck process driven by two independent compound-Poisson
//! subordinators mixed by a deterministic weight `theta`, prices variance
//! swaps in closed form, builds the risk-minimizing quadratic hedge, and
//! extracts `theta` from daily price data with two labeling procedures and
//! two from-scratch classifiers.
//!
//! Module map:
//!
//! | module       | contents                                                     |
//! |--------------|--------------------------------------------------------------|
//! | [`levy`]     | subordinator spec, cumulants, jump sampling, Lévy integrals  |
//! | [`model`]    | model parameters, path simulation, realized variance         |
//! | [`varswap`]  | variance swap payoff and arbitrage-free price                |
//! | [`hedging`]  | Black–Scholes helper, hedge ratio, hedging-error harness     |
//! | [`features`] | price series ingestion, summary stats, labeling, splitting   |
//! | [`classify`] | logistic regression, MLP, classification report              |
//! | [`pipeline`] | end-to-end theta extraction and hedging comparison           |
//! | [`config`]   | JSON configuration consumed by the `bns` binary              |

pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod hedging;
pub mod levy;
pub mod model;
pub mod pipeline;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod varswap;

pub use error::{Error, Result};
