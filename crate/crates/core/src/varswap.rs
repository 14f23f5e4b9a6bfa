//! Variance swaps under the refined model.
//!
//! The swap pays `N (sigma_R^2 - K_var)` at the horizon. Its arbitrage-free
//! value is `e^{-r(T-t)} N (E[sigma_R^2 | F_t] - K_var)`, where the
//! conditional expectation is affine in the current variance and the
//! integrated variance so far.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{realized_variance_from_v, simulate_terminals, ModelParams, PathState, Subordinators};
use crate::stats::McEstimate;

fn default_notional() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSwapContract {
    /// Annualized variance strike `K_var`.
    pub strike_kvar: f64,
    /// Dollars per unit of annualized variance.
    #[serde(default = "default_notional")]
    pub notional: f64,
}

impl VarSwapContract {
    pub fn new(strike_kvar: f64, notional: f64) -> Result<Self> {
        let c = VarSwapContract {
            strike_kvar,
            notional,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.notional.is_finite() && self.notional > 0.0) {
            return Err(Error::invalid("contract.notional", "must be > 0"));
        }
        if !(self.strike_kvar.is_finite() && self.strike_kvar >= 0.0) {
            return Err(Error::invalid("contract.strike_kvar", "must be >= 0"));
        }
        Ok(())
    }

    pub fn payoff(&self, sigma_r_sq: f64) -> f64 {
        self.notional * (sigma_r_sq - self.strike_kvar)
    }
}

/// `(1 - e^{-lambda tau}) / lambda`: the weight of the current variance in
/// the remaining integrated variance.
fn decay_weight(lambda: f64, tau: f64) -> f64 {
    -(-lambda * tau).exp_m1() / lambda
}

/// `E[sigma_R^2 | F_t]` given the current variance `sigma_sq_t` and the
/// integrated variance `v_t` accumulated up to `t`.
pub fn conditional_expected_rv(
    params: &ModelParams,
    subs: &Subordinators,
    t: f64,
    sigma_sq_t: f64,
    v_t: f64,
) -> Result<f64> {
    let big_t = params.horizon_t;
    if !(0.0..=big_t).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {big_t}]")));
    }
    let tau = big_t - t;
    let w = decay_weight(params.lambda, tau);
    let jump_mean = subs.mixed_mean(params.theta);
    let integrated = v_t + w * sigma_sq_t + jump_mean * (tau - w);
    Ok(integrated / big_t + subs.jump_variance_rate(params))
}

/// Arbitrage-free value at `t` of the variance swap.
pub fn price(
    params: &ModelParams,
    subs: &Subordinators,
    contract: &VarSwapContract,
    t: f64,
    sigma_sq_t: f64,
    v_t: f64,
) -> Result<f64> {
    let expected = conditional_expected_rv(params, subs, t, sigma_sq_t, v_t)?;
    let discount = (-params.r * (params.horizon_t - t)).exp();
    Ok(discount * contract.payoff(expected))
}

/// Strike making the swap worth zero at inception.
pub fn fair_strike(params: &ModelParams, subs: &Subordinators) -> Result<f64> {
    conditional_expected_rv(params, subs, 0.0, params.sigma0_sq, 0.0)
}

/// Monte Carlo value from the state `start`: discounted mean payoff over
/// `n_paths` fresh paths.
pub fn monte_carlo_price(
    params: &ModelParams,
    subs: &Subordinators,
    contract: &VarSwapContract,
    start: PathState,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    let discount = (-params.r * (params.horizon_t - start.t)).exp();
    let payoffs: Vec<f64> = simulate_terminals(params, subs, start, n_steps, n_paths, seed)?
        .into_iter()
        .map(|end| discount * contract.payoff(realized_variance_from_v(end.v, params, subs)))
        .collect();
    Ok(McEstimate::from_samples(&payoffs))
}
