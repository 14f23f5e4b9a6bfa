//! Risk-minimizing quadratic hedge of an option on a stable asset plus a
//! variance swap, using positions in the BN-S asset `S`.
//!
//! The stable asset follows `dY = Y (r dt + sigma dW~)` with
//! `dW~ dW = rho' dt`. The hedge ratio is
//!
//! ```text
//!            rho' sigma sigma_t (Y/S) dC/dY + A + B
//! Delta = -------------------------------------------------------------------
//!         sigma_t^2 + lambda ∫(e^{rho(1-theta)x}-1)^2 nu_Z + lambda ∫(e^{rho theta x}-1)^2 nu_Zb
//! ```
//!
//! with `A = lambda (1-theta)/S ∫ (P(sigma_t^2 + x) - P(sigma_t^2)) (e^{rho(1-theta)x}-1) nu_Z(dx)`
//! and `B` the analogous `theta`-weighted term against `nu_Zb`, `P` being the
//! variance swap value.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::levy::{LevyIntegrand, SubordinatorSpec};
use crate::model::{realized_variance_from_v, uniform_grid, Evolver, ModelParams, PathState, Subordinators};
use crate::quad::{integrate_half_line, Tolerance};
use crate::rng::{auxiliary_stream, PathRngs};
use crate::stats::McEstimate;
use crate::varswap::{self, VarSwapContract};

/// Geometric Brownian motion on which the hedged option is written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableAssetParams {
    pub sigma: f64,
    /// Correlation between the stable asset's Brownian motion and `W`.
    pub rho_prime: f64,
    pub y0: f64,
}

impl StableAssetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("stable.sigma", "must be > 0"));
        }
        if !(self.rho_prime.abs() <= 1.0) {
            return Err(Error::invalid("stable.rho_prime", "must lie in [-1, 1]"));
        }
        if !(self.y0.is_finite() && self.y0 > 0.0) {
            return Err(Error::invalid("stable.y0", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

/// European option on `Y`, expiring at the model horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EuropeanOption {
    pub strike: f64,
    pub kind: OptionKind,
}

impl EuropeanOption {
    pub fn validate(&self) -> Result<()> {
        if !(self.strike.is_finite() && self.strike > 0.0) {
            return Err(Error::invalid("option.strike", "must be > 0"));
        }
        Ok(())
    }

    pub fn payoff(&self, y: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (y - self.strike).max(0.0),
            OptionKind::Put => (self.strike - y).max(0.0),
        }
    }
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Black–Scholes value and `dC/dY` at time `t` for an option expiring at
/// `expiry`.
pub fn bs_price_delta(
    y: f64,
    opt: &EuropeanOption,
    r: f64,
    sigma: f64,
    t: f64,
    expiry: f64,
) -> Result<(f64, f64)> {
    if t >= expiry {
        return Err(Error::Domain(format!(
            "Black-Scholes value needs t < expiry (t = {t}, expiry = {expiry}); use the payoff"
        )));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("underlying must be positive, got {y}")));
    }
    let tau = expiry - t;
    let vol = sigma * tau.sqrt();
    let d1 = ((y / opt.strike).ln() + (r + 0.5 * sigma * sigma) * tau) / vol;
    let d2 = d1 - vol;
    let df = (-r * tau).exp();
    Ok(match opt.kind {
        OptionKind::Call => (
            y * norm_cdf(d1) - opt.strike * df * norm_cdf(d2),
            norm_cdf(d1),
        ),
        OptionKind::Put => (
            opt.strike * df * norm_cdf(-d2) - y * norm_cdf(-d1),
            norm_cdf(d1) - 1.0,
        ),
    })
}

/// Everything the hedger needs to know about the market and its liability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeSetup {
    pub params: ModelParams,
    pub subs: Subordinators,
    pub stable: StableAssetParams,
    pub option: EuropeanOption,
    pub contract: VarSwapContract,
}

impl HedgeSetup {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.subs.validate()?;
        self.stable.validate()?;
        self.option.validate()?;
        self.contract.validate()
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.params.theta = theta;
        self
    }
}

/// Observable market state at a rebalancing date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub t: f64,
    pub s: f64,
    pub y: f64,
    pub sigma_sq: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeSnapshot {
    pub t: f64,
    pub delta: f64,
    /// Initial capital `Pi0 = Pi01 + Pi02`.
    pub pi0: f64,
}

/// Closed-form hedge ratio with the state-independent Lévy integrals
/// evaluated once.
#[derive(Debug, Clone, Copy)]
pub struct HedgeRatio {
    setup: HedgeSetup,
    jump_denominator: f64,
    /// `∫ x (e^{rho(1-theta)x} - 1) nu_Z(dx)`
    cross_z: f64,
    /// `∫ x (e^{rho theta x} - 1) nu_Zb(dx)`
    cross_zb: f64,
}

impl HedgeRatio {
    pub fn new(setup: &HedgeSetup) -> Result<Self> {
        let p = &setup.params;
        let (cz, czb) = (p.rho * (1.0 - p.theta), p.rho * p.theta);
        let sq = LevyIntegrand::ExpMinusOneSquared;
        let cross = LevyIntegrand::XTimesExpMinusOne;
        Ok(HedgeRatio {
            setup: *setup,
            jump_denominator: p.lambda * setup.subs.z.levy_integral(cz, sq)?
                + p.lambda * setup.subs.zb.levy_integral(czb, sq)?,
            cross_z: setup.subs.z.levy_integral(cz, cross)?,
            cross_zb: setup.subs.zb.levy_integral(czb, cross)?,
        })
    }

    /// Hedge ratio at `state`.
    pub fn delta(&self, state: &MarketState) -> Result<f64> {
        let HedgeSetup {
            params: p,
            stable,
            option,
            contract,
            ..
        } = &self.setup;
        let (_, dc_dy) = bs_price_delta(state.y, option, p.r, stable.sigma, state.t, p.horizon_t)?;
        let tau = p.horizon_t - state.t;
        let diffusive = stable.rho_prime * stable.sigma * state.sigma_sq.sqrt() * (state.y / state.s) * dc_dy;
        // sensitivity of the swap value to a unit shift of sigma_t^2, times lambda
        let swap_slope = contract.notional * (-p.r * tau).exp() * -(-p.lambda * tau).exp_m1() / p.horizon_t;
        let a = (1.0 - p.theta) / state.s * swap_slope * self.cross_z;
        let b = p.theta / state.s * swap_slope * self.cross_zb;
        Ok((diffusive + a + b) / (state.sigma_sq + self.jump_denominator))
    }
}

/// Closed-form risk-minimizing hedge ratio with the variance swap valued by
/// [`varswap::price`].
pub fn hedge_ratio(setup: &HedgeSetup, state: &MarketState) -> Result<f64> {
    HedgeRatio::new(setup)?.delta(state)
}

/// Hedge ratio for an arbitrary variance-swap value function
/// `price_fn(t, sigma_sq, v)`, with every Lévy integral evaluated by adaptive
/// quadrature.
pub fn hedge_ratio_general<F>(setup: &HedgeSetup, state: &MarketState, price_fn: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let p = &setup.params;
    let tol = Tolerance {
        abs: 1e-15,
        rel: 1e-9,
    };
    let base = price_fn(state.t, state.sigma_sq, state.v);
    let integral = |spec: &SubordinatorSpec, c: f64, weight: f64| -> Result<(f64, f64)> {
        if weight == 0.0 || spec.is_null() {
            return Ok((0.0, 0.0));
        }
        let sq = integrate_half_line(|x| (c * x).exp_m1().powi(2) * spec.levy_density(x), tol)?;
        let cross = integrate_half_line(
            |x| (price_fn(state.t, state.sigma_sq + x, state.v) - base) * (c * x).exp_m1() * spec.levy_density(x),
            tol,
        )?;
        Ok((sq, cross))
    };
    let (sq_z, cross_z) = integral(&setup.subs.z, p.rho * (1.0 - p.theta), 1.0 - p.theta)?;
    let (sq_zb, cross_zb) = integral(&setup.subs.zb, p.rho * p.theta, p.theta)?;

    let (_, dc_dy) = bs_price_delta(state.y, &setup.option, p.r, setup.stable.sigma, state.t, p.horizon_t)?;
    let st = &setup.stable;
    let diffusive = st.rho_prime * st.sigma * state.sigma_sq.sqrt() * (state.y / state.s) * dc_dy;
    let a = p.lambda * (1.0 - p.theta) / state.s * cross_z;
    let b = p.lambda * p.theta / state.s * cross_zb;
    let denominator = state.sigma_sq + p.lambda * sq_z + p.lambda * sq_zb;
    Ok((diffusive + a + b) / denominator)
}

/// Initial capital `(Pi01, Pi02)`: Black–Scholes value of the option and the
/// variance swap value at inception.
pub fn initial_capital(setup: &HedgeSetup) -> Result<(f64, f64)> {
    let p = &setup.params;
    let (c0, _) = bs_price_delta(setup.stable.y0, &setup.option, p.r, setup.stable.sigma, 0.0, p.horizon_t)?;
    let p0 = varswap::price(p, &setup.subs, &setup.contract, 0.0, p.sigma0_sq, 0.0)?;
    Ok((c0, p0))
}

pub fn snapshot(setup: &HedgeSetup, state: &MarketState) -> Result<HedgeSnapshot> {
    let (pi01, pi02) = initial_capital(setup)?;
    Ok(HedgeSnapshot {
        t: state.t,
        delta: hedge_ratio(setup, state)?,
        pi0: pi01 + pi02,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "factor")]
pub enum Strategy {
    Optimal,
    /// `factor * Delta`
    Perturbed(f64),
    Zero,
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Optimal => "optimal".into(),
            Strategy::Perturbed(f) => format!("perturbed({f})"),
            Strategy::Zero => "zero".into(),
        }
    }

    fn position(&self, ratio: &HedgeRatio, state: &MarketState) -> Result<f64> {
        Ok(match self {
            Strategy::Optimal => ratio.delta(state)?,
            Strategy::Perturbed(f) => f * ratio.delta(state)?,
            Strategy::Zero => 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgingErrorStats {
    pub strategy: String,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// Per-path hedging errors
/// `eps = ∫ phi dS^ + Pi0 - e^{-rT} H(Y_T) - e^{-rT} N (sigma_R^2 - K_var)`.
///
/// The market evolves under `world`; positions are computed from `hedger`
/// (which may differ from the world in `theta`). Path `i` consumes the same
/// substreams for every strategy and hedger, so runs are paired.
pub fn hedging_errors(
    world: &HedgeSetup,
    hedger: &HedgeSetup,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<Vec<f64>> {
    world.validate()?;
    hedger.validate()?;
    if n_steps == 0 {
        return Err(Error::invalid("hedge.n_steps", "must be >= 1"));
    }
    let ratio = HedgeRatio::new(hedger)?;
    let p = world.params;
    let stable = world.stable;
    let (pi01, pi02) = initial_capital(world)?;
    let pi0 = pi01 + pi02;
    let grid = uniform_grid(0.0, p.horizon_t, n_steps);
    let perp = (1.0 - stable.rho_prime * stable.rho_prime).max(0.0).sqrt();
    let terminal_discount = (-p.r * p.horizon_t).exp();

    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rngs = PathRngs::for_path(seed, i);
            let mut aux = auxiliary_stream(seed, i);
            let mut ev = Evolver::new(&p, &world.subs, PathState::initial(&p), &grid, &mut rngs)?;
            let mut y = stable.y0;
            let mut gains = 0.0;
            while let Some(step) = ev.step() {
                let (before, after) = (step.before, step.after);
                let h = after.t - before.t;
                let s_before = before.price(&p);
                let state = MarketState {
                    t: before.t,
                    s: s_before,
                    y,
                    sigma_sq: before.sigma_sq,
                    v: before.v,
                };
                let phi = strategy.position(&ratio, &state)?;
                let n_perp: f64 = StandardNormal.sample(&mut aux);
                let shock = stable.rho_prime * step.normal + perp * n_perp;
                y *= ((p.r - 0.5 * stable.sigma * stable.sigma) * h + stable.sigma * h.sqrt() * shock).exp();
                let disc_before = (-p.r * before.t).exp() * s_before;
                let disc_after = (-p.r * after.t).exp() * after.price(&p);
                gains += phi * (disc_after - disc_before);
            }
            let end = ev.state();
            let sigma_r_sq = realized_variance_from_v(end.v, &p, &world.subs);
            let liability = terminal_discount * (world.option.payoff(y) + world.contract.payoff(sigma_r_sq));
            Ok(gains + pi0 - liability)
        })
        .collect()
}

/// Hedging-error statistics for one strategy when the hedger knows the
/// world's parameters.
pub fn simulate_hedge(
    setup: &HedgeSetup,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<HedgingErrorStats> {
    let errors = hedging_errors(setup, setup, n_steps, n_paths, seed, strategy)?;
    let est = McEstimate::from_samples(&errors);
    Ok(HedgingErrorStats {
        strategy: strategy.label(),
        mean: est.mean,
        variance: est.variance,
        std_error: est.std_error,
        n_paths,
        n_steps,
        seed,
    })
}
