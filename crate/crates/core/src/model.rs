//! Refined BN-S dynamics.
//!
//! Log-price and variance evolve as
//!
//! ```text
//! dX_t      = b_t dt + sigma_t dW_t + rho ((1 - theta) dZ_{lambda t} + theta dZb_{lambda t})
//! dsigma2_t = -lambda sigma2_t dt + (1 - theta) dZ_{lambda t} + theta dZb_{lambda t}
//! S_t       = S_0 exp(X_t)
//! ```
//!
//! The log-price takes an Euler step per grid interval. The variance is
//! advanced with its exact Ornstein–Uhlenbeck solution: the deterministic
//! part `e^{-lambda (t - t0)} sigma2_{t0}` is evaluated directly at every grid
//! time and each jump is decayed from its own arrival time, so the jump-free
//! floor holds bit-for-bit.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PriceSeries;
use crate::levy::{Jump, JumpStream, SubordinatorSpec};
use crate::rng::{PathRngs, SimRng};
use crate::stats::{pearson, McEstimate};

/// How the log-price drift compensates the jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// `r - lambda kappa_Z(rho (1 - theta)) - lambda kappa_Zb(rho theta) - sigma2 / 2`;
    /// the discounted price is a martingale.
    #[default]
    Compensated,
    /// `r - lambda kappa_Z(rho) - sigma2 / 2`, a single-subordinator
    /// compensator regardless of `theta`.
    #[serde(rename = "paper_eq2")]
    SingleCompensator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Leverage, `<= 0`.
    pub rho: f64,
    /// Mean-reversion rate, `> 0`.
    pub lambda: f64,
    /// Mixing weight of the second subordinator, in `[0, 1]`.
    pub theta: f64,
    /// Risk-free rate per year.
    pub r: f64,
    pub sigma0_sq: f64,
    pub s0: f64,
    /// Horizon in years.
    pub horizon_t: f64,
    #[serde(default)]
    pub drift_mode: DriftMode,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("model.{field}"), reason))
            }
        };
        check(self.rho.is_finite() && self.rho <= 0.0, "rho", "must be finite and <= 0")?;
        check(self.lambda.is_finite() && self.lambda > 0.0, "lambda", "must be finite and > 0")?;
        check((0.0..=1.0).contains(&self.theta), "theta", "must lie in [0, 1]")?;
        check(self.r.is_finite(), "r", "must be finite")?;
        check(self.sigma0_sq.is_finite() && self.sigma0_sq > 0.0, "sigma0_sq", "must be > 0")?;
        check(self.s0.is_finite() && self.s0 > 0.0, "s0", "must be > 0")?;
        check(self.horizon_t.is_finite() && self.horizon_t > 0.0, "horizon_t", "must be > 0")
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// The two independent subordinators `Z` and `Z^(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subordinators {
    pub z: SubordinatorSpec,
    pub zb: SubordinatorSpec,
}

impl Subordinators {
    pub fn new(z: SubordinatorSpec, zb: SubordinatorSpec) -> Self {
        Subordinators { z, zb }
    }

    pub fn validate(&self) -> Result<()> {
        self.z.validate("subordinator_z")?;
        self.zb.validate("subordinator_zb")
    }

    /// Soft check that `Z^(b)` is the more intense driver (larger mean).
    pub fn intensity_warning(&self) -> Option<String> {
        let (kz, kb) = (self.z.mean(), self.zb.mean());
        (kb <= kz).then(|| {
            format!(
                "subordinator_zb is expected to have greater intensity than subordinator_z \
                 (E[Zb_1] = {kb} <= E[Z_1] = {kz})"
            )
        })
    }

    /// `theta`-weighted first cumulant `(1 - theta) k1_Z + theta k1_Zb`.
    pub fn mixed_mean(&self, theta: f64) -> f64 {
        (1.0 - theta) * self.z.mean() + theta * self.zb.mean()
    }

    /// Rate at which jumps add quadratic variation to the log price:
    /// `rho^2 (1-theta)^2 lambda k2_Z + rho^2 theta^2 lambda k2_Zb`.
    pub fn jump_variance_rate(&self, params: &ModelParams) -> f64 {
        let (rho, th, lam) = (params.rho, params.theta, params.lambda);
        rho * rho * (1.0 - th).powi(2) * lam * self.z.cumulants().1
            + rho * rho * th * th * lam * self.zb.cumulants().1
    }
}

/// Drift `b_t` of the log price for instantaneous variance `sigma_sq_t`.
pub fn drift(params: &ModelParams, subs: &Subordinators, sigma_sq_t: f64) -> Result<f64> {
    Ok(drift_constant(params, subs)? - 0.5 * sigma_sq_t)
}

fn drift_constant(params: &ModelParams, subs: &Subordinators) -> Result<f64> {
    let (rho, th, lam) = (params.rho, params.theta, params.lambda);
    match params.drift_mode {
        DriftMode::SingleCompensator => Ok(params.r - lam * subs.z.cumulant_transform(rho)?),
        DriftMode::Compensated => {
            let mut b = params.r;
            if th != 1.0 {
                b -= lam * subs.z.cumulant_transform(rho * (1.0 - th))?;
            }
            if th != 0.0 {
                b -= lam * subs.zb.cumulant_transform(rho * th)?;
            }
            Ok(b)
        }
    }
}

/// Snapshot of the state variables at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub t: f64,
    /// Log price `X_t` (so `S_t = S_0 e^{X_t}`).
    pub x: f64,
    pub sigma_sq: f64,
    /// Integrated variance `V_t`.
    pub v: f64,
}

impl PathState {
    pub fn initial(params: &ModelParams) -> Self {
        PathState {
            t: 0.0,
            x: 0.0,
            sigma_sq: params.sigma0_sq,
            v: 0.0,
        }
    }

    pub fn price(&self, params: &ModelParams) -> f64 {
        params.s0 * self.x.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub v: Vec<f64>,
    /// Arrivals of `Z_{lambda t}` (absolute times).
    pub jumps_z: Vec<Jump>,
    /// Arrivals of `Zb_{lambda t}` (absolute times).
    pub jumps_zb: Vec<Jump>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> PathState {
        let i = self.len() - 1;
        PathState {
            t: self.times[i],
            x: self.x[i],
            sigma_sq: self.sigma_sq[i],
            v: self.v[i],
        }
    }

    /// Writes `t,s,x,sigma_sq,v` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "s", "x", "sigma_sq", "v"])?;
        for i in 0..self.len() {
            w.write_record(&[
                self.times[i].to_string(),
                self.s[i].to_string(),
                self.x[i].to_string(),
                self.sigma_sq[i].to_string(),
                self.v[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform grid of `n_steps` intervals on `[t0, t_end]`; the last node is
/// exactly `t_end`.
pub fn uniform_grid(t0: f64, t_end: f64, n_steps: usize) -> Vec<f64> {
    let dt = (t_end - t0) / n_steps as f64;
    let mut g: Vec<f64> = (0..=n_steps).map(|i| t0 + i as f64 * dt).collect();
    g[n_steps] = t_end;
    g
}

/// Outcome of one step of [`Evolver`].
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub before: PathState,
    pub after: PathState,
    /// Standard normal draw driving `W` over the step.
    pub normal: f64,
}

/// Steps one path of the refined model along a time grid.
///
/// A subordinator whose weight is zero (`Z` when `theta = 1`, `Z^(b)` when
/// `theta = 0`) is never sampled: its generator is left untouched.
pub struct Evolver<'a, R> {
    grid: &'a [f64],
    next: usize,
    rho_z: f64,
    rho_zb: f64,
    w_z: f64,
    w_zb: f64,
    lambda: f64,
    drift_const: f64,
    floor_base: f64,
    excess: f64,
    state: PathState,
    stream_z: Option<JumpStream>,
    stream_zb: Option<JumpStream>,
    record: Option<(Vec<Jump>, Vec<Jump>)>,
    rngs: &'a mut PathRngs<R>,
}

impl<'a, R: Rng> Evolver<'a, R> {
    pub fn new(
        params: &ModelParams,
        subs: &Subordinators,
        start: PathState,
        grid: &'a [f64],
        rngs: &'a mut PathRngs<R>,
    ) -> Result<Self> {
        debug_assert!(grid.first() == Some(&start.t));
        let th = params.theta;
        let stream_z = (th != 1.0).then(|| JumpStream::new(subs.z, params.lambda, start.t));
        let stream_zb = (th != 0.0).then(|| JumpStream::new(subs.zb, params.lambda, start.t));
        Ok(Evolver {
            grid,
            next: 1,
            rho_z: params.rho * (1.0 - th),
            rho_zb: params.rho * th,
            w_z: 1.0 - th,
            w_zb: th,
            lambda: params.lambda,
            drift_const: drift_constant(params, subs)?,
            floor_base: start.sigma_sq,
            excess: 0.0,
            state: start,
            stream_z,
            stream_zb,
            record: None,
            rngs,
        })
    }

    /// Keep every jump arrival for [`Path::jumps_z`]/[`Path::jumps_zb`].
    pub fn record_jumps(mut self) -> Self {
        self.record = Some((Vec::new(), Vec::new()));
        self
    }

    pub fn state(&self) -> PathState {
        self.state
    }

    pub fn finished(&self) -> bool {
        self.next >= self.grid.len()
    }

    pub fn step(&mut self) -> Option<Step> {
        if self.finished() {
            return None;
        }
        let before = self.state;
        let t1 = self.grid[self.next];
        let h = t1 - before.t;
        self.next += 1;

        let normal: f64 = StandardNormal.sample(&mut self.rngs.diffusion);
        let (mut jump_z, mut decayed_z) = (0.0, 0.0);
        if let Some(stream) = self.stream_z.as_mut() {
            while let Some(j) = stream.next_before(t1, &mut self.rngs.z) {
                jump_z += j.size;
                decayed_z += j.size * (-self.lambda * (t1 - j.time)).exp();
                if let Some((rec, _)) = self.record.as_mut() {
                    rec.push(j);
                }
            }
        }
        let (mut jump_zb, mut decayed_zb) = (0.0, 0.0);
        if let Some(stream) = self.stream_zb.as_mut() {
            while let Some(j) = stream.next_before(t1, &mut self.rngs.zb) {
                jump_zb += j.size;
                decayed_zb += j.size * (-self.lambda * (t1 - j.time)).exp();
                if let Some((_, rec)) = self.record.as_mut() {
                    rec.push(j);
                }
            }
        }

        let b = self.drift_const - 0.5 * before.sigma_sq;
        let mut x = before.x + b * h + before.sigma_sq.sqrt() * h.sqrt() * normal;
        let mut excess = self.excess * (-self.lambda * h).exp();
        if self.stream_z.is_some() {
            x += self.rho_z * jump_z;
            excess += self.w_z * decayed_z;
        }
        if self.stream_zb.is_some() {
            x += self.rho_zb * jump_zb;
            excess += self.w_zb * decayed_zb;
        }
        let floor = self.floor_base * (-self.lambda * (t1 - self.grid[0])).exp();
        let sigma_sq = floor + excess;
        let v = before.v + 0.5 * (before.sigma_sq + sigma_sq) * h;

        self.excess = excess;
        self.state = PathState {
            t: t1,
            x,
            sigma_sq,
            v,
        };
        Some(Step {
            before,
            after: self.state,
            normal,
        })
    }

    /// Runs to the end of the grid and returns the terminal state.
    pub fn run(mut self) -> PathState {
        while self.step().is_some() {}
        self.state
    }

    fn into_path(mut self, params: &ModelParams) -> Path {
        let n = self.grid.len();
        let mut path = Path {
            times: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            sigma_sq: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            jumps_z: Vec::new(),
            jumps_zb: Vec::new(),
        };
        let mut push = |st: &PathState| {
            path.times.push(st.t);
            path.x.push(st.x);
            path.s.push(st.price(params));
            path.sigma_sq.push(st.sigma_sq);
            path.v.push(st.v);
        };
        push(&self.state);
        while let Some(step) = self.step() {
            push(&step.after);
        }
        if let Some((z, zb)) = self.record.take() {
            path.jumps_z = z;
            path.jumps_zb = zb;
        }
        path
    }
}

/// Simulates one path from `t = 0` to the horizon with `n_steps` uniform steps.
pub fn simulate_path<R: Rng>(
    params: &ModelParams,
    subs: &Subordinators,
    n_steps: usize,
    rngs: &mut PathRngs<R>,
) -> Result<Path> {
    simulate_path_from(params, subs, PathState::initial(params), n_steps, rngs)
}

/// Simulates one path from an arbitrary starting state to the horizon.
pub fn simulate_path_from<R: Rng>(
    params: &ModelParams,
    subs: &Subordinators,
    start: PathState,
    n_steps: usize,
    rngs: &mut PathRngs<R>,
) -> Result<Path> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    if start.t > params.horizon_t {
        return Err(Error::Domain(format!(
            "start time {} is beyond the horizon {}",
            start.t, params.horizon_t
        )));
    }
    let grid = uniform_grid(start.t, params.horizon_t, n_steps);
    let evolver = Evolver::new(params, subs, start, &grid, rngs)?.record_jumps();
    Ok(evolver.into_path(params))
}

/// Classical single-subordinator BN-S path: `dX = (r - lambda kappa(rho) -
/// sigma2/2) dt + sigma dW + rho dZ`, `dsigma2 = -lambda sigma2 dt + dZ`.
///
/// Consumes only the `diffusion` and `z` generators.
pub fn simulate_classical_path<R: Rng>(
    params: &ModelParams,
    spec: &SubordinatorSpec,
    n_steps: usize,
    rngs: &mut PathRngs<R>,
) -> Result<Path> {
    let grid = uniform_grid(0.0, params.horizon_t, n_steps);
    let lam = params.lambda;
    let drift_const = params.r - lam * spec.cumulant_transform(params.rho)?;
    let mut stream = JumpStream::new(*spec, lam, 0.0);
    let mut path = Path {
        times: vec![0.0],
        x: vec![0.0],
        s: vec![params.s0 * 0f64.exp()],
        sigma_sq: vec![params.sigma0_sq],
        v: vec![0.0],
        jumps_z: Vec::new(),
        jumps_zb: Vec::new(),
    };
    let (mut x, mut sig, mut v, mut excess) = (0.0, params.sigma0_sq, 0.0, 0.0);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let normal: f64 = StandardNormal.sample(&mut rngs.diffusion);
        let (mut jumps, mut decayed) = (0.0, 0.0);
        while let Some(j) = stream.next_before(t1, &mut rngs.z) {
            jumps += j.size;
            decayed += j.size * (-lam * (t1 - j.time)).exp();
            path.jumps_z.push(j);
        }
        x = x + (drift_const - 0.5 * sig) * h + sig.sqrt() * h.sqrt() * normal;
        x += params.rho * jumps;
        excess = excess * (-lam * h).exp() + decayed;
        let next_sig = params.sigma0_sq * (-lam * (t1 - 0.0)).exp() + excess;
        v += 0.5 * (sig + next_sig) * h;
        sig = next_sig;
        path.times.push(t1);
        path.x.push(x);
        path.s.push(params.s0 * x.exp());
        path.sigma_sq.push(sig);
        path.v.push(v);
    }
    Ok(path)
}

/// Realized variance `V_T / T + rho^2 (1-theta)^2 lambda k2_Z + rho^2 theta^2 lambda k2_Zb`.
pub fn realized_variance(path: &Path, params: &ModelParams, subs: &Subordinators) -> f64 {
    realized_variance_from_v(path.terminal().v, params, subs)
}

pub(crate) fn realized_variance_from_v(v_t: f64, params: &ModelParams, subs: &Subordinators) -> f64 {
    v_t / params.horizon_t + subs.jump_variance_rate(params)
}

/// Monte Carlo ensemble of terminal states, one per path index.
///
/// Path `i` uses the substreams of `(seed, i)`, so results do not depend on
/// the number of worker threads.
pub fn simulate_terminals(
    params: &ModelParams,
    subs: &Subordinators,
    start: PathState,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PathState>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    let grid = uniform_grid(start.t, params.horizon_t, n_steps);
    drift_constant(params, subs)?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rngs = PathRngs::for_path(seed, i);
            Evolver::new(params, subs, start, &grid, &mut rngs)
                .expect("drift validated above")
                .run()
        })
        .collect())
}

/// Ensemble statistics reported by the `simulate` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// `e^{-rT} S_T`, should average to `S_0`.
    pub discounted_terminal_price: McEstimate,
    pub terminal_variance: McEstimate,
    pub expected_terminal_variance: f64,
    pub realized_variance: McEstimate,
    pub expected_realized_variance: f64,
}

pub fn ensemble_summary(
    params: &ModelParams,
    subs: &Subordinators,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<EnsembleSummary> {
    let ends = simulate_terminals(params, subs, PathState::initial(params), n_steps, n_paths, seed)?;
    let disc = (-params.r * params.horizon_t).exp();
    let prices: Vec<f64> = ends.iter().map(|e| disc * e.price(params)).collect();
    let vars: Vec<f64> = ends.iter().map(|e| e.sigma_sq).collect();
    let rvs: Vec<f64> = ends
        .iter()
        .map(|e| realized_variance_from_v(e.v, params, subs))
        .collect();
    Ok(EnsembleSummary {
        n_paths,
        n_steps,
        seed,
        discounted_terminal_price: McEstimate::from_samples(&prices),
        terminal_variance: McEstimate::from_samples(&vars),
        expected_terminal_variance: expected_variance(params, subs, params.horizon_t),
        realized_variance: McEstimate::from_samples(&rvs),
        expected_realized_variance: crate::varswap::conditional_expected_rv(
            params,
            subs,
            0.0,
            params.sigma0_sq,
            0.0,
        )?,
    })
}

/// `E[sigma2_t] = e^{-lambda t} sigma2_0 + ((1-theta) k1_Z + theta k1_Zb)(1 - e^{-lambda t})`.
pub fn expected_variance(params: &ModelParams, subs: &Subordinators, t: f64) -> f64 {
    let decay = (-params.lambda * t).exp();
    decay * params.sigma0_sq + subs.mixed_mean(params.theta) * (1.0 - decay)
}

/// Sample correlation of `(X_s, X_t)` across `n_paths` simulated paths,
/// stepping with (at most) `max_dt`.
pub fn estimate_log_return_correlation(
    params: &ModelParams,
    subs: &Subordinators,
    s: f64,
    t: f64,
    n_paths: usize,
    max_dt: f64,
    seed: u64,
) -> Result<f64> {
    if n_paths < 100 {
        return Err(Error::InsufficientPaths {
            min: 100,
            got: n_paths,
        });
    }
    if !(s > 0.0 && s <= t) {
        return Err(Error::Domain(format!("need 0 < s <= t, got s = {s}, t = {t}")));
    }
    if s == t {
        return Ok(1.0);
    }
    let n1 = (s / max_dt).ceil().max(1.0) as usize;
    let n2 = ((t - s) / max_dt).ceil().max(1.0) as usize;
    let mut grid = uniform_grid(0.0, s, n1);
    grid.extend(uniform_grid(s, t, n2).into_iter().skip(1));
    let start = PathState::initial(params);
    drift_constant(params, subs)?;
    let pairs: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rngs = PathRngs::for_path(seed, i);
            let mut ev = Evolver::new(params, subs, start, &grid, &mut rngs).expect("validated");
            let mut xs = f64::NAN;
            while let Some(step) = ev.step() {
                if step.after.t == s {
                    xs = step.after.x;
                }
            }
            (xs, ev.state().x)
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(pearson(&a, &b))
}

/// Trading days per year used for daily sampling.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Synthetic daily closes sampled from one simulated path at `dt = 1/252`,
/// dated on consecutive weekdays from `start_date`.
pub fn synth_series(
    params: &ModelParams,
    subs: &Subordinators,
    n_days: usize,
    seed: u64,
    start_date: NaiveDate,
) -> Result<PriceSeries> {
    if n_days < 30 {
        return Err(Error::invalid("n_days", "must be >= 30"));
    }
    let mut p = *params;
    p.horizon_t = (n_days - 1) as f64 / TRADING_DAYS_PER_YEAR;
    let mut rngs = PathRngs::for_path(seed, 0);
    let path = simulate_path(&p, subs, n_days - 1, &mut rngs)?;
    let dates = weekdays_from(start_date, n_days);
    PriceSeries::new(dates, path.s)
}

fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Paths `0..n_paths` simulated in parallel and returned in index order.
pub fn simulate_paths(
    params: &ModelParams,
    subs: &Subordinators,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Path>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rngs: PathRngs<SimRng> = PathRngs::for_path(seed, i);
            simulate_path(params, subs, n_steps, &mut rngs)
        })
        .collect()
}
