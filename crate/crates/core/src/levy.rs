//! Lévy subordinators driving the variance process.
//!
//! Only the compound Poisson family with exponentially distributed jump sizes
//! is supported: jumps arrive at rate `a` on the subordinator's own clock and
//! have density `mu * exp(-mu * x)`, so the Lévy density is
//! `nu(dx) = a * mu * exp(-mu * x) dx` on `x > 0`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubordinatorFamily {
    #[default]
    CompoundPoissonExponential,
}

/// Parameters of a subordinator. `a = 0` is accepted and denotes the null
/// subordinator (no jumps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorSpec {
    #[serde(default)]
    pub family: SubordinatorFamily,
    /// Jumps per unit of the subordinator's own time.
    pub a: f64,
    /// Rate of the exponential jump-size law.
    pub mu: f64,
}

/// Integrands `g(x)` for which `∫ g(x) nu(dx)` has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevyIntegrand {
    /// `e^{cx} - 1`
    ExpMinusOne,
    /// `(e^{cx} - 1)^2`
    ExpMinusOneSquared,
    /// `x (e^{cx} - 1)`
    XTimesExpMinusOne,
}

/// One jump of a subordinator, time measured from the start of its step (or
/// absolute, for [`JumpStream`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Increment of the time-changed subordinator over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub total: f64,
    pub jumps: Vec<Jump>,
}

impl SubordinatorSpec {
    pub fn new(a: f64, mu: f64) -> Result<Self> {
        let spec = SubordinatorSpec {
            family: SubordinatorFamily::CompoundPoissonExponential,
            a,
            mu,
        };
        spec.validate("subordinator")?;
        Ok(spec)
    }

    /// The null subordinator.
    pub fn null() -> Self {
        SubordinatorSpec {
            family: SubordinatorFamily::CompoundPoissonExponential,
            a: 0.0,
            mu: 1.0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::invalid(format!("{name}.a"), "must be finite and >= 0"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid(format!("{name}.mu"), "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn is_null(&self) -> bool {
        self.a == 0.0
    }

    /// Lévy density at `x > 0`.
    pub fn levy_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.a * self.mu * (-self.mu * x).exp()
        }
    }

    /// `kappa(c) = log E[exp(c Z_1)] = a c / (mu - c)`, defined for `c < mu`.
    pub fn cumulant_transform(&self, c: f64) -> Result<f64> {
        if c >= self.mu {
            return Err(Error::Domain(format!(
                "cumulant transform needs c < mu (c = {c}, mu = {})",
                self.mu
            )));
        }
        Ok(self.a * c / (self.mu - c))
    }

    /// First two cumulants of `Z_1`: mean `a / mu` and variance `2a / mu^2`.
    pub fn cumulants(&self) -> (f64, f64) {
        (self.a / self.mu, 2.0 * self.a / (self.mu * self.mu))
    }

    pub fn mean(&self) -> f64 {
        self.cumulants().0
    }

    /// Closed-form `∫ g(x) nu(dx)` for the integrands of [`LevyIntegrand`].
    pub fn levy_integral(&self, c: f64, kind: LevyIntegrand) -> Result<f64> {
        let (a, mu) = (self.a, self.mu);
        let converges = match kind {
            LevyIntegrand::ExpMinusOneSquared => 2.0 * c < mu,
            _ => c < mu,
        };
        if !converges {
            return Err(Error::Domain(format!(
                "Lévy integral {kind:?} diverges for c = {c}, mu = {mu}"
            )));
        }
        Ok(match kind {
            LevyIntegrand::ExpMinusOne => a * c / (mu - c),
            // mu/(mu-2c) - 2mu/(mu-c) + 1, combined to avoid cancellation
            LevyIntegrand::ExpMinusOneSquared => {
                a * 2.0 * c * c / ((mu - 2.0 * c) * (mu - c))
            }
            // mu (1/(mu-c)^2 - 1/mu^2) = c (2mu - c) / (mu (mu-c)^2)
            LevyIntegrand::XTimesExpMinusOne => {
                a * c * (2.0 * mu - c) / (mu * (mu - c) * (mu - c))
            }
        })
    }

    pub fn sample_jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.mu
    }

    /// Increments of `Z_{lambda t}` over `n` consecutive steps of length `dt`.
    ///
    /// Jump times in the result are offsets from the start of each step.
    pub fn sample_increments<R: Rng + ?Sized>(
        &self,
        lambda: f64,
        dt: f64,
        n: usize,
        rng: &mut R,
    ) -> Vec<Increment> {
        let mut stream = JumpStream::new(*self, lambda, 0.0);
        (0..n)
            .map(|i| {
                let start = i as f64 * dt;
                let end = (i + 1) as f64 * dt;
                let mut inc = Increment {
                    total: 0.0,
                    jumps: Vec::new(),
                };
                while let Some(j) = stream.next_before(end, rng) {
                    inc.total += j.size;
                    inc.jumps.push(Jump {
                        time: j.time - start,
                        size: j.size,
                    });
                }
                inc
            })
            .collect()
    }
}

/// Arrivals of `Z_{lambda t}` in calendar time: a Poisson stream of rate
/// `lambda * a` with exponential marks.
///
/// Arrivals are generated lazily; a jump drawn beyond the current step is
/// held until the step that contains it.
#[derive(Debug, Clone)]
pub struct JumpStream {
    spec: SubordinatorSpec,
    rate: f64,
    clock: f64,
    pending: Option<Jump>,
}

impl JumpStream {
    pub fn new(spec: SubordinatorSpec, lambda: f64, start: f64) -> Self {
        JumpStream {
            spec,
            rate: lambda * spec.a,
            clock: start,
            pending: None,
        }
    }

    /// Next jump strictly before `end`, if any.
    pub fn next_before<R: Rng + ?Sized>(&mut self, end: f64, rng: &mut R) -> Option<Jump> {
        if self.rate <= 0.0 {
            return None;
        }
        let jump = match self.pending.take() {
            Some(j) => j,
            None => {
                let gap: f64 = Exp1.sample(rng);
                self.clock += gap / self.rate;
                Jump {
                    time: self.clock,
                    size: self.spec.sample_jump_size(rng),
                }
            }
        };
        if jump.time < end {
            Some(jump)
        } else {
            self.pending = Some(jump);
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn spec(a: f64, mu: f64) -> SubordinatorSpec {
        SubordinatorSpec::new(a, mu).unwrap()
    }

    #[test]
    fn cumulant_transform_examples() {
        assert_eq!(spec(1.0, 2.0).cumulant_transform(1.0).unwrap(), 1.0);
        assert_eq!(spec(1.0, 2.0).cumulant_transform(0.0).unwrap(), 0.0);
        assert_eq!(spec(3.0, 5.0).cumulant_transform(-1.0).unwrap(), -0.5);
    }

    #[test]
    fn cumulant_transform_outside_domain() {
        assert!(matches!(
            spec(1.0, 2.0).cumulant_transform(2.0),
            Err(Error::Domain(_))
        ));
        assert!(spec(1.0, 2.0).cumulant_transform(3.0).is_err());
    }

    #[test]
    fn cumulants_examples() {
        assert_eq!(spec(2.0, 4.0).cumulants(), (0.5, 0.25));
        assert_eq!(spec(1.0, 1.0).cumulants(), (1.0, 2.0));
        assert_eq!(SubordinatorSpec::null().cumulants(), (0.0, 0.0));
    }

    #[test]
    fn cumulant_derivatives_match_cumulants() {
        let s = spec(1.7, 2.3);
        let h = 1e-4;
        let k = |c| s.cumulant_transform(c).unwrap();
        let d1 = (k(h) - k(-h)) / (2.0 * h);
        let d2 = (k(h) - 2.0 * k(0.0) + k(-h)) / (h * h);
        let (k1, k2) = s.cumulants();
        assert!(((d1 - k1) / k1).abs() < 1e-4);
        assert!(((d2 - k2) / k2).abs() < 1e-4);
    }

    #[test]
    fn integrals_vanish_at_zero() {
        let s = spec(1.0, 2.0);
        for kind in [
            LevyIntegrand::ExpMinusOne,
            LevyIntegrand::ExpMinusOneSquared,
            LevyIntegrand::XTimesExpMinusOne,
        ] {
            assert_eq!(s.levy_integral(0.0, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn integral_convergence_conditions() {
        let s = spec(1.0, 4.0);
        assert!(s.levy_integral(2.0, LevyIntegrand::ExpMinusOneSquared).is_err());
        assert!(s.levy_integral(1.9, LevyIntegrand::ExpMinusOneSquared).is_ok());
        assert!(s.levy_integral(4.0, LevyIntegrand::XTimesExpMinusOne).is_err());
        assert!(s.levy_integral(4.0, LevyIntegrand::ExpMinusOne).is_err());
    }

    #[test]
    fn squared_integral_matches_expanded_form() {
        let s = spec(1.0, 4.0);
        let c = 1.0;
        let expanded = s.a * (s.mu / (s.mu - 2.0 * c) - 2.0 * s.mu / (s.mu - c) + 1.0);
        let v = s.levy_integral(c, LevyIntegrand::ExpMinusOneSquared).unwrap();
        assert!((v - expanded).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(SubordinatorSpec::new(-1.0, 1.0).is_err());
        assert!(SubordinatorSpec::new(1.0, 0.0).is_err());
        assert!(SubordinatorSpec::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn null_subordinator_has_zero_increments() {
        let mut rng = substream(1, 0);
        let incs = SubordinatorSpec::null().sample_increments(2.0, 0.1, 500, &mut rng);
        assert!(incs.iter().all(|i| i.total == 0.0 && i.jumps.is_empty()));
    }

    #[test]
    fn increments_are_reproducible() {
        let s = spec(3.0, 2.0);
        let a = s.sample_increments(1.5, 0.05, 200, &mut substream(9, 1));
        let b = s.sample_increments(1.5, 0.05, 200, &mut substream(9, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn jump_offsets_lie_inside_their_step() {
        let s = spec(20.0, 2.0);
        let dt = 0.01;
        let incs = s.sample_increments(3.0, dt, 1000, &mut substream(3, 0));
        for inc in &incs {
            let sum: f64 = inc.jumps.iter().map(|j| j.size).sum();
            assert!((sum - inc.total).abs() < 1e-12);
            assert!(inc.jumps.iter().all(|j| j.time >= 0.0 && j.time < dt && j.size > 0.0));
        }
    }

    #[test]
    fn increment_mean_matches_first_cumulant() {
        let s = spec(2.0, 4.0);
        let (lambda, dt, n) = (1.5, 0.01, 1_000_000);
        let incs = s.sample_increments(lambda, dt, n, &mut substream(11, 0));
        let scaled: Vec<f64> = incs.iter().map(|i| i.total / (lambda * dt)).collect();
        let est = crate::stats::McEstimate::from_samples(&scaled);
        assert!(est.z_score(s.cumulants().0) < 4.0, "{est:?}");
    }

    #[test]
    fn json_keys() {
        let s: SubordinatorSpec =
            serde_json::from_str(r#"{"family":"compound_poisson_exponential","a":1.5,"mu":3}"#)
                .unwrap();
        assert_eq!(s, spec(1.5, 3.0));
        let bad = serde_json::from_str::<SubordinatorSpec>(r#"{"a":1,"mu":2,"rate":3}"#);
        assert!(bad.is_err());
    }
}
