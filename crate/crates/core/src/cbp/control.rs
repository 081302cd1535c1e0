use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::rng::SimRng;
use crate::stats::SampleMoments;
use crate::variates;
use crate::{Error, Result};

/// Populations over which declared moment bounds are checked pointwise.
pub const A2_CHECK_RANGE: u64 = 10_000;

/// Population sizes probed by the statistical self-test.
const SELF_TEST_POPULATIONS: [u64; 4] = [0, 1, 10, 100];

/// The random control `φ(k)` together with its mean `ε(k)` and variance
/// `ν²(k)`.
pub trait ControlMechanism: Send + Sync + fmt::Debug {
    /// Number of progenitors for a population of `population`; `None` on
    /// overflow.
    fn sample(&self, population: u64, rng: &mut dyn RngCore) -> Option<u64>;
    fn epsilon(&self, population: u64) -> f64;
    fn nu2(&self, population: u64) -> f64;
}

/// `φ(k) = k + I`, `I ~ Poisson(α)`: a branching process with immigration
/// written as a CBP. With unit offspring mean, `ε(k) = k + α` and
/// `ν²(k) = α`.
#[derive(Clone, Copy, Debug)]
pub struct PoissonImmigration {
    pub alpha: f64,
}

impl ControlMechanism for PoissonImmigration {
    fn sample(&self, population: u64, rng: &mut dyn RngCore) -> Option<u64> {
        population.checked_add(variates::poisson(self.alpha, rng))
    }

    fn epsilon(&self, population: u64) -> f64 {
        population as f64 + self.alpha
    }

    fn nu2(&self, _population: u64) -> f64 {
        self.alpha
    }
}

/// `φ(k) = ⌊(k+α)/m⌋ + Bernoulli(frac((k+α)/m))`: mean exactly `(k+α)/m`
/// with variance at most ¼.
#[derive(Clone, Copy, Debug)]
pub struct BernoulliRounding {
    pub alpha: f64,
    pub offspring_mean: f64,
}

impl BernoulliRounding {
    fn target(&self, population: u64) -> f64 {
        (population as f64 + self.alpha) / self.offspring_mean
    }
}

impl ControlMechanism for BernoulliRounding {
    fn sample(&self, population: u64, rng: &mut dyn RngCore) -> Option<u64> {
        let target = self.target(population);
        let whole = target.floor();
        if whole >= u64::MAX as f64 {
            return None;
        }
        let up = variates::bernoulli(target - whole, rng);
        (whole as u64).checked_add(u64::from(up))
    }

    fn epsilon(&self, population: u64) -> f64 {
        self.target(population)
    }

    fn nu2(&self, population: u64) -> f64 {
        let target = self.target(population);
        let frac = target - target.floor();
        frac * (1.0 - frac)
    }
}

/// `φ(k) = k`: the Bienaymé–Galton–Watson special case.
#[derive(Clone, Copy, Debug)]
pub struct IdentityControl;

impl ControlMechanism for IdentityControl {
    fn sample(&self, population: u64, _rng: &mut dyn RngCore) -> Option<u64> {
        Some(population)
    }

    fn epsilon(&self, population: u64) -> f64 {
        population as f64
    }

    fn nu2(&self, _population: u64) -> f64 {
        0.0
    }
}

/// `φ(k) = c·k`, deterministic.
#[derive(Clone, Copy, Debug)]
pub struct LinearControl {
    pub factor: u64,
}

impl ControlMechanism for LinearControl {
    fn sample(&self, population: u64, _rng: &mut dyn RngCore) -> Option<u64> {
        population.checked_mul(self.factor)
    }

    fn epsilon(&self, population: u64) -> f64 {
        (population as f64) * self.factor as f64
    }

    fn nu2(&self, _population: u64) -> f64 {
        0.0
    }
}

/// A control law and its A2 witness: `ν²(k) ≤ C·max(k,1)^β` for all k.
///
/// `growth_limit` is `lim ε(k)/k`, supplied analytically by the law; the
/// classification limit `τ_m` is `m` times it.
#[derive(Clone, Debug)]
pub struct ControlLaw {
    label: String,
    alpha: f64,
    beta: f64,
    nu2_scale: f64,
    growth_limit: Option<f64>,
    mechanism: Arc<dyn ControlMechanism>,
}

impl ControlLaw {
    pub fn new(
        label: impl Into<String>,
        alpha: f64,
        beta: f64,
        nu2_scale: f64,
        growth_limit: Option<f64>,
        mechanism: impl ControlMechanism + 'static,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and ≥ 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta < 1.0) {
            return Err(Error::invalid("beta", format!("A2 needs β < 1, got {beta}")));
        }
        if !(nu2_scale.is_finite() && nu2_scale > 0.0) {
            return Err(Error::invalid("nu2_scale", format!("must be finite and > 0, got {nu2_scale}")));
        }
        let law = Self {
            label: label.into(),
            alpha,
            beta,
            nu2_scale,
            growth_limit,
            mechanism: Arc::new(mechanism),
        };
        law.check_declared_moments()?;
        Ok(law)
    }

    pub fn poisson_immigration(alpha: f64) -> Result<Self> {
        let scale = if alpha > 0.0 { alpha } else { 1.0 };
        Self::new(
            format!("poisson-immigration(alpha={alpha})"),
            alpha,
            0.0,
            scale,
            Some(1.0),
            PoissonImmigration { alpha },
        )
    }

    pub fn bernoulli_rounding(alpha: f64, offspring_mean: f64) -> Result<Self> {
        if !(offspring_mean.is_finite() && offspring_mean > 0.0) {
            return Err(Error::invalid("m", format!("must be finite and > 0, got {offspring_mean}")));
        }
        Self::new(
            format!("bernoulli-rounding(alpha={alpha}, m={offspring_mean})"),
            alpha,
            0.0,
            0.25,
            Some(1.0 / offspring_mean),
            BernoulliRounding {
                alpha,
                offspring_mean,
            },
        )
    }

    pub fn identity() -> Self {
        Self::new("identity", 0.0, 0.0, 1.0, Some(1.0), IdentityControl)
            .expect("identity control is valid")
    }

    pub fn linear(factor: u64) -> Self {
        Self::new(
            format!("linear({factor})"),
            0.0,
            0.0,
            1.0,
            Some(factor as f64),
            LinearControl { factor },
        )
        .expect("linear control is valid")
    }

    fn check_declared_moments(&self) -> Result<()> {
        for k in 0..=A2_CHECK_RANGE {
            let eps = self.epsilon(k);
            let nu2 = self.nu2(k);
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(self.violation(format!("ε({k}) = {eps} is not a finite non-negative mean")));
            }
            if !(nu2.is_finite() && nu2 >= 0.0) {
                return Err(self.violation(format!("ν²({k}) = {nu2} is not a finite non-negative variance")));
            }
            let bound = self.nu2_bound(k);
            if nu2 > bound * (1.0 + 1e-12) + 1e-12 {
                return Err(self.violation(format!(
                    "A2 witness fails at k={k}: ν²(k) = {nu2} > C·max(k,1)^β = {bound}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Drift constant `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The constant `C` of the A2 witness.
    pub fn nu2_scale(&self) -> f64 {
        self.nu2_scale
    }

    pub fn growth_limit(&self) -> Option<f64> {
        self.growth_limit
    }

    pub fn epsilon(&self, population: u64) -> f64 {
        self.mechanism.epsilon(population)
    }

    pub fn nu2(&self, population: u64) -> f64 {
        self.mechanism.nu2(population)
    }

    /// `C·max(k,1)^β`
    pub fn nu2_bound(&self, population: u64) -> f64 {
        self.nu2_scale * (population.max(1) as f64).powf(self.beta)
    }

    pub fn sample(&self, population: u64, rng: &mut dyn RngCore) -> Option<u64> {
        self.mechanism.sample(population, rng)
    }

    /// For k ∈ {0, 1, 10, 100}: empirical mean and variance of `φ(k)` over
    /// `draws` samples within five standard errors of `ε(k)`, `ν²(k)`; and,
    /// when `α > 0`, at least one positive `φ(0)` (reflecting barrier).
    pub fn self_test(&self, draws: usize, seed: u64) -> Result<()> {
        for (i, &k) in SELF_TEST_POPULATIONS.iter().enumerate() {
            let mut rng = SimRng::new(seed, i as u64);
            let mut xs = Vec::with_capacity(draws);
            for _ in 0..draws {
                let phi = self
                    .sample(k, &mut rng)
                    .ok_or_else(|| self.violation(format!("φ({k}) overflowed")))?;
                xs.push(phi as f64);
            }
            let mom = SampleMoments::from_slice(&xs)?;
            let (eps, nu2) = (self.epsilon(k), self.nu2(k));
            if !super::within_se(mom.mean, eps, mom.mean_se(), 5.0) {
                return Err(self.violation(format!(
                    "mean of φ({k}) is {} but ε({k}) = {eps} (SE {})",
                    mom.mean,
                    mom.mean_se()
                )));
            }
            if !super::within_se(mom.variance, nu2, mom.variance_se(), 5.0) {
                return Err(self.violation(format!(
                    "variance of φ({k}) is {} but ν²({k}) = {nu2} (SE {})",
                    mom.variance,
                    mom.variance_se()
                )));
            }
            if k == 0 && self.alpha > 0.0 && !xs.iter().any(|&x| x > 0.0) {
                return Err(self.violation(
                    "α > 0 but φ(0) was never positive; zero must be reflecting".into(),
                ));
            }
        }
        Ok(())
    }

    fn violation(&self, reason: String) -> Error {
        Error::Contract {
            law: self.label.clone(),
            reason,
        }
    }
}
