use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::rng::SimRng;
use crate::stats::SampleMoments;
use crate::variates;
use crate::{Error, Result};

/// Draws offspring counts `X_{n,j}`.
pub trait OffspringSampler: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut dyn RngCore) -> u64;

    /// Total offspring of `parents` independent individuals, `None` on
    /// overflow. Laws closed under convolution override this with a single
    /// draw.
    fn sample_sum(&self, parents: u64, rng: &mut dyn RngCore) -> Option<u64> {
        let mut total = 0u64;
        for _ in 0..parents {
            total = total.checked_add(self.sample(rng))?;
        }
        Some(total)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonOffspring {
    pub mean: f64,
}

impl OffspringSampler for PoissonOffspring {
    fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        variates::poisson(self.mean, rng)
    }

    fn sample_sum(&self, parents: u64, rng: &mut dyn RngCore) -> Option<u64> {
        let mean = parents as f64 * self.mean;
        (mean < 9.0e15).then(|| variates::poisson(mean, rng))
    }
}

/// Geometric on {0, 1, …}; sums are negative binomial, drawn as a
/// gamma-mixed Poisson.
#[derive(Clone, Copy, Debug)]
pub struct GeometricOffspring {
    pub mean: f64,
}

impl OffspringSampler for GeometricOffspring {
    fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        variates::geometric(1.0 / (1.0 + self.mean), rng)
    }

    fn sample_sum(&self, parents: u64, rng: &mut dyn RngCore) -> Option<u64> {
        if parents == 0 {
            return Some(0);
        }
        let rate = self.mean * variates::gamma(parents as f64, rng);
        (rate < 9.0e15).then(|| variates::poisson(rate, rng))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DeterministicOffspring {
    pub value: u64,
}

impl OffspringSampler for DeterministicOffspring {
    fn sample(&self, _rng: &mut dyn RngCore) -> u64 {
        self.value
    }

    fn sample_sum(&self, parents: u64, _rng: &mut dyn RngCore) -> Option<u64> {
        parents.checked_mul(self.value)
    }
}

/// Offspring distribution with its declared mean `m` and variance `σ²`.
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    label: String,
    mean: f64,
    variance: f64,
    sampler: Arc<dyn OffspringSampler>,
}

impl OffspringLaw {
    /// Wraps a user sampler. The declared moments are checked for sanity
    /// here; whether the sampler actually has them is checked by
    /// [`OffspringLaw::self_test`].
    pub fn new(
        label: impl Into<String>,
        mean: f64,
        variance: f64,
        sampler: impl OffspringSampler + 'static,
    ) -> Result<Self> {
        // m = 0 is admitted for degenerate test laws; A1 models reject it.
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::invalid("m", format!("offspring mean must be finite and ≥ 0, got {mean}")));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::invalid("sigma2", format!("offspring variance must be finite and ≥ 0, got {variance}")));
        }
        Ok(Self {
            label: label.into(),
            mean,
            variance,
            sampler: Arc::new(sampler),
        })
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        Self::new(format!("poisson({mean})"), mean, mean, PoissonOffspring { mean })
    }

    pub fn geometric(mean: f64) -> Result<Self> {
        Self::new(
            format!("geometric({mean})"),
            mean,
            mean * (1.0 + mean),
            GeometricOffspring { mean },
        )
    }

    pub fn deterministic(value: u64) -> Result<Self> {
        Self::new(
            format!("deterministic({value})"),
            value as f64,
            0.0,
            DeterministicOffspring { value },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `m`
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `σ²`
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        self.sampler.sample(rng)
    }

    pub fn sample_sum(&self, parents: u64, rng: &mut dyn RngCore) -> Option<u64> {
        self.sampler.sample_sum(parents, rng)
    }

    /// Empirical mean and variance over `draws` samples must sit within
    /// five standard errors of the declared `m` and `σ²`.
    pub fn self_test(&self, draws: usize, seed: u64) -> Result<()> {
        let mut rng = SimRng::new(seed, 0);
        let xs: Vec<f64> = (0..draws).map(|_| self.sample(&mut rng) as f64).collect();
        let mom = SampleMoments::from_slice(&xs)?;
        if !super::within_se(mom.mean, self.mean, mom.mean_se(), 5.0) {
            return Err(self.violation(format!(
                "empirical mean {} is not within 5 SE ({}) of declared m = {}",
                mom.mean,
                mom.mean_se(),
                self.mean
            )));
        }
        if !super::within_se(mom.variance, self.variance, mom.variance_se(), 5.0) {
            return Err(self.violation(format!(
                "empirical variance {} is not within 5 SE ({}) of declared σ² = {}",
                mom.variance,
                mom.variance_se(),
                self.variance
            )));
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
