use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::variates;
use crate::{Error, Result};

pub trait InitialSampler: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut dyn RngCore) -> u64;
}

#[derive(Clone, Copy, Debug)]
pub struct FixedInitial(pub u64);

impl InitialSampler for FixedInitial {
    fn sample(&self, _rng: &mut dyn RngCore) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonInitial(pub f64);

impl InitialSampler for PoissonInitial {
    fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        variates::poisson(self.0, rng)
    }
}

/// Law of `Z_0` with its declared first and second moments.
#[derive(Clone, Debug)]
pub struct InitialLaw {
    label: String,
    mean: f64,
    second_moment: f64,
    sampler: Arc<dyn InitialSampler>,
}

impl InitialLaw {
    pub fn new(
        label: impl Into<String>,
        mean: f64,
        second_moment: f64,
        sampler: impl InitialSampler + 'static,
    ) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::invalid("z0", format!("E[Z_0] must be finite and ≥ 0, got {mean}")));
        }
        // E[Z_0²] < ∞ and E[Z_0²] ≥ E[Z_0]² (up to round-off).
        if !second_moment.is_finite() || second_moment < mean * mean * (1.0 - 1e-12) {
            return Err(Error::invalid(
                "z0",
                format!("E[Z_0²] = {second_moment} is not a finite second moment for mean {mean}"),
            ));
        }
        Ok(Self {
            label: label.into(),
            mean,
            second_moment,
            sampler: Arc::new(sampler),
        })
    }

    pub fn fixed(z0: u64) -> Self {
        let z = z0 as f64;
        Self::new(format!("fixed({z0})"), z, z * z, FixedInitial(z0)).expect("fixed Z_0 is valid")
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        Self::new(format!("poisson({mean})"), mean, mean + mean * mean, PoissonInitial(mean))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        self.sampler.sample(rng)
    }
}

impl Default for InitialLaw {
    fn default() -> Self {
        Self::fixed(0)
    }
}
