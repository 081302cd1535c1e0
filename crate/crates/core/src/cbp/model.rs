use serde::{Deserialize, Serialize};

use super::simulate::{sample_generation, Trajectory};
use super::{ControlLaw, InitialLaw, OffspringLaw};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Populations over which A1 is verified pointwise at construction.
pub const A1_CHECK_RANGE: u64 = 10_000;

const SELF_TEST_SEED: u64 = 0x5e1f_7e57;
const OFFSPRING_SELF_TEST_DRAWS: usize = 1_000_000;
const CONTROL_SELF_TEST_DRAWS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Constants of the cumulative variance bound
/// `Var[Z_k] ≤ k·M1 + M2·k(k−1)/2 + Var[Z_0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    pub m1: f64,
    pub m2: f64,
    pub initial_variance: f64,
}

impl VarianceBound {
    pub fn at(&self, k: u64) -> f64 {
        let k = k as f64;
        k * self.m1 + 0.5 * self.m2 * k * (k - 1.0) + self.initial_variance
    }
}

/// A CBP: offspring law, control law and law of `Z_0`.
#[derive(Clone, Debug)]
pub struct CbpModel {
    offspring: OffspringLaw,
    control: ControlLaw,
    initial: InitialLaw,
    satisfies_a1: bool,
}

pub struct ModelBuilder {
    offspring: OffspringLaw,
    control: ControlLaw,
    initial: InitialLaw,
    self_test: bool,
    require_a1: bool,
}

impl ModelBuilder {
    pub fn initial(mut self, initial: InitialLaw) -> Self {
        self.initial = initial;
        self
    }

    /// Statistical self-test of both laws at construction (default on).
    pub fn self_test(mut self, enabled: bool) -> Self {
        self.self_test = enabled;
        self
    }

    /// When off, models outside the critical A1 regime are accepted (for
    /// classification); A1-only operations then return
    /// [`Error::RequiresA1`].
    pub fn require_a1(mut self, required: bool) -> Self {
        self.require_a1 = required;
        self
    }

    pub fn build(self) -> Result<CbpModel> {
        let a1_problem = a1_problem(&self.offspring, &self.control);
        if let (true, Some(reason)) = (self.require_a1, &a1_problem) {
            return Err(Error::Contract {
                law: format!("{} with {}", self.control.label(), self.offspring.label()),
                reason: reason.clone(),
            });
        }
        if self.self_test {
            self.offspring.self_test(OFFSPRING_SELF_TEST_DRAWS, SELF_TEST_SEED)?;
            self.control.self_test(CONTROL_SELF_TEST_DRAWS, SELF_TEST_SEED)?;
        }
        Ok(CbpModel {
            offspring: self.offspring,
            control: self.control,
            initial: self.initial,
            satisfies_a1: a1_problem.is_none(),
        })
    }
}

/// First way in which the pair fails A1 or the `ε(0) = α/m` convention.
fn a1_problem(offspring: &OffspringLaw, control: &ControlLaw) -> Option<String> {
    let (m, alpha) = (offspring.mean(), control.alpha());
    if m <= 0.0 {
        return Some("A1 needs a positive offspring mean".into());
    }
    let eps0 = control.epsilon(0);
    if (eps0 - alpha / m).abs() > 1e-12 * (alpha / m).max(1.0) {
        return Some(format!("ε(0) = {eps0} but the convention requires α/m = {}", alpha / m));
    }
    (1..=A1_CHECK_RANGE).find_map(|k| {
        let lhs = m * control.epsilon(k);
        let rhs = k as f64 + alpha;
        ((lhs - rhs).abs() > 1e-9 * rhs)
            .then(|| format!("A1 fails at k={k}: m·ε(k) = {lhs} but k + α = {rhs}"))
    })
}

impl CbpModel {
    pub fn builder(offspring: OffspringLaw, control: ControlLaw) -> ModelBuilder {
        ModelBuilder {
            offspring,
            control,
            initial: InitialLaw::default(),
            self_test: true,
            require_a1: true,
        }
    }

    /// A1-checked and self-tested model.
    pub fn new(offspring: OffspringLaw, control: ControlLaw, initial: InitialLaw) -> Result<Self> {
        Self::builder(offspring, control).initial(initial).build()
    }

    /// Preset P1: Poisson(1) offspring, `φ(k) = k + Poisson(α)`.
    pub fn poisson_immigration(alpha: f64, initial: InitialLaw) -> Result<Self> {
        Self::builder(OffspringLaw::poisson(1.0)?, ControlLaw::poisson_immigration(alpha)?)
            .initial(initial)
            .self_test(false)
            .build()
    }

    /// Preset P2: the given offspring law with Bernoulli-rounded control
    /// `φ(k) = ⌊(k+α)/m⌋ + Bernoulli(frac((k+α)/m))`.
    pub fn bernoulli_rounding(alpha: f64, offspring: OffspringLaw, initial: InitialLaw) -> Result<Self> {
        let control = ControlLaw::bernoulli_rounding(alpha, offspring.mean())?;
        Self::builder(offspring, control)
            .initial(initial)
            .self_test(false)
            .build()
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.offspring
    }

    pub fn control(&self) -> &ControlLaw {
        &self.control
    }

    pub fn initial(&self) -> &InitialLaw {
        &self.initial
    }

    pub fn alpha(&self) -> f64 {
        self.control.alpha()
    }

    pub fn satisfies_a1(&self) -> bool {
        self.satisfies_a1
    }

    /// Stable identifier recorded in trajectories and reports.
    pub fn id(&self) -> String {
        format!(
            "{} | offspring {} | Z0 {}",
            self.control.label(),
            self.offspring.label(),
            self.initial.label()
        )
    }

    /// `E[Z_n | Z_{n−1} = k] = m·ε(k)`
    pub fn conditional_mean(&self, k: u64) -> f64 {
        self.offspring.mean() * self.control.epsilon(k)
    }

    /// `Var[Z_n | Z_{n−1} = k] = σ²·ε(k) + m²·ν²(k)`
    pub fn conditional_variance(&self, k: u64) -> f64 {
        let m = self.offspring.mean();
        self.offspring.variance() * self.control.epsilon(k) + m * m * self.control.nu2(k)
    }

    /// Mean growth rate `τ_m(k) = m·ε(k)/k`, `k ≥ 1`.
    pub fn tau(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("k", "τ_m(k) is defined for k ≥ 1"));
        }
        Ok(self.conditional_mean(k) / k as f64)
    }

    /// Classification by `τ_m = lim τ_m(k)`.
    pub fn classify(&self) -> Result<Criticality> {
        let limit = self
            .control
            .growth_limit()
            .ok_or_else(|| Error::NoGrowthLimit(self.control.label().to_owned()))?;
        let tau = self.offspring.mean() * limit;
        Ok(if (tau - 1.0).abs() <= 1e-12 {
            Criticality::Critical
        } else if tau < 1.0 {
            Criticality::Subcritical
        } else {
            Criticality::Supercritical
        })
    }

    /// `E[Z_k] = E[Z_0] + kα` under A1.
    pub fn expected_size(&self, k: u64) -> Result<f64> {
        if !self.satisfies_a1 {
            return Err(Error::RequiresA1("expected_size"));
        }
        Ok(self.initial.mean() + k as f64 * self.alpha())
    }

    /// `M1 = 3·max{σ²E[Z_0]/m, C·m²·E[Z_0], m²ν²(0)}` and
    /// `M2 = 2·max{σ²α/m, m²·C·α}`.
    ///
    /// The per-generation bound `E[Var[Z_k|F_{k−1}]] ≤ M1 + M2(k−1)` counts
    /// `(k−1)α` where `E[σ²ε(Z_{k−1})]` carries `kα`; when `E[Z_0] = 0` and
    /// `ν²(0) = 0` the first generation's `σ²α/m` is not covered.
    pub fn variance_bound_constants(&self) -> Result<VarianceBound> {
        if !self.satisfies_a1 {
            return Err(Error::RequiresA1("variance_bound_constants"));
        }
        let m = self.offspring.mean();
        let sigma2 = self.offspring.variance();
        let c = self.control.nu2_scale();
        let alpha = self.alpha();
        let ez0 = self.initial.mean();
        let m1 = 3.0 * (sigma2 * ez0 / m).max(c * m * m * ez0).max(m * m * self.control.nu2(0));
        let m2 = 2.0 * (sigma2 * alpha / m).max(m * m * c * alpha);
        Ok(VarianceBound {
            m1,
            m2,
            initial_variance: self.initial.variance(),
        })
    }

    pub fn variance_bound(&self, k: u64) -> Result<f64> {
        Ok(self.variance_bound_constants()?.at(k))
    }

    pub fn sample_generation(&self, z: u64, rng: &mut dyn rand::RngCore) -> Option<u64> {
        sample_generation(z, &self.offspring, &self.control, rng).ok()
    }

    /// Simulates `Z_0, …, Z_N` from `rng`'s stream.
    pub fn simulate(&self, n_generations: usize, rng: &mut SimRng) -> Result<Trajectory> {
        if n_generations == 0 {
            return Err(Error::invalid("n_generations", "must be ≥ 1"));
        }
        Ok(Trajectory {
            values: self.simulate_values(n_generations, rng)?,
            seed: rng.seed(),
            stream: rng.stream(),
            model_id: self.id(),
        })
    }

    /// `Z_0, …, Z_N` without the trajectory metadata (N = 0 allowed).
    pub fn simulate_values(&self, n_generations: usize, rng: &mut dyn rand::RngCore) -> Result<Vec<u64>> {
        let mut values = Vec::with_capacity(n_generations + 1);
        let mut z = self.initial.sample(rng);
        values.push(z);
        for generation in 1..=n_generations {
            z = sample_generation(z, &self.offspring, &self.control, rng)
                .map_err(|_| Error::PopulationOverflow { generation })?;
            values.push(z);
        }
        Ok(values)
    }
}
