//! The limiting diffusion `dW = α dt + √(σ²m⁻¹ W⁺) d𝒲` and its shifted
//! form `d𝓜 = √(σ²m⁻¹ (𝓜 + αt)⁺) d𝒲`.
//!
//! With `a = σ²/(2m)` the process `Y = 2W/a` is a squared Bessel process
//! of dimension `δ = 4αm/σ²`, whose transitions are noncentral χ². A
//! draw of `W(t + dt)` given `W(t) = x` is therefore
//! `a·dt·Gamma(δ/2 + K)` with `K ~ Poisson(x/(a·dt))`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cbp::CbpModel;
use crate::scaling::GridPath;
use crate::variates::{gamma, poisson, standard_normal};
use crate::{Error, Result};

/// Constants of the diffusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub alpha: f64,
    pub m: f64,
    pub sigma2: f64,
    /// Mean-reversion rate of the general affine form `(b·x + α) dt`.
    /// Only `b = 0` is supported; nonzero values are rejected.
    pub b: f64,
}

impl DiffusionParams {
    pub fn new(alpha: f64, m: f64, sigma2: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and ≥ 0, got {alpha}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("m", format!("must be finite and > 0, got {m}")));
        }
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::invalid("sigma2", format!("must be finite and ≥ 0, got {sigma2}")));
        }
        Ok(Self {
            alpha,
            m,
            sigma2,
            b: 0.0,
        })
    }

    /// Parameters tied to a model: same α, m and σ².
    pub fn from_model(model: &CbpModel) -> Result<Self> {
        Self::new(model.alpha(), model.offspring().mean(), model.offspring().variance())
    }

    pub fn with_mean_reversion(self, b: f64) -> Result<Self> {
        if b != 0.0 {
            return Err(Error::invalid("b", format!("only b = 0 is implemented, got {b}")));
        }
        Ok(self)
    }

    /// `a = σ²/(2m)`.
    pub fn a(&self) -> f64 {
        self.sigma2 / (2.0 * self.m)
    }

    /// `δ = 4αm/σ²`, or `None` when σ² = 0.
    pub fn delta(&self) -> Option<f64> {
        (self.sigma2 > 0.0).then(|| 4.0 * self.alpha * self.m / self.sigma2)
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// `E[W(t) | W(0) = x0] = x0 + αt`.
    pub fn mean(&self, x0: f64, t: f64) -> f64 {
        x0 + self.alpha * t
    }

    /// `Var[W(t) | W(0) = x0] = 2a·x0·t + aαt²`.
    pub fn variance(&self, x0: f64, t: f64) -> f64 {
        let a = self.a();
        2.0 * a * x0 * t + a * self.alpha * t * t
    }

    /// Diffusion coefficient `σ²m⁻¹·x⁺` of the SDE.
    fn diffusion_sq(&self, x: f64) -> f64 {
        self.sigma2 / self.m * x.max(0.0)
    }
}

fn check_state(x0: f64) -> Result<()> {
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(Error::invalid("x0", format!("must be finite and ≥ 0, got {x0}")));
    }
    Ok(())
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
    }
    Ok(())
}

/// One draw of `W(dt)` given `W(0) = x0` from the exact transition law.
pub fn exact_transition<R: Rng + ?Sized>(x0: f64, dt: f64, params: &DiffusionParams, rng: &mut R) -> Result<f64> {
    check_state(x0)?;
    check_step(dt)?;
    Ok(exact_step(x0, dt, params, rng))
}

fn exact_step<R: Rng + ?Sized>(x0: f64, dt: f64, params: &DiffusionParams, rng: &mut R) -> f64 {
    let Some(delta) = params.delta() else {
        return x0 + params.alpha * dt;
    };
    let scale = params.a() * dt;
    let k = if x0 > 0.0 { poisson(x0 / scale, rng) } else { 0 };
    scale * gamma(0.5 * delta + k as f64, rng)
}

/// `n_draws` i.i.d. draws of `W(t)` given `W(0) = x0`.
pub fn marginal_sample<R: Rng + ?Sized>(
    t: f64,
    x0: f64,
    params: &DiffusionParams,
    rng: &mut R,
    n_draws: usize,
) -> Result<Vec<f64>> {
    check_state(x0)?;
    check_step(t)?;
    Ok((0..n_draws).map(|_| exact_step(x0, t, params, rng)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Exact,
    EulerMaruyama,
}

/// A diffusion path on a time grid starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl DiffusionPath {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("paths are never empty")
    }

    pub fn into_grid_path(self) -> GridPath {
        GridPath {
            times: self.times,
            values: self.values,
        }
    }
}

/// Marginal samples, one value per line.
pub fn write_samples<W: Write>(mut out: W, samples: &[f64]) -> std::io::Result<()> {
    for x in samples {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

/// `0, dt, 2dt, …` up to `horizon`, with a final short step if `dt` does not
/// divide `horizon`.
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    check_step(dt)?;
    check_step(horizon)?;
    let steps = (horizon / dt + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let last = *grid.last().unwrap();
    if horizon - last > 1e-12 * horizon.max(1.0) {
        grid.push(horizon);
    } else {
        *grid.last_mut().unwrap() = horizon;
    }
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::invalid("grid", "must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::invalid("grid", "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Chained exact transitions over `grid`.
pub fn exact_path<R: Rng + ?Sized>(x0: f64, grid: &[f64], params: &DiffusionParams, rng: &mut R) -> Result<DiffusionPath> {
    check_state(x0)?;
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for w in grid.windows(2) {
        x = exact_step(x, w[1] - w[0], params, rng);
        values.push(x);
    }
    Ok(DiffusionPath {
        times: grid.to_vec(),
        values,
        scheme: Scheme::Exact,
    })
}

/// Full-truncation Euler–Maruyama:
/// `X_{i+1} = X_i + αΔt + √(σ²m⁻¹ max(X_i, 0))·√Δt·ξ`.
/// The state carried forward is untruncated; reported values are clamped
/// at 0.
pub fn euler_maruyama_path<R: Rng + ?Sized>(
    x0: f64,
    grid: &[f64],
    params: &DiffusionParams,
    rng: &mut R,
) -> Result<DiffusionPath> {
    check_state(x0)?;
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for w in grid.windows(2) {
        x = em_step(x, w[1] - w[0], params, rng);
        values.push(x.max(0.0));
    }
    Ok(DiffusionPath {
        times: grid.to_vec(),
        values,
        scheme: Scheme::EulerMaruyama,
    })
}

#[inline]
fn em_step<R: Rng + ?Sized>(x: f64, dt: f64, params: &DiffusionParams, rng: &mut R) -> f64 {
    if params.is_degenerate() {
        return x + params.alpha * dt;
    }
    x + params.alpha * dt + (params.diffusion_sq(x) * dt).sqrt() * standard_normal(rng)
}

/// Reported Euler–Maruyama value at `horizon` on a uniform `dt` grid,
/// without storing the path.
pub fn euler_maruyama_terminal<R: Rng + ?Sized>(
    x0: f64,
    horizon: f64,
    dt: f64,
    params: &DiffusionParams,
    rng: &mut R,
) -> Result<f64> {
    check_state(x0)?;
    let grid = uniform_grid(horizon, dt)?;
    let mut x = x0;
    for w in grid.windows(2) {
        x = em_step(x, w[1] - w[0], params, rng);
    }
    Ok(x.max(0.0))
}

/// Euler–Maruyama for the shifted equation
/// `d𝓜 = √(σ²m⁻¹ (𝓜 + αt)⁺) d𝒲`, started at `𝓜(0) = x0`. Values may be
/// negative, so the result is a plain [`GridPath`].
pub fn euler_maruyama_shifted_path<R: Rng + ?Sized>(
    x0: f64,
    grid: &[f64],
    params: &DiffusionParams,
    rng: &mut R,
) -> Result<GridPath> {
    check_state(x0)?;
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        if !params.is_degenerate() {
            x += (params.diffusion_sq(x + params.alpha * w[0]) * dt).sqrt() * standard_normal(rng);
        }
        values.push(x);
    }
    Ok(GridPath {
        times: grid.to_vec(),
        values,
    })
}

/// Draws of `𝓜(t) = W(t) − αt` with `W(0) = x0`, via the exact sampler.
pub fn shifted_marginal_sample<R: Rng + ?Sized>(
    t: f64,
    x0: f64,
    params: &DiffusionParams,
    rng: &mut R,
    n_draws: usize,
) -> Result<Vec<f64>> {
    let mut xs = marginal_sample(t, x0, params, rng, n_draws)?;
    let shift = params.alpha * t;
    xs.iter_mut().for_each(|x| *x -= shift);
    Ok(xs)
}

/// A test function with its first two derivatives.
pub trait C2Function {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

/// `x ↦ xᵖ`.
#[derive(Clone, Copy, Debug)]
pub struct Monomial(pub i32);

impl C2Function for Monomial {
    fn value(&self, x: f64) -> f64 {
        x.powi(self.0)
    }

    fn d1(&self, x: f64) -> f64 {
        match self.0 {
            0 => 0.0,
            p => f64::from(p) * x.powi(p - 1),
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match self.0 {
            0 | 1 => 0.0,
            p => f64::from(p * (p - 1)) * x.powi(p - 2),
        }
    }
}

/// Generator `Tf(x) = αf′(x) + ½xσ²m⁻¹f″(x)`.
pub fn generator_apply(f: &dyn C2Function, x: f64, params: &DiffusionParams) -> f64 {
    params.alpha * f.d1(x) + 0.5 * x * params.sigma2 / params.m * f.d2(x)
}

/// Monte Carlo estimate of `(E[f(W(h)) | W(0) = x] − f(x))/h` and its SE.
pub fn generator_estimate<R: Rng + ?Sized>(
    f: &dyn C2Function,
    x: f64,
    h: f64,
    params: &DiffusionParams,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::EmptySample);
    }
    let fx = f.value(x);
    let quotients: Vec<f64> = marginal_sample(h, x, params, rng, draws)?
        .into_iter()
        .map(|y| (f.value(y) - fx) / h)
        .collect();
    let mom = crate::stats::SampleMoments::from_slice(&quotients)?;
    Ok((mom.mean, mom.mean_se()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use crate::stats::SampleMoments;

    fn unit() -> DiffusionParams {
        DiffusionParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn derived_constants() {
        let p = DiffusionParams::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(p.a(), 0.75);
        assert_eq!(p.delta(), Some(8.0 / 3.0));
        assert_eq!(DiffusionParams::new(1.0, 1.0, 0.0).unwrap().delta(), None);
        assert!(DiffusionParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(DiffusionParams::new(1.0, 0.0, 1.0).is_err());
        assert!(unit().with_mean_reversion(0.5).is_err());
        assert!(unit().with_mean_reversion(0.0).is_ok());
    }

    #[test]
    fn degenerate_branch_is_ramp() {
        let p = DiffusionParams::new(2.0, 1.0, 0.0).unwrap();
        let mut rng = SimRng::new(1, 0);
        assert_eq!(exact_transition(0.5, 1.5, &p, &mut rng).unwrap(), 3.5);
        let grid = uniform_grid(1.0, 0.25).unwrap();
        let em = euler_maruyama_path(1.0, &grid, &p, &mut rng).unwrap();
        for (t, v) in em.times.iter().zip(&em.values) {
            assert!((v - (1.0 + 2.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_step_rejected() {
        let mut rng = SimRng::new(1, 0);
        assert!(exact_transition(0.0, 0.0, &unit(), &mut rng).is_err());
        assert!(exact_transition(0.0, -1.0, &unit(), &mut rng).is_err());
        assert!(exact_transition(-1.0, 1.0, &unit(), &mut rng).is_err());
        assert!(euler_maruyama_path(0.0, &[0.0, 0.5, 0.5], &unit(), &mut rng).is_err());
        assert!(euler_maruyama_path(0.0, &[0.1, 0.5], &unit(), &mut rng).is_err());
    }

    #[test]
    fn zero_is_absorbing_without_drift() {
        let p = DiffusionParams::new(0.0, 1.0, 1.0).unwrap();
        let mut rng = SimRng::new(2, 0);
        let grid = uniform_grid(1.0, 0.01).unwrap();
        let em = euler_maruyama_path(0.0, &grid, &p, &mut rng).unwrap();
        assert!(em.values.iter().all(|&v| v == 0.0));
        let ex = exact_path(0.0, &grid, &p, &mut rng).unwrap();
        assert!(ex.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_marginal_sample() {
        let mut rng = SimRng::new(3, 0);
        assert!(marginal_sample(1.0, 0.0, &unit(), &mut rng, 0).unwrap().is_empty());
    }

    #[test]
    fn uniform_grid_shapes() {
        assert_eq!(uniform_grid(1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(uniform_grid(1.0, 0.4).unwrap(), vec![0.0, 0.4, 0.8, 1.0]);
        assert_eq!(uniform_grid(1.0, 0.001).unwrap().len(), 1001);
    }

    #[test]
    fn values_never_negative() {
        let p = DiffusionParams::new(0.05, 1.0, 4.0).unwrap();
        let mut rng = SimRng::new(4, 0);
        let grid = uniform_grid(2.0, 0.05).unwrap();
        for _ in 0..200 {
            assert!(euler_maruyama_path(0.1, &grid, &p, &mut rng).unwrap().values.iter().all(|&v| v >= 0.0));
            assert!(exact_path(0.1, &grid, &p, &mut rng).unwrap().values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn exact_mean_from_positive_start() {
        let p = DiffusionParams::new(0.7, 2.0, 3.0).unwrap();
        let mut rng = SimRng::new(5, 0);
        for &(x0, t) in &[(0.0, 0.5), (2.0, 1.0), (10.0, 0.1)] {
            let xs = marginal_sample(t, x0, &p, &mut rng, 200_000).unwrap();
            let mom = SampleMoments::from_slice(&xs).unwrap();
            assert!((mom.mean - p.mean(x0, t)).abs() <= 4.0 * mom.mean_se(), "x0={x0} t={t}");
            assert!(
                (mom.variance - p.variance(x0, t)).abs() <= 4.0 * mom.variance_se(),
                "x0={x0} t={t}: {} vs {}",
                mom.variance,
                p.variance(x0, t)
            );
        }
    }

    #[test]
    fn generator_examples() {
        let p = unit();
        assert_eq!(generator_apply(&Monomial(1), 5.0, &p), 1.0);
        assert_eq!(generator_apply(&Monomial(2), 1.0, &p), 3.0);
        assert_eq!(Monomial(3).d2(2.0), 12.0);
        assert_eq!(Monomial(0).d1(2.0), 0.0);
    }

    #[test]
    fn csv_and_line_exports() {
        let path = DiffusionPath {
            times: vec![0.0, 0.5],
            values: vec![0.0, 1.25],
            scheme: Scheme::Exact,
        };
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n0,0\n0.5,1.25\n");
        let mut buf = Vec::new();
        write_samples(&mut buf, &[1.0, 0.5]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\n0.5\n");
    }
}
