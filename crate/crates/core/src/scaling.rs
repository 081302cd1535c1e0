//! Scaled step processes built from a CBP trajectory.
//!
//! For a scaling index `n` the path `W_n(t) = Z_{⌊nt⌋}/n` and the random
//! step process `𝓜_n(t) = (Z_0 + Σ_{k≤⌊nt⌋} M_k)/n`, with martingale
//! differences `M_k = Z_k − Z_{k−1} − α`, are right-continuous and
//! piecewise constant, so a [`StepPath`] stores only the values at the
//! jump points `k/n`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cbp::Trajectory;
use crate::{Error, Result};

/// `⌊n·t⌋`, snapping values within round-off of a jump onto it.
pub fn grid_index(n: usize, t: f64) -> usize {
    (n as f64 * t + 1e-9).floor().max(0.0) as usize
}

/// Piecewise-constant path on `[0, T]` with jumps at `k/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    pub horizon: f64,
    pub n: usize,
    /// `values[k]` is the path on `[k/n, (k+1)/n)`; length `⌊nT⌋ + 1`.
    pub values: Vec<f64>,
}

impl StepPath {
    /// Value at `t ∈ [0, T]`: `values[⌊nt⌋]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon + 1e-12).contains(&t) {
            return Err(Error::invalid("t", format!("{t} is outside [0, {}]", self.horizon)));
        }
        Ok(self.values[grid_index(self.n, t).min(self.values.len() - 1)])
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    pub fn grid_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.grid_time(k))
    }

    /// CSV with header `t,value`, one row per jump point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{v}", self.grid_time(k))?;
        }
        Ok(())
    }
}

/// A path sampled on an arbitrary increasing time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridPath {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn check_scaling(n: usize, horizon: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("n", "scaling index must be ≥ 1"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("T", format!("horizon must be finite and > 0, got {horizon}")));
    }
    Ok(grid_index(n, horizon) + 1)
}

fn require_len(values: &[u64], needed: usize) -> Result<()> {
    if values.len() < needed {
        return Err(Error::TrajectoryTooShort {
            needed,
            available: values.len(),
        });
    }
    Ok(())
}

/// `W_n` on `[0, T]` from raw population values.
pub fn scale_values(values: &[u64], n: usize, horizon: f64) -> Result<StepPath> {
    let len = check_scaling(n, horizon)?;
    require_len(values, len)?;
    let scale = n as f64;
    Ok(StepPath {
        horizon,
        n,
        values: values[..len].iter().map(|&z| z as f64 / scale).collect(),
    })
}

/// `W_n(t) = Z_{⌊nt⌋}/n` on `[0, T]`.
pub fn scale_trajectory(traj: &Trajectory, n: usize, horizon: f64) -> Result<StepPath> {
    scale_values(&traj.values, n, horizon)
}

/// `M_1, …, M_N` together with `Z_0`, enough to rebuild the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleIncrements {
    pub increments: Vec<f64>,
    pub z0: u64,
    pub alpha: f64,
}

impl MartingaleIncrements {
    /// `Z_k = Z_0 + Σ_{j≤k} M_j + kα` for `k = 0..=N`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut partial = self.z0 as f64;
        out.push(partial);
        for (j, m) in self.increments.iter().enumerate() {
            partial += m;
            out.push(partial + (j + 1) as f64 * self.alpha);
        }
        out
    }
}

/// `M_k = Z_k − Z_{k−1} − α`.
pub fn martingale_increments(traj: &Trajectory, alpha: f64) -> Result<MartingaleIncrements> {
    increments_of(&traj.values, alpha)
}

pub fn increments_of(values: &[u64], alpha: f64) -> Result<MartingaleIncrements> {
    require_len(values, 2)?;
    Ok(MartingaleIncrements {
        increments: values
            .windows(2)
            .map(|w| w[1] as f64 - w[0] as f64 - alpha)
            .collect(),
        z0: values[0],
        alpha,
    })
}

/// `𝓜_n(t) = n⁻¹(Z_0 + Σ_{k≤⌊nt⌋} M_k) = n⁻¹Z_{⌊nt⌋} − (⌊nt⌋/n)α`.
///
/// Both forms are computed; a disagreement beyond round-off is reported
/// as [`Error::Inconsistent`].
pub fn martingale_step_values(values: &[u64], n: usize, horizon: f64, alpha: f64) -> Result<StepPath> {
    let len = check_scaling(n, horizon)?;
    require_len(values, len)?;
    let scale = n as f64;
    let mut partial = values[0] as f64;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        if k > 0 {
            partial += values[k] as f64 - values[k - 1] as f64 - alpha;
        }
        let by_increments = partial / scale;
        let closed = values[k] as f64 / scale - k as f64 / scale * alpha;
        if (by_increments - closed).abs() > 1e-9 * closed.abs().max(1.0) {
            return Err(Error::Inconsistent(format!(
                "step process forms disagree at k={k}: {by_increments} vs {closed}"
            )));
        }
        out.push(closed);
    }
    Ok(StepPath {
        horizon,
        n,
        values: out,
    })
}

pub fn martingale_step_path(traj: &Trajectory, n: usize, horizon: f64, alpha: f64) -> Result<StepPath> {
    martingale_step_values(&traj.values, n, horizon, alpha)
}

/// `(Ψ⁽ⁿ⁾f)(t) = f(⌊nt⌋/n) + (⌊nt⌋/n)α`.
pub fn psi_n(f: &StepPath, alpha: f64) -> StepPath {
    StepPath {
        horizon: f.horizon,
        n: f.n,
        values: f
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v + f.grid_time(k) * alpha)
            .collect(),
    }
}

/// `(Ψf)(t) = f(t) + αt`.
pub fn psi(f: &GridPath, alpha: f64) -> GridPath {
    GridPath {
        times: f.times.clone(),
        values: f.times.iter().zip(&f.values).map(|(t, v)| v + alpha * t).collect(),
    }
}
