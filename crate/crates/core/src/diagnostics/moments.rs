//! Monte Carlo checks of the closed-form moments: unconditional mean and
//! variance bound of `Z_k`, one-step conditional moments, and the two
//! statements about centred sums of i.i.d. offspring.

use crate::cbp::{CbpModel, OffspringLaw};
use crate::rng::StreamFactory;
use crate::stats::SampleMoments;
use crate::{Error, Result};

use super::parallel::{par_draws, par_map};
use super::report::{MomentRow, Sided};
use super::{DOMAIN_CROSS_SUM, DOMAIN_MOMENTS, DOMAIN_ONE_STEP};

pub const MEAN_TOLERANCE_SE: f64 = 5.0;
pub const VARIANCE_BOUND_SLACK_SE: f64 = 3.0;
pub const CONDITIONAL_TOLERANCE_SE: f64 = 5.0;
pub const CROSS_SUM_TOLERANCE_SE: f64 = 4.0;

/// Empirical `E[Z_k]` against `E[Z_0] + kα` (two-sided, 5 SE) and
/// empirical `Var[Z_k]` against the cumulative bound (one-sided, 3 SE).
pub fn moment_report(
    model: &CbpModel,
    ks: &[usize],
    replicates: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<MomentRow>> {
    if replicates < 2 {
        return Err(Error::invalid("replicates", "must be ≥ 2"));
    }
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    let bound = model.variance_bound_constants()?;
    let factory = StreamFactory::new(master_seed);
    let per_path = par_map(threads, replicates, |r| {
        let mut rng = factory.stream(&[DOMAIN_MOMENTS], r as u64);
        let values = model.simulate_values(k_max, &mut rng)?;
        Ok(ks.iter().map(|&k| values[k] as f64).collect::<Vec<_>>())
    })?;
    let mut rows = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let column: Vec<f64> = per_path.iter().map(|v| v[i]).collect();
        let mom = SampleMoments::from_slice(&column)?;
        rows.push(MomentRow::new(
            format!("E[Z_{k}]"),
            mom.mean,
            model.expected_size(k as u64)?,
            mom.mean_se(),
            MEAN_TOLERANCE_SE,
            Sided::TwoSided,
        ));
        rows.push(MomentRow::new(
            format!("Var[Z_{k}] <= bound"),
            mom.variance,
            bound.at(k as u64),
            mom.variance_se(),
            VARIANCE_BOUND_SLACK_SE,
            Sided::Upper,
        ));
    }
    Ok(rows)
}

/// One-step draws from `Z_{k−1} = k`: mean against `m·ε(k)` and variance
/// against `σ²ε(k) + m²ν²(k)`, both two-sided at 5 SE.
pub fn conditional_moment_rows(
    model: &CbpModel,
    ks: &[u64],
    draws: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<MomentRow>> {
    if draws < 2 {
        return Err(Error::invalid("draws", "must be ≥ 2"));
    }
    let factory = StreamFactory::new(master_seed);
    let mut rows = Vec::new();
    for &k in ks {
        let xs = par_draws(threads, factory, &[DOMAIN_ONE_STEP, k], draws, |rng| {
            model.sample_generation(k, rng).map(|z| z as f64)
        })?;
        let xs: Vec<f64> = xs
            .into_iter()
            .collect::<Option<_>>()
            .ok_or(Error::PopulationOverflow { generation: 1 })?;
        let mom = SampleMoments::from_slice(&xs)?;
        rows.push(MomentRow::new(
            format!("E[Z_n | Z_n-1 = {k}]"),
            mom.mean,
            model.conditional_mean(k),
            mom.mean_se(),
            CONDITIONAL_TOLERANCE_SE,
            Sided::TwoSided,
        ));
        rows.push(MomentRow::new(
            format!("Var[Z_n | Z_n-1 = {k}]"),
            mom.variance,
            model.conditional_variance(k),
            mom.variance_se(),
            CONDITIONAL_TOLERANCE_SE,
            Sided::TwoSided,
        ));
    }
    Ok(rows)
}

fn centred_draws(offspring: &OffspringLaw, l: usize, rng: &mut dyn rand::RngCore, out: &mut Vec<f64>) {
    let m = offspring.mean();
    out.clear();
    out.extend((0..l).map(|_| offspring.sample(rng) as f64 - m));
}

/// `E[(Σ_{j≠j′} d_j d_j′)²]` over ordered pairs, `d_j = X_j − m`, against
/// `2l(l−1)σ⁴`.
pub fn cross_sum_identity(
    offspring: &OffspringLaw,
    l: usize,
    replicates: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<MomentRow> {
    if l < 2 {
        return Err(Error::invalid("l", "must be ≥ 2"));
    }
    if replicates < 2 {
        return Err(Error::invalid("replicates", "must be ≥ 2"));
    }
    let factory = StreamFactory::new(master_seed);
    let xs = par_draws(threads, factory, &[DOMAIN_CROSS_SUM, 0, l as u64], replicates, |rng| {
        let mut d = Vec::with_capacity(l);
        centred_draws(offspring, l, rng, &mut d);
        let s: f64 = d.iter().sum();
        let sq: f64 = d.iter().map(|x| x * x).sum();
        let cross = s * s - sq;
        cross * cross
    })?;
    let mom = SampleMoments::from_slice(&xs)?;
    let s2 = offspring.variance();
    let lf = l as f64;
    Ok(MomentRow::new(
        format!("cross-sum second moment l={l}"),
        mom.mean,
        2.0 * lf * (lf - 1.0) * s2 * s2,
        mom.mean_se(),
        CROSS_SUM_TOLERANCE_SE,
        Sided::TwoSided,
    ))
}

/// `E[Σ_j d_j² 1{|S − d_j| > M}]` against the bound `l²σ⁴/M²`.
pub fn truncated_square_sum(
    offspring: &OffspringLaw,
    l: usize,
    big_m: f64,
    replicates: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<MomentRow> {
    if l < 1 {
        return Err(Error::invalid("l", "must be ≥ 1"));
    }
    if !(big_m.is_finite() && big_m > 0.0) {
        return Err(Error::invalid("M", "must be finite and > 0"));
    }
    if replicates < 2 {
        return Err(Error::invalid("replicates", "must be ≥ 2"));
    }
    let factory = StreamFactory::new(master_seed);
    let xs = par_draws(
        threads,
        factory,
        &[DOMAIN_CROSS_SUM, 1, l as u64, big_m.to_bits()],
        replicates,
        |rng| {
            let mut d = Vec::with_capacity(l);
            centred_draws(offspring, l, rng, &mut d);
            let s: f64 = d.iter().sum();
            d.iter().filter(|&&x| (s - x).abs() > big_m).map(|x| x * x).sum::<f64>()
        },
    )?;
    let mom = SampleMoments::from_slice(&xs)?;
    let s2 = offspring.variance();
    let lf = l as f64;
    Ok(MomentRow::new(
        format!("truncated square sum l={l} M={big_m}"),
        mom.mean,
        lf * lf * s2 * s2 / (big_m * big_m),
        mom.mean_se(),
        CROSS_SUM_TOLERANCE_SE,
        Sided::Upper,
    ))
}
