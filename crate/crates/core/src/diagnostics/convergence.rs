//! Marginal convergence `W_n(t) → W(t)` measured by two-sample KS
//! distances against large exact-diffusion reference samples.

use crate::cbp::CbpModel;
use crate::diffusion::{exact_transition, DiffusionParams};
use crate::rng::StreamFactory;
use crate::scaling::{grid_index, martingale_step_values};
use crate::stats::{ks_critical_value, ks_null_se, ks_sorted};
use crate::{Error, Result};

use super::parallel::{par_draws, par_map};
use super::report::{Check, DiagnosticReport, KsRow, Rule};
use super::{DOMAIN_PATHS, DOMAIN_REFERENCE};

/// Reference sample size as a multiple of the replicate count.
pub const REFERENCE_FACTOR: usize = 10;
/// Tie allowance of the monotone trend check, in null-SE units.
pub const TIE_SE: f64 = 2.0;
pub const MAX_TIES: usize = 1;
pub const KS_LEVEL: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub model: CbpModel,
    pub params: DiffusionParams,
    pub n_values: Vec<usize>,
    pub t_checkpoints: Vec<f64>,
    pub horizon: f64,
    pub replicates: usize,
    pub reference_factor: usize,
    pub master_seed: u64,
    pub threads: Option<usize>,
}

impl ConvergenceStudy {
    pub fn new(
        model: CbpModel,
        n_values: Vec<usize>,
        t_checkpoints: Vec<f64>,
        horizon: f64,
        replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let study = Self {
            params: DiffusionParams::from_model(&model)?,
            model,
            n_values,
            t_checkpoints,
            horizon,
            replicates,
            reference_factor: REFERENCE_FACTOR,
            master_seed,
            threads: None,
        };
        study.validate()?;
        Ok(study)
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let model_params = DiffusionParams::from_model(&self.model)?;
        if model_params != self.params {
            return Err(Error::Inconsistent(format!(
                "diffusion parameters {:?} do not match the model's {:?}",
                self.params, model_params
            )));
        }
        if self.n_values.is_empty() || self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_values", "must be a non-empty increasing list of positive integers"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("T", "must be finite and > 0"));
        }
        if self.t_checkpoints.is_empty() || self.t_checkpoints.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
            return Err(Error::invalid("t_checkpoints", "must be non-empty and lie in (0, T]"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be ≥ 1"));
        }
        if self.reference_factor < REFERENCE_FACTOR {
            return Err(Error::invalid("reference_factor", format!("must be ≥ {REFERENCE_FACTOR}")));
        }
        Ok(())
    }

    pub fn reference_size(&self) -> usize {
        self.reference_factor * self.replicates
    }

    pub fn factory(&self) -> StreamFactory {
        StreamFactory::new(self.master_seed)
    }
}

/// Sorted exact-diffusion draws of `W(t)` from `W(0) = 0`, one sample per
/// checkpoint. The same reference is shared by every `n`.
pub fn reference_samples(study: &ConvergenceStudy) -> Result<Vec<Vec<f64>>> {
    let factory = study.factory();
    study
        .t_checkpoints
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut xs = par_draws(study.threads, factory, &[DOMAIN_REFERENCE, i as u64], study.reference_size(), |rng| {
                exact_transition(0.0, t, &study.params, rng).expect("validated")
            })?;
            xs.sort_by(f64::total_cmp);
            Ok(xs)
        })
        .collect()
}

/// Sorted samples of `W_n(t)` for each checkpoint. Every path also runs
/// the two-formula cross-check of the martingale step process.
pub fn scaled_samples(study: &ConvergenceStudy, n: usize) -> Result<Vec<Vec<f64>>> {
    let factory = study.factory();
    let generations = grid_index(n, study.horizon);
    let indices: Vec<usize> = study.t_checkpoints.iter().map(|&t| grid_index(n, t)).collect();
    let alpha = study.model.alpha();
    let per_path = par_map(study.threads, study.replicates, |r| {
        let mut rng = factory.stream(&[DOMAIN_PATHS, n as u64], r as u64);
        let values = study.model.simulate_values(generations, &mut rng)?;
        martingale_step_values(&values, n, study.horizon, alpha)?;
        Ok(indices.iter().map(|&k| values[k] as f64 / n as f64).collect::<Vec<_>>())
    })?;
    let mut out: Vec<Vec<f64>> = indices.iter().map(|_| Vec::with_capacity(study.replicates)).collect();
    for row in per_path {
        for (col, x) in out.iter_mut().zip(row) {
            col.push(x);
        }
    }
    out.iter_mut().for_each(|xs| xs.sort_by(f64::total_cmp));
    Ok(out)
}

/// KS rows for every `(n, t)`, ordered by `n` then `t`.
pub fn marginal_convergence(study: &ConvergenceStudy) -> Result<Vec<KsRow>> {
    study.validate()?;
    let reference = reference_samples(study)?;
    ks_rows_against(study, &reference, &study.n_values)
}

fn ks_rows_against(study: &ConvergenceStudy, reference: &[Vec<f64>], n_values: &[usize]) -> Result<Vec<KsRow>> {
    let (n1, n2) = (study.replicates, study.reference_size());
    let mut rows = Vec::new();
    for &n in n_values {
        let samples = scaled_samples(study, n)?;
        for ((&t, xs), reference) in study.t_checkpoints.iter().zip(&samples).zip(reference) {
            rows.push(KsRow {
                n,
                t,
                ks: ks_sorted(xs, reference),
                se: ks_null_se(n1, n2),
                critical: ks_critical_value(KS_LEVEL, n1, n2),
                replicates: n1,
                reference_size: n2,
            });
        }
    }
    Ok(rows)
}

/// KS distance at one `n` and the first checkpoint only; used by the
/// threshold calibration.
pub fn ks_at(study: &ConvergenceStudy, n: usize) -> Result<f64> {
    study.validate()?;
    let mut single = study.clone();
    single.t_checkpoints.truncate(1);
    let reference = reference_samples(&single)?;
    Ok(ks_rows_against(&single, &reference, &[n])?[0].ks)
}

/// Per checkpoint: monotone decrease across `n` (ties within
/// [`TIE_SE`]·SE, at most [`MAX_TIES`]) and final KS ≤ `threshold`.
pub fn convergence_checks(rows: &[KsRow], threshold: f64) -> Vec<Check> {
    let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut checks = Vec::new();
    for t in ts {
        let series: Vec<&KsRow> = rows.iter().filter(|r| r.t == t).collect();
        checks.push(Check::new(
            format!("ks decreasing in n at t={t}"),
            Rule::DecreasingWithTies {
                values: series.iter().map(|r| r.ks).collect(),
                ses: series.iter().map(|r| r.se).collect(),
                tie_z: TIE_SE,
                max_ties: MAX_TIES,
            },
        ));
        let last = series.last().expect("non-empty by construction");
        checks.push(Check::new(
            format!("ks at n={} t={t} below calibrated threshold", last.n),
            Rule::AtMost {
                observed: last.ks,
                bound: threshold,
                se: 0.0,
                z: 0.0,
            },
        ));
    }
    checks
}

/// Runs the study and assembles a report with its checks.
pub fn convergence_report(study: &ConvergenceStudy, threshold: f64) -> Result<DiagnosticReport> {
    let rows = marginal_convergence(study)?;
    let mut report = DiagnosticReport::new("marginal convergence");
    report.meta("model", study.model.id());
    report.meta("alpha", study.params.alpha);
    report.meta("m", study.params.m);
    report.meta("sigma2", study.params.sigma2);
    report.meta("horizon", study.horizon);
    report.meta("replicates", study.replicates);
    report.meta("reference_size", study.reference_size());
    report.meta("master_seed", study.master_seed);
    report.meta("ks_threshold", threshold);
    report.meta("reference_start", "W(0) = 0, exact transition sampler");
    report.checks = convergence_checks(&rows, threshold);
    report.ks_rows = rows;
    Ok(report)
}
