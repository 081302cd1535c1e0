//! One-time calibration of the KS acceptance threshold at the largest
//! scaling index of the default convergence study.
//!
//! The threshold is `median + 3·MAD` (unscaled MAD) of the KS distance over
//! master seeds 1..=20. The result is committed both as
//! [`KS_THRESHOLD_N1250`] and, with the per-seed values, in
//! `calibration/ks_n1250.json`.

use serde::{Deserialize, Serialize};

use crate::cbp::{CbpModel, InitialLaw};
use crate::stats::{mad, median};
use crate::Result;

use super::convergence::{ks_at, ConvergenceStudy};

pub const CALIBRATION_N: usize = 1250;
pub const CALIBRATION_REPLICATES: usize = 10_000;
pub const CALIBRATION_T: f64 = 1.0;
pub const CALIBRATION_ALPHA: f64 = 1.0;
pub const CALIBRATION_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;
pub const MAD_MULTIPLIER: f64 = 3.0;

/// Committed result of `cbp calibrate`.
pub const KS_THRESHOLD_N1250: f64 = 0.01650000000000003;

/// The committed calibration record.
pub const CALIBRATION_JSON: &str = include_str!("../../calibration/ks_n1250.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub t: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub reference_size: usize,
    pub seeds: Vec<u64>,
    pub ks: Vec<f64>,
    pub median: f64,
    pub mad: f64,
    pub threshold: f64,
}

impl Calibration {
    pub fn from_values(study: &ConvergenceStudy, n: usize, seeds: Vec<u64>, ks: Vec<f64>) -> Result<Self> {
        let med = median(&ks)?;
        let spread = mad(&ks)?;
        Ok(Self {
            n,
            t: study.t_checkpoints[0],
            alpha: study.params.alpha,
            replicates: study.replicates,
            reference_size: study.reference_size(),
            seeds,
            ks,
            median: med,
            mad: spread,
            threshold: med + MAD_MULTIPLIER * spread,
        })
    }

    pub fn committed() -> serde_json::Result<Self> {
        serde_json::from_str(CALIBRATION_JSON)
    }
}

/// Study configuration used for calibration and for acceptance.
pub fn default_study(master_seed: u64) -> Result<ConvergenceStudy> {
    ConvergenceStudy::new(
        CbpModel::poisson_immigration(CALIBRATION_ALPHA, InitialLaw::fixed(0))?,
        vec![10, 50, 250, CALIBRATION_N],
        vec![CALIBRATION_T],
        CALIBRATION_T,
        CALIBRATION_REPLICATES,
        master_seed,
    )
}

/// KS at `n` over `seeds`, summarised as `median + 3·MAD`.
pub fn calibrate(base: &ConvergenceStudy, n: usize, seeds: impl IntoIterator<Item = u64>) -> Result<Calibration> {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    let ks = seeds
        .iter()
        .map(|&seed| {
            let mut study = base.clone();
            study.master_seed = seed;
            ks_at(&study, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Calibration::from_values(base, n, seeds, ks)
}
