//! Sample statistics used by the diagnostics: compensated sums, moments
//! with standard errors, robust location/scale, and the two-sample
//! Kolmogorov–Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Neumaier-compensated sum. Order-dependent only at the last ulp, and
/// callers always feed values in a fixed order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean, unbiased variance and fourth central moment of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Biased fourth central moment, used for the variance standard error.
    pub m4: f64,
}

impl SampleMoments {
    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = xs.len() as f64;
        let mean = compensated_sum(xs.iter().copied()) / n;
        let m2 = compensated_sum(xs.iter().map(|&x| (x - mean) * (x - mean)));
        let m4 = compensated_sum(xs.iter().map(|&x| (x - mean).powi(4))) / n;
        let variance = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
        Ok(Self {
            count: xs.len(),
            mean,
            variance,
            m4,
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance,
    /// `√(μ₄/n − σ⁴(n−3)/(n(n−1)))`. Keeps the O(1/n) term so symmetric
    /// two-point laws (μ₄ = σ⁴) do not get a zero SE.
    pub fn variance_se(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let s4 = self.variance * self.variance;
        (self.m4 / n - s4 * (n - 3.0) / (n * (n - 1.0))).max(0.0).sqrt()
    }
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let v = sorted_copy(xs);
    let mid = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Median absolute deviation from the median (unscaled).
pub fn mad(xs: &[f64]) -> Result<f64> {
    let med = median(xs)?;
    let dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
    median(&dev)
}

/// Empirical distribution function of a sample.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            sorted: sorted_copy(samples),
        })
    }

    /// Fraction of the sample `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

/// Two-sample KS statistic `sup_x |F_a(x) − F_b(x)|`, by a merge walk over
/// the sorted samples. Ties are stepped over together so the supremum is
/// taken over right-continuous ECDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    Ok(ks_sorted(&a, &b))
}

/// As [`ks_two_sample`] for inputs that are already sorted ascending.
pub fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Effective size `n₁n₂/(n₁+n₂)` of a two-sample comparison.
pub fn ks_effective_size(n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    a * b / (a + b)
}

/// Asymptotic two-sample KS critical value at significance `level`,
/// `√(−ln(level/2)/2) / √n_eff`.
pub fn ks_critical_value(level: f64, n1: usize, n2: usize) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / ks_effective_size(n1, n2).sqrt()
}

/// Standard deviation of the Kolmogorov distribution,
/// `√(π²/12 − (π/2)(ln 2)²)`.
pub fn kolmogorov_std_dev() -> f64 {
    use std::f64::consts::{LN_2, PI};
    (PI * PI / 12.0 - PI / 2.0 * LN_2 * LN_2).sqrt()
}

/// Null-distribution standard error of the two-sample KS statistic at the
/// given sample sizes.
pub fn ks_null_se(n1: usize, n2: usize) -> f64 {
    kolmogorov_std_dev() / ks_effective_size(n1, n2).sqrt()
}
