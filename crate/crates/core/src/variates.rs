//! Scalar random variate generators.
//!
//! Poisson uses sequential inversion below a mean of 10 and Hörmann's
//! transformed rejection with squeeze (PTRS) above it. Gamma uses the
//! Marsaglia–Tsang squeeze, boosted for shapes below one. Standard normals
//! come from `rand_distr`'s ziggurat.

use rand::Rng;
use rand_distr::StandardNormal;

/// Mean below which Poisson draws use inversion.
pub const POISSON_INVERSION_LIMIT: f64 = 10.0;

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Poisson(`mean`) draw. `mean` must be finite and non-negative.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean.is_finite() && mean >= 0.0, "poisson mean {mean}");
    if mean <= 0.0 {
        0
    } else if mean < POISSON_INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let p0 = (-mean).exp();
    'draw: loop {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = p0;
        let mut cdf = p0;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            // cdf can stall just below 1 from rounding; redraw.
            if k > 200 {
                continue 'draw;
            }
        }
        return k;
    }
}

fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let log_mean = mean.ln();
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -mean + k * log_mean - ln_gamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// Gamma(`shape`, scale 1) draw; `shape == 0` is the point mass at 0.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape.is_finite() && shape >= 0.0, "gamma shape {shape}");
    if shape <= 0.0 {
        return 0.0;
    }
    if shape < 1.0 {
        let boost = open_unit(rng).powf(1.0 / shape);
        return marsaglia_tsang(shape + 1.0, rng) * boost;
    }
    marsaglia_tsang(shape, rng)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Geometric draw on {0, 1, 2, …} with success probability `p`.
pub fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 0;
    }
    (open_unit(rng).ln() / (1.0 - p).ln()).floor() as u64
}

/// ln Γ(x) for x > 0 via the Stirling series, shifted up to x ≥ 7.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 10] = [
        8.333333333333333e-02,
        -2.777777777777778e-03,
        7.936507936507937e-04,
        -5.952380952380952e-04,
        8.417508417508418e-04,
        -1.917526917526918e-03,
        6.410256410256410e-03,
        -2.955065359477124e-02,
        1.796443723688307e-01,
        -1.39243221690590e+00,
    ];
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let shift = if x <= 7.0 { (7.0 - x).floor() as u32 } else { 0 };
    let mut x0 = x + shift as f64;
    let x2 = 1.0 / (x0 * x0);
    let series = COEFFS.iter().rev().fold(0.0, |acc, &c| acc * x2 + c);
    let mut gl = series / x0
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + (x0 - 0.5) * x0.ln()
        - x0;
    for _ in 0..shift {
        x0 -= 1.0;
        gl -= x0.ln();
    }
    gl
}
