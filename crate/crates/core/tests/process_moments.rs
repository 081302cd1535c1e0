//! Monte Carlo checks of the process moments against closed forms worked
//! out by hand in this file.

use cbp_core::cbp::{CbpModel, ControlLaw, InitialLaw, OffspringLaw, OffspringSampler};
use cbp_core::diagnostics::{cross_sum_identity, truncated_square_sum, moment_report};
use cbp_core::rng::StreamFactory;
use cbp_core::stats::SampleMoments;
use proptest::prelude::*;

/// 1 or 3 with equal probability: m = 2, σ² = 1, bounded support.
#[derive(Debug)]
struct OneOrThree;

impl OffspringSampler for OneOrThree {
    fn sample(&self, rng: &mut dyn rand::RngCore) -> u64 {
        1 + 2 * u64::from(rng.next_u32() & 1)
    }
}

fn one_or_three() -> OffspringLaw {
    OffspringLaw::new("one-or-three", 2.0, 1.0, OneOrThree).unwrap()
}

fn one_step(model: &CbpModel, z: u64, draws: usize, seed: u64) -> SampleMoments {
    let mut rng = StreamFactory::new(seed).stream(&[9, z], 0);
    let xs: Vec<f64> = (0..draws).map(|_| model.sample_generation(z, &mut rng).unwrap() as f64).collect();
    SampleMoments::from_slice(&xs).unwrap()
}

#[test]
fn empty_population_receives_immigrants() {
    // φ(0) ~ Poisson(2) parents, Poisson(1) children each: the total is
    // Poisson(2), so mean 2 and variance 2 · 1 + 1 · 2 = 4.
    let model = CbpModel::poisson_immigration(2.0, InitialLaw::fixed(0)).unwrap();
    let mom = one_step(&model, 0, 1_000_000, 11);
    assert!((mom.mean - 2.0).abs() < 5.0 * mom.mean_se(), "mean {}", mom.mean);
    assert!((mom.variance - 4.0).abs() < 5.0 * mom.variance_se(), "variance {}", mom.variance);
}

#[test]
fn one_step_variance_without_control_noise() {
    // α = 2, m = 2, k = 100: (k + α)/m = 51 is an integer, so exactly 51
    // parents with offspring variance 1 each.
    let model = CbpModel::bernoulli_rounding(2.0, one_or_three(), InitialLaw::fixed(0)).unwrap();
    assert_eq!(model.conditional_variance(100), 51.0);
    let mom = one_step(&model, 100, 1_000_000, 12);
    assert!((mom.mean - 102.0).abs() < 5.0 * mom.mean_se(), "mean {}", mom.mean);
    assert!((mom.variance - 51.0).abs() < 5.0 * mom.variance_se(), "variance {}", mom.variance);
}

/// `Var[Z_k]` for the immigration preset from `Z_0 = 0`: each step adds
/// `E[Z_{k−1}] + α` (offspring noise) and `α` (immigration noise) to the
/// previous variance, so `Var[Z_k] = Σ_{j<k} (jα + 2α)`.
fn immigration_variance(alpha: f64, k: u64) -> f64 {
    (0..k).map(|j| j as f64 * alpha + 2.0 * alpha).sum()
}

#[test]
fn unconditional_moments_and_bound() {
    let model = CbpModel::poisson_immigration(1.0, InitialLaw::fixed(0)).unwrap();
    let ks = [0usize, 1, 10, 100];
    let rows = moment_report(&model, &ks, 100_000, 21, None).unwrap();
    for row in &rows {
        assert!(row.pass, "{row:?}");
    }
    // Sharper than the bound: the variance itself.
    for (pair, &k) in rows.chunks(2).zip(&ks) {
        let exact = immigration_variance(1.0, k as u64);
        let var_row = &pair[1];
        if k == 0 {
            assert_eq!(var_row.observed, 0.0);
        } else {
            assert!((var_row.observed - exact).abs() < 5.0 * var_row.se, "k={k}: {} vs {exact}", var_row.observed);
            assert!(var_row.expected >= exact, "bound {} below exact {exact}", var_row.expected);
        }
    }
}

#[test]
fn bound_constants_of_immigration_preset() {
    // E[Z_0] = 0, ν²(0) = 1, C = 1, m = σ² = α = 1.
    let model = CbpModel::poisson_immigration(1.0, InitialLaw::fixed(0)).unwrap();
    let c = model.variance_bound_constants().unwrap();
    assert_eq!((c.m1, c.m2), (3.0, 2.0));
}

#[test]
fn variance_bound_misses_first_generation_from_empty_start() {
    // Deterministic control φ(k) = k + 2 (α = 2, m = 1, no rounding noise)
    // and Z_0 = 0. Then Var[Z_1] = σ²·φ(0) = 2, yet M1 = 0 and the
    // cumulative bound at k = 1 is 0.
    let model = CbpModel::bernoulli_rounding(2.0, OffspringLaw::poisson(1.0).unwrap(), InitialLaw::fixed(0)).unwrap();
    assert_eq!(model.control().nu2(0), 0.0);
    let bound = model.variance_bound(1).unwrap();
    assert_eq!(bound, 0.0);
    let mom = one_step(&model, 0, 200_000, 13);
    assert!((mom.variance - 2.0).abs() < 5.0 * mom.variance_se());
    assert!(mom.variance > bound + 10.0 * mom.variance_se());
}

#[test]
fn cross_sum_identity_with_overdispersed_offspring() {
    // Geometric with mean 2: σ² = 2 · 3 = 6, so 2l(l−1)σ⁴ = 432 at l = 3.
    let law = OffspringLaw::geometric(2.0).unwrap();
    let row = cross_sum_identity(&law, 3, 1_000_000, 31, None).unwrap();
    assert!((row.observed - 432.0).abs() < 4.0 * row.se, "{row:?}");
    assert!(row.pass);
}

#[test]
fn truncated_square_sum_bound() {
    for law in [OffspringLaw::poisson(1.0).unwrap(), OffspringLaw::geometric(1.0).unwrap()] {
        let s4 = law.variance() * law.variance();
        for l in [5usize, 10] {
            for big_m in [1.0, 10.0] {
                let row = truncated_square_sum(&law, l, big_m, 200_000, 32, None).unwrap();
                let bound = (l * l) as f64 * s4 / (big_m * big_m);
                assert_eq!(row.expected, bound);
                assert!(row.observed <= bound + 4.0 * row.se, "{} l={l} M={big_m}: {row:?}", law.label());
            }
        }
    }
}

#[test]
fn bounded_law_makes_truncated_sum_vanish() {
    // |X − m| ≤ 1 for the one-or-three law, so |S − d_j| ≤ l − 1 < M.
    let row = truncated_square_sum(&one_or_three(), 5, 10.0, 10_000, 33, None).unwrap();
    assert_eq!(row.observed, 0.0);
}

#[test]
fn trajectories_reproduce_bit_for_bit() {
    let model = CbpModel::bernoulli_rounding(1.5, OffspringLaw::geometric(1.3).unwrap(), InitialLaw::poisson(4.0).unwrap())
        .unwrap();
    let factory = StreamFactory::new(77);
    let a = model.simulate(500, &mut factory.stream(&[1], 3)).unwrap();
    let b = model.simulate(500, &mut factory.stream(&[1], 3)).unwrap();
    let c = model.simulate(500, &mut factory.stream(&[1], 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.values, c.values);
}

proptest! {
    #[test]
    fn a1_holds_for_rounding_control(alpha in 0.01f64..20.0, m in 0.2f64..6.0, k in 0u64..1_000_000) {
        let model = CbpModel::bernoulli_rounding(alpha, OffspringLaw::poisson(m).unwrap(), InitialLaw::fixed(0)).unwrap();
        let target = k as f64 + alpha;
        prop_assert!((model.conditional_mean(k) - target).abs() <= 1e-9 * target);
        let nu2 = model.control().nu2(k);
        prop_assert!((0.0..=0.25).contains(&nu2));
        prop_assert!(model.conditional_variance(k) >= 0.0);
    }

    #[test]
    fn a1_holds_for_immigration(alpha in 0.01f64..20.0, k in 0u64..1_000_000) {
        let model = CbpModel::poisson_immigration(alpha, InitialLaw::fixed(0)).unwrap();
        prop_assert_eq!(model.conditional_mean(k), k as f64 + alpha);
        let var = k as f64 + 2.0 * alpha;
        prop_assert!((model.conditional_variance(k) - var).abs() <= 1e-12 * var);
    }

    #[test]
    fn rounding_control_brackets_its_target(alpha in 0.01f64..20.0, m in 0.2f64..6.0, k in 0u64..100_000, seed: u64) {
        let control = ControlLaw::bernoulli_rounding(alpha, m).unwrap();
        let target = (k as f64 + alpha) / m;
        let mut rng = StreamFactory::new(seed).stream(&[0], 0);
        let phi = control.sample(k, &mut rng).unwrap() as f64;
        prop_assert!(phi == target.floor() || phi == target.floor() + 1.0);
    }
}
