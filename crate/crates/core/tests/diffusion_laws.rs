//! Distributional checks of the diffusion samplers. Moment targets come
//! from a Runge–Kutta integration of the moment equations written here,
//! not from the library's closed forms.

use cbp_core::diffusion::{
    euler_maruyama_shifted_path, euler_maruyama_terminal, exact_transition, generator_apply, generator_estimate,
    marginal_sample, shifted_marginal_sample, uniform_grid, DiffusionParams, Monomial,
};
use cbp_core::rng::StreamFactory;
use cbp_core::stats::{ks_critical_value, ks_two_sample, SampleMoments};
use proptest::prelude::*;

/// `(E[X(t)], E[X(t)²])` by RK4 on
/// `μ′ = α`, `s′ = 2αμ + (σ²/m)μ`, from `(x0, x0²)`.
fn moment_ode(p: &DiffusionParams, x0: f64, t: f64) -> (f64, f64) {
    let rhs = |mu: f64, _s: f64| (p.alpha, 2.0 * p.alpha * mu + p.sigma2 / p.m * mu);
    let steps = 2000;
    let h = t / steps as f64;
    let (mut mu, mut s) = (x0, x0 * x0);
    for _ in 0..steps {
        let k1 = rhs(mu, s);
        let k2 = rhs(mu + 0.5 * h * k1.0, s + 0.5 * h * k1.1);
        let k3 = rhs(mu + 0.5 * h * k2.0, s + 0.5 * h * k2.1);
        let k4 = rhs(mu + h * k3.0, s + h * k3.1);
        mu += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        s += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (mu, s - mu * mu)
}

fn cases() -> Vec<(DiffusionParams, f64, f64)> {
    vec![
        (DiffusionParams::new(1.0, 1.0, 1.0).unwrap(), 0.0, 1.0),
        (DiffusionParams::new(1.0, 1.0, 1.0).unwrap(), 2.0, 0.3),
        (DiffusionParams::new(0.5, 2.0, 3.0).unwrap(), 0.7, 2.0),
        (DiffusionParams::new(3.0, 1.5, 0.4).unwrap(), 0.0, 0.5),
        (DiffusionParams::new(0.1, 1.0, 4.0).unwrap(), 5.0, 1.0),
    ]
}

#[test]
fn closed_forms_match_moment_ode() {
    for (p, x0, t) in cases() {
        let (mean, var) = moment_ode(&p, x0, t);
        assert!((p.mean(x0, t) - mean).abs() < 1e-10, "{p:?}");
        assert!((p.variance(x0, t) - var).abs() < 1e-9 * var.max(1.0), "{p:?}");
    }
}

#[test]
fn exact_sampler_moments() {
    for (i, (p, x0, t)) in cases().into_iter().enumerate() {
        let mut rng = StreamFactory::new(51).stream(&[1], i as u64);
        let xs = marginal_sample(t, x0, &p, &mut rng, 1_000_000).unwrap();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let (mean, var) = moment_ode(&p, x0, t);
        let mom = SampleMoments::from_slice(&xs).unwrap();
        assert!((mom.mean - mean).abs() < 4.0 * mom.mean_se(), "{p:?} x0={x0}: mean {}", mom.mean);
        assert!((mom.variance - var).abs() < 4.0 * mom.variance_se(), "{p:?} x0={x0}: var {}", mom.variance);
    }
}

#[test]
fn half_steps_compose_to_full_step() {
    let p = DiffusionParams::new(0.5, 2.0, 3.0).unwrap();
    let (x0, dt, draws) = (0.7, 0.8, 100_000);
    let crit = ks_critical_value(0.01, draws, draws);
    let passes = (1..=10u64)
        .filter(|&seed| {
            let f = StreamFactory::new(seed);
            let (mut one, mut two) = (f.stream(&[2], 0), f.stream(&[3], 0));
            let direct: Vec<f64> = (0..draws).map(|_| exact_transition(x0, dt, &p, &mut one).unwrap()).collect();
            let chained: Vec<f64> = (0..draws)
                .map(|_| {
                    let mid = exact_transition(x0, dt / 2.0, &p, &mut two).unwrap();
                    exact_transition(mid, dt / 2.0, &p, &mut two).unwrap()
                })
                .collect();
            ks_two_sample(&direct, &chained).unwrap() < crit
        })
        .count();
    assert!(passes >= 8, "{passes}/10");
}

#[test]
fn euler_maruyama_agrees_with_exact_from_positive_start() {
    let p = DiffusionParams::new(0.5, 2.0, 3.0).unwrap();
    let (x0, dt) = (1.5, 2f64.powi(-10));
    let f = StreamFactory::new(52);
    let em: Vec<f64> = (0..100_000u64)
        .map(|r| euler_maruyama_terminal(x0, 1.0, dt, &p, &mut f.stream(&[4], r)).unwrap())
        .collect();
    let mut rng = f.stream(&[5], 0);
    let exact = marginal_sample(1.0, x0, &p, &mut rng, 1_000_000).unwrap();
    let (a, b) = (SampleMoments::from_slice(&em).unwrap(), SampleMoments::from_slice(&exact).unwrap());
    let slack = 2.0 * dt * p.alpha;
    assert!((a.mean - b.mean).abs() <= 4.0 * a.mean_se().hypot(b.mean_se()) + slack);
    assert!((a.variance - b.variance).abs() <= 4.0 * a.variance_se().hypot(b.variance_se()) + slack);
}

#[test]
fn shifted_equation_matches_shifted_exact_marginal() {
    let p = DiffusionParams::new(1.0, 1.0, 1.0).unwrap();
    let (t, draws) = (1.0, 20_000);
    let grid = uniform_grid(t, 2f64.powi(-8)).unwrap();
    let crit = ks_critical_value(0.01, draws, draws);
    let passes = (1..=10u64)
        .filter(|&seed| {
            let f = StreamFactory::new(seed);
            let em: Vec<f64> = (0..draws as u64)
                .map(|r| *euler_maruyama_shifted_path(0.0, &grid, &p, &mut f.stream(&[6], r)).unwrap().values.last().unwrap())
                .collect();
            let exact = shifted_marginal_sample(t, 0.0, &p, &mut f.stream(&[7], 0), draws).unwrap();
            ks_two_sample(&em, &exact).unwrap() < crit
        })
        .count();
    assert!(passes >= 8, "{passes}/10");
}

#[test]
fn generator_matches_small_time_expansion() {
    // f(x) = x² at x = 1 with unit constants: Tf = 3, and the exact
    // difference quotient is 3 + 1.5h.
    let p = DiffusionParams::new(1.0, 1.0, 1.0).unwrap();
    let f = Monomial(2);
    let target = generator_apply(&f, 1.0, &p);
    assert_eq!(target, 3.0);
    for (i, h) in [0.1, 0.01].into_iter().enumerate() {
        let mut rng = StreamFactory::new(53).stream(&[8], i as u64);
        let (est, se) = generator_estimate(&f, 1.0, h, &p, 1_000_000, &mut rng).unwrap();
        assert!((est - target).abs() <= 4.0 * se + 2.0 * h, "h={h}: {est} ± {se}");
        assert!((est - (3.0 + 1.5 * h)).abs() <= 4.0 * se, "h={h}: {est} ± {se}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samplers_stay_non_negative(
        alpha in 0.0f64..3.0,
        m in 0.2f64..3.0,
        sigma2 in 0.0f64..5.0,
        x0 in 0.0f64..5.0,
        dt in 0.001f64..2.0,
        seed: u64,
    ) {
        let p = DiffusionParams::new(alpha, m, sigma2).unwrap();
        let mut rng = StreamFactory::new(seed).stream(&[9], 0);
        for _ in 0..50 {
            prop_assert!(exact_transition(x0, dt, &p, &mut rng).unwrap() >= 0.0);
        }
        prop_assert!(euler_maruyama_terminal(x0, 1.0, 0.05, &p, &mut rng).unwrap() >= 0.0);
    }
}
