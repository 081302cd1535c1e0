//! Acceptance suite: one line per criterion, run in order on one thread so
//! the reported runtimes are not inflated by concurrent tests.
//!
//! The weak-order half of criterion 5 cannot pass for this SDE: with
//! constant drift the Euler–Maruyama mean is exactly `x0 + αt` at every
//! step size, so the measured "error" is Monte Carlo noise and the ratio
//! between step sizes is a ratio of noises. It is run as specified and
//! reported, but listed in `EXPECTED_FAILURES` so it does not fail the
//! suite. An unexpected pass is reported too.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cbp_core::cbp::{CbpModel, InitialLaw, OffspringLaw};
use cbp_core::diagnostics::calibration::default_study;
use cbp_core::diagnostics::{
    condition_report, conditional_moment_rows, convergence_report, cross_sum_identity, ConditionStudy,
    KS_THRESHOLD_N1250,
};
use cbp_core::diffusion::{euler_maruyama_terminal, exact_transition, DiffusionParams};
use cbp_core::rng::StreamFactory;
use cbp_core::stats::{ks_critical_value, ks_two_sample, SampleMoments};

/// Master seed of the acceptance run; the calibration used seeds 1..=20.
const SEED: u64 = 1729;

const EXPECTED_FAILURES: &[&str] = &["5b"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    target: Duration,
}

fn timed(id: &'static str, name: &'static str, target_secs: u64, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let target = Duration::from_secs(target_secs);
    let outcome = Outcome {
        id,
        name,
        pass: ok && elapsed < target,
        detail,
        elapsed,
        target,
    };
    report(&outcome);
    outcome
}

fn report(o: &Outcome) {
    let expected = EXPECTED_FAILURES.contains(&o.id);
    let tag = match (o.pass, expected) {
        (true, false) => "PASS",
        (false, false) => "FAIL",
        (false, true) => "FAIL (expected)",
        (true, true) => "PASS (unexpected)",
    };
    println!(
        "criterion {:<3} {:<44} {tag:<18} [{:.1}s / {}s] {}",
        o.id,
        o.name,
        o.elapsed.as_secs_f64(),
        o.target.as_secs(),
        o.detail
    );
}

fn p1() -> CbpModel {
    CbpModel::poisson_immigration(1.0, InitialLaw::fixed(0)).unwrap()
}

fn unit_diffusion() -> DiffusionParams {
    DiffusionParams::new(1.0, 1.0, 1.0).unwrap()
}

fn within(observed: f64, expected: f64, se: f64, z: f64) -> bool {
    (observed - expected).abs() <= z * se
}

fn criterion_1() -> (bool, String) {
    let model = p1();
    let factory = StreamFactory::new(SEED);
    let ks = [1usize, 10, 100];
    let mut columns = vec![Vec::with_capacity(10_000); ks.len()];
    for r in 0..10_000u64 {
        let values = model.simulate_values(100, &mut factory.stream(&[101], r)).unwrap();
        for (col, &k) in columns.iter_mut().zip(&ks) {
            col.push(values[k] as f64);
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (col, &k) in columns.iter().zip(&ks) {
        let mom = SampleMoments::from_slice(col).unwrap();
        let z = (mom.mean - k as f64) / mom.mean_se();
        ok &= within(mom.mean, k as f64, mom.mean_se(), 5.0);
        parts.push(format!("k={k}: z={z:+.2}"));
    }
    (ok, parts.join(", "))
}

fn criterion_2() -> (bool, String) {
    let model = p1();
    let ks = [0u64, 1, 10, 100];
    let rows = conditional_moment_rows(&model, &ks, 1_000_000, SEED, None).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (pair, &k) in rows.chunks(2).zip(&ks) {
        // m·ε(k) = k + α; σ²ε(k) + m²ν²(k) = (k + 1) + 1 with m = σ² = α = 1.
        let (mean_target, var_target) = (k as f64 + 1.0, k as f64 + 2.0);
        ok &= within(pair[0].observed, mean_target, pair[0].se, 5.0);
        ok &= within(pair[1].observed, var_target, pair[1].se, 5.0);
        worst = worst
            .max(((pair[0].observed - mean_target) / pair[0].se).abs())
            .max(((pair[1].observed - var_target) / pair[1].se).abs());
    }
    (ok, format!("max |z| = {worst:.2} over mean and variance at k=0,1,10,100"))
}

fn criterion_3() -> (bool, String) {
    let offspring = OffspringLaw::poisson(1.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (l, target) in [(2usize, 4.0), (3, 12.0), (5, 40.0)] {
        let row = cross_sum_identity(&offspring, l, 1_000_000, SEED, None).unwrap();
        ok &= within(row.observed, target, row.se, 4.0);
        parts.push(format!("l={l}: {:.3} vs {target} (z={:+.2})", row.observed, (row.observed - target) / row.se));
    }
    (ok, parts.join(", "))
}

fn criterion_4() -> (bool, String) {
    let params = unit_diffusion();
    let factory = StreamFactory::new(SEED);
    let mut rng = factory.stream(&[401], 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| exact_transition(0.0, 1.0, &params, &mut rng).unwrap()).collect();
    let mom = SampleMoments::from_slice(&xs).unwrap();
    // Var = ασ²t²/(2m) = 0.5.
    let mean_ok = within(mom.mean, 1.0, mom.mean_se(), 4.0);
    let var_ok = within(mom.variance, 0.5, mom.variance_se(), 4.0);

    let crit = ks_critical_value(0.01, 100_000, 100_000);
    let ck_passes = (1..=10u64)
        .filter(|&seed| {
            let f = StreamFactory::new(seed);
            let mut one = f.stream(&[402], 0);
            let mut two = f.stream(&[403], 0);
            let direct: Vec<f64> = (0..100_000).map(|_| exact_transition(0.0, 1.0, &params, &mut one).unwrap()).collect();
            let chained: Vec<f64> = (0..100_000)
                .map(|_| {
                    let mid = exact_transition(0.0, 0.5, &params, &mut two).unwrap();
                    exact_transition(mid, 0.5, &params, &mut two).unwrap()
                })
                .collect();
            ks_two_sample(&direct, &chained).unwrap() < crit
        })
        .count();
    (
        mean_ok && var_ok && ck_passes >= 8,
        format!(
            "mean {:.5} (z={:+.2}), var {:.5} (z={:+.2}), Chapman-Kolmogorov KS {ck_passes}/10",
            mom.mean,
            (mom.mean - 1.0) / mom.mean_se(),
            mom.variance,
            (mom.variance - 0.5) / mom.variance_se()
        ),
    )
}

fn criterion_5a() -> (bool, String) {
    let params = unit_diffusion();
    let dt = 2f64.powi(-10);
    let factory = StreamFactory::new(SEED);
    let em: Vec<f64> = (0..100_000u64)
        .map(|r| euler_maruyama_terminal(0.0, 1.0, dt, &params, &mut factory.stream(&[501], r)).unwrap())
        .collect();
    let mut rng = factory.stream(&[502], 0);
    let exact: Vec<f64> = (0..1_000_000).map(|_| exact_transition(0.0, 1.0, &params, &mut rng).unwrap()).collect();
    let (a, b) = (SampleMoments::from_slice(&em).unwrap(), SampleMoments::from_slice(&exact).unwrap());
    let slack = 2.0 * dt * params.alpha;
    let mean_tol = 4.0 * a.mean_se().hypot(b.mean_se()) + slack;
    let var_tol = 4.0 * a.variance_se().hypot(b.variance_se()) + slack;
    let ok = (a.mean - b.mean).abs() <= mean_tol && (a.variance - b.variance).abs() <= var_tol;
    (
        ok,
        format!(
            "dt=2^-10: mean {:.5} vs {:.5} (tol {:.5}), var {:.5} vs {:.5} (tol {:.5})",
            a.mean, b.mean, mean_tol, a.variance, b.variance, var_tol
        ),
    )
}

fn criterion_5b() -> (bool, String) {
    let params = unit_diffusion();
    let dts: Vec<f64> = (4..=8).map(|e| 2f64.powi(-e)).collect();
    let paths = 100_000u64;
    let mut avg_err = vec![0.0; dts.len()];
    for seed in 1..=5u64 {
        let factory = StreamFactory::new(seed);
        for (i, &dt) in dts.iter().enumerate() {
            let sum: f64 = (0..paths)
                .map(|r| euler_maruyama_terminal(0.0, 1.0, dt, &params, &mut factory.stream(&[503, i as u64], r)).unwrap())
                .sum();
            avg_err[i] += (sum / paths as f64 - 1.0).abs() / 5.0;
        }
    }
    let ratios: Vec<f64> = avg_err.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (1.4..=2.6).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    (ok, format!("error ratios for dt=2^-4..2^-8: [{}] (need all in [1.4, 2.6])", shown.join(", ")))
}

fn criterion_6() -> (bool, String) {
    let study = default_study(SEED).unwrap();
    let report = convergence_report(&study, KS_THRESHOLD_N1250).unwrap();
    let ks: Vec<String> = report.ks_rows.iter().map(|r| format!("{}:{:.5}", r.n, r.ks)).collect();
    (
        report.all_pass() && report.verify(),
        format!("KS [{}], se {:.5}, threshold {KS_THRESHOLD_N1250:.5}", ks.join(" "), report.ks_rows[0].se),
    )
}

fn criterion_7() -> (bool, String) {
    let study = ConditionStudy {
        model: p1(),
        n_values: vec![10, 100, 1000],
        horizon: 1.0,
        theta: 0.1,
        resamples: 200,
        paths: 1000,
        master_seed: SEED,
        threads: None,
    };
    let report = condition_report(&study).unwrap();
    let pick = |c: cbp_core::diagnostics::Condition| -> Vec<String> {
        report
            .condition_rows
            .iter()
            .filter(|r| r.condition == c)
            .map(|r| format!("{:.4e}", r.value))
            .collect()
    };
    use cbp_core::diagnostics::Condition;
    (
        report.all_pass() && report.verify(),
        format!(
            "a max {:?}, b median [{}], c mean [{}]",
            pick(Condition::A),
            pick(Condition::B).join(", "),
            pick(Condition::C).join(", ")
        ),
    )
}

fn converge_once(dir: &Path, threads: usize) {
    let status = Command::new(env!("CARGO_BIN_EXE_cbp"))
        .args(["converge", "--preset", "poisson-immigration", "--alpha", "1", "--seed"])
        .arg(SEED.to_string())
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("cbp runs");
    assert!(
        status.status.code() == Some(0) || status.status.code() == Some(1),
        "converge failed to run: {}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn criterion_8() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [(tmp.path().join("a"), 1), (tmp.path().join("b"), 1), (tmp.path().join("c"), 8)];
    for (dir, threads) in &runs {
        converge_once(dir, *threads);
    }
    let files = ["report.json", "report.txt", "convergence.csv"];
    let mut ok = true;
    for name in files {
        let first = std::fs::read(runs[0].0.join(name)).unwrap();
        for (dir, _) in &runs[1..] {
            ok &= std::fs::read(dir.join(name)).unwrap() == first;
        }
    }
    (ok, format!("{} identical across reruns and --threads 1 vs 8", files.join(", ")))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: &str| filter.is_empty() || filter.iter().any(|f| id.starts_with(f.as_str()));
    type Criterion = (&'static str, &'static str, u64, fn() -> (bool, String));
    let criteria: [Criterion; 9] = [
        ("1", "mean identity E[Z_k] = k", 10, criterion_1),
        ("2", "conditional moments", 30, criterion_2),
        ("3", "centred cross-sum identity", 60, criterion_3),
        ("4", "exact diffusion sampler", 60, criterion_4),
        ("5a", "Euler-Maruyama vs exact at dt=2^-10", 120, criterion_5a),
        ("5b", "Euler-Maruyama weak-order ratio", 120, criterion_5b),
        ("6", "marginal convergence W_n(1) -> W(1)", 600, criterion_6),
        ("7", "proof conditions a/b/c", 600, criterion_7),
        ("8", "determinism and thread invariance", 600, criterion_8),
    ];
    let outcomes: Vec<Outcome> = criteria
        .into_iter()
        .filter(|(id, ..)| selected(id))
        .map(|(id, name, target, body)| timed(id, name, target, body))
        .collect();
    let unexpected: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass && !EXPECTED_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} passed; expected failures: {:?}; unexpected failures: {unexpected:?}",
        outcomes.len(),
        EXPECTED_FAILURES
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
