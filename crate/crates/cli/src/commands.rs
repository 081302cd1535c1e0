//! Subcommand implementations. Each returns `Ok(true)` when every enabled
//! check passed; report files are written before the verdict is returned.

use std::io::Write;

use cbp_core::cbp::OffspringLaw;
use cbp_core::diagnostics::calibration::{self, CALIBRATION_N, CALIBRATION_SEEDS};
use cbp_core::diagnostics::parallel::par_draws;
use cbp_core::diagnostics::{
    conditional_moment_rows, condition_report, convergence_report, cross_sum_identity, truncated_square_sum,
    moment_report, ConditionStudy, ConvergenceStudy, DiagnosticReport, KS_THRESHOLD_N1250,
};
use cbp_core::diffusion::{euler_maruyama_path, exact_transition, uniform_grid, write_samples, DiffusionParams};
use cbp_core::rng::StreamFactory;

use crate::config::{build_model, CheckKind, ExperimentConfig, MODEL_KEYS};
use crate::output::OutputDir;
use crate::{CliError, Command, RunArgs};

pub const DEFAULT_SEED: u64 = 1729;

pub fn dispatch(command: Command, command_line: Vec<String>) -> Result<bool, CliError> {
    let (name, args) = match &command {
        Command::Simulate(a) => ("simulate", a),
        Command::Converge(a) => ("converge", a),
        Command::Diffusion(a) => ("diffusion", a),
        Command::Diagnose(a) => ("diagnose", a),
        Command::Calibrate(a) => ("calibrate", a),
    };
    let cfg = resolve(args)?;
    let run = Run {
        name,
        dry_run: args.dry_run,
        command_line,
    };
    match command {
        Command::Simulate(_) => simulate(cfg, run),
        Command::Converge(_) => converge(cfg, run),
        Command::Diffusion(_) => diffusion(cfg, run),
        Command::Diagnose(_) => diagnose(cfg, run),
        Command::Calibrate(_) => calibrate(cfg, run),
    }
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    Ok(args.experiment.over(&file))
}

struct Run {
    name: &'static str,
    dry_run: bool,
    command_line: Vec<String>,
}

impl Run {
    /// Prints the validated plan; true when execution should stop here.
    fn plan(&self, cfg: &ExperimentConfig, steps: &[String]) -> bool {
        if !self.dry_run {
            return false;
        }
        println!("command: {}", self.name);
        println!("output: {}", cfg.resolved_output_dir().display());
        println!("config: {}", cfg.to_json());
        for step in steps {
            println!("plan: {step}");
        }
        true
    }

    fn output(&self, cfg: &ExperimentConfig) -> Result<OutputDir, CliError> {
        let out = OutputDir::create(cfg.resolved_output_dir())?;
        out.write_manifest(cfg, cfg.seed.unwrap_or(DEFAULT_SEED), self.command_line.clone())?;
        Ok(out)
    }
}

fn positive(name: &str, value: usize) -> Result<usize, CliError> {
    if value == 0 {
        return Err(CliError::Validation(format!("{name} must be ≥ 1")));
    }
    Ok(value)
}

fn simulate(mut cfg: ExperimentConfig, run: Run) -> Result<bool, CliError> {
    cfg.restrict_to(run.name, &[MODEL_KEYS, &["generations", "paths"]].concat())?;
    let model = build_model(&mut cfg)?;
    let generations = positive("generations", *cfg.generations.get_or_insert(100))?;
    let paths = positive("paths", *cfg.paths.get_or_insert(1))?;
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    if run.plan(&cfg, &[format!("{paths} path(s) x {generations} generations of {}", model.id())]) {
        return Ok(true);
    }
    let out = run.output(&cfg)?;
    let factory = StreamFactory::new(seed);
    for i in 0..paths {
        let mut rng = factory.stream(&[0], i as u64);
        let traj = model.simulate(generations, &mut rng)?;
        out.write_with(&format!("trajectory_{i:04}.csv"), |w| traj.write_csv(w))?;
    }
    println!("wrote {paths} trajectories to {}", out.root().display());
    Ok(true)
}

fn converge(mut cfg: ExperimentConfig, run: Run) -> Result<bool, CliError> {
    cfg.restrict_to(run.name, &[MODEL_KEYS, &["n", "t", "horizon", "replicates", "ks_threshold"]].concat())?;
    let model = build_model(&mut cfg)?;
    let n_values = cfg.n.get_or_insert_with(|| vec![10, 50, 250, CALIBRATION_N]).clone();
    let t = cfg.t.get_or_insert_with(|| vec![1.0]).clone();
    let horizon = *cfg.horizon.get_or_insert(t.iter().copied().fold(0.0, f64::max));
    let replicates = *cfg.replicates.get_or_insert(10_000);
    let threshold = *cfg.ks_threshold.get_or_insert(KS_THRESHOLD_N1250);
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let study = ConvergenceStudy::new(model, n_values, t, horizon, replicates, seed)?.with_threads(cfg.threads);
    if run.plan(
        &cfg,
        &[format!(
            "{} n values x {} checkpoints, {replicates} replicates, reference {} draws per checkpoint",
            study.n_values.len(),
            study.t_checkpoints.len(),
            study.reference_size()
        )],
    ) {
        return Ok(true);
    }
    let mut report = convergence_report(&study, threshold)?;
    report.meta("version", env!("CARGO_PKG_VERSION"));
    let out = run.output(&cfg)?;
    out.write_report(&report, &cfg.formats())?;
    print!("{}", report.to_text());
    Ok(report.all_pass())
}

fn diffusion(mut cfg: ExperimentConfig, run: Run) -> Result<bool, CliError> {
    cfg.restrict_to(run.name, &["alpha", "m", "sigma2", "x0", "t", "draws", "dt", "exact", "em"])?;
    let params = DiffusionParams::new(
        *cfg.alpha.get_or_insert(1.0),
        *cfg.m.get_or_insert(1.0),
        *cfg.sigma2.get_or_insert(1.0),
    )?;
    let x0 = *cfg.x0.get_or_insert(0.0);
    let t = match cfg.t.get_or_insert_with(|| vec![1.0]).as_slice() {
        [t] => *t,
        other => return Err(CliError::Validation(format!("diffusion takes a single --t, got {other:?}"))),
    };
    let draws = *cfg.draws.get_or_insert(100_000);
    let dt = *cfg.dt.get_or_insert(0.001);
    if cfg.exact.is_none() && cfg.em.is_none() {
        cfg.exact = Some(true);
    }
    let (exact, em) = (cfg.exact.unwrap_or(false), cfg.em.unwrap_or(false));
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    // Validate before planning or writing anything.
    let grid = uniform_grid(t, dt)?;
    exact_transition(x0, t, &params, &mut StreamFactory::new(seed).stream(&[1], 0))?;

    let mut steps = Vec::new();
    if exact {
        steps.push(format!("{draws} exact draws of W({t}) from W(0)={x0} -> marginals.txt"));
    }
    if em {
        steps.push(format!("Euler-Maruyama path on [0,{t}] with dt={dt} -> em_path.csv"));
    }
    if run.plan(&cfg, &steps) {
        return Ok(true);
    }
    let out = run.output(&cfg)?;
    let factory = StreamFactory::new(seed);
    if exact {
        let xs = par_draws(cfg.threads, factory, &[1], draws, |rng| {
            exact_transition(x0, t, &params, rng).expect("validated above")
        })?;
        out.write_with("marginals.txt", |w| write_samples(w, &xs))?;
    }
    if em {
        let path = euler_maruyama_path(x0, &grid, &params, &mut factory.stream(&[2], 0))?;
        out.write_with("em_path.csv", |w| path.write_csv(w))?;
    }
    println!("wrote diffusion output to {}", out.root().display());
    Ok(true)
}

fn diagnose(mut cfg: ExperimentConfig, run: Run) -> Result<bool, CliError> {
    cfg.restrict_to(
        run.name,
        &[
            MODEL_KEYS,
            &["check", "k", "l", "big_m", "sigma2", "replicates", "draws", "theta", "n", "horizon", "paths", "resamples"],
        ]
        .concat(),
    )?;
    let checks = cfg
        .check
        .get_or_insert_with(|| vec![CheckKind::Lemma1, CheckKind::Moments, CheckKind::Conditional, CheckKind::Lindeberg])
        .clone();
    let needs_model = checks.iter().any(|c| *c != CheckKind::Lemma1);
    let model = if needs_model || cfg.preset.is_some() {
        Some(build_model(&mut cfg)?)
    } else {
        None
    };
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let threads = cfg.threads;
    let mut steps = Vec::new();
    let mut tasks: Vec<Box<dyn FnOnce() -> Result<DiagnosticReport, CliError>>> = Vec::new();

    if checks.contains(&CheckKind::Lemma1) {
        let offspring = match (cfg.sigma2, &model) {
            (Some(s2), _) => OffspringLaw::poisson(s2)?,
            (None, Some(model)) => model.offspring().clone(),
            (None, None) => OffspringLaw::poisson(1.0)?,
        };
        let ls = cfg.l.get_or_insert_with(|| vec![2, 3, 5]).clone();
        let ms = cfg.big_m.get_or_insert_with(|| vec![1.0, 10.0]).clone();
        let draws = *cfg.draws.get_or_insert(1_000_000);
        steps.push(format!("centred-sum identity and bound for l in {ls:?}, M in {ms:?}, {draws} replicates, offspring {}", offspring.label()));
        tasks.push(Box::new(move || {
            let mut report = DiagnosticReport::new("centred sums");
            report.meta("cross_sum_offspring", offspring.label());
            for &l in &ls {
                report.moment_rows.push(cross_sum_identity(&offspring, l, draws, seed, threads)?);
            }
            for &l in &ls {
                for &m in &ms {
                    report.moment_rows.push(truncated_square_sum(&offspring, l, m, draws, seed, threads)?);
                }
            }
            Ok(report)
        }));
    }
    if let Some(model) = &model {
        let k_user = cfg.k.clone();
        if checks.contains(&CheckKind::Moments) {
            let ks = k_user.clone().unwrap_or_else(|| vec![1, 10, 100]);
            let replicates = *cfg.replicates.get_or_insert(10_000);
            steps.push(format!("moments of Z_k for k in {ks:?} over {replicates} paths"));
            let model = model.clone();
            tasks.push(Box::new(move || {
                let mut report = DiagnosticReport::new("moments");
                report.moment_rows = moment_report(&model, &ks, replicates, seed, threads)?;
                Ok(report)
            }));
        }
        if checks.contains(&CheckKind::Conditional) {
            let ks: Vec<u64> = k_user
                .unwrap_or_else(|| vec![0, 1, 10, 100])
                .into_iter()
                .map(|k| k as u64)
                .collect();
            let draws = *cfg.draws.get_or_insert(1_000_000);
            steps.push(format!("one-step conditional moments from k in {ks:?}, {draws} draws each"));
            let model = model.clone();
            tasks.push(Box::new(move || {
                let mut report = DiagnosticReport::new("conditional moments");
                report.moment_rows = conditional_moment_rows(&model, &ks, draws, seed, threads)?;
                Ok(report)
            }));
        }
        if checks.contains(&CheckKind::Lindeberg) {
            let thetas = cfg.theta.get_or_insert_with(|| vec![0.1]).clone();
            let n_values = cfg.n.get_or_insert_with(|| vec![10, 100, 1000]).clone();
            let horizon = *cfg.horizon.get_or_insert(1.0);
            let paths = *cfg.paths.get_or_insert(1000);
            let resamples = *cfg.resamples.get_or_insert(200);
            steps.push(format!(
                "conditions a/b/c for n in {n_values:?}, theta in {thetas:?}, T={horizon}, {paths} paths, R={resamples}"
            ));
            for theta in thetas {
                let study = ConditionStudy {
                    model: model.clone(),
                    n_values: n_values.clone(),
                    horizon,
                    theta,
                    resamples,
                    paths,
                    master_seed: seed,
                    threads,
                };
                study.validate()?;
                tasks.push(Box::new(move || Ok(condition_report(&study)?)));
            }
        }
    }
    if run.plan(&cfg, &steps) {
        return Ok(true);
    }
    let mut report = DiagnosticReport::new("diagnose");
    for task in tasks {
        report.extend(task()?);
    }
    report.meta("report", "diagnose");
    report.meta("version", env!("CARGO_PKG_VERSION"));
    if let Some(thetas) = &cfg.theta {
        report.meta("theta", format!("{thetas:?}"));
    }
    let out = run.output(&cfg)?;
    out.write_report(&report, &cfg.formats())?;
    print!("{}", report.to_text());
    Ok(report.all_pass())
}

fn calibrate(cfg: ExperimentConfig, run: Run) -> Result<bool, CliError> {
    cfg.restrict_to(run.name, &[])?;
    if cfg.seed.is_some() {
        return Err(CliError::Validation("calibration always uses master seeds 1..=20".into()));
    }
    let base = calibration::default_study(0)?.with_threads(cfg.threads);
    if run.plan(
        &cfg,
        &[format!(
            "KS at n={CALIBRATION_N}, t=1 over seeds {CALIBRATION_SEEDS:?}, {} replicates, reference {}",
            base.replicates,
            base.reference_size()
        )],
    ) {
        return Ok(true);
    }
    let result = calibration::calibrate(&base, CALIBRATION_N, CALIBRATION_SEEDS)?;
    let out = OutputDir::create(cfg.resolved_output_dir())?;
    let text = serde_json::to_string_pretty(&result).expect("calibration serialises");
    let path = out.write_with("ks_n1250.json", |w| writeln!(w, "{text}"))?;
    println!(
        "median {:.6}  mad {:.6}  threshold {:.6}  -> {}",
        result.median,
        result.mad,
        result.threshold,
        path.display()
    );
    Ok(true)
}
