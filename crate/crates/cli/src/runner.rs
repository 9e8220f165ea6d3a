//! Executes a [`RunConfig`]: instance synthesis, the variant × seed runs,
//! `f*` resolution and per-run metrics.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectra_core::metrics::{
    estimate_kappa, fit_linear_rate, fit_sublinear_rate, min_alignment, FitWindow, KappaEstimate,
    RateFit, DIST_FLOOR,
};
use spectra_core::optimizers::{run, RunOptions, RunOutput};
use spectra_core::problems::{derive_seed, rip_estimate};
use spectra_core::theory::{recovery_sharpness, sd_threshold, tsd_threshold, RecoveryConstants};
use spectra_core::{Algorithm, Error, Mat, OptimizerSpec, Problem, ProblemSpec};

use crate::config::{
    resolve_optimizer, FStarPolicy, InitSpec, Reference, RunConfig, Variant, AUTO_REFERENCE_FACTOR,
};
use crate::error::{HarnessError, Result};

/// Sub-seed tags derived from an instance seed.
const INIT_TAG: u64 = 100;
const ENGINE_TAG: u64 = 101;
pub const RIP_TAG: u64 = 102;

pub const WORKERS_ENV: &str = "SPECTRA_WORKERS";

/// Parallel worker count: `SPECTRA_WORKERS` if set, else the available
/// parallelism, capped by the number of jobs.
pub fn worker_count(jobs: usize) -> Result<usize> {
    workers_from(std::env::var(WORKERS_ENV).ok().as_deref(), jobs)
}

fn workers_from(env: Option<&str>, jobs: usize) -> Result<usize> {
    let cap = match env {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                return Err(HarnessError::config(
                    WORKERS_ENV,
                    format!("expected a positive integer, got {v:?}"),
                ))
            }
        },
        None => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    Ok(cap.min(jobs.max(1)))
}

/// Maps `f` over `items` on `workers` scoped threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// A synthesized instance together with its start point and reference.
pub struct Instance {
    /// Seed as listed in the config.
    pub seed: u64,
    /// Seed of the synthesized problem, `derive_seed(problem.seed, seed)`.
    pub instance_seed: u64,
    pub problem: Problem,
    pub x0: Mat,
    pub reference: Option<Mat>,
}

impl Instance {
    pub fn engine_seed(&self) -> u64 {
        derive_seed(self.instance_seed, ENGINE_TAG)
    }
}

pub fn build_instance(cfg: &RunConfig, seed: u64) -> Result<Instance> {
    let instance_seed = derive_seed(cfg.problem.seed(), seed);
    let problem = cfg
        .problem
        .with_seed(instance_seed)
        .build()
        .map_err(|e| HarnessError::config("problem", e.to_string()))?;
    let (n1, n2) = cfg.problem.shape();
    let x0 = match cfg.init {
        InitSpec::Gaussian { scale } => Mat::gaussian(
            n1,
            n2,
            &mut ChaCha8Rng::seed_from_u64(derive_seed(instance_seed, INIT_TAG)),
        )
        .scale(scale),
        InitSpec::Zeros => Mat::zeros(n1, n2),
    };
    let reference = match &cfg.reference {
        Reference::None => None,
        Reference::GroundTruth => Some(
            problem
                .reference()
                .ok_or_else(|| HarnessError::config("reference", "instance has no ground truth"))?
                .clone(),
        ),
        Reference::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let m = Mat::from_text(&text)
                .map_err(|e| HarnessError::config("reference", e.to_string()))?;
            if m.shape() != (n1, n2) {
                return Err(HarnessError::config(
                    "reference",
                    format!("matrix is {:?}, problem is {:?}", m.shape(), (n1, n2)),
                ));
            }
            Some(m)
        }
    };
    Ok(Instance {
        seed,
        instance_seed,
        problem,
        x0,
        reference,
    })
}

/// One finished optimizer run.
pub struct RunResult {
    pub variant: usize,
    pub instance: usize,
    pub spec: OptimizerSpec,
    pub output: RunOutput,
    pub seconds: f64,
}

/// Runs `spec` on an instance, timing it and naming divergence by `label`.
pub fn run_one(
    inst: &Instance,
    spec: &OptimizerSpec,
    track_norms: bool,
    label: &str,
) -> Result<(RunOutput, f64)> {
    let start = Instant::now();
    let out = run(
        inst.problem.objective(),
        spec,
        &inst.x0,
        inst.reference.as_ref(),
        inst.engine_seed(),
        RunOptions { track_norms },
    )
    .map_err(|e| match e {
        Error::Diverged { iteration, reason } => HarnessError::Diverged {
            run: label.to_string(),
            iteration,
            reason,
        },
        other => HarnessError::Core(other),
    })?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Provenance-tagged optimal value of one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FStar {
    pub value: f64,
    /// `known_optimum`, `config`, `trace_min` or `reference_run`.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// RIP estimates and the predicted error floor of a sensing instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub r_star: usize,
    pub p: f64,
    pub p_realized: f64,
    pub xi: f64,
    pub rip_trials: usize,
    pub delta3_hat: f64,
    pub delta5_hat: f64,
    pub constants: RecoveryConstants,
    /// `ξ/μ`; `None` when the estimated sharpness is not positive.
    pub floor: Option<f64>,
}

/// Ranks `r*, 3r*, 5r*` clamped to the matrix size.
pub fn rip_ranks(r_star: usize, shape: (usize, usize)) -> [usize; 3] {
    let cap = shape.0.min(shape.1);
    [
        r_star.min(cap),
        (3 * r_star).min(cap),
        (5 * r_star).min(cap),
    ]
}

pub fn recovery_report(cfg: &RunConfig, inst: &Instance) -> Result<Option<RecoveryReport>> {
    let (ProblemSpec::Sensing { r, p, .. }, Problem::Sensing(prob)) = (&cfg.problem, &inst.problem)
    else {
        return Ok(None);
    };
    if cfg.rip_trials == 0 {
        return Ok(None);
    }
    let [_, r3, r5] = rip_ranks(*r, cfg.problem.shape());
    let seed = derive_seed(inst.instance_seed, RIP_TAG);
    let d3 = rip_estimate(prob.operator(), r3, cfg.rip_trials, seed)?.delta_hat;
    let d5 = rip_estimate(prob.operator(), r5, cfg.rip_trials, seed)?.delta_hat;
    let constants = recovery_sharpness(*p, d3, d5)?;
    let xi = prob.xi();
    Ok(Some(RecoveryReport {
        r_star: *r,
        p: *p,
        p_realized: prob.outlier_fraction(),
        xi,
        rip_trials: cfg.rip_trials,
        delta3_hat: d3,
        delta5_hat: d5,
        constants,
        floor: constants.noise_floor(xi),
    }))
}

/// Scalar diagnostics of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub instance_seed: u64,
    pub csv: String,
    pub iterations: usize,
    pub stopped_early: Option<usize>,
    pub f0: f64,
    pub f_final: f64,
    pub f_star: f64,
    pub gap_final: f64,
    pub dist_final: Option<f64>,
    pub rel_error: Option<f64>,
    /// Subgradient rank bound `min(n1, n2)`.
    pub rbar_a_priori: usize,
    /// Largest rank of an applied direction.
    pub max_direction_rank: Option<usize>,
    /// `κ` above which the linear-rate guarantee applies, for SD and TSD.
    pub kappa_threshold: Option<f64>,
    pub linear_fit: Option<RateFit>,
    pub sublinear_fit: Option<RateFit>,
    pub floor: f64,
    pub kappa: Option<KappaEstimate>,
    pub min_alignment: Option<f64>,
    pub seconds: f64,
    pub seconds_per_iter: f64,
}

pub fn run_metrics(
    inst: &Instance,
    res: &RunResult,
    csv: String,
    f_star: f64,
    floor: f64,
) -> RunMetrics {
    let trace = &res.output.trace;
    let first = &trace.records[0];
    let last = trace.last().expect("trace has the initial record");
    let iterations = last.t;
    let (n1, n2) = inst.x0.shape();
    let rbar = n1.min(n2);
    let kappa_threshold = match res.spec.algorithm {
        Algorithm::Sd => Some(sd_threshold(rbar)),
        Algorithm::Tsd => Some(tsd_threshold(res.spec.s.min(rbar), rbar)),
        _ => None,
    };
    let rel_error = match (&inst.reference, last.dist) {
        (Some(r), Some(d)) if r.fro_norm() > 0.0 => Some(d / r.fro_norm()),
        _ => None,
    };
    RunMetrics {
        seed: inst.seed,
        instance_seed: inst.instance_seed,
        csv,
        iterations,
        stopped_early: trace.stopped_early,
        f0: first.f,
        f_final: last.f,
        f_star,
        gap_final: last.f - f_star,
        dist_final: last.dist,
        rel_error,
        rbar_a_priori: rbar,
        max_direction_rank: trace.max_direction_rank(),
        kappa_threshold,
        linear_fit: fit_linear_rate(trace, &FitWindow::default()).ok(),
        sublinear_fit: fit_sublinear_rate(trace, &FitWindow::default(), floor).ok(),
        floor,
        kappa: estimate_kappa(trace, Some(f_star), DIST_FLOOR).ok(),
        min_alignment: min_alignment(trace, DIST_FLOOR),
        seconds: res.seconds,
        seconds_per_iter: if iterations > 0 {
            res.seconds / iterations as f64
        } else {
            0.0
        },
    }
}

/// Everything produced by [`execute`].
pub struct Experiment {
    pub variants: Vec<Variant>,
    pub instances: Vec<Instance>,
    /// Variant-major: index `v * instances.len() + i`.
    pub runs: Vec<RunResult>,
    pub f_stars: Vec<FStar>,
    pub recovery: Vec<Option<RecoveryReport>>,
    pub workers: usize,
}

impl Experiment {
    pub fn run(&self, variant: usize, instance: usize) -> &RunResult {
        &self.runs[variant * self.instances.len() + instance]
    }

    /// Variant with the lowest final objective on one instance.
    pub fn best_variant_for(&self, instance: usize) -> usize {
        (0..self.variants.len())
            .min_by(|&a, &b| {
                let fa = self
                    .run(a, instance)
                    .output
                    .trace
                    .last()
                    .map_or(f64::INFINITY, |r| r.f);
                let fb = self
                    .run(b, instance)
                    .output
                    .trace
                    .last()
                    .map_or(f64::INFINITY, |r| r.f);
                fa.total_cmp(&fb)
            })
            .unwrap_or(0)
    }

    /// Variant with the lowest mean final objective across instances.
    pub fn best_variant(&self) -> usize {
        (0..self.variants.len())
            .min_by(|&a, &b| self.mean_final_f(a).total_cmp(&self.mean_final_f(b)))
            .unwrap_or(0)
    }

    pub fn mean_final_f(&self, variant: usize) -> f64 {
        let n = self.instances.len();
        (0..n)
            .map(|i| {
                self.run(variant, i)
                    .output
                    .trace
                    .last()
                    .map_or(f64::NAN, |r| r.f)
            })
            .sum::<f64>()
            / n as f64
    }
}

fn label_of(cfg: &RunConfig, v: &Variant, seed: u64) -> String {
    cfg.csv_name(v, seed).trim_end_matches(".csv").to_string()
}

/// Runs every variant on every seed with `workers` threads.
pub fn execute(cfg: &RunConfig, workers: usize) -> Result<Experiment> {
    cfg.validate()?;
    let variants = cfg.variants();
    let instances: Vec<Instance> = parallel_map(&cfg.seeds, workers, |&s| build_instance(cfg, s))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut jobs = Vec::with_capacity(variants.len() * instances.len());
    for (v, variant) in variants.iter().enumerate() {
        for (i, inst) in instances.iter().enumerate() {
            jobs.push((v, i, resolve_optimizer(variant, &inst.problem)?));
        }
    }
    let runs: Vec<RunResult> = parallel_map(&jobs, workers, |(v, i, spec)| {
        let inst = &instances[*i];
        let label = label_of(cfg, &variants[*v], inst.seed);
        run_one(inst, spec, cfg.track_norms, &label).map(|(output, seconds)| RunResult {
            variant: *v,
            instance: *i,
            spec: spec.clone(),
            output,
            seconds,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut exp = Experiment {
        variants,
        instances,
        runs,
        f_stars: Vec::new(),
        recovery: Vec::new(),
        workers,
    };
    exp.f_stars = resolve_f_stars(cfg, &exp, workers)?;
    exp.recovery = parallel_map(&exp.instances, workers, |inst| recovery_report(cfg, inst))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(exp)
}

fn trace_min(exp: &Experiment, instance: usize) -> f64 {
    (0..exp.variants.len())
        .flat_map(|v| {
            exp.run(v, instance)
                .output
                .trace
                .records
                .iter()
                .map(|r| r.f)
        })
        .fold(f64::INFINITY, f64::min)
}

fn resolve_f_stars(cfg: &RunConfig, exp: &Experiment, workers: usize) -> Result<Vec<FStar>> {
    let plain = |value: f64, source: &str| FStar {
        value,
        source: source.to_string(),
        factor: None,
        variant: None,
        iterations: None,
    };
    let reference_factor = match cfg.f_star {
        FStarPolicy::Value(v) => {
            return Ok(exp.instances.iter().map(|_| plain(v, "config")).collect())
        }
        FStarPolicy::TraceMin => {
            return Ok((0..exp.instances.len())
                .map(|i| plain(trace_min(exp, i), "trace_min"))
                .collect())
        }
        FStarPolicy::Auto => AUTO_REFERENCE_FACTOR,
        FStarPolicy::ReferenceRun { factor } => factor,
    };
    let indices: Vec<usize> = (0..exp.instances.len()).collect();
    parallel_map(&indices, workers, |&i| {
        let inst = &exp.instances[i];
        if cfg.f_star == FStarPolicy::Auto {
            if let Some(v) = inst.problem.known_optimum() {
                return Ok(plain(v, "known_optimum"));
            }
        }
        let v = exp.best_variant_for(i);
        let mut spec = exp.run(v, i).spec.clone();
        spec.max_iters *= reference_factor;
        spec.validate()
            .map_err(|e| HarnessError::config("f_star", format!("reference run: {e}")))?;
        let label = format!("{}_reference", label_of(cfg, &exp.variants[v], inst.seed));
        let (out, _) = run_one(inst, &spec, false, &label)?;
        let ref_min = out
            .trace
            .records
            .iter()
            .map(|r| r.f)
            .fold(f64::INFINITY, f64::min);
        Ok(FStar {
            value: ref_min.min(trace_min(exp, i)),
            source: "reference_run".into(),
            factor: Some(reference_factor),
            variant: exp.variants[v].label.clone(),
            iterations: Some(spec.max_iters),
        })
    })
    .into_iter()
    .collect()
}
