use serde::{Deserialize, Serialize};

use super::schedule::{EpsSchedule, Schedule};
use super::trace::{Trace, TraceRecord};
use crate::error::{invalid, Error, Result};
use crate::mat::Mat;
use crate::problems::{truncated_direction_warm, Objective};
use crate::spectral::{msgn, newton_schulz_msgn, singular_values, tmsgn};

/// Objective values above this abort the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sd,
    Tsd,
    Muon,
    Muonw,
    RsdWd,
    RtsdWd,
}

impl Algorithm {
    pub fn is_regularized(self) -> bool {
        matches!(self, Self::RsdWd | Self::RtsdWd)
    }

    pub fn is_truncated(self) -> bool {
        matches!(self, Self::Tsd | Self::RtsdWd)
    }

    pub fn uses_momentum(self) -> bool {
        matches!(self, Self::Muon | Self::Muonw)
    }
}

/// How `msgn` is evaluated for the untruncated methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Orthogonalizer {
    #[default]
    Svd,
    NewtonSchulz {
        iters: usize,
    },
}

fn default_s() -> usize {
    1
}

/// Complete description of an optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub algorithm: Algorithm,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default)]
    pub mu_momentum: f64,
    #[serde(default)]
    pub lambda: f64,
    pub schedule: Schedule,
    #[serde(rename = "T")]
    pub max_iters: usize,
    #[serde(default)]
    pub eps_schedule: EpsSchedule,
    #[serde(default)]
    pub orthogonalizer: Orthogonalizer,
}

impl OptimizerSpec {
    /// Builds and validates a spec.
    pub fn new(algorithm: Algorithm, schedule: Schedule, max_iters: usize) -> Self {
        Self {
            algorithm,
            s: 1,
            mu_momentum: 0.0,
            lambda: 0.0,
            schedule,
            max_iters,
            eps_schedule: EpsSchedule::default(),
            orthogonalizer: Orthogonalizer::Svd,
        }
    }

    pub fn with_s(mut self, s: usize) -> Self {
        self.s = s;
        self
    }

    pub fn with_momentum(mut self, mu: f64) -> Self {
        self.mu_momentum = mu;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eps(mut self, eps: EpsSchedule) -> Self {
        self.eps_schedule = eps;
        self
    }

    pub fn with_orthogonalizer(mut self, o: Orthogonalizer) -> Self {
        self.orthogonalizer = o;
        self
    }

    /// Checks parameter ranges and, for the weight-decay variants,
    /// `λη_t ≤ 1` for every `t < T`.
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.eps_schedule.validate()?;
        let alg = self.algorithm;
        if alg.is_truncated() && self.s == 0 {
            return Err(invalid("truncation level s must be at least 1"));
        }
        if alg.uses_momentum() && !(0.0..1.0).contains(&self.mu_momentum) {
            return Err(invalid(format!(
                "mu_momentum must lie in [0, 1), got {}",
                self.mu_momentum
            )));
        }
        let needs_lambda = matches!(alg, Algorithm::Muonw | Algorithm::RsdWd | Algorithm::RtsdWd);
        if needs_lambda && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be positive for {alg:?}, got {}",
                self.lambda
            )));
        }
        if let Orthogonalizer::NewtonSchulz { iters: 0 } = self.orthogonalizer {
            return Err(invalid("Newton-Schulz needs at least one iteration"));
        }
        if alg.is_regularized() {
            for t in 0..self.max_iters {
                let product = self.lambda * self.schedule.eta(t);
                if product > 1.0 {
                    return Err(Error::Schedule {
                        iteration: t,
                        product,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Extra bookkeeping switches for [`run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Record `‖X_t‖₂` and `‖X_t‖_*` (one SVD per iteration).
    pub track_norms: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { track_norms: true }
    }
}

/// State of one applied update, handed to a [`run_with_observer`] callback.
pub struct StepInfo<'a> {
    pub t: usize,
    pub x: &'a Mat,
    pub subgradient: &'a Mat,
    pub direction: &'a Mat,
    pub eta: f64,
    pub eps: Option<f64>,
    pub next: &'a Mat,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub x_final: Mat,
}

/// Runs `spec` on `problem` from `x0`, recording `dist`/`alignment` against
/// `reference` when given. `seed` fixes the power-iteration start vectors, so
/// a run is a deterministic function of its inputs.
pub fn run(
    problem: &dyn Objective,
    spec: &OptimizerSpec,
    x0: &Mat,
    reference: Option<&Mat>,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    run_with_observer(problem, spec, x0, reference, seed, opts, |_| {})
}

struct Engine<'a> {
    problem: &'a dyn Objective,
    spec: &'a OptimizerSpec,
    seed: u64,
    buffer: Option<Mat>,
    /// Right singular vector from the previous rank-one direction.
    power_start: Option<Vec<f64>>,
}

struct Evaluation {
    f: f64,
    g: Mat,
    d: Mat,
    eps: Option<f64>,
    /// Momentum buffer after absorbing `g`.
    buffer: Option<Mat>,
}

impl Engine<'_> {
    fn orthogonalize(&self, g: &Mat) -> Result<Mat> {
        if g.is_zero() {
            return Ok(Mat::zeros(g.rows(), g.cols()));
        }
        match self.spec.orthogonalizer {
            Orthogonalizer::Svd => msgn(g),
            Orthogonalizer::NewtonSchulz { iters } => newton_schulz_msgn(g, iters),
        }
    }

    fn evaluate(&mut self, x: &Mat, t: usize) -> Result<Evaluation> {
        let spec = self.spec;
        let alg = spec.algorithm;
        if alg.is_regularized() {
            let eta = spec.schedule.eta(t);
            let eps = spec
                .eps_schedule
                .eps(t, spec.lambda, eta, self.problem.num_terms());
            let (f, g) = self.problem.surrogate(x, eps)?.ok_or_else(|| {
                Error::Undefined(
                    "this objective provides no surrogate subgradient; the weight-decay variants \
                     cannot select from the ε-subdifferential of a general objective"
                        .into(),
                )
            })?;
            let d = if alg == Algorithm::RtsdWd {
                truncated_direction_warm(&g, spec.s, self.seed, &mut self.power_start)?
            } else {
                self.orthogonalize(&g)?
            };
            return Ok(Evaluation {
                f,
                g,
                d,
                eps: Some(eps),
                buffer: None,
            });
        }
        let (f, g) = self.problem.evaluate(x)?;
        let (d, buffer) = match alg {
            Algorithm::Sd => (self.orthogonalize(&g)?, None),
            Algorithm::Tsd => (tmsgn(&g, spec.s)?, None),
            _ => {
                let prev = self.buffer.as_ref().expect("momentum buffer initialized");
                let mut b = prev.scale(spec.mu_momentum);
                b.axpy(1.0, &g);
                (self.orthogonalize(&b)?, Some(b))
            }
        };
        Ok(Evaluation {
            f,
            g,
            d,
            eps: None,
            buffer,
        })
    }

    fn apply(&self, x: &Mat, d: &Mat, eta: f64) -> Mat {
        let lambda = match self.spec.algorithm {
            Algorithm::Muonw | Algorithm::RsdWd | Algorithm::RtsdWd => self.spec.lambda,
            _ => 0.0,
        };
        let mut out = x.clone();
        for (o, di) in out.data_mut().iter_mut().zip(d.data()) {
            *o -= eta * (di + lambda * *o);
        }
        out
    }
}

fn record(
    t: usize,
    x: &Mat,
    ev: &Evaluation,
    eta: f64,
    reference: Option<&Mat>,
    opts: RunOptions,
) -> Result<TraceRecord> {
    let mut rec = TraceRecord::new(t, ev.f);
    rec.grad_fro = Some(ev.g.fro_norm());
    rec.eta = Some(eta);
    if let Some(xr) = reference {
        let diff = x - xr;
        let dist = diff.fro_norm();
        rec.dist = Some(dist);
        if dist > 0.0 {
            rec.alignment = Some(diff.inner(&ev.d) / dist);
        }
    }
    if opts.track_norms {
        let sv = singular_values(x)?;
        rec.spec_norm = Some(sv[0]);
        rec.nuc_norm = Some(sv.iter().sum());
    }
    Ok(rec)
}

fn check_finite(t: usize, f: f64, x: &Mat) -> Result<()> {
    if !f.is_finite() || f > DIVERGENCE_LIMIT {
        return Err(Error::Diverged {
            iteration: t,
            reason: format!("objective value {f}"),
        });
    }
    if !x.is_finite() {
        return Err(Error::Diverged {
            iteration: t,
            reason: "non-finite iterate".into(),
        });
    }
    Ok(())
}

/// [`run`] with a callback invoked after every applied update.
#[allow(clippy::too_many_arguments)]
pub fn run_with_observer(
    problem: &dyn Objective,
    spec: &OptimizerSpec,
    x0: &Mat,
    reference: Option<&Mat>,
    seed: u64,
    opts: RunOptions,
    mut observer: impl FnMut(&StepInfo<'_>),
) -> Result<RunOutput> {
    spec.validate()?;
    let shape = problem.shape();
    if x0.shape() != shape {
        return Err(Error::DimensionMismatch {
            expected: format!("{shape:?}"),
            got: format!("{:?}", x0.shape()),
        });
    }
    if let Some(r) = reference {
        x0.check_same_shape(r)?;
    }
    if spec.algorithm.is_truncated() && spec.s > shape.0.min(shape.1) {
        return Err(invalid(format!(
            "truncation level s = {} exceeds min dimension {}",
            spec.s,
            shape.0.min(shape.1)
        )));
    }

    let mut engine = Engine {
        problem,
        spec,
        seed,
        buffer: spec
            .algorithm
            .uses_momentum()
            .then(|| Mat::zeros(shape.0, shape.1)),
        power_start: None,
    };
    let mut trace = Trace::default();
    let mut x = x0.clone();
    let stops_on_zero = matches!(spec.algorithm, Algorithm::Sd | Algorithm::Tsd);

    for t in 0..=spec.max_iters {
        let eta = spec.schedule.eta(t);
        let ev = engine.evaluate(&x, t)?;
        check_finite(t, ev.f, &x)?;
        trace
            .records
            .push(record(t, &x, &ev, eta, reference, opts)?);
        if t == spec.max_iters {
            break;
        }
        if stops_on_zero && ev.g.is_zero() {
            trace.stopped_early = Some(t);
            break;
        }
        let next = engine.apply(&x, &ev.d, eta);
        observer(&StepInfo {
            t,
            x: &x,
            subgradient: &ev.g,
            direction: &ev.d,
            eta,
            eps: ev.eps,
            next: &next,
        });
        trace
            .direction_ranks
            .push(ev.d.inner(&ev.d).round() as usize);
        if ev.buffer.is_some() {
            engine.buffer = ev.buffer;
        }
        x = next;
    }
    Ok(RunOutput { trace, x_final: x })
}
