//! Convergence diagnostics over iterates and traces.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mat::Mat;
use crate::optimizers::{Trace, TraceRecord};

/// Distances at or below this are treated as exact convergence and excluded
/// from fits and alignment statistics.
pub const DIST_FLOOR: f64 = 1e-13;

/// `‖x − x_ref‖_F`.
pub fn dist_to(x: &Mat, x_ref: &Mat) -> Result<f64> {
    x.check_same_shape(x_ref)?;
    Ok((x - x_ref).fro_norm())
}

/// `‖x − x_ref‖_F / ‖x_ref‖_F`.
pub fn relative_error(x: &Mat, x_ref: &Mat) -> Result<f64> {
    let nr = x_ref.fro_norm();
    if nr == 0.0 {
        return Err(invalid("relative error against a zero reference"));
    }
    Ok(dist_to(x, x_ref)? / nr)
}

/// `⟨x − x_ref, D⟩ / ‖x − x_ref‖_F`.
pub fn alignment(x: &Mat, x_ref: &Mat, direction: &Mat) -> Result<f64> {
    x.check_same_shape(direction)?;
    let diff = x - x_ref;
    let d = diff.fro_norm();
    if d == 0.0 {
        return Err(Error::Undefined(
            "alignment is undefined at the reference point".into(),
        ));
    }
    Ok(diff.inner(direction) / d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `log dist` against `t`.
    LinearLog,
    /// `log(dist − floor)` against `log t`.
    SublinearSqrt,
}

/// Ordinary least-squares fit over a window of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub kind: FitKind,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// First and last iteration used.
    pub window: (usize, usize),
    pub points: usize,
}

impl RateFit {
    /// Per-iteration contraction `exp(slope)` of a linear fit.
    pub fn gamma_hat(&self) -> f64 {
        self.slope.exp()
    }
}

/// Iterations considered by the fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub start: usize,
    /// Inclusive upper bound; `None` runs to the end of the trace.
    pub end: Option<usize>,
    pub min_dist: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            start: 10,
            end: None,
            min_dist: DIST_FLOOR,
        }
    }
}

impl FitWindow {
    pub fn all() -> Self {
        Self {
            start: 0,
            ..Self::default()
        }
    }

    fn contains(&self, t: usize) -> bool {
        t >= self.start && self.end.is_none_or(|e| t <= e)
    }
}

fn least_squares(kind: FitKind, pts: &[(usize, f64, f64)]) -> Result<RateFit> {
    if pts.is_empty() {
        return Err(invalid("fit window is empty after trimming"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        kind,
        slope,
        intercept,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

fn windowed<'a>(
    trace: &'a Trace,
    w: &'a FitWindow,
) -> impl Iterator<Item = (&'a TraceRecord, f64)> + 'a {
    trace
        .records
        .iter()
        .filter(move |r| w.contains(r.t))
        .filter_map(move |r| {
            r.dist
                .filter(|&d| d > w.min_dist && d.is_finite())
                .map(|d| (r, d))
        })
}

/// Fits `log dist_t ≈ a + b t`; `exp(b)` estimates the linear rate `γ`.
pub fn fit_linear_rate(trace: &Trace, window: &FitWindow) -> Result<RateFit> {
    if trace.records.iter().all(|r| r.dist.is_none()) {
        return Err(invalid("trace has no dist column"));
    }
    let pts: Vec<_> = windowed(trace, window)
        .map(|(r, d)| (r.t, r.t as f64, d.ln()))
        .collect();
    least_squares(FitKind::LinearLog, &pts)
}

/// Fits `log(dist_t − floor) ≈ a + b log t`; `b ≈ −1/2` is the predicted
/// sublinear rate.
pub fn fit_sublinear_rate(trace: &Trace, window: &FitWindow, floor: f64) -> Result<RateFit> {
    if trace.records.iter().all(|r| r.dist.is_none()) {
        return Err(invalid("trace has no dist column"));
    }
    let pts: Vec<_> = windowed(trace, window)
        .filter(|(r, d)| r.t >= 1 && d - floor > 0.0)
        .map(|(r, d)| (r.t, (r.t as f64).ln(), (d - floor).ln()))
        .collect();
    least_squares(FitKind::SublinearSqrt, &pts)
}

/// Empirical sharpness, Lipschitz and condition estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub mu_hat: f64,
    #[serde(rename = "L_hat")]
    pub l_hat: f64,
    pub kappa_hat: f64,
    pub f_star: f64,
}

/// `μ̂ = min_t (f_t − f*)/dist_t`, `L̂ = max_t ‖G_t‖_F`, `κ̂ = μ̂/L̂` over the
/// records with `dist > min_dist`. `f*` defaults to the smallest recorded value.
pub fn estimate_kappa(trace: &Trace, f_star: Option<f64>, min_dist: f64) -> Result<KappaEstimate> {
    let f_star = match f_star {
        Some(v) => v,
        None => trace
            .records
            .iter()
            .map(|r| r.f)
            .fold(f64::INFINITY, f64::min),
    };
    let mut mu_hat = f64::INFINITY;
    let mut l_hat = f64::NEG_INFINITY;
    let mut any = false;
    for r in &trace.records {
        if let Some(g) = r.grad_fro {
            l_hat = l_hat.max(g);
        }
        if let Some(d) = r.dist.filter(|&d| d > min_dist) {
            mu_hat = mu_hat.min((r.f - f_star) / d);
            any = true;
        }
    }
    if !any || !l_hat.is_finite() {
        return Err(invalid(
            "no records with positive distance and gradient norm",
        ));
    }
    let kappa_hat = if l_hat > 0.0 {
        mu_hat / l_hat
    } else {
        f64::NAN
    };
    Ok(KappaEstimate {
        mu_hat,
        l_hat,
        kappa_hat,
        f_star,
    })
}

/// Smallest recorded alignment over records with `dist > min_dist`.
pub fn min_alignment(trace: &Trace, min_dist: f64) -> Option<f64> {
    trace
        .records
        .iter()
        .filter(|r| r.dist.is_some_and(|d| d > min_dist))
        .filter_map(|r| r.alignment)
        .reduce(f64::min)
}

/// Pointwise mean of equally indexed series; shorter series contribute
/// only where they have entries.
pub fn mean_curve(series: &[Vec<f64>]) -> Vec<f64> {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(i).copied()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::msgn;

    fn trace_from(dist: impl Fn(usize) -> f64, n: usize) -> Trace {
        let records = (0..n)
            .map(|t| {
                let mut r = TraceRecord::new(t, 0.0);
                r.dist = Some(dist(t));
                r
            })
            .collect();
        Trace {
            records,
            ..Default::default()
        }
    }

    #[test]
    fn distance_examples() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(dist_to(&a, &a).unwrap(), 0.0);
        let z = Mat::zeros(2, 2);
        assert_eq!(
            dist_to(&a.scale(2.0), &z).unwrap(),
            2.0 * dist_to(&a, &z).unwrap()
        );
        assert!((relative_error(&z, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&a, &z).is_err());
    }

    #[test]
    fn alignment_examples() {
        let x_ref = Mat::zeros(3, 3);
        let x = Mat::outer(&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0]);
        let d = msgn(&x).unwrap();
        assert!((alignment(&x, &x_ref, &d).unwrap() - 1.0).abs() < 1e-12);
        let orth = Mat::outer(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]);
        assert_eq!(alignment(&x, &x_ref, &orth).unwrap(), 0.0);
        assert!(matches!(
            alignment(&x_ref, &x_ref, &d),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn linear_fit_recovers_geometric_rate() {
        let tr = trace_from(|t| 0.9f64.powi(t as i32), 100);
        let fit = fit_linear_rate(&tr, &FitWindow::default()).unwrap();
        assert!((fit.gamma_hat() - 0.9).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.window, (10, 99));

        let flat = fit_linear_rate(&trace_from(|_| 3.0, 50), &FitWindow::default()).unwrap();
        assert_eq!(flat.slope, 0.0);
    }

    #[test]
    fn linear_fit_trims_converged_tail() {
        let tr = trace_from(|t| if t < 40 { 0.5f64.powi(t as i32) } else { 0.0 }, 80);
        let fit = fit_linear_rate(&tr, &FitWindow::default()).unwrap();
        assert_eq!(fit.window.1, 39);
        assert!((fit.gamma_hat() - 0.5).abs() < 1e-12);
        let dead = trace_from(|_| 0.0, 30);
        assert!(fit_linear_rate(&dead, &FitWindow::default()).is_err());
    }

    #[test]
    fn sublinear_fit() {
        let tr = trace_from(|t| (t as f64).powf(-0.5), 500);
        let fit = fit_sublinear_rate(&tr, &FitWindow::default(), 0.0).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9);
        let tr = trace_from(|t| (t as f64).powf(-0.5) + 0.1, 500);
        let fit = fit_sublinear_rate(&tr, &FitWindow::default(), 0.1).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9);
    }

    #[test]
    fn kappa_single_record() {
        let mut r = TraceRecord::new(0, 2.0);
        r.dist = Some(1.0);
        r.grad_fro = Some(4.0);
        let tr = Trace {
            records: vec![r],
            ..Default::default()
        };
        let k = estimate_kappa(&tr, Some(0.0), DIST_FLOOR).unwrap();
        assert_eq!((k.mu_hat, k.l_hat, k.kappa_hat), (2.0, 4.0, 0.5));
    }

    #[test]
    fn mean_curve_is_linear_space() {
        assert_eq!(mean_curve(&[vec![1.0, 100.0], vec![3.0]]), vec![2.0, 100.0]);
    }
}
