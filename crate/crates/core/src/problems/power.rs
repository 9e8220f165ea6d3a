use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::mat::Mat;
use crate::spectral::{check_truncation, tmsgn};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_SWEEPS: usize = 1000;

/// Leading singular triple found by power iteration.
#[derive(Clone, Debug)]
pub struct PowerPair {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sweeps: usize,
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn mul_vec(g: &Mat, v: &[f64]) -> Vec<f64> {
    (0..g.rows())
        .map(|i| g.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn t_mul_vec(g: &Mat, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.cols()];
    for (i, &ui) in u.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(g.row(i)) {
            *o += ui * a;
        }
    }
    out
}

/// Power iteration on `GᵀG` from a seeded Gaussian start.
///
/// Stops once successive right vectors differ by less than `tol` in Euclidean
/// norm; returns `None` if that does not happen within `max_sweeps` or `g` is
/// annihilated.
pub fn top_singular_pair(g: &Mat, seed: u64, tol: f64, max_sweeps: usize) -> Option<PowerPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..g.cols())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    top_singular_pair_from(g, v, tol, max_sweeps)
}

/// [`top_singular_pair`] from a given start vector (length `g.cols()`).
pub fn top_singular_pair_from(
    g: &Mat,
    start: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
) -> Option<PowerPair> {
    assert_eq!(start.len(), g.cols(), "start vector length");
    let mut v = start;
    if normalize(&mut v) == 0.0 {
        return None;
    }
    for sweep in 1..=max_sweeps {
        let mut next = t_mul_vec(g, &mul_vec(g, &v));
        if normalize(&mut next) == 0.0 {
            return None;
        }
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < tol {
            let mut u = mul_vec(g, &v);
            let sigma = normalize(&mut u);
            return Some(PowerPair {
                sigma,
                u,
                v,
                sweeps: sweep,
            });
        }
    }
    None
}

pub const LANCZOS_TOL: f64 = 1e-12;
const RITZ_CHECK_EVERY: usize = 6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in alpha.iter().enumerate() {
        let off = if i == 0 {
            0.0
        } else {
            beta[i - 1] * beta[i - 1] / d
        };
        d = a - x - off;
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenpair of a symmetric tridiagonal matrix: bisection on the
/// Sturm count, then inverse iteration on the positive definite `θ'I − T`.
fn top_ritz_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let radius = |i: usize| {
        (if i > 0 { beta[i - 1].abs() } else { 0.0 })
            + (if i + 1 < k { beta[i].abs() } else { 0.0 })
    };
    let mut lo = (0..k)
        .map(|i| alpha[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..k)
        .map(|i| alpha[i] + radius(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 2.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = hi;
    let shift = theta + 4.0 * k as f64 * f64::EPSILON * scale;
    let mut y = vec![1.0; k];
    for _ in 0..3 {
        // LDLᵀ solve of (shift·I − T) z = y; pivots stay positive
        let mut diag = vec![0.0; k];
        let mut mult = vec![0.0; k];
        diag[0] = shift - alpha[0];
        for i in 1..k {
            mult[i] = -beta[i - 1] / diag[i - 1];
            diag[i] = (shift - alpha[i]) + mult[i] * beta[i - 1];
        }
        for i in 1..k {
            y[i] -= mult[i] * y[i - 1];
        }
        y[k - 1] /= diag[k - 1];
        for i in (0..k - 1).rev() {
            y[i] = (y[i] + beta[i] * y[i + 1]) / diag[i];
        }
        normalize(&mut y);
    }
    (theta, y)
}

/// Leading singular triple by Lanczos on `GᵀG` with full reorthogonalization,
/// started from `start` (length `g.cols()`).
///
/// Stops once the Ritz residual is below `tol·θ`, or after `g.cols()` steps
/// when the Krylov space is complete. `sweeps` counts Lanczos steps. Returns
/// `None` if `g` annihilates the start vector.
pub fn top_singular_pair_lanczos(g: &Mat, start: Vec<f64>, tol: f64) -> Option<PowerPair> {
    let n = g.cols();
    assert_eq!(start.len(), n, "start vector length");
    let mut q = start;
    if normalize(&mut q) == 0.0 {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    loop {
        let mut w = t_mul_vec(g, &mul_vec(g, &q));
        alpha.push(dot(&w, &q));
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let k = basis.len();
        // the Ritz check costs more than a step; run it every few steps
        if k % RITZ_CHECK_EVERY == 0 || k == n || b == 0.0 {
            let (theta, y) = top_ritz_pair(&alpha, &beta);
            if theta <= 0.0 {
                return None;
            }
            if b * y[k - 1].abs() <= tol * theta || k == n || b == 0.0 {
                let mut v = vec![0.0; n];
                for (c, q) in y.iter().zip(&basis) {
                    v.iter_mut().zip(q).for_each(|(x, e)| *x += c * e);
                }
                normalize(&mut v);
                let mut u = mul_vec(g, &v);
                let sigma = normalize(&mut u);
                return Some(PowerPair {
                    sigma,
                    u,
                    v,
                    sweeps: k,
                });
            }
        }
        w.iter_mut().for_each(|x| *x /= b);
        beta.push(b);
        q = w;
    }
}

/// `tmsgn(g, s)`, using Lanczos for `s = 1` with an exact-SVD fallback.
pub fn truncated_direction(g: &Mat, s: usize, seed: u64) -> Result<Mat> {
    truncated_direction_warm(g, s, seed, &mut None)
}

/// [`truncated_direction`] that starts Lanczos from `warm` when set (from a
/// seeded Gaussian otherwise) and stores the top right vector back.
pub fn truncated_direction_warm(
    g: &Mat,
    s: usize,
    seed: u64,
    warm: &mut Option<Vec<f64>>,
) -> Result<Mat> {
    check_truncation(g, s)?;
    if g.is_zero() {
        return Ok(Mat::zeros(g.rows(), g.cols()));
    }
    if s == 1 {
        let start = warm.take().unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..g.cols())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        });
        if let Some(p) = top_singular_pair_lanczos(g, start, LANCZOS_TOL) {
            let d = Mat::outer(&p.u, &p.v);
            *warm = Some(p.v);
            return Ok(d);
        }
    }
    tmsgn(g, s)
}
