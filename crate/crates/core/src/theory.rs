//! Closed-form convergence constants, descent-term lower bounds with their
//! extremal instances, curvature and rate bounds, and the recovery sharpness
//! constants for LAD sensing.
//!
//! The descent-term bounds minimize `Σ_{i≤s} x_i` over
//! `‖x‖₂ ≤ R, ‖σ‖₂ ≤ L, σᵀx ≥ μR, σ₁ ≥ … ≥ σ_n ≥ 0`; with `κ = μ/L` and
//! `α_s = min{1, s/√n}` the minimum is `(κα_s − √(s − α_s²)√(1 − κ²)) R`.
//! [`brute_force_descent_min`] recomputes it by searching over `σ` with the
//! inner minimum over `x` taken in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mat::Mat;

/// `√(2/π)`, the mean of `|N(0, 1)|`.
pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt()
}

/// Sharpness, Lipschitz and rank data entering the linear-rate theorems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionData {
    pub kappa: f64,
    pub mu_sharp: f64,
    pub lipschitz_l: f64,
    pub rbar: usize,
    pub s: usize,
}

impl ConditionData {
    pub fn new(mu_sharp: f64, lipschitz_l: f64, rbar: usize, s: usize) -> Result<Self> {
        if !(mu_sharp > 0.0 && lipschitz_l > mu_sharp) {
            return Err(invalid(format!(
                "need 0 < mu < L, got mu = {mu_sharp}, L = {lipschitz_l}"
            )));
        }
        if rbar == 0 || s == 0 {
            return Err(invalid("rbar and s must be at least 1"));
        }
        Ok(Self {
            kappa: mu_sharp / lipschitz_l,
            mu_sharp,
            lipschitz_l,
            rbar,
            s,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdConstants {
    pub c: f64,
    pub gamma: f64,
    /// `κ > √(1 − 1/r̄)`, equivalently `C > 0`.
    pub feasible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsdConstants {
    pub alpha_s: f64,
    pub c_tilde: f64,
    pub gamma: f64,
    /// `κ > √(1 − α_s²/s)`, equivalently `C̃ > 0`.
    pub feasible: bool,
}

fn decay(c: f64, k: f64) -> f64 {
    (c / k.sqrt()).max((1.0 - c * c / k).max(0.0).sqrt())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(invalid(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    Ok(())
}

/// `√(1 − 1/r̄)`.
pub fn sd_threshold(rbar: usize) -> f64 {
    (1.0 - 1.0 / rbar as f64).sqrt()
}

/// `α_s = min{1, s/√n}`.
pub fn alpha_s(s: usize, n: usize) -> f64 {
    (s as f64 / (n as f64).sqrt()).min(1.0)
}

/// `√(1 − α_s²/s)`.
pub fn tsd_threshold(s: usize, rbar: usize) -> f64 {
    let a = alpha_s(s, rbar);
    (1.0 - a * a / s as f64).max(0.0).sqrt()
}

/// `C = κ − √(r̄−1)√(1−κ²)` and `γ = max{C/√r̄, √(1 − C²/r̄)}`.
pub fn sd_constants(kappa: f64, rbar: usize) -> Result<SdConstants> {
    check_kappa(kappa)?;
    if rbar == 0 {
        return Err(invalid("rbar must be at least 1"));
    }
    let r = rbar as f64;
    let c = kappa - (r - 1.0).sqrt() * (1.0 - kappa * kappa).sqrt();
    Ok(SdConstants {
        c,
        gamma: decay(c, r),
        feasible: c > 0.0,
    })
}

/// `α_s`, `C̃ = κα_s − √(s − α_s²)√(1−κ²)` and `γ = max{C̃/√s, √(1 − C̃²/s)}`.
pub fn tsd_constants(kappa: f64, s: usize, rbar: usize) -> Result<TsdConstants> {
    check_kappa(kappa)?;
    if s == 0 || s > rbar {
        return Err(invalid(format!(
            "need 1 <= s <= rbar, got s = {s}, rbar = {rbar}"
        )));
    }
    let a = alpha_s(s, rbar);
    let c_tilde = kappa * a - (s as f64 - a * a).max(0.0).sqrt() * (1.0 - kappa * kappa).sqrt();
    Ok(TsdConstants {
        alpha_s: a,
        c_tilde,
        gamma: decay(c_tilde, s as f64),
        feasible: c_tilde > 0.0,
    })
}

/// `(κ − √(n−1)√(1−κ²)) R`.
pub fn sd_lower_bound(kappa: f64, radius: f64, n: usize) -> Result<f64> {
    check_kappa(kappa)?;
    if n == 0 || radius <= 0.0 {
        return Err(invalid("need n >= 1 and R > 0"));
    }
    Ok((kappa - ((n - 1) as f64).sqrt() * (1.0 - kappa * kappa).sqrt()) * radius)
}

/// `(κα_s − √(s − α_s²)√(1−κ²)) R` with `α_s = min{1, s/√n}`.
pub fn tsd_lower_bound(kappa: f64, radius: f64, s: usize, n: usize) -> Result<f64> {
    check_kappa(kappa)?;
    if s == 0 || s > n || radius <= 0.0 {
        return Err(invalid(format!(
            "need 1 <= s <= n and R > 0, got s = {s}, n = {n}, R = {radius}"
        )));
    }
    let a = alpha_s(s, n);
    Ok((kappa * a - (s as f64 - a * a).max(0.0).sqrt() * (1.0 - kappa * kappa).sqrt()) * radius)
}

/// An `(x, σ)` pair from the descent-term feasible set.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentInstance {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// `σ* = (L, 0, …, 0)`, `x* = (κR, −√((1−κ²)/(n−1)) R, …)`, attaining
/// [`sd_lower_bound`].
pub fn sd_worst_case(kappa: f64, radius: f64, lipschitz: f64, n: usize) -> Result<DescentInstance> {
    check_kappa(kappa)?;
    if n < 2 {
        return Err(invalid("the extremal instance needs n >= 2"));
    }
    let tail = -((1.0 - kappa * kappa) / (n - 1) as f64).sqrt() * radius;
    let mut x = vec![tail; n];
    x[0] = kappa * radius;
    let mut sigma = vec![0.0; n];
    sigma[0] = lipschitz;
    Ok(DescentInstance { x, sigma })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closed-form `min Σ_{i≤s} x_i` over `‖x‖₂ ≤ R, σᵀx ≥ μR` for a fixed
/// `σ` with `‖σ‖₂ ≥ μ`:
/// `(R/‖σ‖²)(μ cᵀσ − √(s‖σ‖² − (cᵀσ)²) √(‖σ‖² − μ²))`.
pub fn inner_min_value(sigma: &[f64], mu: f64, radius: f64, s: usize) -> f64 {
    let n2: f64 = dot(sigma, sigma);
    let cs: f64 = sigma.iter().take(s).sum();
    let a = (s as f64 * n2 - cs * cs).max(0.0).sqrt();
    let b = (n2 - mu * mu).max(0.0).sqrt();
    radius / n2 * (mu * cs - a * b)
}

/// Minimizer matching [`inner_min_value`]: the point of the `R`-sphere on the
/// hyperplane `σᵀx = μR` closest in direction to `−c`.
pub fn inner_minimizer(sigma: &[f64], mu: f64, radius: f64, s: usize) -> Vec<f64> {
    let n = sigma.len();
    let n2 = dot(sigma, sigma);
    let c: Vec<f64> = (0..n).map(|i| if i < s { 1.0 } else { 0.0 }).collect();
    let cs = dot(&c, sigma);
    // x = (μR/‖σ‖²) σ − t w with w = c − (cᵀσ/‖σ‖²) σ ⟂ σ
    let w: Vec<f64> = c
        .iter()
        .zip(sigma)
        .map(|(ci, si)| ci - cs / n2 * si)
        .collect();
    let wn = dot(&w, &w).sqrt();
    let base = mu * radius / n2;
    let along = (radius * radius - base * base * n2).max(0.0).sqrt();
    sigma
        .iter()
        .zip(&w)
        .map(|(si, wi)| base * si - if wn > 0.0 { along * wi / wn } else { 0.0 })
        .collect()
}

/// Result of the numerical search in [`brute_force_descent_min`].
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceMin {
    pub value: f64,
    /// Minimizing `σ` (non-increasing, non-negative).
    pub sigma: Vec<f64>,
    pub evaluations: usize,
}

/// Points `w ∈ ℕⁿ` with `Σ w = total`, in lexicographic order.
fn simplex_lattice(n: usize, total: usize, mut f: impl FnMut(&[usize])) {
    fn rec(w: &mut Vec<usize>, n: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
        if w.len() + 1 == n {
            w.push(left);
            f(w);
            w.pop();
            return;
        }
        for k in 0..=left {
            w.push(k);
            rec(w, n, left - k, f);
            w.pop();
        }
    }
    let mut w = Vec::with_capacity(n);
    rec(&mut w, n, total, &mut f);
}

/// Non-increasing unit vector from non-negative weights on the extreme rays
/// `v_k = (1, …, 1, 0, …, 0)` (`k` ones) of the ordered cone.
fn cone_direction(weights: &[f64]) -> Option<Vec<f64>> {
    let n = weights.len();
    let mut d = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += weights[i];
        d[i] = acc;
    }
    let norm = dot(&d, &d).sqrt();
    (norm > 0.0).then(|| d.iter().map(|v| v / norm).collect())
}

/// Numerical minimum of `Σ_{i≤s} x_i` over the descent-term feasible set.
///
/// `σ = r·d` with `r` on a `grid_density`-point grid over `[μ, L]` and `d` on
/// a lattice over the extreme-ray coefficients of the ordered cone (which
/// contains every extreme ray), followed by a shrinking pattern search on the
/// coefficients and `r`. The inner minimum over `x` is
/// [`inner_min_value`].
pub fn brute_force_descent_min(
    kappa: f64,
    radius: f64,
    lipschitz: f64,
    n: usize,
    s: usize,
    grid_density: usize,
) -> Result<BruteForceMin> {
    check_kappa(kappa)?;
    if !(1..=5).contains(&n) {
        return Err(invalid(format!(
            "brute force is limited to 1 <= n <= 5, got {n}"
        )));
    }
    if s == 0 || s > n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}")));
    }
    if grid_density < 50 {
        return Err(invalid(format!(
            "grid_density must be at least 50, got {grid_density}"
        )));
    }
    if !(radius > 0.0 && lipschitz > 0.0) {
        return Err(invalid("need R > 0 and L > 0"));
    }
    let mu = kappa * lipschitz;
    let mut evaluations = 0usize;
    let mut eval = |w: &[f64], r: f64| -> f64 {
        evaluations += 1;
        match cone_direction(w) {
            Some(d) => {
                let sigma: Vec<f64> = d.iter().map(|v| v * r).collect();
                inner_min_value(&sigma, mu, radius, s)
            }
            None => f64::INFINITY,
        }
    };

    // keep the direction lattice near 10⁵ points whatever n is
    let lattice_total = match n {
        1 => 1,
        2 => grid_density * 20,
        3 => grid_density * 4,
        _ => grid_density,
    };
    let radii: Vec<f64> = (0..grid_density)
        .map(|i| mu + (lipschitz - mu) * i as f64 / (grid_density - 1) as f64)
        .collect();

    let mut best = (f64::INFINITY, vec![0.0; n], lipschitz);
    let mut wf = vec![0.0; n];
    simplex_lattice(n, lattice_total, |w| {
        for (dst, &src) in wf.iter_mut().zip(w) {
            *dst = src as f64 / lattice_total as f64;
        }
        for &r in &radii {
            let v = eval(&wf, r);
            if v < best.0 {
                best = (v, wf.clone(), r);
            }
        }
    });

    // pattern search on (weights, r)
    let (mut fbest, mut w, mut r) = best;
    let mut step = 1.0 / lattice_total as f64;
    let mut rstep = (lipschitz - mu) / grid_density as f64;
    while step > 1e-12 || rstep > 1e-12 * lipschitz {
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut cand = w.clone();
                cand[i] = (cand[i] + sign * step).max(0.0);
                let v = eval(&cand, r);
                if v < fbest {
                    (fbest, w) = (v, cand);
                    improved = true;
                }
            }
        }
        for sign in [1.0, -1.0] {
            let cand = (r + sign * rstep).clamp(mu, lipschitz);
            let v = eval(&w, cand);
            if v < fbest {
                (fbest, r) = (v, cand);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            rstep *= 0.5;
        }
    }
    let sigma = cone_direction(&w)
        .expect("best point has a direction")
        .iter()
        .map(|v| v * r)
        .collect();
    Ok(BruteForceMin {
        value: fbest,
        sigma,
        evaluations,
    })
}

/// Residual `R` and subgradient `G` of the extremal SD instance embedded as
/// diagonal `n × n` matrices: `R = diag(x*)`,
/// `G = diag(L√(1 − (n−1)δ²), Lδ, …, Lδ)`. For `δ > 0` the subgradient has
/// full rank (so `msgn(G) = I`) and `‖G‖_F = L`; as `δ → 0` it approaches
/// the rank-one `σ*`.
pub fn sd_worst_case_matrices(
    kappa: f64,
    radius: f64,
    lipschitz: f64,
    n: usize,
    delta: f64,
) -> Result<(Mat, Mat)> {
    let inst = sd_worst_case(kappa, radius, lipschitz, n)?;
    let rest = (n - 1) as f64 * delta * delta;
    if !(delta > 0.0 && rest < 1.0) {
        return Err(invalid(format!(
            "delta must lie in (0, 1/sqrt(n-1)), got {delta}"
        )));
    }
    let mut g = vec![lipschitz * delta; n];
    g[0] = lipschitz * (1.0 - rest).sqrt();
    Ok((Mat::from_diag(&inst.x), Mat::from_diag(&g)))
}

/// Truncation level minimizing `√(1 − α_s²/s)` over `s ∈ [1, r̄]` (first
/// minimizer on ties).
pub fn best_truncation(rbar: usize) -> usize {
    (1..=rbar)
        .min_by(|&a, &b| tsd_threshold(a, rbar).total_cmp(&tsd_threshold(b, rbar)))
        .expect("rbar >= 1")
}

/// Curvature bound `16 L k / (λ² ε)`; `k = n` for RSD-WD, `k = s` (Ky Fan)
/// for RTSD-WD.
pub fn curvature_bound(lipschitz: f64, k: usize, lambda: f64, eps: f64) -> f64 {
    16.0 * lipschitz * k as f64 / (lambda * lambda * eps)
}

/// Surrogate curvature bound for LAD sensing, `16 m L*² a² / ε`.
pub fn lad_curvature_bound(m: usize, l_star: f64, a: f64, eps: f64) -> f64 {
    16.0 * m as f64 * l_star * l_star * a * a / eps
}

/// Which dimension factor enters the sublinear rate bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RateVariant {
    /// RSD-WD: `√(2n)`.
    Full(usize),
    /// RTSD-WD: `√(2s)`.
    Truncated(usize),
}

/// `2Δ/(μ(T+2)(T+1)) + (32 L √(2k))/(3μλ) · (T+3)^{3/2}/((T+2)(T+1))`.
pub fn theorem_rate_bound(
    variant: RateVariant,
    t: usize,
    delta_f0: f64,
    lipschitz: f64,
    lambda: f64,
    mu: f64,
) -> f64 {
    let k = match variant {
        RateVariant::Full(n) => n,
        RateVariant::Truncated(s) => s,
    } as f64;
    let tf = t as f64;
    let denom = (tf + 2.0) * (tf + 1.0);
    2.0 * delta_f0 / (mu * denom)
        + 32.0 * lipschitz * (2.0 * k).sqrt() / (3.0 * mu * lambda) * (tf + 3.0).powf(1.5) / denom
}

/// Constants of the robust-recovery guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConstants {
    pub p: f64,
    pub delta3: f64,
    pub delta5: f64,
    /// `[(1−2p)√(2/π) − δ₅ − (√(2/π) + δ₃)√(2/3)]·√(3/5)`.
    pub tau: f64,
    /// Sharpness constant; equal to `tau`.
    pub mu_recovery: f64,
    /// `√(2/π) + δ₁`, evaluated at the upper bound `δ₁ ≤ δ₃`.
    pub l_a: f64,
    /// `½[1 − √(2/3) − (δ₅ + √(2/3)δ₃)/√(2/π)]`.
    pub p_max: f64,
    pub feasible: bool,
}

impl RecoveryConstants {
    /// `ξ/μ`, or `None` when the sharpness constant is not positive.
    pub fn noise_floor(&self, xi: f64) -> Option<f64> {
        (self.mu_recovery > 0.0).then(|| xi / self.mu_recovery)
    }
}

pub fn recovery_sharpness(p: f64, delta3: f64, delta5: f64) -> Result<RecoveryConstants> {
    if !(0.0..0.5).contains(&p) {
        return Err(invalid(format!(
            "outlier fraction must lie in [0, 0.5), got {p}"
        )));
    }
    if !(delta3 >= 0.0 && delta5 >= 0.0) {
        return Err(invalid("RIP constants must be non-negative"));
    }
    let c = sqrt_2_over_pi();
    let r23 = (2.0f64 / 3.0).sqrt();
    let tau = ((1.0 - 2.0 * p) * c - delta5 - (c + delta3) * r23) * (3.0f64 / 5.0).sqrt();
    let p_max = 0.5 * (1.0 - r23 - (delta5 + r23 * delta3) / c);
    Ok(RecoveryConstants {
        p,
        delta3,
        delta5,
        tau,
        mu_recovery: tau,
        l_a: c + delta3,
        p_max,
        feasible: tau > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sd_constant_examples() {
        let k = sd_constants(0.8, 1).unwrap();
        assert!((k.c - 0.8).abs() < 1e-15 && (k.gamma - 0.8).abs() < 1e-15 && k.feasible);
        let k = sd_constants(sd_threshold(4), 4).unwrap();
        assert!(k.c.abs() < 1e-15 && !k.feasible);
    }

    #[test]
    fn tsd_constant_examples() {
        assert_eq!(tsd_constants(0.9, 1, 4).unwrap().alpha_s, 0.5);
        for r in 1..20 {
            assert!((tsd_threshold(r, r) - sd_threshold(r)).abs() < 1e-15);
        }
        let k = tsd_constants(0.9, 2, 4).unwrap();
        assert_eq!(k.alpha_s, 1.0);
        assert!((k.c_tilde - (0.9 - 0.19f64.sqrt())).abs() < 1e-15);
        assert!((k.c_tilde - 0.46411).abs() < 1e-5);
    }

    #[test]
    fn lower_bound_examples() {
        assert!(sd_lower_bound(0.5f64.sqrt(), 1.0, 2).unwrap().abs() < 1e-15);
        assert_eq!(sd_lower_bound(0.3, 2.0, 1).unwrap(), 0.6);
        assert!((sd_lower_bound(0.8, 1.0, 3).unwrap() + 0.048528).abs() < 1e-6);
        assert_eq!(tsd_lower_bound(0.7, 1.5, 1, 1).unwrap(), 0.7 * 1.5);
        for n in 1..6 {
            let a = tsd_lower_bound(0.8, 1.0, n, n).unwrap();
            assert!((a - sd_lower_bound(0.8, 1.0, n).unwrap()).abs() < 1e-15);
        }
        assert!((tsd_lower_bound(0.9, 1.0, 1, 4).unwrap() - 0.07251).abs() < 1e-5);
    }

    #[test]
    fn worst_case_example() {
        let w = sd_worst_case(0.6, 1.0, 1.0, 2).unwrap();
        assert!((w.x[0] - 0.6).abs() < 1e-15 && (w.x[1] + 0.8).abs() < 1e-15);
        assert_eq!(w.sigma, vec![1.0, 0.0]);
        assert!((w.x.iter().sum::<f64>() + 0.2).abs() < 1e-15);
        assert!((dot(&w.x, &w.x).sqrt() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_minimizer_attains_closed_form() {
        let sigma = [0.9, 0.3, 0.2, 0.1];
        let (mu, radius) = (0.5, 2.0);
        for s in 1..=4 {
            let x = inner_minimizer(&sigma, mu, radius, s);
            assert!((dot(&x, &x).sqrt() - radius).abs() < 1e-12);
            assert!((dot(&sigma, &x) - mu * radius).abs() < 1e-12);
            let v: f64 = x.iter().take(s).sum();
            assert!((v - inner_min_value(&sigma, mu, radius, s)).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_small_cases() {
        let bf = brute_force_descent_min(0.5f64.sqrt(), 1.0, 1.0, 2, 2, 50).unwrap();
        assert!(bf.value.abs() < 1e-3, "{}", bf.value);
        let bf = brute_force_descent_min(0.95, 1.0, 1.0, 3, 1, 50).unwrap();
        assert!((bf.value - tsd_lower_bound(0.95, 1.0, 1, 3).unwrap()).abs() < 1e-3);
        assert!(brute_force_descent_min(1.0, 1.0, 1.0, 2, 1, 50).is_err());
        assert!(brute_force_descent_min(0.5, 1.0, 1.0, 6, 1, 50).is_err());
        assert!(brute_force_descent_min(0.5, 1.0, 1.0, 2, 1, 10).is_err());
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(curvature_bound(1.0, 1, 1.0, 16.0), 1.0);
        assert_eq!(
            curvature_bound(2.0, 3, 0.5, 4.0),
            2.0 * curvature_bound(2.0, 3, 0.5, 8.0)
        );
        assert_eq!(lad_curvature_bound(1, 1.0, 1.0, 16.0), 1.0);
        assert_eq!(
            lad_curvature_bound(10, 1.0, 2.0, 4.0),
            2.0 * lad_curvature_bound(10, 1.0, 2.0, 8.0)
        );
    }

    #[test]
    fn recovery_examples() {
        let k = recovery_sharpness(0.0, 0.0, 0.0).unwrap();
        assert!((k.tau - 0.113413).abs() < 1e-6);
        assert_eq!(k.mu_recovery, k.tau);
        let at = recovery_sharpness(k.p_max, 0.0, 0.0).unwrap();
        assert!(at.tau.abs() < 1e-15);
        let k = recovery_sharpness(0.06, 0.01, 0.01).unwrap();
        assert!(k.tau > 0.0 && k.feasible);
        assert_eq!(k.noise_floor(1.0), Some(1.0 / k.tau));
        assert_eq!(
            recovery_sharpness(0.4, 0.0, 0.0).unwrap().noise_floor(1.0),
            None
        );
    }

    #[test]
    fn rate_bound_forms() {
        let (l, lam, mu) = (1.0, 0.5, 0.2);
        assert_eq!(
            theorem_rate_bound(RateVariant::Full(9), 10, 0.0, l, lam, mu),
            3.0 * theorem_rate_bound(RateVariant::Truncated(1), 10, 0.0, l, lam, mu)
        );
        let t = 1_000_000usize;
        let asym = 32.0 * l * 18f64.sqrt() / (3.0 * mu * lam) / (t as f64).sqrt();
        let b = theorem_rate_bound(RateVariant::Full(9), t, 1.0, l, lam, mu);
        assert!((b / asym - 1.0).abs() < 1e-5);
    }
}
