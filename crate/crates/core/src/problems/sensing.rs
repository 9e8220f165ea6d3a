use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{derive_seed, sign0, truncated_direction, MeasurementOperator, Objective};
use crate::error::{invalid, Error, Result};
use crate::mat::Mat;
use crate::spectral::nuclear_norm;

/// `X* = U Vᵀ` with `U ∈ ℝ^{n1×r}`, `V ∈ ℝ^{n2×r}` i.i.d. standard normal.
pub fn synth_low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> Result<Mat> {
    if r == 0 || r > n1.min(n2) {
        return Err(invalid(format!("rank {r} outside [1, {}]", n1.min(n2))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Mat::gaussian(n1, r, &mut rng);
    let v = Mat::gaussian(n2, r, &mut rng);
    Ok(u.matmul(&v.transpose()))
}

/// Corrupted measurements `b = 𝒜(X*) + e₁ + e₂`.
#[derive(Clone, Debug)]
pub struct Observations {
    pub b: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// Sorted indices of the outlier support of `e1`.
    pub support: Vec<usize>,
}

/// Draws a uniformly random `⌊p·m⌋`-subset `S`, outliers `e₁ ~ 𝒩(0, sparse_std²)`
/// on `S`, and dense noise `e₂ ~ 𝒩(0, dense_std²)` everywhere.
///
/// All randomness comes from `seed`, independently of the operator's seed.
pub fn make_observations(
    op: &MeasurementOperator,
    x_true: &Mat,
    p: f64,
    sparse_std: f64,
    dense_std: f64,
    seed: u64,
) -> Result<Observations> {
    if !(0.0..1.0).contains(&p) {
        return Err(invalid(format!(
            "outlier fraction p must lie in [0, 1), got {p}"
        )));
    }
    if !(sparse_std >= 0.0 && dense_std >= 0.0) {
        return Err(invalid("noise standard deviations must be non-negative"));
    }
    let m = op.len();
    let clean = op.forward(x_true)?;
    // the small guard keeps e.g. 0.06 · 1500 at 90 despite binary rounding
    let k = ((p * m as f64) + 1e-9).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = index::sample(&mut rng, m, k).into_vec();
    support.sort_unstable();

    let mut e1 = vec![0.0; m];
    if sparse_std > 0.0 {
        let outlier = Normal::new(0.0, sparse_std).map_err(|e| invalid(e.to_string()))?;
        for &i in &support {
            e1[i] = outlier.sample(&mut rng);
        }
    }
    let mut e2 = vec![0.0; m];
    if dense_std > 0.0 {
        let dense = Normal::new(0.0, dense_std).map_err(|e| invalid(e.to_string()))?;
        for v in &mut e2 {
            *v = dense.sample(&mut rng);
        }
    }
    let b = clean
        .iter()
        .zip(&e1)
        .zip(&e2)
        .map(|((c, a), d)| c + a + d)
        .collect();
    Ok(Observations { b, e1, e2, support })
}

/// Component-wise dual variable of the LAD surrogate subdifferential:
/// `sgn(z_i)/m` where `|z_i| > ε`, `z_i/(εm)` otherwise.
pub fn surrogate_dual(z: &[f64], eps: f64, m: usize) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {eps}")));
    }
    let mf = m as f64;
    Ok(z.iter()
        .map(|&zi| {
            if zi.abs() > eps {
                sign0(zi) / mf
            } else {
                zi / (eps * mf)
            }
        })
        .collect())
}

/// Robust low-rank matrix sensing `f(X) = (1/m)‖𝒜(X) − b‖₁`.
#[derive(Clone, Debug)]
pub struct LadSensingProblem {
    op: MeasurementOperator,
    x_true: Mat,
    obs: Observations,
    radius: f64,
}

impl LadSensingProblem {
    pub fn new(op: MeasurementOperator, x_true: Mat, obs: Observations) -> Result<Self> {
        if x_true.shape() != op.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", op.shape()),
                got: format!("{:?}", x_true.shape()),
            });
        }
        if obs.b.len() != op.len() || obs.e1.len() != op.len() || obs.e2.len() != op.len() {
            return Err(invalid(
                "observation vectors must have one entry per measurement",
            ));
        }
        let radius = nuclear_norm(&x_true)?;
        Ok(Self {
            op,
            x_true,
            obs,
            radius,
        })
    }

    /// Full synthesis from one seed: operator, ground truth and noise each use
    /// their own derived stream.
    #[allow(clippy::too_many_arguments)]
    pub fn synthesize(
        n1: usize,
        n2: usize,
        r: usize,
        m: usize,
        p: f64,
        sparse_std: f64,
        dense_std: f64,
        seed: u64,
    ) -> Result<Self> {
        let op = MeasurementOperator::gaussian(n1, n2, m, derive_seed(seed, 1))?;
        Self::synthesize_on(op, r, p, sparse_std, dense_std, seed)
    }

    /// As [`synthesize`](Self::synthesize) but with a streaming operator.
    #[allow(clippy::too_many_arguments)]
    pub fn synthesize_streaming(
        n1: usize,
        n2: usize,
        r: usize,
        m: usize,
        p: f64,
        sparse_std: f64,
        dense_std: f64,
        seed: u64,
    ) -> Result<Self> {
        let op = MeasurementOperator::gaussian_streaming(n1, n2, m, derive_seed(seed, 1))?;
        Self::synthesize_on(op, r, p, sparse_std, dense_std, seed)
    }

    fn synthesize_on(
        op: MeasurementOperator,
        r: usize,
        p: f64,
        sparse_std: f64,
        dense_std: f64,
        seed: u64,
    ) -> Result<Self> {
        let (n1, n2) = op.shape();
        let x_true = synth_low_rank(n1, n2, r, derive_seed(seed, 2))?;
        let obs = make_observations(&op, &x_true, p, sparse_std, dense_std, derive_seed(seed, 3))?;
        Self::new(op, x_true, obs)
    }

    pub fn operator(&self) -> &MeasurementOperator {
        &self.op
    }

    pub fn x_true(&self) -> &Mat {
        &self.x_true
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn b(&self) -> &[f64] {
        &self.obs.b
    }

    pub fn support(&self) -> &[usize] {
        &self.obs.support
    }

    /// Nuclear norm `R = ‖X*‖_*`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Realized outlier fraction `|S|/m`.
    pub fn outlier_fraction(&self) -> f64 {
        self.obs.support.len() as f64 / self.op.len() as f64
    }

    /// Dense noise level `ξ = (2/m)‖e₂‖₁`.
    pub fn xi(&self) -> f64 {
        2.0 * self.obs.e2.iter().map(|v| v.abs()).sum::<f64>() / self.op.len() as f64
    }

    /// Residual `z = 𝒜(X) − b`.
    pub fn residual(&self, x: &Mat) -> Result<Vec<f64>> {
        let mut z = self.op.forward(x)?;
        for (zi, bi) in z.iter_mut().zip(&self.obs.b) {
            *zi -= bi;
        }
        Ok(z)
    }

    fn mean_abs(&self, z: &[f64]) -> f64 {
        z.iter().map(|v| v.abs()).sum::<f64>() / self.op.len() as f64
    }

    /// `𝒜*(v)` for the surrogate dual at tolerance `eps`.
    pub fn surrogate_subgradient(&self, x: &Mat, eps: f64) -> Result<Mat> {
        let z = self.residual(x)?;
        self.op.adjoint(&surrogate_dual(&z, eps, self.op.len())?)
    }
}

impl Objective for LadSensingProblem {
    fn shape(&self) -> (usize, usize) {
        self.op.shape()
    }

    fn value(&self, x: &Mat) -> Result<f64> {
        Ok(self.mean_abs(&self.residual(x)?))
    }

    fn subgradient(&self, x: &Mat) -> Result<Mat> {
        Ok(self.evaluate(x)?.1)
    }

    fn evaluate(&self, x: &Mat) -> Result<(f64, Mat)> {
        let z = self.residual(x)?;
        let m = self.op.len() as f64;
        let v: Vec<f64> = z.iter().map(|&zi| sign0(zi) / m).collect();
        Ok((self.mean_abs(&z), self.op.adjoint(&v)?))
    }

    fn surrogate(&self, x: &Mat, eps: f64) -> Result<Option<(f64, Mat)>> {
        let z = self.residual(x)?;
        let v = surrogate_dual(&z, eps, self.op.len())?;
        Ok(Some((self.mean_abs(&z), self.op.adjoint(&v)?)))
    }

    fn num_terms(&self) -> usize {
        self.op.len()
    }
}

/// `D_s = tmsgn(𝒜*(v), s)` with `v` the surrogate dual at `X`; the top pair
/// for `s = 1` comes from power iteration started from `seed`.
pub fn surrogate_direction(
    prob: &LadSensingProblem,
    x: &Mat,
    eps: f64,
    s: usize,
    seed: u64,
) -> Result<Mat> {
    truncated_direction(&prob.surrogate_subgradient(x, eps)?, s, seed)
}

/// Empirical ℓ1/ℓ2 restricted-isometry ratios over random rank-`r` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct RipEstimate {
    pub rank: usize,
    pub trials: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max |ratio − √(2/π)|` over the trials.
    pub delta_hat: f64,
}

/// `(1/m)‖𝒜(X)‖₁ / ‖X‖_F`.
pub fn rip_ratio(op: &MeasurementOperator, x: &Mat) -> Result<f64> {
    let nf = x.fro_norm();
    if nf == 0.0 {
        return Err(invalid("RIP ratio of the zero matrix is undefined"));
    }
    let z = op.forward(x)?;
    Ok(z.iter().map(|v| v.abs()).sum::<f64>() / op.len() as f64 / nf)
}

pub fn rip_estimate(
    op: &MeasurementOperator,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if trials == 0 {
        return Err(invalid("rip_estimate needs at least one trial"));
    }
    let (n1, n2) = op.shape();
    let center = (2.0 / std::f64::consts::PI).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..trials {
        let x = synth_low_rank(n1, n2, r, derive_seed(seed, t as u64))?;
        let ratio = rip_ratio(op, &x)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let delta_hat = (center - lo).abs().max((hi - center).abs());
    Ok(RipEstimate {
        rank: r,
        trials,
        ratio_min: lo,
        ratio_max: hi,
        delta_hat,
    })
}
