//! Spectral kernels: SVD, matrix sign, truncated matrix sign, Newton-Schulz
//! orthogonalization, Ky Fan norms and tangent-space projections.
//!
//! The matrix sign of `G = U Σ Vᵀ` (compact SVD, rank `r`) is `U_r V_rᵀ`; the
//! rank-`s` truncated sign keeps only the `s` leading singular pairs. Both are
//! computed from an exact SVD. Ranks are numerical: a singular value counts
//! when it exceeds `rel_tol · σ₁`, with `rel_tol` defaulting to
//! `max(rows, cols) · f64::EPSILON`.

use ndarray_linalg::SVD;

use crate::error::{invalid, Error, Result};
use crate::mat::Mat;

/// Economy SVD `m = u · diag(sigma) · vᵀ` with `k = min(rows, cols)` columns.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose())
    }

    /// Number of singular values above `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        rank_of_sigma(&self.sigma, rel_tol)
    }

    /// `Σ_{i<k} u_i v_iᵀ`.
    pub fn leading_sign(&self, k: usize) -> Mat {
        let (n1, n2) = (self.u.rows(), self.v.rows());
        let mut out = Mat::zeros(n1, n2);
        for p in 0..k {
            for i in 0..n1 {
                let ui = self.u[(i, p)];
                if ui == 0.0 {
                    continue;
                }
                for j in 0..n2 {
                    out[(i, j)] += ui * self.v[(j, p)];
                }
            }
        }
        out
    }
}

/// Orthogonal decomposition of a matrix against the tangent space of the
/// fixed-rank manifold at some base point.
#[derive(Clone, Debug)]
pub struct TangentSplit {
    pub on_tangent: Mat,
    pub off_tangent: Mat,
}

/// Default relative threshold for numerical rank.
pub fn default_rank_tol(m: &Mat) -> f64 {
    m.rows().max(m.cols()) as f64 * f64::EPSILON
}

fn rank_of_sigma(sigma: &[f64], rel_tol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

pub fn svd(m: &Mat) -> Result<SvdFactors> {
    let k = m.min_dim();
    let (u, sigma, v_t) = m.to_ndarray().svd(true, true).map_err(|e| {
        Error::Numerical(format!(
            "SVD of {}x{} matrix failed: {e}",
            m.rows(),
            m.cols()
        ))
    })?;
    let u = u.expect("requested u");
    let v_t = v_t.expect("requested v_t");
    // LAPACK returns σ in non-increasing order with full U and Vᵀ
    let sigma = sigma.iter().map(|s| s.max(0.0)).collect();
    let u = Mat::from_fn(m.rows(), k, |i, j| u[(i, j)]);
    let v = Mat::from_fn(m.cols(), k, |i, j| v_t[(j, i)]);
    Ok(SvdFactors { u, sigma, v })
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    let (_, s, _) = m
        .to_ndarray()
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("singular values failed: {e}")))?;
    let mut s: Vec<f64> = s.iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn numerical_rank(g: &Mat, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid(format!(
            "rel_tol must lie in (0, 1), got {rel_tol}"
        )));
    }
    if g.is_zero() {
        return Ok(0);
    }
    Ok(rank_of_sigma(&singular_values(g)?, rel_tol))
}

/// Matrix sign `U_r V_rᵀ`; the zero matrix maps to zero.
pub fn msgn(g: &Mat) -> Result<Mat> {
    msgn_with_tol(g, default_rank_tol(g))
}

pub fn msgn_with_tol(g: &Mat, rel_tol: f64) -> Result<Mat> {
    if g.is_zero() {
        return Ok(Mat::zeros(g.rows(), g.cols()));
    }
    let f = svd(g)?;
    Ok(f.leading_sign(f.rank(rel_tol)))
}

/// Rank-`s` truncated matrix sign `U_s V_sᵀ`.
///
/// When `s` exceeds the numerical rank only the nonzero directions are kept,
/// so `‖tmsgn(g, s)‖_F² = min(s, rank g)`. Ties `σ_s = σ_{s+1}` resolve to the
/// SVD's own ordering.
pub fn tmsgn(g: &Mat, s: usize) -> Result<Mat> {
    check_truncation(g, s)?;
    if g.is_zero() {
        return Ok(Mat::zeros(g.rows(), g.cols()));
    }
    let f = svd(g)?;
    let k = s.min(f.rank(default_rank_tol(g)));
    Ok(f.leading_sign(k))
}

pub(crate) fn check_truncation(g: &Mat, s: usize) -> Result<()> {
    if s == 0 || s > g.min_dim() {
        return Err(invalid(format!(
            "truncation level s = {s} outside [1, {}] for a {}x{} matrix",
            g.min_dim(),
            g.rows(),
            g.cols()
        )));
    }
    Ok(())
}

/// Approximate polar factor by the cubic Newton-Schulz iteration
/// `X ← 1.5 X − 0.5 X Xᵀ X`, started from `g / ‖g‖_F`.
///
/// Converges to `msgn(g)` when `g` has full numerical rank; directions with
/// tiny singular values converge slowly and are not reached in few steps.
pub fn newton_schulz_msgn(g: &Mat, iters: usize) -> Result<Mat> {
    if iters == 0 {
        return Err(invalid("Newton-Schulz needs at least one iteration"));
    }
    let norm = g.fro_norm();
    if norm == 0.0 {
        return Err(invalid(
            "Newton-Schulz orthogonalization of the zero matrix",
        ));
    }
    let mut x = g.scale(1.0 / norm);
    let wide = x.rows() <= x.cols();
    for _ in 0..iters {
        let cubic = if wide {
            x.matmul(&x.transpose()).matmul(&x)
        } else {
            x.matmul(&x.t_matmul(&x))
        };
        let mut next = x.scale(1.5);
        next.axpy(-0.5, &cubic);
        x = next;
    }
    Ok(x)
}

pub fn spectral_norm(m: &Mat) -> Result<f64> {
    Ok(singular_values(m)?[0])
}

pub fn nuclear_norm(m: &Mat) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Sum of the `s` largest singular values.
pub fn kyfan_norm(m: &Mat, s: usize) -> Result<f64> {
    check_truncation(m, s)?;
    Ok(singular_values(m)?.iter().take(s).sum())
}

/// Split `m` into its projection onto the tangent space at `base` and the
/// orthogonal remainder:
/// `M_T = P_U M + M P_V − P_U M P_V`, `M_T⊥ = (I − P_U) M (I − P_V)`,
/// where `U`, `V` span the leading `rank(base)` singular subspaces.
pub fn tangent_split(m: &Mat, base: &Mat) -> Result<TangentSplit> {
    m.check_same_shape(base)?;
    if base.is_zero() {
        return Err(invalid("tangent space of the zero matrix is undefined"));
    }
    let f = svd(base)?;
    let r = f.rank(default_rank_tol(base));
    let u = f.u.leading_cols(r);
    let v = f.v.leading_cols(r);

    // (I − P_U) M (I − P_V) computed as M − P_U M − M P_V + P_U M P_V
    let pu_m = u.matmul(&u.t_matmul(m));
    let m_pv = m.matmul(&v).matmul(&v.transpose());
    let pu_m_pv = pu_m.matmul(&v).matmul(&v.transpose());

    let mut on = &pu_m + &m_pv;
    on.axpy(-1.0, &pu_m_pv);
    let off = m - &on;
    Ok(TangentSplit {
        on_tangent: on,
        off_tangent: off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&Mat::identity(3)).unwrap();
        assert_eq!(f.sigma.len(), 3);
        assert!(f.sigma.iter().all(|s| (s - 1.0).abs() < 1e-14));
        assert!(close(&f.reconstruct(), &Mat::identity(3), 1e-14));

        let f = svd(&Mat::from_diag(&[3.0, 2.0])).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-14 && (f.sigma[1] - 2.0).abs() < 1e-14);
        // unsorted input diagonal still yields sorted sigma
        let f = svd(&Mat::from_diag(&[1.0, 5.0, 2.0])).unwrap();
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        for (r, c) in [(4, 3), (3, 4), (6, 6), (1, 5)] {
            let m = Mat::gaussian(r, c, &mut rng(7));
            let f = svd(&m).unwrap();
            let err = (&f.reconstruct() - &m).fro_norm() / m.fro_norm();
            assert!(err < 1e-10, "{r}x{c}: {err}");
            let k = r.min(c);
            assert!(close(
                &f.u.t_matmul(&f.u),
                &Mat::identity(k),
                1e-10 * k as f64
            ));
            assert!(close(
                &f.v.t_matmul(&f.v),
                &Mat::identity(k),
                1e-10 * k as f64
            ));
        }
    }

    #[test]
    fn msgn_examples() {
        assert!(close(
            &msgn(&Mat::identity(4)).unwrap(),
            &Mat::identity(4),
            1e-14
        ));
        let m = msgn(&Mat::from_diag(&[3.0, 0.0, 2.0])).unwrap();
        assert!(close(&m, &Mat::from_diag(&[1.0, 0.0, 1.0]), 1e-14));
        assert!(msgn(&Mat::zeros(2, 3)).unwrap().is_zero());
    }

    #[test]
    fn msgn_random_rank_identity_and_rowspace_projector() {
        let g = Mat::gaussian(5, 4, &mut rng(11));
        let s = msgn(&g).unwrap();
        let rank = numerical_rank(&g, default_rank_tol(&g)).unwrap();
        assert!((s.fro_norm().powi(2) - rank as f64).abs() < 1e-10);
        // full column rank: sᵀs = projector onto the row space of g = I₄
        let f = svd(&g).unwrap();
        let proj = f.v.matmul(&f.v.transpose());
        assert!(close(&s.t_matmul(&s), &proj, 1e-10));
    }

    #[test]
    fn tmsgn_examples() {
        let g = Mat::from_diag(&[3.0, 2.0, 1.0]);
        assert!(close(
            &tmsgn(&g, 1).unwrap(),
            &Mat::from_diag(&[1.0, 0.0, 0.0]),
            1e-14
        ));
        assert!(close(&tmsgn(&g, 3).unwrap(), &Mat::identity(3), 1e-14));
        assert!(tmsgn(&g, 0).is_err());
        assert!(tmsgn(&g, 4).is_err());

        let g = Mat::gaussian(6, 6, &mut rng(3));
        let sv = singular_values(&g).unwrap();
        let pairing = tmsgn(&g, 2).unwrap().inner(&g);
        assert!((pairing - (sv[0] + sv[1])).abs() < 1e-10 * g.fro_norm());
        assert!((kyfan_norm(&g, 2).unwrap() - (sv[0] + sv[1])).abs() < 1e-12);
    }

    #[test]
    fn tmsgn_beyond_rank_keeps_only_nonzero_directions() {
        let g = Mat::from_diag(&[2.0, 1.0, 0.0]);
        let t = tmsgn(&g, 3).unwrap();
        assert!((t.fro_norm().powi(2) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn newton_schulz_identity_fixed_point() {
        for iters in [1, 5, 20] {
            let x = newton_schulz_msgn(&Mat::identity(4), iters).unwrap();
            // normalization gives I/2; the cubic map drives it back to I
            assert!(close(
                &x,
                &Mat::identity(4),
                match iters {
                    1 => 0.5,
                    5 => 1e-5,
                    _ => 1e-12,
                }
            ));
        }
        assert!(newton_schulz_msgn(&Mat::zeros(2, 2), 3).is_err());
    }

    #[test]
    fn newton_schulz_converges_on_well_conditioned_input() {
        // Q diag(1..0.4) Qᵀ-style construction keeps σ_min/σ_max = 0.4
        let mut r = rng(21);
        let q1 = svd(&Mat::gaussian(8, 8, &mut r)).unwrap().u;
        let q2 = svd(&Mat::gaussian(8, 8, &mut r)).unwrap().u;
        let d: Vec<f64> = (0..8).map(|i| 1.0 - 0.6 * i as f64 / 7.0).collect();
        let g = q1
            .matmul(&Mat::from_diag(&d))
            .matmul(&q2.transpose())
            .scale(3.0);
        let ns = newton_schulz_msgn(&g, 15).unwrap();
        let exact = msgn(&g).unwrap();
        assert!((&ns - &exact).fro_norm() < 1e-6);
    }

    #[test]
    fn newton_schulz_rank_deficient_gap_is_measured() {
        let g = Mat::from_diag(&[1.0, 1e-8]);
        let ns = newton_schulz_msgn(&g, 5).unwrap();
        let exact = msgn(&g).unwrap();
        // the dominant direction converges; the tiny one stays near zero
        assert!((ns[(0, 0)] - 1.0).abs() < 1e-3);
        assert!(ns[(1, 1)].abs() < 1e-5);
        let gap = (&ns - &exact).fro_norm();
        assert!(gap > 0.99 && gap < 1.0 + 1e-3);
    }

    #[test]
    fn numerical_rank_examples() {
        assert_eq!(numerical_rank(&Mat::zeros(3, 3), 1e-10).unwrap(), 0);
        assert_eq!(
            numerical_rank(&Mat::from_diag(&[5.0, 3.0, 0.0]), 1e-10).unwrap(),
            2
        );
        let mut r = rng(5);
        let a = Mat::gaussian(10, 3, &mut r);
        let b = Mat::gaussian(10, 3, &mut r);
        let p = a.matmul(&b.transpose());
        assert_eq!(numerical_rank(&p, default_rank_tol(&p)).unwrap(), 3);
        assert!(numerical_rank(&p, 0.0).is_err());
        assert!(numerical_rank(&p, 1.0).is_err());
    }

    #[test]
    fn norm_examples() {
        let d = Mat::from_diag(&[3.0, 2.0, 1.0]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!((nuclear_norm(&d).unwrap() - 6.0).abs() < 1e-14);
        assert!((kyfan_norm(&d, 2).unwrap() - 5.0).abs() < 1e-14);
        let m = Mat::gaussian(5, 5, &mut rng(9));
        assert_eq!(kyfan_norm(&m, 5).unwrap(), nuclear_norm(&m).unwrap());
        assert_eq!(kyfan_norm(&m, 1).unwrap(), spectral_norm(&m).unwrap());
    }

    #[test]
    fn tangent_split_examples() {
        let base = Mat::outer(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let m = Mat::outer(&[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]);
        let split = tangent_split(&m, &base).unwrap();
        assert!(split.on_tangent.max_abs() < 1e-15);
        assert!(close(&split.off_tangent, &m, 1e-15));

        // m inside the column space of base has no orthogonal part
        let mut r = rng(2);
        let a = Mat::gaussian(6, 2, &mut r);
        let b = Mat::gaussian(5, 2, &mut r);
        let base = a.matmul(&b.transpose());
        let m = a.matmul(&Mat::gaussian(2, 5, &mut r));
        let split = tangent_split(&m, &base).unwrap();
        assert!(
            split.off_tangent.max_abs() < 1e-12,
            "{}",
            split.off_tangent.max_abs()
        );

        let m = Mat::gaussian(6, 5, &mut r);
        let split = tangent_split(&m, &base).unwrap();
        assert!(close(&(&split.on_tangent + &split.off_tangent), &m, 1e-14));
        let cross = split.on_tangent.inner(&split.off_tangent);
        assert!(cross.abs() <= 1e-10 * split.on_tangent.fro_norm() * split.off_tangent.fro_norm());

        assert!(tangent_split(&m, &Mat::zeros(6, 5)).is_err());
    }
}
