use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::mat::Mat;

/// Linear map `X ↦ (⟨A_1, X⟩, …, ⟨A_m, X⟩)` with its adjoint `v ↦ Σ v_i A_i`.
///
/// Matrices are either held densely as an `m × (n1·n2)` array applied with
/// BLAS `gemv`, or regenerated from the seed on every application. Both
/// storages represent the same matrices because each `A_i` is drawn from its
/// own ChaCha stream; their results agree up to summation order.
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    m: usize,
    n1: usize,
    n2: usize,
    storage: Storage,
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Array2<f64>),
    Streaming { seed: u64 },
}

fn fill_gaussian(seed: u64, index: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    for v in out {
        *v = StandardNormal.sample(&mut rng);
    }
}

/// Dot product with a fixed four-lane accumulation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl MeasurementOperator {
    /// `m` sensing matrices of size `n1 × n2` with i.i.d. N(0, 1) entries.
    pub fn gaussian(n1: usize, n2: usize, m: usize, seed: u64) -> Result<Self> {
        Self::check_dims(n1, n2, m)?;
        let d = n1 * n2;
        let mut data = vec![0.0; m * d];
        for (i, block) in data.chunks_exact_mut(d).enumerate() {
            fill_gaussian(seed, i, block);
        }
        Ok(Self::dense(m, n1, n2, data))
    }

    /// Same operator as [`gaussian`](Self::gaussian) with the same seed, but
    /// regenerating each `A_i` on demand instead of storing it.
    pub fn gaussian_streaming(n1: usize, n2: usize, m: usize, seed: u64) -> Result<Self> {
        Self::check_dims(n1, n2, m)?;
        Ok(Self {
            m,
            n1,
            n2,
            storage: Storage::Streaming { seed },
        })
    }

    /// Operator from explicit sensing matrices.
    pub fn from_matrices(mats: &[Mat]) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| invalid("at least one sensing matrix is required"))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(mats.len() * n1 * n2);
        for a in mats {
            first.check_same_shape(a)?;
            data.extend_from_slice(a.data());
        }
        Ok(Self::dense(mats.len(), n1, n2, data))
    }

    fn dense(m: usize, n1: usize, n2: usize, data: Vec<f64>) -> Self {
        let a = Array2::from_shape_vec((m, n1 * n2), data).expect("buffer holds m blocks of n1·n2");
        Self {
            m,
            n1,
            n2,
            storage: Storage::Dense(a),
        }
    }

    fn check_dims(n1: usize, n2: usize, m: usize) -> Result<()> {
        if n1 == 0 || n2 == 0 || m == 0 {
            return Err(invalid(format!(
                "operator dimensions must be positive, got n1={n1} n2={n2} m={m}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn is_streaming(&self) -> bool {
        matches!(self.storage, Storage::Streaming { .. })
    }

    /// The `i`-th sensing matrix.
    pub fn matrix(&self, i: usize) -> Mat {
        assert!(i < self.m);
        let d = self.n1 * self.n2;
        let data = match &self.storage {
            Storage::Dense(a) => a.row(i).to_vec(),
            Storage::Streaming { seed } => {
                let mut buf = vec![0.0; d];
                fill_gaussian(*seed, i, &mut buf);
                buf
            }
        };
        Mat::new(self.n1, self.n2, data).expect("sensing matrix entries are finite")
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.shape() != (self.n1, self.n2) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.n1, self.n2),
                got: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        Ok(())
    }

    /// `𝒜(X)`.
    pub fn forward(&self, x: &Mat) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match &self.storage {
            Storage::Dense(a) => Ok(a.dot(&ArrayView1::from(x.data())).to_vec()),
            Storage::Streaming { seed } => {
                let mut buf = vec![0.0; self.n1 * self.n2];
                Ok((0..self.m)
                    .map(|i| {
                        fill_gaussian(*seed, i, &mut buf);
                        dot(&buf, x.data())
                    })
                    .collect())
            }
        }
    }

    /// `𝒜*(v) = Σ v_i A_i`.
    pub fn adjoint(&self, v: &[f64]) -> Result<Mat> {
        if v.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: format!("{} weights", self.m),
                got: v.len().to_string(),
            });
        }
        let out = match &self.storage {
            Storage::Dense(a) => a.t().dot(&ArrayView1::from(v)).to_vec(),
            Storage::Streaming { seed } => {
                let mut out = vec![0.0; self.n1 * self.n2];
                let mut buf = vec![0.0; self.n1 * self.n2];
                for (i, &vi) in v.iter().enumerate() {
                    if vi != 0.0 {
                        fill_gaussian(*seed, i, &mut buf);
                        axpy(vi, &buf, &mut out);
                    }
                }
                out
            }
        };
        Mat::new(self.n1, self.n2, out)
    }
}
