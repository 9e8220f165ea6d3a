use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, sign0, MeasurementOperator, Objective};
use crate::error::{invalid, Result};
use crate::mat::Mat;

/// Least-absolute-deviation matrix regression `f(W) = Σ |y_i − ⟨X_i, W⟩|`.
#[derive(Clone, Debug)]
pub struct LadRegressionProblem {
    samples: MeasurementOperator,
    y: Vec<f64>,
    w_true: Option<Mat>,
}

impl LadRegressionProblem {
    pub fn new(samples: MeasurementOperator, y: Vec<f64>, w_true: Option<Mat>) -> Result<Self> {
        if y.len() != samples.len() {
            return Err(invalid(format!(
                "{} targets for {} samples",
                y.len(),
                samples.len()
            )));
        }
        if let Some(w) = &w_true {
            if w.shape() != samples.shape() {
                return Err(invalid("reference weight has the wrong shape"));
            }
        }
        Ok(Self { samples, y, w_true })
    }

    /// Gaussian samples and weight, noiseless targets `y_i = ⟨X_i, W*⟩`.
    pub fn synthesize(n: usize, n1: usize, n2: usize, seed: u64) -> Result<Self> {
        let samples = MeasurementOperator::gaussian(n1, n2, n, derive_seed(seed, 1))?;
        let w_true = Mat::gaussian(n1, n2, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 2)));
        let y = samples.forward(&w_true)?;
        Self::new(samples, y, Some(w_true))
    }

    pub fn samples(&self) -> &MeasurementOperator {
        &self.samples
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn w_true(&self) -> Option<&Mat> {
        self.w_true.as_ref()
    }

    /// Residuals `y_i − ⟨X_i, W⟩`.
    pub fn residual(&self, w: &Mat) -> Result<Vec<f64>> {
        let mut r = self.samples.forward(w)?;
        for (ri, yi) in r.iter_mut().zip(&self.y) {
            *ri = yi - *ri;
        }
        Ok(r)
    }
}

impl Objective for LadRegressionProblem {
    fn shape(&self) -> (usize, usize) {
        self.samples.shape()
    }

    fn value(&self, w: &Mat) -> Result<f64> {
        Ok(self.residual(w)?.iter().map(|v| v.abs()).sum())
    }

    fn subgradient(&self, w: &Mat) -> Result<Mat> {
        Ok(self.evaluate(w)?.1)
    }

    fn evaluate(&self, w: &Mat) -> Result<(f64, Mat)> {
        let r = self.residual(w)?;
        let v: Vec<f64> = r.iter().map(|&ri| -sign0(ri)).collect();
        Ok((r.iter().map(|v| v.abs()).sum(), self.samples.adjoint(&v)?))
    }

    fn num_terms(&self) -> usize {
        self.samples.len()
    }
}
