use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, MeasurementOperator, Objective};
use crate::error::{invalid, Result};
use crate::mat::Mat;

/// Hinge-loss matrix classification `f(W) = (1/m) Σ max(0, 1 − y_i⟨W, X_i⟩)`.
#[derive(Clone, Debug)]
pub struct HingeProblem {
    samples: MeasurementOperator,
    labels: Vec<f64>,
    flipped: Vec<usize>,
    w_true: Option<Mat>,
}

impl HingeProblem {
    pub fn new(samples: MeasurementOperator, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != samples.len() {
            return Err(invalid(format!(
                "{} labels for {} samples",
                labels.len(),
                samples.len()
            )));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(invalid("labels must be ±1"));
        }
        Ok(Self {
            samples,
            labels,
            flipped: Vec::new(),
            w_true: None,
        })
    }

    /// Gaussian samples, labels `sgn⟨W*, X_i⟩` (ties to +1), then a seeded
    /// uniform `⌊flip_fraction · m⌋`-subset of labels negated.
    pub fn synthesize(
        m: usize,
        n1: usize,
        n2: usize,
        flip_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&flip_fraction) {
            return Err(invalid(format!(
                "flip_fraction must lie in [0, 1), got {flip_fraction}"
            )));
        }
        let samples = MeasurementOperator::gaussian(n1, n2, m, derive_seed(seed, 1))?;
        let w_true = Mat::gaussian(n1, n2, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 2)));
        let mut labels: Vec<f64> = samples
            .forward(&w_true)?
            .iter()
            .map(|&s| if s >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        let k = ((flip_fraction * m as f64) + 1e-9).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
        let mut flipped = index::sample(&mut rng, m, k).into_vec();
        flipped.sort_unstable();
        for &i in &flipped {
            labels[i] = -labels[i];
        }
        Ok(Self {
            samples,
            labels,
            flipped,
            w_true: Some(w_true),
        })
    }

    pub fn samples(&self) -> &MeasurementOperator {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Sorted indices of the flipped labels.
    pub fn flipped(&self) -> &[usize] {
        &self.flipped
    }

    /// The generating weight; not a minimizer once labels are flipped.
    pub fn w_generator(&self) -> Option<&Mat> {
        self.w_true.as_ref()
    }

    /// Hinge arguments `1 − y_i⟨W, X_i⟩`.
    pub fn slacks(&self, w: &Mat) -> Result<Vec<f64>> {
        let mut s = self.samples.forward(w)?;
        for (si, yi) in s.iter_mut().zip(&self.labels) {
            *si = 1.0 - yi * *si;
        }
        Ok(s)
    }
}

impl Objective for HingeProblem {
    fn shape(&self) -> (usize, usize) {
        self.samples.shape()
    }

    fn value(&self, w: &Mat) -> Result<f64> {
        let s = self.slacks(w)?;
        Ok(s.iter().map(|v| v.max(0.0)).sum::<f64>() / self.labels.len() as f64)
    }

    fn subgradient(&self, w: &Mat) -> Result<Mat> {
        Ok(self.evaluate(w)?.1)
    }

    /// Samples sitting exactly on the hinge (`y_i⟨W, X_i⟩ = 1`) contribute zero.
    fn evaluate(&self, w: &Mat) -> Result<(f64, Mat)> {
        let s = self.slacks(w)?;
        let m = self.labels.len() as f64;
        let v: Vec<f64> = s
            .iter()
            .zip(&self.labels)
            .map(|(&si, &yi)| if si > 0.0 { -yi / m } else { 0.0 })
            .collect();
        let value = s.iter().map(|v| v.max(0.0)).sum::<f64>() / m;
        Ok((value, self.samples.adjoint(&v)?))
    }

    fn num_terms(&self) -> usize {
        self.labels.len()
    }
}
