use serde::{Deserialize, Serialize};

use super::{HingeProblem, LadRegressionProblem, LadSensingProblem, Objective};
use crate::error::Result;
use crate::mat::Mat;

/// Declarative description of a synthetic problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Robust low-rank sensing `b = 𝒜(X*) + e₁ + e₂`.
    Sensing {
        n1: usize,
        n2: usize,
        r: usize,
        m: usize,
        p: f64,
        sparse_std: f64,
        dense_std: f64,
        seed: u64,
        /// Regenerate sensing matrices on the fly instead of storing them.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        streaming: bool,
    },
    /// Noiseless LAD regression.
    Regression {
        #[serde(rename = "N")]
        n: usize,
        n1: usize,
        n2: usize,
        seed: u64,
        #[serde(default)]
        flip_fraction: f64,
    },
    /// Hinge-loss classification with label noise.
    Classification {
        #[serde(rename = "N")]
        n: usize,
        n1: usize,
        n2: usize,
        seed: u64,
        flip_fraction: f64,
    },
}

impl ProblemSpec {
    pub fn seed(&self) -> u64 {
        match self {
            Self::Sensing { seed, .. }
            | Self::Regression { seed, .. }
            | Self::Classification { seed, .. } => *seed,
        }
    }

    /// Same instance description with a different seed.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Sensing { seed, .. }
            | Self::Regression { seed, .. }
            | Self::Classification { seed, .. } => *seed = new_seed,
        }
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Sensing { n1, n2, .. }
            | Self::Regression { n1, n2, .. }
            | Self::Classification { n1, n2, .. } => (*n1, *n2),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        Ok(match *self {
            Self::Sensing {
                n1,
                n2,
                r,
                m,
                p,
                sparse_std,
                dense_std,
                seed,
                streaming,
            } => {
                let build = if streaming {
                    LadSensingProblem::synthesize_streaming
                } else {
                    LadSensingProblem::synthesize
                };
                Problem::Sensing(build(n1, n2, r, m, p, sparse_std, dense_std, seed)?)
            }
            Self::Regression {
                n,
                n1,
                n2,
                seed,
                flip_fraction,
            } => {
                if flip_fraction != 0.0 {
                    return Err(crate::error::invalid(
                        "regression problems are noiseless; flip_fraction must be 0",
                    ));
                }
                Problem::Regression(LadRegressionProblem::synthesize(n, n1, n2, seed)?)
            }
            Self::Classification {
                n,
                n1,
                n2,
                seed,
                flip_fraction,
            } => Problem::Classification(HingeProblem::synthesize(n, n1, n2, flip_fraction, seed)?),
        })
    }
}

/// A synthesized problem instance.
#[derive(Clone, Debug)]
pub enum Problem {
    Sensing(LadSensingProblem),
    Regression(LadRegressionProblem),
    Classification(HingeProblem),
}

impl Problem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            Self::Sensing(p) => p,
            Self::Regression(p) => p,
            Self::Classification(p) => p,
        }
    }

    /// Ground-truth minimizer when one is known by construction.
    pub fn reference(&self) -> Option<&Mat> {
        match self {
            Self::Sensing(p) => Some(p.x_true()),
            Self::Regression(p) => p.w_true(),
            Self::Classification(_) => None,
        }
    }

    /// Optimal value when known by construction (noiseless instances).
    pub fn known_optimum(&self) -> Option<f64> {
        match self {
            Self::Sensing(p)
                if p.observations()
                    .e1
                    .iter()
                    .chain(&p.observations().e2)
                    .all(|&e| e == 0.0) =>
            {
                Some(0.0)
            }
            Self::Regression(_) => Some(0.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"sensing","n1":5,"n2":4,"r":2,"m":40,"p":0.1,"sparse_std":10.0,"dense_std":1.0,"seed":3}"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        let back: ProblemSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);

        let text = r#"{"kind":"classification","N":30,"n1":3,"n2":3,"seed":1,"flip_fraction":0.1}"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        assert!(matches!(spec, ProblemSpec::Classification { n: 30, .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"kind":"regression","N":30,"n1":3,"n2":3,"seed":1,"bogus":2}"#;
        let err = serde_json::from_str::<ProblemSpec>(text)
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn streaming_build_matches_dense() {
        let dense = ProblemSpec::Sensing {
            n1: 4,
            n2: 3,
            r: 1,
            m: 20,
            p: 0.1,
            sparse_std: 10.0,
            dense_std: 0.5,
            seed: 7,
            streaming: false,
        };
        let stream = match dense.clone() {
            ProblemSpec::Sensing {
                n1,
                n2,
                r,
                m,
                p,
                sparse_std,
                dense_std,
                seed,
                ..
            } => ProblemSpec::Sensing {
                n1,
                n2,
                r,
                m,
                p,
                sparse_std,
                dense_std,
                seed,
                streaming: true,
            },
            _ => unreachable!(),
        };
        let (a, b) = (dense.build().unwrap(), stream.build().unwrap());
        let x = Mat::from_fn(4, 3, |i, j| (i + 2 * j) as f64 * 0.1);
        let ((fa, ga), (fb, gb)) = (
            a.objective().evaluate(&x).unwrap(),
            b.objective().evaluate(&x).unwrap(),
        );
        assert!((fa - fb).abs() <= 1e-12 * fa.abs());
        assert!((&ga - &gb).max_abs() <= 1e-12 * ga.fro_norm());
    }
}
