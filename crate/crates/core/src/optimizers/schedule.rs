use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Step-size sequence `η_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `η_t = eta0`.
    Constant { eta0: f64 },
    /// `η_t = eta0 · γᵗ`.
    Geometric { eta0: f64, gamma: f64 },
    /// `η_t = 2 / (λ (t + 3))`, i.e. the Frank-Wolfe weight `λη_t = 2/(t+3)`.
    FrankWolfe { lambda: f64 },
    /// `η_t = (C/r̄) γᵗ dist₀` with `γ = max{C/√r̄, √(1 − C²/r̄)}`.
    TheorySd { c: f64, rbar: usize, dist0: f64 },
    /// `η_t = (C̃/s) γᵗ dist₀` with `γ = max{C̃/√s, √(1 − C̃²/s)}`.
    TheoryTsd { c_tilde: f64, s: usize, dist0: f64 },
}

/// Decay factor shared by both theoretical schedules: `max{c/√k, √(1 − c²/k)}`.
pub fn theory_decay(c: f64, k: usize) -> f64 {
    let k = k as f64;
    (c / k.sqrt()).max((1.0 - c * c / k).max(0.0).sqrt())
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!(
                    "schedule parameter {name} must be positive and finite, got {v}"
                )))
            }
        };
        match *self {
            Self::Constant { eta0 } => positive("eta0", eta0),
            Self::Geometric { eta0, gamma } => {
                positive("eta0", eta0)?;
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid(format!(
                        "geometric decay gamma must lie in (0, 1), got {gamma}"
                    )));
                }
                Ok(())
            }
            Self::FrankWolfe { lambda } => positive("lambda", lambda),
            Self::TheorySd { c, rbar, dist0 } => {
                Self::check_theory(c, rbar, "rbar")?;
                positive("dist0", dist0)
            }
            Self::TheoryTsd { c_tilde, s, dist0 } => {
                Self::check_theory(c_tilde, s, "s")?;
                positive("dist0", dist0)
            }
        }
    }

    fn check_theory(c: f64, k: usize, name: &str) -> Result<()> {
        if k == 0 {
            return Err(invalid(format!(
                "schedule parameter {name} must be at least 1"
            )));
        }
        if !(c > 0.0 && c * c < k as f64) {
            return Err(invalid(format!(
                "theoretical schedule needs 0 < C < sqrt({name}) so that the decay lies in (0, 1), got C = {c}"
            )));
        }
        Ok(())
    }

    /// `η_t`.
    pub fn eta(&self, t: usize) -> f64 {
        let tf = t as f64;
        match *self {
            Self::Constant { eta0 } => eta0,
            Self::Geometric { eta0, gamma } => eta0 * gamma.powf(tf),
            Self::FrankWolfe { lambda } => 2.0 / (lambda * (tf + 3.0)),
            Self::TheorySd { c, rbar, dist0 } => {
                c / rbar as f64 * theory_decay(c, rbar).powf(tf) * dist0
            }
            Self::TheoryTsd { c_tilde, s, dist0 } => {
                c_tilde / s as f64 * theory_decay(c_tilde, s).powf(tf) * dist0
            }
        }
    }

    /// Decay factor of the linear-rate schedules.
    pub fn decay(&self) -> Option<f64> {
        match *self {
            Self::Geometric { gamma, .. } => Some(gamma),
            Self::TheorySd { c, rbar, .. } => Some(theory_decay(c, rbar)),
            Self::TheoryTsd { c_tilde, s, .. } => Some(theory_decay(c_tilde, s)),
            _ => None,
        }
    }
}

/// Tolerance sequence `ε_t` for the weight-decay variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsSchedule {
    /// `ε_t = (c/λ) √(m / (π (t+3)))` with `c = 0.08` by default.
    #[default]
    Experimental,
    /// Same form with a custom leading constant.
    ExperimentalScaled { c: f64 },
    /// `ε_t = (2 L_𝒜/λ) √(2m / (t+3))`.
    Theoretical { l_a: f64 },
    /// `ε_t = (2√k/√λ) √η_t`, with `k = n` (RSD-WD) or `k = s` (RTSD-WD).
    General { k: usize },
    /// `ε_t = eps`.
    Constant { eps: f64 },
}

pub const EXPERIMENTAL_EPS_CONSTANT: f64 = 0.08;

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = match *self {
            Self::Experimental => false,
            Self::ExperimentalScaled { c } => !(c > 0.0 && c.is_finite()),
            Self::Theoretical { l_a } => !(l_a > 0.0 && l_a.is_finite()),
            Self::General { k } => k == 0,
            Self::Constant { eps } => !(eps > 0.0 && eps.is_finite()),
        };
        if bad {
            return Err(invalid(format!("invalid tolerance schedule {self:?}")));
        }
        Ok(())
    }

    /// `ε_t` given the weight decay `λ`, the step `η_t` and the number of
    /// residual terms `m`.
    pub fn eps(&self, t: usize, lambda: f64, eta: f64, m: usize) -> f64 {
        let (tf, mf) = (t as f64, m as f64);
        let experimental = |c: f64| c / lambda * (mf / (std::f64::consts::PI * (tf + 3.0))).sqrt();
        match *self {
            Self::Experimental => experimental(EXPERIMENTAL_EPS_CONSTANT),
            Self::ExperimentalScaled { c } => experimental(c),
            Self::Theoretical { l_a } => 2.0 * l_a / lambda * (2.0 * mf / (tf + 3.0)).sqrt(),
            Self::General { k } => 2.0 * (k as f64).sqrt() / lambda.sqrt() * eta.sqrt(),
            Self::Constant { eps } => eps,
        }
    }
}

/// `∏_{t<T} (1 − 2/(t+3))`, the contraction accumulated by the Frank-Wolfe
/// weights; equals `2 / ((T+2)(T+1))`.
pub fn frank_wolfe_product(t_max: usize) -> f64 {
    (0..t_max).map(|t| 1.0 - 2.0 / (t as f64 + 3.0)).product()
}
