use crate::error::{Error, Result};

/// Step-size rules for the SAPS iteration.
///
/// The first two variants are tied to a fixed horizon `N` and are only
/// defined for `1 <= k <= N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `gamma_k = 1 / sqrt(N)`.
    ConstantOverSqrtN { horizon: u64 },
    /// `gamma_k = theta * dist / (m * sqrt(N))` with user-supplied estimates of
    /// the initial distance to the saddle point and of the oracle bound.
    ScaledConstant {
        theta: f64,
        dist_estimate: f64,
        m_estimate: f64,
        horizon: u64,
    },
    /// `gamma_k = theta / k`.
    Harmonic { theta: f64 },
    /// `gamma_k = theta / sqrt(k)`.
    InvSqrtK { theta: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::arg(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match *self {
            StepSchedule::ConstantOverSqrtN { horizon } => {
                if horizon == 0 {
                    return Err(Error::arg("horizon must be at least 1"));
                }
            }
            StepSchedule::ScaledConstant {
                theta,
                dist_estimate,
                m_estimate,
                horizon,
            } => {
                positive("theta", theta)?;
                positive("dist_estimate", dist_estimate)?;
                positive("m_estimate", m_estimate)?;
                if horizon == 0 {
                    return Err(Error::arg("horizon must be at least 1"));
                }
            }
            StepSchedule::Harmonic { theta } | StepSchedule::InvSqrtK { theta } => {
                positive("theta", theta)?
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> Option<u64> {
        match *self {
            StepSchedule::ConstantOverSqrtN { horizon }
            | StepSchedule::ScaledConstant { horizon, .. } => Some(horizon),
            _ => None,
        }
    }

    /// Returns the same rule re-targeted to another horizon.
    pub fn with_horizon(self, n: u64) -> Self {
        match self {
            StepSchedule::ConstantOverSqrtN { .. } => {
                StepSchedule::ConstantOverSqrtN { horizon: n }
            }
            StepSchedule::ScaledConstant {
                theta,
                dist_estimate,
                m_estimate,
                ..
            } => StepSchedule::ScaledConstant {
                theta,
                dist_estimate,
                m_estimate,
                horizon: n,
            },
            other => other,
        }
    }

    /// Step size at (1-based) iteration `k`.
    pub fn gamma_at(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::OutOfHorizon {
                k,
                horizon: self.horizon().unwrap_or(u64::MAX),
            });
        }
        if let Some(horizon) = self.horizon() {
            if k > horizon {
                return Err(Error::OutOfHorizon { k, horizon });
            }
        }
        Ok(match *self {
            StepSchedule::ConstantOverSqrtN { horizon } => 1.0 / (horizon as f64).sqrt(),
            StepSchedule::ScaledConstant {
                theta,
                dist_estimate,
                m_estimate,
                horizon,
            } => theta * dist_estimate / (m_estimate * (horizon as f64).sqrt()),
            StepSchedule::Harmonic { theta } => theta / k as f64,
            StepSchedule::InvSqrtK { theta } => theta / (k as f64).sqrt(),
        })
    }
}
