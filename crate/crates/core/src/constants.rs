use crate::error::{Error, Result};

/// Problem-level bounds used by step-size rules and multiplier diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// Bound on the second moment of the minimax oracle.
    pub m_star: f64,
    /// Almost-sure bound on the minimax oracle norm.
    pub kappa0: f64,
    /// Diameter of the feasible set `X`.
    pub r: f64,
    /// Bound on `||G(x, xi)||`.
    pub nu_g: f64,
    /// Bound on `||grad_x F(x, xi)||`.
    pub kappa_f: f64,
    /// Bound on the operator norm of `DG(x, xi)`.
    pub kappa_g: f64,
    /// Light-tail constant of `F`.
    pub nu_f: f64,
    /// Slater margin: radius of a ball around `g(x_hat)` inside the cone.
    pub slater_margin: f64,
    pub slater_point: Vec<f64>,
    /// True when any field came from sampling rather than an analytic bound.
    pub estimated: bool,
}

impl ProblemConstants {
    /// `nu_g + kappa_g * R`.
    pub fn beta0(&self) -> f64 {
        self.nu_g + self.kappa_g * self.r
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_star", self.m_star),
            ("kappa0", self.kappa0),
            ("R", self.r),
            ("nu_g", self.nu_g),
            ("kappa_f", self.kappa_f),
            ("kappa_g", self.kappa_g),
            ("nu_f", self.nu_f),
            ("slater_margin", self.slater_margin),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
