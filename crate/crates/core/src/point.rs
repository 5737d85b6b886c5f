use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// The joint variable `z = (x, y)` of a minimax problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PrimalDualPoint {
    /// Builds a point, rejecting empty blocks and non-finite entries.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::arg("primal and dual blocks must be nonempty"));
        }
        if !linalg::all_finite(&x) || !linalg::all_finite(&y) {
            return Err(Error::NonFinite("primal-dual point"));
        }
        Ok(Self { x, y })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; m],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        check_dim(n, self.x.len())?;
        check_dim(m, self.y.len())
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.x) && linalg::all_finite(&self.y)
    }

    pub fn norm(&self) -> f64 {
        (linalg::norm_sq(&self.x) + linalg::norm_sq(&self.y)).sqrt()
    }

    pub fn dist(&self, other: &PrimalDualPoint) -> f64 {
        let dx = linalg::dist(&self.x, &other.x);
        let dy = linalg::dist(&self.y, &other.y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Concatenation `(x; y)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.y.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v
    }

    pub fn from_stacked(v: &[f64], n: usize) -> Result<Self> {
        if n == 0 || n >= v.len() {
            return Err(Error::arg(format!(
                "cannot split vector of length {} at {n}",
                v.len()
            )));
        }
        Self::new(v[..n].to_vec(), v[n..].to_vec())
    }
}
