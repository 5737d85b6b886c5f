use crate::constants::ProblemConstants;
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::ConicOracle;
use crate::rng::RandomSource;

/// Multiplier-growth constants and the resulting bounds for a given `(sigma, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierDiagnostics {
    pub kappa1: f64,
    /// May be negative for some constant combinations; reported as-is.
    pub kappa2: f64,
    pub kappa3: f64,
    /// Bound on the expected multiplier norm: `kappa1/(sigma s) + kappa2 sigma + kappa3 sigma s`.
    pub delta1: f64,
    pub theta_sigma_s: f64,
    pub beta0: f64,
    pub estimated: bool,
}

/// Evaluates the multiplier bounds from problem constants.
///
/// With `eps0` the Slater margin and `beta0 = nu_g + kappa_g R`:
///
/// ```text
/// kappa1 = R^2 / eps0
/// kappa2 = (kappa_f + 2 nu_g^2 + 2 kappa_g^2 R^2) / eps0 - beta0
/// kappa3 = 2 beta0 + eps0 / 2 + (8 beta0^2 / eps0) log(32 beta0^2 / eps0^2)
/// theta(sigma, s) = eps0 sigma s / 2 + sigma beta0 (s - 1) + R^2 / (eps0 sigma s)
///                   + (kappa_f + 2 nu_g^2 + 2 kappa_g^2 R^2) sigma / eps0
/// ```
pub fn multiplier_bound_diagnostics(
    constants: &ProblemConstants,
    sigma: f64,
    s: u64,
) -> Result<MultiplierDiagnostics> {
    let eps0 = constants.slater_margin;
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::arg(format!(
            "Slater margin must be positive, got {eps0}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    if s == 0 {
        return Err(Error::arg("s must be a positive integer"));
    }
    let r2 = constants.r * constants.r;
    let beta0 = constants.beta0();
    let growth = constants.kappa_f
        + 2.0 * constants.nu_g * constants.nu_g
        + 2.0 * constants.kappa_g * constants.kappa_g * r2;
    let kappa1 = r2 / eps0;
    let kappa2 = growth / eps0 - beta0;
    let kappa3 = 2.0 * beta0
        + eps0 / 2.0
        + (8.0 * beta0 * beta0 / eps0) * (32.0 * beta0 * beta0 / (eps0 * eps0)).ln();
    let ss = s as f64;
    let delta1 = kappa1 / (sigma * ss) + kappa2 * sigma + kappa3 * sigma * ss;
    let theta_sigma_s = eps0 * sigma * ss / 2.0
        + sigma * beta0 * (ss - 1.0)
        + r2 / (eps0 * sigma * ss)
        + growth * sigma / eps0;
    Ok(MultiplierDiagnostics {
        kappa1,
        kappa2,
        kappa3,
        delta1,
        theta_sigma_s,
        beta0,
        estimated: constants.estimated,
    })
}

/// `sigma (kappa_f + nu_g kappa_g sigma + kappa_g ||y_k||)`: bound on one primal step.
pub fn step_bound(constants: &ProblemConstants, sigma: f64, y_norm: f64) -> f64 {
    sigma
        * (constants.kappa_f
            + constants.nu_g * constants.kappa_g * sigma
            + constants.kappa_g * y_norm)
}

/// `sigma beta0`: bound on the change of the multiplier norm in one step.
pub fn multiplier_step_bound(constants: &ProblemConstants, sigma: f64) -> f64 {
    sigma * constants.beta0()
}

/// Sample sizes for [`estimate_constants`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimationBudget {
    /// Random points of `X`, each evaluated with one fresh draw.
    pub points: usize,
    /// Extra draws evaluated at the Slater point.
    pub draws: usize,
}

impl Default for EstimationBudget {
    fn default() -> Self {
        Self {
            points: 10_000,
            draws: 1_000,
        }
    }
}

/// Estimates oracle bounds by sampled maximization over `X`.
///
/// Points are projections of Gaussian directions scaled by a uniform radius up
/// to the diameter of `X`, which places most of them on the boundary where the
/// bounds are typically attained. The Slater margin comes from the full-batch
/// constraint value at `slater_point`.
pub fn estimate_constants<O: ConicOracle>(
    oracle: &O,
    slater_point: &[f64],
    budget: EstimationBudget,
    rng: &mut RandomSource,
) -> Result<ProblemConstants> {
    let n = oracle.dim_x();
    crate::error::check_dim(n, slater_point.len())?;
    let feasible = oracle.feasible_set();
    let diameter = feasible
        .diameter()
        .ok_or_else(|| Error::arg("feasible set must be bounded"))?;
    let (mut kappa_f, mut kappa_g, mut nu_g, mut nu_f) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut observe = |x: &[f64], rng: &mut RandomSource| -> Result<()> {
        let s = oracle.sample(rng, x)?;
        kappa_f = kappa_f.max(linalg::norm(&s.f_grad));
        kappa_g = kappa_g.max(s.g_jacobian.operator_norm());
        nu_g = nu_g.max(linalg::norm(&s.g_value));
        nu_f = nu_f.max(s.f_value.abs());
        Ok(())
    };
    for _ in 0..budget.points {
        let radius = diameter * rng.uniform();
        let dir: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let len = linalg::norm(&dir).max(f64::MIN_POSITIVE);
        let x = feasible.project(&linalg::scale(&dir, radius / len))?;
        observe(&x, rng)?;
    }
    for _ in 0..budget.draws {
        observe(slater_point, rng)?;
    }
    let g0 = oracle.full_batch(slater_point)?.g_value;
    Ok(ProblemConstants {
        m_star: kappa_f,
        kappa0: kappa_f,
        r: diameter,
        nu_g,
        kappa_f,
        kappa_g,
        nu_f,
        slater_margin: oracle.cone().interior_margin(&g0),
        slater_point: slater_point.to_vec(),
        estimated: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ProblemConstants {
        ProblemConstants {
            m_star: 1.0,
            kappa0: 1.0,
            r: 1.0,
            nu_g: 1.0,
            kappa_f: 1.0,
            kappa_g: 1.0,
            nu_f: 1.0,
            slater_margin: 0.5,
            slater_point: vec![0.0],
            estimated: false,
        }
    }

    #[test]
    fn worked_example() {
        let d = multiplier_bound_diagnostics(&worked(), 1.0, 1).unwrap();
        assert_eq!(d.beta0, 2.0);
        assert_eq!(d.kappa1, 2.0);
        assert_eq!(d.kappa2, 8.0);
        let k3 = 4.25 + 64.0 * 512f64.ln();
        assert!((d.kappa3 - k3).abs() < 1e-12);
        assert!((d.kappa3 - 403.5).abs() < 0.1);
        assert!((d.delta1 - (10.0 + k3)).abs() < 1e-12);
        assert!((d.delta1 - 413.5).abs() < 0.1);
        // eps0/2 + 0 + 1/0.5 + 5/0.5
        assert!((d.theta_sigma_s - 12.25).abs() < 1e-12);
    }

    #[test]
    fn delta1_is_convex_in_s_around_its_minimizer() {
        let c = worked();
        let sigma = 0.01;
        let d1 = |s| multiplier_bound_diagnostics(&c, sigma, s).unwrap().delta1;
        let base = multiplier_bound_diagnostics(&c, sigma, 1).unwrap();
        let s_star = (base.kappa1 / base.kappa3).sqrt() / sigma;
        let lo = s_star.floor().max(1.0) as u64;
        let best = (1..200).min_by(|a, b| d1(*a).total_cmp(&d1(*b))).unwrap();
        assert!(best == lo || best == lo + 1, "best {best}, s* {s_star}");
        for s in best..150 {
            assert!(d1(s + 1) >= d1(s));
        }
    }

    #[test]
    fn rejects_missing_margin() {
        let mut c = worked();
        c.slater_margin = 0.0;
        assert!(multiplier_bound_diagnostics(&c, 1.0, 1).is_err());
        assert!(multiplier_bound_diagnostics(&worked(), 0.0, 1).is_err());
        assert!(multiplier_bound_diagnostics(&worked(), 1.0, 0).is_err());
    }

    #[test]
    fn step_bounds() {
        let c = worked();
        assert_eq!(step_bound(&c, 0.5, 2.0), 0.5 * (1.0 + 0.5 + 2.0));
        assert_eq!(multiplier_step_bound(&c, 0.25), 0.5);
    }
}
