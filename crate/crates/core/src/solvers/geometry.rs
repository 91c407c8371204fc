use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sobolev_constant_estimate, RectDomain};
use crate::nonlinearity::{growth_constants, Exponents, SystemParams};

use super::SolverOptions;

/// Discrete estimates of `S_{q,r}` and `S_{q,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevConstants {
    pub s_qr: f64,
    pub s_qp: f64,
}

impl SobolevConstants {
    pub fn estimate(dom: &RectDomain, exps: &Exponents, starts: usize, seed: u64) -> Result<Self> {
        Ok(SobolevConstants {
            s_qr: sobolev_constant_estimate(dom, exps.r, exps, starts, seed)?,
            s_qp: sobolev_constant_estimate(dom, exps.p, exps, starts, seed)?,
        })
    }
}

/// Radii and parameter box on which the energy is positive on the annulus `r0 ≤ ‖w‖_W ≤ R0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    #[serde(rename = "R0")]
    pub big_r0: f64,
    pub r0: f64,
    pub c0: f64,
    pub mu0: f64,
    pub lambda0: f64,
    pub delta0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eta: f64,
}

/// Geometry from precomputed Sobolev constants.
///
/// `c1 = q/(q+1)` at `μ = 0` and `q/(q+1) · Ĉ_{q,s}` otherwise; `c2 = S_{q,r}/(r+1)`,
/// `c3 = S_{q,p}/(p+1)`.
pub fn ball_geometry_with(mu: f64, exps: &Exponents, sob: &SobolevConstants, eta: f64) -> Result<BallGeometry> {
    let (p, q, r, s) = (exps.p, exps.q, exps.r, exps.s);
    if !exps.is_superlinear() {
        return Err(Error::InvalidExponents(format!(
            "ball geometry needs q·p > 1; got q·p = {}",
            q * p
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameters(format!("eta must lie in (0, 1), got {eta}")));
    }
    let c1 = if mu == 0.0 {
        q / (q + 1.0)
    } else {
        q / (q + 1.0) * growth_constants(exps)?.c_hat_big
    };
    let c2 = sob.s_qr / (r + 1.0);
    let c3 = sob.s_qp / (p + 1.0);
    if !(c2 > 0.0 && c3 > 0.0) {
        return Err(Error::InvalidParameters("Sobolev estimates must be positive".into()));
    }
    let big_r0 = (c1 * (q + 1.0) / (q * c3 * (p + 1.0))).powf(q / (q * p - 1.0));
    let r0 = eta * big_r0;
    let delta0 = (q * p - 1.0) / (3.0 * q * (p + 1.0));
    let c0 = c1 * delta0 * r0.powf((q + 1.0) / q);
    let eq = eta.powf((q + 1.0) / q);
    let mu0 = delta0.powf(s) * big_r0.powf((q - s) / q) * eta.powf(s * (q + 1.0) / q)
        / (1.0 - delta0 * eq).powf(s);
    let lambda0 = delta0 * c1 / c2 * eq * big_r0.powf(1.0 / q - r);
    Ok(BallGeometry {
        big_r0,
        r0,
        c0,
        mu0,
        lambda0,
        delta0,
        c1,
        c2,
        c3,
        eta,
    })
}

pub fn ball_geometry(params: &SystemParams, dom: &RectDomain, opts: &SolverOptions) -> Result<BallGeometry> {
    params.validate()?;
    let sob = SobolevConstants::estimate(dom, &params.exps, opts.sobolev_starts, opts.seed)?;
    ball_geometry_with(params.mu, &params.exps, &sob, opts.eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radii_solve_the_balance_equation() {
        let exps = Exponents::new(3.0, 2.0, 0.25, 0.5).unwrap();
        let sob = SobolevConstants { s_qr: 0.7, s_qp: 0.03 };
        for &mu in &[0.0, 0.05] {
            let g = ball_geometry_with(mu, &exps, &sob, 0.1).unwrap();
            let (p, q) = (exps.p, exps.q);
            assert_relative_eq!(
                g.c1 * (q + 1.0) / q * g.big_r0.powf(1.0 / q),
                g.c3 * (p + 1.0) * g.big_r0.powf(p),
                max_relative = 1e-12
            );
            assert_relative_eq!(g.r0, 0.1 * g.big_r0);
            assert_relative_eq!(g.delta0, 5.0 / 24.0, max_relative = 1e-15);
            assert!(g.c0 > 0.0 && g.mu0 > 0.0 && g.lambda0 > 0.0);
        }
        assert_relative_eq!(ball_geometry_with(0.0, &exps, &sob, 0.1).unwrap().c1, 2.0 / 3.0);
        let sublinear = Exponents::new(0.4, 2.0, 0.25, 0.5).unwrap();
        assert!(ball_geometry_with(0.0, &sublinear, &sob, 0.1).is_err());
    }
}
