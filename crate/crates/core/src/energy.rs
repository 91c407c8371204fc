//! The reduced functional `J(w) = Σ h² [Ψ(μ, Δ_h w) − F(w)]`, its gradient
//! `Δ_h ψ(μ, Δ_h w) − f(w)`, the recovery `u = −ψ(μ, Δ_h v)` and residuals of the
//! second-order system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, inner, l2_norm, Field, RectDomain};
use crate::nonlinearity::{
    big_psi_from, eval_big_f_plus, eval_f_plus, eval_g, eval_psi, Exponents, SystemParams, PSI_TOL,
};

/// Right-hand side of the reduced equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Forcing {
    /// `λζ₊^r + ζ₊^p`
    Standard { lambda: f64 },
    /// `λζ₊^r`, the concave part alone
    Concave { lambda: f64 },
    /// `f₊` frozen below `lower` and above `upper` node by node
    Truncated {
        lambda: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Forcing {
    pub fn lambda(&self) -> f64 {
        match self {
            Forcing::Standard { lambda } | Forcing::Concave { lambda } => *lambda,
            Forcing::Truncated { lambda, .. } => *lambda,
        }
    }

    fn concave(lambda: f64, z: f64, exps: &Exponents) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            lambda * z.powf(exps.r)
        }
    }

    fn concave_primitive(lambda: f64, z: f64, exps: &Exponents) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            lambda * z.powf(exps.r + 1.0) / (exps.r + 1.0)
        }
    }

    fn f_plus_prime(lambda: f64, z: f64, exps: &Exponents) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            lambda * exps.r * z.powf(exps.r - 1.0) + exps.p * z.powf(exps.p - 1.0)
        }
    }

    /// `f(x_k, z)`.
    pub fn value(&self, k: usize, z: f64, exps: &Exponents) -> f64 {
        match self {
            Forcing::Standard { lambda } => eval_f_plus(*lambda, z, exps),
            Forcing::Concave { lambda } => Self::concave(*lambda, z, exps),
            Forcing::Truncated { lambda, lower, upper } => {
                eval_f_plus(*lambda, z.clamp(lower[k], upper[k]), exps)
            }
        }
    }

    /// `∫₀^z f(x_k, ζ) dζ`.
    pub fn primitive(&self, k: usize, z: f64, exps: &Exponents) -> f64 {
        match self {
            Forcing::Standard { lambda } => eval_big_f_plus(*lambda, z, exps),
            Forcing::Concave { lambda } => Self::concave_primitive(*lambda, z, exps),
            Forcing::Truncated { lambda, lower, upper } => {
                let (lo, hi) = (lower[k], upper[k]);
                let f_lo = eval_f_plus(*lambda, lo, exps);
                if z < lo {
                    return z * f_lo;
                }
                let big_lo = eval_big_f_plus(*lambda, lo, exps);
                let zc = z.min(hi);
                let mut acc = lo * f_lo + eval_big_f_plus(*lambda, zc, exps) - big_lo;
                if z > hi {
                    acc += (z - hi) * eval_f_plus(*lambda, hi, exps);
                }
                acc
            }
        }
    }

    /// `∂_z f(x_k, z)`, zero where the forcing is frozen or vanishes.
    pub fn derivative(&self, k: usize, z: f64, exps: &Exponents) -> f64 {
        match self {
            Forcing::Standard { lambda } => Self::f_plus_prime(*lambda, z, exps),
            Forcing::Concave { lambda } => {
                if z <= 0.0 {
                    0.0
                } else {
                    lambda * exps.r * z.powf(exps.r - 1.0)
                }
            }
            Forcing::Truncated { lambda, lower, upper } => {
                if z < lower[k] || z > upper[k] {
                    0.0
                } else {
                    Self::f_plus_prime(*lambda, z, exps)
                }
            }
        }
    }

    fn check(&self, dom: &RectDomain) -> Result<()> {
        if !(self.lambda().is_finite() && self.lambda() >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda()
            )));
        }
        if let Forcing::Truncated { lower, upper, .. } = self {
            for v in [lower, upper] {
                if v.len() != dom.len() {
                    return Err(Error::DimensionMismatch {
                        expected: dom.len(),
                        got: v.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    /// `Σ h² Ψ(μ, Δ_h w)`
    pub convex_part: f64,
    /// `Σ h² F(w)`
    pub potential_part: f64,
    /// discrete `L²` norm of the gradient
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub r1: f64,
    pub r2: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2)
    }
}

/// Value and gradient at one point, with the intermediate `ψ(μ, Δ_h w)` kept for reuse.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub convex_part: f64,
    pub potential_part: f64,
    pub gradient: Vec<f64>,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Functional {
    pub mu: f64,
    pub exps: Exponents,
    pub forcing: Forcing,
    pub dom: RectDomain,
}

impl Functional {
    pub fn new(params: &SystemParams, dom: &RectDomain) -> Result<Self> {
        params.validate()?;
        Self::with_forcing(
            params.mu,
            params.exps,
            Forcing::Standard {
                lambda: params.lambda,
            },
            dom,
        )
    }

    pub fn with_forcing(mu: f64, exps: Exponents, forcing: Forcing, dom: &RectDomain) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "mu must be finite and non-negative, got {mu}"
            )));
        }
        exps.check_positive()?;
        dom.validate()?;
        forcing.check(dom)?;
        Ok(Functional {
            mu,
            exps,
            forcing,
            dom: *dom,
        })
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dom.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dom.len(),
                got: w.len(),
            });
        }
        Ok(())
    }

    /// `(Δ_h w, ψ(μ, Δ_h w))`.
    pub fn laplacian_and_psi(&self, w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(w)?;
        let mut lap = vec![0.0; w.len()];
        apply_laplacian(&self.dom, w, &mut lap);
        let psi = lap
            .iter()
            .map(|&t| eval_psi(self.mu, t, &self.exps, PSI_TOL))
            .collect::<Result<Vec<f64>>>()?;
        Ok((lap, psi))
    }

    fn parts_from(&self, w: &[f64], lap: &[f64], psi: &[f64]) -> (f64, f64) {
        let area = self.dom.cell_area();
        let convex: f64 = lap
            .iter()
            .zip(psi)
            .map(|(&t, &z)| big_psi_from(self.mu, t, z, &self.exps))
            .sum();
        let potential: f64 = w
            .iter()
            .enumerate()
            .map(|(k, &z)| self.forcing.primitive(k, z, &self.exps))
            .sum();
        (area * convex, area * potential)
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        let (lap, psi) = self.laplacian_and_psi(w)?;
        let (c, p) = self.parts_from(w, &lap, &psi);
        Ok(c - p)
    }

    pub fn evaluate(&self, w: &[f64]) -> Result<Evaluation> {
        let (lap, psi) = self.laplacian_and_psi(w)?;
        let (convex_part, potential_part) = self.parts_from(w, &lap, &psi);
        let mut gradient = vec![0.0; w.len()];
        apply_laplacian(&self.dom, &psi, &mut gradient);
        for (k, (g, &z)) in gradient.iter_mut().zip(w).enumerate() {
            *g -= self.forcing.value(k, z, &self.exps);
        }
        Ok(Evaluation {
            value: convex_part - potential_part,
            convex_part,
            potential_part,
            gradient,
            psi,
        })
    }

    pub fn report(&self, w: &[f64]) -> Result<EnergyReport> {
        let ev = self.evaluate(w)?;
        Ok(EnergyReport {
            value: ev.value,
            convex_part: ev.convex_part,
            potential_part: ev.potential_part,
            grad_norm: l2_norm(&self.dom, &ev.gradient),
        })
    }

    /// `u = −ψ(μ, Δ_h w)`.
    pub fn recover_u(&self, w: &[f64]) -> Result<Vec<f64>> {
        let (_, psi) = self.laplacian_and_psi(w)?;
        Ok(psi.into_iter().map(|z| -z).collect())
    }

    /// Relative discrete `L²` residuals of `−Δu = f(v)` and `−Δv = g(μ, u)`.
    pub fn residual(&self, u: &[f64], v: &[f64]) -> Result<ResidualReport> {
        self.check_len(u)?;
        self.check_len(v)?;
        let n = u.len();
        let mut lu = vec![0.0; n];
        let mut lv = vec![0.0; n];
        apply_laplacian(&self.dom, u, &mut lu);
        apply_laplacian(&self.dom, v, &mut lv);
        let f: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(k, &z)| self.forcing.value(k, z, &self.exps))
            .collect();
        let g: Vec<f64> = u.iter().map(|&z| eval_g(self.mu, z, &self.exps)).collect();
        let e1: Vec<f64> = lu.iter().zip(&f).map(|(a, b)| -a - b).collect();
        let e2: Vec<f64> = lv.iter().zip(&g).map(|(a, b)| -a - b).collect();
        let d = &self.dom;
        Ok(ResidualReport {
            r1: l2_norm(d, &e1) / l2_norm(d, &f).max(1.0),
            r2: l2_norm(d, &e2) / l2_norm(d, &g).max(1.0),
        })
    }

    /// `⟨∇J(w), φ⟩_h`.
    pub fn directional_derivative(&self, w: &[f64], phi: &[f64]) -> Result<f64> {
        self.check_len(phi)?;
        let ev = self.evaluate(w)?;
        Ok(inner(&self.dom, &ev.gradient, phi))
    }
}

pub fn energy(w: &Field, params: &SystemParams, dom: &RectDomain) -> Result<EnergyReport> {
    w.check(dom)?;
    Functional::new(params, dom)?.report(w.values())
}

pub fn gradient(w: &Field, params: &SystemParams, dom: &RectDomain) -> Result<Field> {
    w.check(dom)?;
    let ev = Functional::new(params, dom)?.evaluate(w.values())?;
    Field::from_values(dom, ev.gradient)
}

pub fn recover_u(w: &Field, mu: f64, exps: &Exponents, dom: &RectDomain) -> Result<Field> {
    w.check(dom)?;
    let f = Functional::with_forcing(mu, *exps, Forcing::Standard { lambda: 0.0 }, dom)?;
    Field::from_values(dom, f.recover_u(w.values())?)
}

pub fn system_residual(
    u: &Field,
    v: &Field,
    params: &SystemParams,
    dom: &RectDomain,
) -> Result<ResidualReport> {
    u.check(dom)?;
    v.check(dom)?;
    Functional::new(params, dom)?.residual(u.values(), v.values())
}
