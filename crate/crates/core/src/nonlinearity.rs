//! Scalar nonlinearities of the system and their explicit constants.
//!
//! `g(μ, ζ) = μ|ζ|^{s-1}ζ + |ζ|^{q-1}ζ` is odd and strictly increasing, so it has a
//! continuous inverse `ψ(μ, ·)`. Its primitive `Ψ(μ, θ) = ∫₀^θ ψ` is evaluated through
//! the identity `Ψ(μ, θ) + G(μ, ψ(μ, θ)) = ψ(μ, θ) θ`, which needs no quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used by [`eval_psi`] when callers do not supply one.
pub const PSI_TOL: f64 = 1e-12;
/// Iteration cap of the safeguarded inversion.
pub const PSI_MAX_ITER: usize = 200;

/// The four powers `(p, q, r, s)`.
///
/// The dimension is fixed to two, where subcriticality always holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl Exponents {
    /// Builds an exponent set, rejecting non-finite or non-positive powers.
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self> {
        let e = Exponents { p, q, r, s };
        e.check_positive()?;
        Ok(e)
    }

    pub fn check_positive(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q), ("r", self.r), ("s", self.s)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidExponents(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `r < min(1, p)` and `s < min(1, q)`.
    pub fn satisfies_a2(&self) -> bool {
        self.r < self.p.min(1.0) && self.s < self.q.min(1.0)
    }

    /// `r < 1/q`, equivalently `qr < 1`.
    pub fn satisfies_a3(&self) -> bool {
        self.q * self.r < 1.0
    }

    /// `qp > 1`.
    pub fn is_superlinear(&self) -> bool {
        self.q * self.p > 1.0
    }

    /// Subcriticality `1/(p+1) + 1/(q+1) > 1 − 2/N`; with `N = 2` this always holds.
    pub fn satisfies_a1(&self) -> bool {
        1.0 / (self.p + 1.0) + 1.0 / (self.q + 1.0) > 0.0
    }

    /// Full validation used before any solve: positivity, (A1), (A2), (A3) and `qp > 1`.
    pub fn validate_for_solve(&self) -> Result<()> {
        self.check_positive()?;
        if !self.satisfies_a2() {
            return Err(Error::InvalidExponents(format!(
                "need r < min(1, p) and s < min(1, q); got p={}, q={}, r={}, s={}",
                self.p, self.q, self.r, self.s
            )));
        }
        if !self.satisfies_a3() {
            return Err(Error::InvalidExponents(format!(
                "need q·r < 1; got q·r = {}",
                self.q * self.r
            )));
        }
        if !self.is_superlinear() {
            return Err(Error::InvalidExponents(format!(
                "need q·p > 1 for two solutions; got q·p = {} (raise p or q)",
                self.q * self.p
            )));
        }
        Ok(())
    }
}

/// A parameter pair `(λ, μ)` together with the exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lambda: f64,
    pub mu: f64,
    pub exps: Exponents,
}

impl SystemParams {
    pub fn new(lambda: f64, mu: f64, exps: Exponents) -> Result<Self> {
        let params = SystemParams { lambda, mu, exps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        self.exps.check_positive()
    }
}

#[inline]
fn signed_pow(z: f64, e: f64) -> f64 {
    z.signum() * z.abs().powf(e)
}

/// `g(μ, ζ) = μ|ζ|^{s-1}ζ + |ζ|^{q-1}ζ`.
pub fn eval_g(mu: f64, zeta: f64, exps: &Exponents) -> f64 {
    if zeta == 0.0 {
        return 0.0;
    }
    let a = zeta.abs();
    zeta.signum() * (mu * a.powf(exps.s) + a.powf(exps.q))
}

/// `∂_ζ g(μ, ζ)`; infinite at the origin when `μ > 0` and `s < 1`.
pub fn eval_g_prime(mu: f64, zeta: f64, exps: &Exponents) -> f64 {
    let a = zeta.abs();
    let conc = if mu == 0.0 {
        0.0
    } else {
        mu * exps.s * a.powf(exps.s - 1.0)
    };
    conc + exps.q * a.powf(exps.q - 1.0)
}

/// `G(μ, ζ) = μ|ζ|^{s+1}/(s+1) + |ζ|^{q+1}/(q+1)`.
pub fn eval_big_g(mu: f64, zeta: f64, exps: &Exponents) -> f64 {
    let a = zeta.abs();
    mu * a.powf(exps.s + 1.0) / (exps.s + 1.0) + a.powf(exps.q + 1.0) / (exps.q + 1.0)
}

/// Inverse of `g(μ, ·)`.
///
/// For `t = |θ| > 0` the root of `ln(μζ^s + ζ^q) = ln t` is found in `x = ln ζ`. In that
/// variable the left side is convex with slope in `(s, q)`, so Newton started from the
/// upper end of the bracket `[min((t/2μ)^{1/s}, (t/2)^{1/q}), min((t/μ)^{1/s}, t^{1/q})]`
/// decreases monotonically to the root; steps leaving the bracket are replaced by
/// bisection.
pub fn eval_psi(mu: f64, theta: f64, exps: &Exponents, tol: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let t = theta.abs();
    if mu == 0.0 {
        return Ok(theta.signum() * t.powf(1.0 / exps.q));
    }
    let (s, q) = (exps.s, exps.q);
    let ln_t = t.ln();
    let ln_mu = mu.ln();
    let mut hi = ((ln_t - ln_mu) / s).min(ln_t / q);
    let mut lo = ((ln_t - std::f64::consts::LN_2 - ln_mu) / s).min((ln_t - std::f64::consts::LN_2) / q);
    let mut x = hi;
    for _ in 0..PSI_MAX_ITER {
        let zeta = x.exp();
        let a = mu * zeta.powf(s);
        let b = zeta.powf(q);
        let val = a + b;
        let resid = val - t;
        if resid.abs() <= tol * t {
            return Ok(theta.signum() * zeta);
        }
        if resid > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        // d/dx ln(a + b) = (s a + q b) / (a + b)
        let h = val.ln() - ln_t;
        let slope = (s * a + q * b) / val;
        let mut next = x - h / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            let zeta = next.exp();
            let resid = eval_g(mu, zeta, exps) - t;
            if resid.abs() <= tol * t {
                return Ok(theta.signum() * zeta);
            }
            break;
        }
        x = next;
    }
    Err(Error::no_convergence(
        format!("psi inversion (mu={mu:e}, theta={theta:e})"),
        PSI_MAX_ITER,
    ))
}

/// `Ψ(μ, θ) = ψθ − G(μ, ψ)`.
pub fn eval_big_psi(mu: f64, theta: f64, exps: &Exponents) -> Result<f64> {
    let zeta = eval_psi(mu, theta, exps, PSI_TOL)?;
    Ok(big_psi_from(mu, theta, zeta, exps))
}

/// `Ψ(μ, θ)` given an already computed `ζ = ψ(μ, θ)`.
#[inline]
pub fn big_psi_from(mu: f64, theta: f64, zeta: f64, exps: &Exponents) -> f64 {
    (zeta * theta - eval_big_g(mu, zeta, exps)).max(0.0)
}

/// `f₊(λ, ζ) = λζ₊^r + ζ₊^p`.
pub fn eval_f_plus(lambda: f64, zeta: f64, exps: &Exponents) -> f64 {
    if zeta <= 0.0 {
        return 0.0;
    }
    lambda * zeta.powf(exps.r) + zeta.powf(exps.p)
}

/// `F₊(λ, ζ) = λζ₊^{r+1}/(r+1) + ζ₊^{p+1}/(p+1)`.
pub fn eval_big_f_plus(lambda: f64, zeta: f64, exps: &Exponents) -> f64 {
    if zeta <= 0.0 {
        return 0.0;
    }
    lambda * zeta.powf(exps.r + 1.0) / (exps.r + 1.0) + zeta.powf(exps.p + 1.0) / (exps.p + 1.0)
}

/// Inflection data of `ψ(μ, ·)` on the positive axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub zeta_mu: f64,
    pub theta_mu: f64,
    pub c_qs: f64,
}

/// `ζ_μ`, `θ_μ = g(μ, ζ_μ) = C_{q,s} μ^{q/(q-s)}` and `C_{q,s}`.
///
/// When `μ = 0` or `q ≤ 1` there is no inflection and both `ζ_μ` and `θ_μ` are zero.
pub fn threshold_theta_mu(mu: f64, exps: &Exponents) -> Result<Threshold> {
    let (q, s) = (exps.q, exps.s);
    if q <= s {
        return Err(Error::InvalidExponents(format!(
            "threshold needs q > s; got q={q}, s={s}"
        )));
    }
    let k = s * (1.0 - s) / (q * (q - s));
    let c_qs = k.powf(s / (q - s)) + k.powf(q / (q - s));
    if mu == 0.0 || q <= 1.0 {
        return Ok(Threshold {
            zeta_mu: 0.0,
            theta_mu: 0.0,
            c_qs,
        });
    }
    Ok(Threshold {
        zeta_mu: k.powf(1.0 / (q - s)) * mu.powf(1.0 / (q - s)),
        theta_mu: c_qs * mu.powf(q / (q - s)),
        c_qs,
    })
}

/// Constants of the explicit non-existence region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceConstants {
    pub c_rp: f64,
    pub c_sq: f64,
    pub c_rspq: f64,
}

fn bracket_constant(conc: f64, conv: f64) -> f64 {
    let a = (1.0 - conc) / (conv - 1.0);
    a.powf(-(1.0 - conc) / (conv - conc)) + a.powf((conv - 1.0) / (conv - conc))
}

/// `C_{rp}`, `C_{sq}` and `C_{rspq} = (C_{rp} C_{sq})^{-1}`.
pub fn nonexistence_constant(exps: &Exponents) -> Result<NonexistenceConstants> {
    if exps.p <= 1.0 || exps.q <= 1.0 {
        return Err(Error::InvalidExponents(format!(
            "non-existence constants need p, q > 1; got p={}, q={}",
            exps.p, exps.q
        )));
    }
    let c_rp = bracket_constant(exps.r, exps.p);
    let c_sq = bracket_constant(exps.s, exps.q);
    Ok(NonexistenceConstants {
        c_rp,
        c_sq,
        c_rspq: 1.0 / (c_rp * c_sq),
    })
}

/// The λ at which `μ^{(q-1)/(q-s)} λ^{(p-1)/(p-r)} = C_{rspq} λ₁²`; no solution exists above it.
pub fn nonexistence_bound(mu: f64, exps: &Exponents, lambda1: f64) -> Result<f64> {
    let consts = nonexistence_constant(exps)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameters(format!(
            "non-existence bound needs mu > 0, got {mu}"
        )));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "principal eigenvalue must be positive, got {lambda1}"
        )));
    }
    let (p, q, r, s) = (exps.p, exps.q, exps.r, exps.s);
    let rhs = consts.c_rspq * lambda1 * lambda1 / mu.powf((q - 1.0) / (q - s));
    Ok(rhs.powf((p - r) / (p - 1.0)))
}

/// Constants of the two-sided growth bounds on `ψ(μ, θ)θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    /// `C̃_{q,s} = 1 + q(q−s)/(s(1−s))`
    pub c_tilde_big: f64,
    /// `c̃_{q,s} = 1 + s(1−s)/(q(q−s))`
    pub c_tilde_small: f64,
    /// `Ĉ_{q,s} = C̃^{-1/q}`, the factor for `|θ| ≥ θ_μ`
    pub c_hat_big: f64,
    /// `ĉ_{q,s} = c̃^{-1/s}`, the factor for `|θ| ≤ θ_μ`
    pub c_hat_small: f64,
}

pub fn growth_constants(exps: &Exponents) -> Result<GrowthConstants> {
    let (q, s) = (exps.q, exps.s);
    if !(q > s && s < 1.0) {
        return Err(Error::InvalidExponents(format!(
            "growth constants need s < min(1, q); got q={q}, s={s}"
        )));
    }
    let c_tilde_big = 1.0 + q * (q - s) / (s * (1.0 - s));
    let c_tilde_small = 1.0 + s * (1.0 - s) / (q * (q - s));
    Ok(GrowthConstants {
        c_tilde_big,
        c_tilde_small,
        c_hat_big: c_tilde_big.powf(-1.0 / q),
        c_hat_small: c_tilde_small.powf(-1.0 / s),
    })
}

/// `|ζ|^{e-1}ζ`, exposed for the sublinear problem and subsolution scaling.
pub fn odd_power(z: f64, e: f64) -> f64 {
    signed_pow(z, e)
}
