use crate::energy::{Forcing, Functional};
use crate::error::{Error, Result};
use crate::grid::{lp_sum, w_norm_slice, Field, RectDomain};
use crate::nonlinearity::Exponents;

use super::{check_converged, check_positive, descend, finish, polish, SolveKind, SolveResult, SolverOptions};

/// `Δ(|Δω|^{1/q−1}Δω) = ω₊^r` as the minimum of `Σ h² [q/(q+1)|Δw|^{(q+1)/q} − w₊^{r+1}/(r+1)]`.
///
/// The seed is the minimum of that functional along the ray through `φ₁`. The result
/// carries `v = ω` and `u = −|Δω|^{1/q−1}Δω`.
pub fn solve_sublinear(dom: &RectDomain, exps: &Exponents, opts: &SolverOptions) -> Result<SolveResult> {
    exps.check_positive()?;
    if !exps.satisfies_a3() {
        return Err(Error::InvalidExponents(format!(
            "sublinear problem needs q·r < 1; got {}",
            exps.q * exps.r
        )));
    }
    opts.validate()?;
    let func = Functional::with_forcing(0.0, *exps, Forcing::Concave { lambda: 1.0 }, dom)?;
    let (q, r) = (exps.q, exps.r);
    let phi = dom.sine_mode(1, 1).into_values();
    let alpha = (q + 1.0) / q;
    let beta = r + 1.0;
    let a = q / (q + 1.0) * w_norm_slice(dom, &phi, q).powf(alpha);
    let b = lp_sum(dom, &phi, r) / (r + 1.0);
    let t = (beta * b / (alpha * a)).powf(1.0 / (alpha - beta));
    let seed: Vec<f64> = phi.iter().map(|x| t * x).collect();

    let out = descend(&func, seed, None, opts.handover, opts)?;
    let (v, newton_its) = polish(&func, &out.w, opts)?;
    let res = finish(&func, v, SolveKind::Sublinear, out.iterations + newton_its)?;
    check_converged(&res, opts)?;
    check_positive(&res)?;
    if !(res.energy < 0.0) {
        return Err(Error::no_convergence(
            format!("sublinear problem (energy {:.3e} is not negative)", res.energy),
            res.iterations,
        ));
    }
    Ok(res)
}

/// `(λ̲^{1/(1−qr)} u_ω, λ̲^{q/(1−qr)} ω)`, which solves `−Δu = λ̲ v^r`, `−Δv = u^q`.
pub fn subsolution_pair(lambda_under: f64, omega: &SolveResult, exps: &Exponents) -> Result<(Field, Field)> {
    if !(lambda_under.is_finite() && lambda_under >= 0.0) {
        return Err(Error::InvalidParameters(format!(
            "subsolution scale must be finite and non-negative, got {lambda_under}"
        )));
    }
    if !exps.satisfies_a3() {
        return Err(Error::InvalidExponents(format!(
            "subsolution scaling needs q·r < 1; got {}",
            exps.q * exps.r
        )));
    }
    let k = 1.0 - exps.q * exps.r;
    let a = lambda_under.powf(1.0 / k);
    let b = lambda_under.powf(exps.q / k);
    Ok((omega.u.scaled(a), omega.v.scaled(b)))
}
