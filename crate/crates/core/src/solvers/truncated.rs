use crate::energy::{Forcing, Functional};
use crate::error::{Error, Result};
use crate::grid::{Field, RectDomain};
use crate::nonlinearity::SystemParams;

use super::{check_converged, descend, finish, polish, SolveKind, SolveResult, SolverOptions};

/// Minimizes the energy whose forcing is frozen outside `[v_under, v_over]`.
///
/// That energy is coercive, so the descent needs no constraint. The minimizer lands inside
/// the trap, where it is also a critical point of the untruncated energy.
pub fn minimize_truncated(
    params: &SystemParams,
    dom: &RectDomain,
    v_under: &Field,
    v_over: &Field,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    params.validate()?;
    opts.validate()?;
    v_under.check(dom)?;
    v_over.check(dom)?;
    for (k, (&lo, &hi)) in v_under.values().iter().zip(v_over.values()).enumerate() {
        if !(lo < hi) {
            return Err(Error::OrderViolation { node: k, lower: lo, upper: hi });
        }
    }
    let lower = v_under.values().to_vec();
    let upper = v_over.values().to_vec();
    let func = Functional::with_forcing(
        params.mu,
        params.exps,
        Forcing::Truncated {
            lambda: params.lambda,
            lower: lower.clone(),
            upper: upper.clone(),
        },
        dom,
    )?;
    let out = descend(&func, lower.clone(), None, opts.handover, opts)?;
    let (v, newton_its) = polish(&func, &out.w, opts)?;
    let res = finish(&func, v, SolveKind::Truncated, out.iterations + newton_its)?;
    check_converged(&res, opts)?;
    let slack = 1e-9 * upper.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (k, &x) in res.v.values().iter().enumerate() {
        if x < lower[k] - slack || x > upper[k] + slack {
            return Err(Error::no_convergence(
                format!(
                    "truncated minimization (node {k} at {x:.6e} outside [{:.6e}, {:.6e}])",
                    lower[k], upper[k]
                ),
                res.iterations,
            ));
        }
    }
    Ok(res)
}
