use crate::energy::Functional;
use crate::error::Result;
use crate::grid::{inner, w_norm_slice};
use crate::poisson::SpectralPoisson;

use super::{relative_gradient, SolverOptions};

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub w: Vec<f64>,
    pub iterations: usize,
    /// The last iterate sits on the constraint sphere.
    pub pinned: bool,
}

const MAX_BACKTRACK: usize = 60;

/// Rescales `w` onto `‖w‖_W = radius` if it lies outside; returns whether it did.
pub(crate) fn project_to_ball(func: &Functional, w: &mut [f64], radius: f64) -> bool {
    let n = w_norm_slice(&func.dom, w, func.exps.q);
    if n > radius {
        let s = radius / n;
        w.iter_mut().for_each(|v| *v *= s);
        true
    } else {
        false
    }
}

/// Steepest descent in the metric `⟨Δ_h a, Δ_h b⟩_h` with Armijo backtracking.
///
/// Stops once the relative gradient drops below `rel_tol`, when the line search can no
/// longer make progress, or at `opts.max_iter`.
pub(crate) fn descend(
    func: &Functional,
    w0: Vec<f64>,
    radius: Option<f64>,
    rel_tol: f64,
    opts: &SolverOptions,
) -> Result<DescentOutcome> {
    let dom = &func.dom;
    let poisson = SpectralPoisson::new(dom);
    let mut w = w0;
    if let Some(r) = radius {
        project_to_ball(func, &mut w, r);
    }
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut ev = func.evaluate(&w)?;
    let mut rel = relative_gradient(func, &w, &ev.gradient);
    while iterations < opts.max_iter && rel > rel_tol {
        let dir: Vec<f64> = poisson
            .biharmonic_inverse(&ev.gradient)
            .into_iter()
            .map(|x| -x)
            .collect();
        let mut t = step;
        let mut accepted = None;
        for attempt in 0..MAX_BACKTRACK {
            let mut trial: Vec<f64> = w.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if let Some(r) = radius {
                project_to_ball(func, &mut trial, r);
            }
            let dx: Vec<f64> = trial.iter().zip(&w).map(|(a, b)| a - b).collect();
            let slope = inner(dom, &ev.gradient, &dx);
            let tv = func.value(&trial)?;
            if slope < 0.0 && tv <= ev.value + opts.armijo * slope {
                accepted = Some((trial, attempt == 0));
                break;
            }
            t *= opts.shrink;
        }
        let Some((trial, first_try)) = accepted else {
            break;
        };
        step = if first_try { (2.0 * t).min(1e30) } else { t };
        w = trial;
        ev = func.evaluate(&w)?;
        rel = relative_gradient(func, &w, &ev.gradient);
        iterations += 1;
    }
    let pinned = match radius {
        Some(r) => w_norm_slice(dom, &w, func.exps.q) >= r * (1.0 - 1e-9),
        None => false,
    };
    Ok(DescentOutcome {
        w,
        iterations,
        pinned,
    })
}
