//! Damped Newton on the second-order system `−Δu = f(v)`, `−Δv = g(μ, u)`.
//!
//! Unknowns are interleaved as `(u₀, v₀, u₁, v₁, …)` so the Jacobian
//! `[[−Δ_h, −f'(v)], [−g'(u), −Δ_h]]` is banded with half-width `2 nx`.

use crate::band::BandMatrix;
use crate::energy::Functional;
use crate::error::Result;
use crate::grid::{apply_laplacian, l2_norm};
use crate::nonlinearity::eval_g;

use super::SolverOptions;

const MAX_HALVINGS: usize = 40;
/// Relative floor applied to `|u|`, `v` where `g'` and `f'` are singular.
const DERIV_FLOOR: f64 = 1e-14;

struct Residual {
    r1: Vec<f64>,
    r2: Vec<f64>,
    merit: f64,
}

fn residual(func: &Functional, u: &[f64], v: &[f64], s1: f64, s2: f64) -> Residual {
    let dom = &func.dom;
    let n = u.len();
    let mut lu = vec![0.0; n];
    let mut lv = vec![0.0; n];
    apply_laplacian(dom, u, &mut lu);
    apply_laplacian(dom, v, &mut lv);
    let r1: Vec<f64> = (0..n)
        .map(|k| -lu[k] - func.forcing.value(k, v[k], &func.exps))
        .collect();
    let r2: Vec<f64> = (0..n)
        .map(|k| -lv[k] - eval_g(func.mu, u[k], &func.exps))
        .collect();
    let a = l2_norm(dom, &r1) / s1;
    let b = l2_norm(dom, &r2) / s2;
    Residual {
        r1,
        r2,
        merit: a * a + b * b,
    }
}

fn g_prime_floored(mu: f64, u: f64, floor: f64, func: &Functional) -> f64 {
    let a = u.abs().max(floor);
    let e = &func.exps;
    let conc = if mu == 0.0 { 0.0 } else { mu * e.s * a.powf(e.s - 1.0) };
    conc + e.q * a.powf(e.q - 1.0)
}

fn assemble(func: &Functional, u: &[f64], v: &[f64]) -> BandMatrix {
    let dom = &func.dom;
    let (nx, ny) = (dom.nx, dom.ny);
    let cx = 1.0 / (dom.hx() * dom.hx());
    let cy = 1.0 / (dom.hy() * dom.hy());
    let n = nx * ny;
    let bw = 2 * nx;
    let mut m = BandMatrix::zeros(2 * n, bw, bw);
    let ufloor = DERIV_FLOOR * u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let vfloor = DERIV_FLOOR * v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            for (row, off) in [(2 * k, 0usize), (2 * k + 1, 1usize)] {
                m.add(row, 2 * k + off, 2.0 * (cx + cy));
                if i > 0 {
                    m.add(row, 2 * (k - 1) + off, -cx);
                }
                if i + 1 < nx {
                    m.add(row, 2 * (k + 1) + off, -cx);
                }
                if j > 0 {
                    m.add(row, 2 * (k - nx) + off, -cy);
                }
                if j + 1 < ny {
                    m.add(row, 2 * (k + nx) + off, -cy);
                }
            }
            let vk = if v[k] > 0.0 { v[k].max(vfloor) } else { v[k] };
            m.add(2 * k, 2 * k + 1, -func.forcing.derivative(k, vk, &func.exps));
            m.add(2 * k + 1, 2 * k, -g_prime_floored(func.mu, u[k], ufloor, func));
        }
    }
    m
}

/// Polishes `v0` (with `u0 = −ψ(μ, Δ_h v0)`) and returns the new `v` and the iteration count.
///
/// Stops at `opts.newton_tol` relative residual, at the iteration cap, or when no damped
/// step reduces the merit any further; the caller judges the final residual.
pub(crate) fn polish(func: &Functional, v0: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let n = v0.len();
    let mut v = v0.to_vec();
    let mut u = func.recover_u(&v)?;
    let dom = &func.dom;
    let f0: Vec<f64> = (0..n)
        .map(|k| func.forcing.value(k, v[k], &func.exps))
        .collect();
    let g0: Vec<f64> = u.iter().map(|&x| eval_g(func.mu, x, &func.exps)).collect();
    let s1 = l2_norm(dom, &f0).max(f64::MIN_POSITIVE);
    let s2 = l2_norm(dom, &g0).max(f64::MIN_POSITIVE);
    if l2_norm(dom, &f0) == 0.0 && l2_norm(dom, &g0) == 0.0 {
        return Ok((v, 0));
    }
    let mut res = residual(func, &u, &v, s1, s2);
    let target = opts.newton_tol * opts.newton_tol;
    let mut its = 0;
    while its < opts.newton_max_iter && res.merit > target {
        let lu = assemble(func, &u, &v).factor()?;
        let mut rhs = vec![0.0; 2 * n];
        for k in 0..n {
            rhs[2 * k] = -res.r1[k];
            rhs[2 * k + 1] = -res.r2[k];
        }
        lu.solve_in_place(&mut rhs);
        let mut t = 1.0;
        let mut improved = None;
        for _ in 0..MAX_HALVINGS {
            let tu: Vec<f64> = (0..n).map(|k| u[k] + t * rhs[2 * k]).collect();
            let tv: Vec<f64> = (0..n).map(|k| v[k] + t * rhs[2 * k + 1]).collect();
            let tr = residual(func, &tu, &tv, s1, s2);
            if tr.merit < (1.0 - 1e-4 * t) * res.merit {
                improved = Some((tu, tv, tr));
                break;
            }
            t *= 0.5;
        }
        its += 1;
        match improved {
            Some((tu, tv, tr)) => {
                u = tu;
                v = tv;
                res = tr;
            }
            None => break,
        }
    }
    Ok((v, its))
}
