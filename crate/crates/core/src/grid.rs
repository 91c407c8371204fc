//! Rectangle grids, the five-point Laplacian and discrete norms.
//!
//! Fields hold interior values only, row-major with `k = j * nx + i`, and are extended by
//! zero to the boundary. Applying [`laplacian`] twice therefore encodes `w = Δw = 0` on
//! the boundary.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::nonlinearity::Exponents;
use crate::poisson::SpectralPoisson;

/// Upper bound on `nx * ny`.
pub const MAX_NODES: usize = 1 << 20;

/// Relative increment on λ₁ at which inverse iteration stops.
pub const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectDomain {
    pub fn new(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        let dom = RectDomain {
            width,
            height,
            nx,
            ny,
        };
        dom.validate()?;
        Ok(dom)
    }

    /// `[0,1]²` with `n` interior nodes per side.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "domain sides must be positive, got {} x {}",
                self.width, self.height
            )));
        }
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::InvalidParameters(format!(
                "need at least 3 interior nodes per side, got {} x {}",
                self.nx, self.ny
            )));
        }
        if self.nx.saturating_mul(self.ny) > MAX_NODES {
            return Err(Error::InvalidParameters(format!(
                "grid {} x {} exceeds the node cap {MAX_NODES}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        self.width / (self.nx as f64 + 1.0)
    }

    pub fn hy(&self) -> f64 {
        self.height / (self.ny as f64 + 1.0)
    }

    /// Quadrature weight of every node.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical coordinates of node `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx, k / self.nx);
        ((i + 1) as f64 * self.hx(), (j + 1) as f64 * self.hy())
    }

    /// `π²(1/a² + 1/b²)`.
    pub fn continuum_lambda1(&self) -> f64 {
        PI * PI * (1.0 / (self.width * self.width) + 1.0 / (self.height * self.height))
    }

    /// `(4/hx²) sin²(π hx / 2a) + (4/hy²) sin²(π hy / 2b)`.
    pub fn discrete_lambda1(&self) -> f64 {
        let (hx, hy) = (self.hx(), self.hy());
        let sx = (PI * hx / (2.0 * self.width)).sin();
        let sy = (PI * hy / (2.0 * self.height)).sin();
        4.0 / (hx * hx) * sx * sx + 4.0 / (hy * hy) * sy * sy
    }

    /// `sin(πx/a) sin(πy/b)` at the nodes: the exact discrete principal eigenvector.
    pub fn sine_mode(&self, kx: usize, ky: usize) -> Field {
        let (a, b) = (self.width, self.height);
        Field::from_fn(self, |x, y| {
            (kx as f64 * PI * x / a).sin() * (ky as f64 * PI * y / b).sin()
        })
    }
}

/// Interior grid values with implicit zero boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(dom: &RectDomain) -> Self {
        Field {
            nx: dom.nx,
            ny: dom.ny,
            values: vec![0.0; dom.len()],
        }
    }

    pub fn from_values(dom: &RectDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != dom.len() {
            return Err(Error::DimensionMismatch {
                expected: dom.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "field value at node {k} is not finite"
            )));
        }
        Ok(Field {
            nx: dom.nx,
            ny: dom.ny,
            values,
        })
    }

    pub fn from_fn(dom: &RectDomain, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..dom.len())
            .map(|k| {
                let (x, y) = dom.coords(k);
                f(x, y)
            })
            .collect();
        Field {
            nx: dom.nx,
            ny: dom.ny,
            values,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check(&self, dom: &RectDomain) -> Result<()> {
        if self.nx != dom.nx || self.ny != dom.ny || self.values.len() != dom.len() {
            return Err(Error::DimensionMismatch {
                expected: dom.len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, t: f64) -> Field {
        Field {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `out = Δ_h w` on raw interior arrays.
pub fn apply_laplacian(dom: &RectDomain, w: &[f64], out: &mut [f64]) {
    let (nx, ny) = (dom.nx, dom.ny);
    let cx = 1.0 / (dom.hx() * dom.hx());
    let cy = 1.0 / (dom.hy() * dom.hy());
    let diag = -2.0 * (cx + cy);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let mut acc = diag * w[k];
            if i > 0 {
                acc += cx * w[k - 1];
            }
            if i + 1 < nx {
                acc += cx * w[k + 1];
            }
            if j > 0 {
                acc += cy * w[k - nx];
            }
            if j + 1 < ny {
                acc += cy * w[k + nx];
            }
            out[k] = acc;
        }
    }
}

pub fn laplacian(w: &Field, dom: &RectDomain) -> Result<Field> {
    w.check(dom)?;
    let mut out = Field::zeros(dom);
    apply_laplacian(dom, &w.values, &mut out.values);
    Ok(out)
}

/// `Σ hx hy aᵢ bᵢ`.
pub fn inner(dom: &RectDomain, a: &[f64], b: &[f64]) -> f64 {
    dom.cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

pub fn inner_product(a: &Field, b: &Field, dom: &RectDomain) -> Result<f64> {
    a.check(dom)?;
    b.check(dom)?;
    Ok(inner(dom, &a.values, &b.values))
}

/// Discrete `L²` norm.
pub fn l2_norm(dom: &RectDomain, w: &[f64]) -> f64 {
    inner(dom, w, w).sqrt()
}

/// `Σ hx hy |wᵢ|^{m+1}`.
pub fn lp_sum(dom: &RectDomain, w: &[f64], m: f64) -> f64 {
    dom.cell_area() * w.iter().map(|v| v.abs().powf(m + 1.0)).sum::<f64>()
}

/// `(Σ hx hy |wᵢ|^{m+1})^{1/(m+1)}`.
pub fn lp_norm(w: &Field, m: f64, dom: &RectDomain) -> f64 {
    lp_sum(dom, &w.values, m).powf(1.0 / (m + 1.0))
}

/// `‖w‖_W = ‖Δ_h w‖_{L^{(q+1)/q}}` on raw arrays.
pub fn w_norm_slice(dom: &RectDomain, w: &[f64], q: f64) -> f64 {
    let mut lap = vec![0.0; w.len()];
    apply_laplacian(dom, w, &mut lap);
    lp_sum(dom, &lap, 1.0 / q).powf(q / (q + 1.0))
}

pub fn w_norm(w: &Field, exps: &Exponents, dom: &RectDomain) -> f64 {
    w_norm_slice(dom, &w.values, exps.q)
}

/// Principal Dirichlet eigenpair of `−Δ_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Positive, sup-norm one.
    pub phi1: Field,
    pub iterations: usize,
}

fn negative_laplacian_band(dom: &RectDomain) -> BandMatrix {
    let (nx, ny) = (dom.nx, dom.ny);
    let cx = 1.0 / (dom.hx() * dom.hx());
    let cy = 1.0 / (dom.hy() * dom.hy());
    let mut m = BandMatrix::zeros(nx * ny, nx, nx);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            m.add(k, k, 2.0 * (cx + cy));
            if i > 0 {
                m.add(k, k - 1, -cx);
            }
            if i + 1 < nx {
                m.add(k, k + 1, -cx);
            }
            if j > 0 {
                m.add(k, k - nx, -cy);
            }
            if j + 1 < ny {
                m.add(k, k + nx, -cy);
            }
        }
    }
    m
}

/// Inverse power iteration on `−Δ_h` with a banded LU solve and Rayleigh quotients.
pub fn principal_eigenvalue(dom: &RectDomain) -> Result<EigenPair> {
    dom.validate()?;
    let n = dom.len();
    let lu = negative_laplacian_band(dom).factor()?;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lap = vec![0.0; n];
    let mut prev = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITER {
        lu.solve_in_place(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        apply_laplacian(dom, &x, &mut lap);
        let lambda = -x.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
        if (lambda - prev).abs() <= EIGEN_TOL * lambda {
            let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let sup = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let values: Vec<f64> = x.iter().map(|v| sign * v / sup).collect();
            if let Some(k) = values.iter().position(|&v| v <= 0.0) {
                return Err(Error::no_convergence(
                    format!("principal eigenvector (non-positive at node {k})"),
                    it,
                ));
            }
            return Ok(EigenPair {
                lambda1: lambda,
                phi1: Field::from_values(dom, values)?,
                iterations: it,
            });
        }
        prev = lambda;
    }
    Err(Error::no_convergence("inverse power iteration", EIGEN_MAX_ITER))
}

/// `‖w‖_{m+1}^{m+1} / ‖w‖_W^{m+1}`, the quotient whose supremum is `S_{q,m}`.
pub fn sobolev_quotient(w: &Field, m: f64, exps: &Exponents, dom: &RectDomain) -> f64 {
    let num = lp_sum(dom, &w.values, m);
    let den = w_norm(w, exps, dom).powf(m + 1.0);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

const SOBOLEV_MAX_ITER: usize = 300;
const SOBOLEV_MODES: usize = 4;

/// Preconditioned ascent of `ln` of the Sobolev quotient from `w`, kept on `‖w‖_W = 1`.
fn sobolev_ascent(
    dom: &RectDomain,
    poisson: &SpectralPoisson,
    m: f64,
    q: f64,
    start: Vec<f64>,
) -> f64 {
    let n = dom.len();
    let beta = (q + 1.0) / q;
    let normalize = |w: &mut Vec<f64>| {
        let nw = w_norm_slice(dom, w, q);
        if nw > 0.0 {
            w.iter_mut().for_each(|v| *v /= nw);
        }
    };
    let log_q = |w: &[f64]| {
        let a = lp_sum(dom, w, m);
        let nw = w_norm_slice(dom, w, q);
        if a > 0.0 && nw > 0.0 {
            a.ln() - (m + 1.0) * nw.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut w = start;
    normalize(&mut w);
    let mut val = log_q(&w);
    if !val.is_finite() {
        return 0.0;
    }
    let mut step = 0.1;
    let mut lap = vec![0.0; n];
    let mut stalls = 0;
    for _ in 0..SOBOLEV_MAX_ITER {
        let a = lp_sum(dom, &w, m);
        apply_laplacian(dom, &w, &mut lap);
        let nb = lp_sum(dom, &lap, beta - 1.0);
        let flux: Vec<f64> = lap
            .iter()
            .map(|&t| if t == 0.0 { 0.0 } else { t.signum() * t.abs().powf(beta - 1.0) })
            .collect();
        let mut dflux = vec![0.0; n];
        apply_laplacian(dom, &flux, &mut dflux);
        let grad: Vec<f64> = w
            .iter()
            .zip(&dflux)
            .map(|(&wi, &df)| {
                let pw = if wi == 0.0 { 0.0 } else { wi.signum() * wi.abs().powf(m) };
                (m + 1.0) * (pw / a - df / nb)
            })
            .collect();
        let dir = poisson.biharmonic_inverse(&grad);
        let dnorm = w_norm_slice(dom, &dir, q);
        if !(dnorm > 0.0) {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial: Vec<f64> = w.iter().zip(&dir).map(|(a, d)| a + step / dnorm * d).collect();
            normalize(&mut trial);
            let tv = log_q(&trial);
            if tv > val {
                let gain = tv - val;
                w = trial;
                val = tv;
                step = (step * 2.0).min(1.0);
                accepted = true;
                stalls = if gain < 1e-12 { stalls + 1 } else { 0 };
                break;
            }
            step *= 0.5;
        }
        if !accepted || stalls >= 3 {
            break;
        }
    }
    val.exp()
}

/// Lower estimate of the discrete embedding constant `S_{q,m}`.
///
/// The first start is `φ₁`; the remaining `starts - 1` are random combinations of the
/// lowest sine modes drawn in sequence from `seed`. The running maximum is returned, so
/// the value never decreases as `starts` grows.
pub fn sobolev_constant_estimate(
    dom: &RectDomain,
    m: f64,
    exps: &Exponents,
    starts: usize,
    seed: u64,
) -> Result<f64> {
    dom.validate()?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameters(format!("embedding exponent must be positive, got {m}")));
    }
    let poisson = SpectralPoisson::new(dom);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for k in 0..starts.max(1) {
        let start = if k == 0 {
            dom.sine_mode(1, 1).into_values()
        } else {
            let mut w = vec![0.0; dom.len()];
            for kx in 1..=SOBOLEV_MODES {
                for ky in 1..=SOBOLEV_MODES {
                    let c: f64 = rng.gen_range(-1.0..1.0) / (kx * kx + ky * ky) as f64;
                    for (acc, v) in w.iter_mut().zip(dom.sine_mode(kx, ky).values()) {
                        *acc += c * v;
                    }
                }
            }
            w
        };
        let est = sobolev_ascent(dom, &poisson, m, exps.q, start);
        if !est.is_finite() {
            return Err(Error::no_convergence("Sobolev quotient ascent", SOBOLEV_MAX_ITER));
        }
        best = best.max(est);
    }
    Ok(best)
}
