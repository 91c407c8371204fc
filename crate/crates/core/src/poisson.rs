//! Fast Dirichlet Poisson solves on the rectangle grid.
//!
//! The five-point Laplacian is diagonalized by the orthonormal sine transform along each
//! axis, so `Δ_h⁻¹` and `Δ_h⁻²` are a forward transform, a diagonal scaling and a
//! backward transform. `Δ_h⁻²` is the Riesz map of the inner product `⟨Δ_h a, Δ_h b⟩_h`
//! and serves as the preconditioner for every descent in the crate.

use std::f64::consts::PI;

use crate::grid::RectDomain;

#[derive(Debug, Clone)]
pub struct SpectralPoisson {
    nx: usize,
    ny: usize,
    sx: Vec<f64>,
    sy: Vec<f64>,
    /// eigenvalues of Δ_h (negative), row-major like the fields
    eig: Vec<f64>,
}

fn sine_matrix(n: usize) -> Vec<f64> {
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    let mut s = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            s[j * n + k] = norm * (PI * ((j + 1) * (k + 1)) as f64 / (n as f64 + 1.0)).sin();
        }
    }
    s
}

fn axis_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = (PI * (k + 1) as f64 / (2.0 * (n as f64 + 1.0))).sin();
            -4.0 / (h * h) * t * t
        })
        .collect()
}

impl SpectralPoisson {
    pub fn new(dom: &RectDomain) -> Self {
        let (nx, ny) = (dom.nx, dom.ny);
        let ex = axis_eigenvalues(nx, dom.hx());
        let ey = axis_eigenvalues(ny, dom.hy());
        let mut eig = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                eig[j * nx + i] = ex[i] + ey[j];
            }
        }
        SpectralPoisson {
            nx,
            ny,
            sx: sine_matrix(nx),
            sy: sine_matrix(ny),
            eig,
        }
    }

    /// Applies `Sy · F · Sx`; the transform is its own inverse.
    fn transform(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut t = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &f[j * nx..(j + 1) * nx];
            let out = &mut t[j * nx..(j + 1) * nx];
            for (i, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let srow = &self.sx[i * nx..(i + 1) * nx];
                for (o, s) in out.iter_mut().zip(srow) {
                    *o += v * s;
                }
            }
        }
        let mut out = vec![0.0; nx * ny];
        for l in 0..ny {
            let dst = &mut out[l * nx..(l + 1) * nx];
            for j in 0..ny {
                let c = self.sy[l * ny + j];
                let src = &t[j * nx..(j + 1) * nx];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        out
    }

    fn spectral_apply(&self, rhs: &[f64], power: i32) -> Vec<f64> {
        assert_eq!(rhs.len(), self.nx * self.ny);
        let mut hat = self.transform(rhs);
        for (h, e) in hat.iter_mut().zip(&self.eig) {
            *h /= e.powi(power);
        }
        self.transform(&hat)
    }

    /// `Δ_h⁻¹ rhs` with zero Dirichlet data.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.spectral_apply(rhs, 1)
    }

    /// `Δ_h⁻² rhs`.
    pub fn biharmonic_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        self.spectral_apply(rhs, 2)
    }

    /// Exact eigenvalues of `Δ_h` in grid order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_laplacian, RectDomain};

    #[test]
    fn inverts_the_five_point_stencil() {
        let dom = RectDomain::new(1.0, 2.0, 9, 14).unwrap();
        let n = dom.len();
        let w: Vec<f64> = (0..n).map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let mut lap = vec![0.0; n];
        apply_laplacian(&dom, &w, &mut lap);
        let ps = SpectralPoisson::new(&dom);
        let back = ps.solve(&lap);
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
        let mut lap2 = vec![0.0; n];
        apply_laplacian(&dom, &lap, &mut lap2);
        let back2 = ps.biharmonic_inverse(&lap2);
        for (a, b) in w.iter().zip(&back2) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
