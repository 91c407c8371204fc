//! Banded LU factorization with partial pivoting.
//!
//! Row `i` keeps the columns `i-kl ..= i+kl+ku`; the extra `kl` superdiagonals hold the
//! fill produced by row interchanges. Multipliers stay where they were computed and the
//! interchanges are replayed during the forward solve.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= i && c <= i + self.kl + self.ku);
        i * self.width + (c + self.kl - i)
    }

    /// Adds `v` to entry `(i, c)`; panics if the entry lies outside the declared band.
    pub fn add(&mut self, i: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= i && c <= i + self.ku,
            "entry ({i}, {c}) outside band (kl={}, ku={})",
            self.kl,
            self.ku
        );
        let k = self.pos(i, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        if c + self.kl < i || c > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.pos(i, c)]
        }
    }

    /// `y = A x` for the matrix as assembled (before factorization).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi).map(|c| self.get(i, c) * x[c]).sum();
        }
        y
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku, width) = (self.kl, self.ku, self.width);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.pos(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.pos(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::no_convergence(
                    format!("banded LU (zero or non-finite pivot in column {k})"),
                    k,
                ));
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.pos(k, c);
                    let b = self.pos(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.pos(k, k)];
            let span = last_col - k;
            for i in k + 1..=last_row {
                let ik = self.pos(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                let (head, tail) = self.data.split_at_mut(i * width);
                let krow_start = k * width + (k + 1 + kl - k);
                let krow = &head[krow_start..krow_start + span];
                let irow_start = k + 1 + kl - i;
                let irow = &mut tail[irow_start..irow_start + span];
                for (a, b) in irow.iter_mut().zip(krow) {
                    *a -= l * b;
                }
            }
        }
        Ok(BandLu { a: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.data[a.pos(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + a.kl + a.ku).min(n - 1);
            let base = a.pos(k, k);
            let mut acc = b[k];
            for (off, c) in (k + 1..=last_col).enumerate() {
                acc -= a.data[base + 1 + off] * b[c];
            }
            b[k] = acc / a.data[base];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_systems_against_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 2), (60, 7, 7), (33, 0, 4)] {
            let mut m = BandMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for c in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    // weak diagonal so pivoting actually happens
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    m.add(i, c, if c == i && kl > 0 { 0.1 * v } else if c == i { 1.0 + v.abs() } else { v });
                }
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = m.mul_vec(&x);
            let lu = m.factor().unwrap();
            lu.solve_in_place(&mut b);
            for (xi, bi) in x.iter().zip(&b) {
                assert!((xi - bi).abs() < 1e-8, "n={n} kl={kl} ku={ku}: {xi} vs {bi}");
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = BandMatrix::zeros(4, 1, 1);
        assert!(m.factor().is_err());
    }
}
