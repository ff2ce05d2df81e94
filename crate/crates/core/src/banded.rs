//! Complex band LU with partial pivoting (gbtrf layout, row slots).

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Each row slot
/// reserves `kl` extra columns on the right for pivoting fill.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        // column origin of row i is i - kl
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.data[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let reach = kl + ku;
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].norm();
            for r in k + 1..=last {
                let v = self.data[self.slot(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || best < 1e-300 * scale {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            piv[k] = p;
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last {
                let sr = self.slot(r, k);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                let rk = self.slot(k, k);
                let rr = self.slot(r, k);
                for off in 1..=(cmax - k) {
                    let u = self.data[rk + off];
                    self.data[rr + off] -= l * u;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factorization `A = P₁L₁…P_nL_n U`.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [C64]) {
        let m = &self.m;
        let n = m.n;
        let reach = m.kl + m.ku;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk.re == 0.0 && bk.im == 0.0 {
                continue;
            }
            for r in k + 1..=(k + m.kl).min(n - 1) {
                b[r] -= m.data[m.slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            let base = m.slot(k, k);
            for off in 1..=((k + reach).min(n - 1) - k) {
                s -= m.data[base + off] * b[k + off];
            }
            b[k] = s / m.data[base];
        }
    }

    /// Solve `A* x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [C64]) {
        let m = &self.m;
        let n = m.n;
        let reach = m.kl + m.ku;
        for k in 0..n {
            let mut s = b[k];
            for j in k.saturating_sub(reach)..k {
                s -= m.data[m.slot(j, k)].conj() * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)].conj();
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for r in k + 1..=(k + m.kl).min(n - 1) {
                s -= m.data[m.slot(r, k)].conj() * b[r];
            }
            b[k] = s;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
