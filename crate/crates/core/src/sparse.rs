//! Coordinate-format operators, reverse Cuthill–McKee ordering and banded
//! solves on the reordered system.

use std::collections::VecDeque;

use crate::banded::{BandLu, BandMatrix};
use crate::error::Result;
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        if v.re != 0.0 || v.im != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for &(i, j, v) in &self.entries {
            y[j] += v.conj() * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// `(kl, ku)` under the permutation `perm[new] = old`.
    pub fn bandwidths(&self, perm: &[usize]) -> (usize, usize) {
        let inv = invert(perm);
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in &self.entries {
            let (a, b) = (inv[i], inv[j]);
            if a > b {
                kl = kl.max(a - b);
            } else {
                ku = ku.max(b - a);
            }
        }
        (kl, ku)
    }

    /// Reverse Cuthill–McKee ordering of the symmetrized pattern;
    /// `perm[new] = old`.
    pub fn rcm(&self) -> Vec<usize> {
        let n = self.n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in &self.entries {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut starts: Vec<usize> = (0..n).collect();
        starts.sort_by_key(|&v| (deg[v], v));
        for &s in &starts {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                order.push(v);
                let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&u| !seen[u]).collect();
                nb.sort_by_key(|&u| (deg[u], u));
                for u in nb {
                    seen[u] = true;
                    q.push_back(u);
                }
            }
        }
        order.reverse();
        order
    }

    /// Natural or RCM ordering, whichever gives the smaller band.
    pub fn best_ordering(&self) -> Vec<usize> {
        let natural: Vec<usize> = (0..self.n).collect();
        let rcm = self.rcm();
        let (a, b) = self.bandwidths(&natural);
        let (c, d) = self.bandwidths(&rcm);
        if c + d < a + b {
            rcm
        } else {
            natural
        }
    }

    pub fn to_band(&self, perm: &[usize]) -> BandMatrix {
        let inv = invert(perm);
        let (kl, ku) = self.bandwidths(perm);
        let mut b = BandMatrix::zeros(self.n, kl, ku);
        for &(i, j, v) in &self.entries {
            b.add(inv[i], inv[j], v);
        }
        b
    }
}

pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Band LU of a permuted sparse operator.
pub struct SparseLu {
    perm: Vec<usize>,
    lu: BandLu,
}

impl SparseLu {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let perm = a.best_ordering();
        let lu = a.to_band(&perm).lu()?;
        Ok(Self { perm, lu })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    fn run(&self, b: &[C64], adjoint: bool) -> Vec<C64> {
        let mut y: Vec<C64> = self.perm.iter().map(|&old| b[old]).collect();
        if adjoint {
            self.lu.solve_adjoint(&mut y);
        } else {
            self.lu.solve(&mut y);
        }
        let mut x = vec![C64::new(0.0, 0.0); b.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        self.run(b, false)
    }

    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        self.run(b, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};

    fn path_blocks(lines: usize, len: usize) -> SparseMatrix {
        // independent tridiagonal chains stored with stride `lines`
        let n = lines * len;
        let mut a = SparseMatrix::new(n);
        for l in 0..lines {
            for k in 0..len {
                let i = k * lines + l;
                a.push(i, i, c(2.0 + l as f64, 0.5));
                if k + 1 < len {
                    a.push(i, i + lines, re(-1.0));
                    a.push(i + lines, i, c(0.0, 1.0));
                }
            }
        }
        a
    }

    #[test]
    fn rcm_finds_narrow_band() {
        let a = path_blocks(30, 20);
        let nat: Vec<usize> = (0..a.n).collect();
        assert_eq!(a.bandwidths(&nat), (30, 30));
        let (kl, ku) = a.bandwidths(&a.rcm());
        assert!(kl <= 1 && ku <= 1, "{kl} {ku}");
    }

    #[test]
    fn permuted_solve_matches_dense() {
        let a = path_blocks(7, 9);
        let lu = SparseLu::new(&a).unwrap();
        let b: Vec<C64> = (0..a.n).map(|k| c(k as f64 * 0.1, 1.0)).collect();
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        for k in 0..a.n {
            assert!((r[k] - b[k]).norm() < 1e-10);
        }
        let y = lu.solve_adjoint(&b);
        let r = a.adjoint_matvec(&y);
        for k in 0..a.n {
            assert!((r[k] - b[k]).norm() < 1e-10);
        }
    }
}
