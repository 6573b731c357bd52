//! Compressed-row kernels used by the propagators.
//!
//! Operators stay dense at the API level; the integrators compile the handful
//! of static pieces of a generator into one shared sparsity pattern so each
//! right-hand-side evaluation touches only structural nonzeros.

use nalgebra::DMatrix;

use crate::fock_algebra::{C64, ZERO};

/// Union sparsity pattern with one value array per compiled operator.
#[derive(Clone, Debug)]
pub(crate) struct SharedPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub values: Vec<Vec<C64>>,
}

impl SharedPattern {
    pub fn compile(n: usize, mats: &[&DMatrix<C64>]) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if mats.iter().any(|m| m[(i, j)] != ZERO) {
                    col.push(j);
                }
            }
            row_ptr.push(col.len());
        }
        let values = mats
            .iter()
            .map(|m| {
                let mut v = Vec::with_capacity(col.len());
                for i in 0..n {
                    for &j in &col[row_ptr[i]..row_ptr[i + 1]] {
                        v.push(m[(i, j)]);
                    }
                }
                v
            })
            .collect();
        Self { n, row_ptr, col, values }
    }

    /// `out = Σ_k coeffs[k] * values[k]`.
    pub fn combine(&self, coeffs: &[C64], out: &mut Csr) {
        out.val.iter_mut().for_each(|v| *v = ZERO);
        for (c, vals) in coeffs.iter().zip(&self.values) {
            if *c == ZERO {
                continue;
            }
            for (o, v) in out.val.iter_mut().zip(vals) {
                *o += c * v;
            }
        }
    }

    pub fn empty_csr(&self) -> Csr {
        Csr {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col: self.col.clone(),
            val: vec![ZERO; self.col.len()],
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let p = SharedPattern::compile(m.nrows(), &[m]);
        let mut c = p.empty_csr();
        c.val.copy_from_slice(&p.values[0]);
        c
    }

    pub fn adjoint(&self) -> Self {
        let mut dense = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                dense[(self.col[k], i)] = self.val[k].conj();
            }
        }
        Self::from_dense(&dense)
    }

    /// `y += alpha * A x`
    pub fn mul_vec_acc(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[i] += alpha * acc;
        }
    }

    /// `out += alpha * A rho` with `rho`, `out` row-major `n x n`.
    pub fn mul_left_acc(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = alpha * self.val[k];
                let src = &rho[self.col[k] * n..(self.col[k] + 1) * n];
                for (o, r) in out_row.iter_mut().zip(src) {
                    *o += a * r;
                }
            }
        }
    }

    /// `out += alpha * rho A` with `rho`, `out` row-major `n x n`.
    pub fn mul_right_acc(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            for kk in 0..n {
                let r = rho[i * n + kk];
                if r == ZERO {
                    continue;
                }
                let ar = alpha * r;
                for k in self.row_ptr[kk]..self.row_ptr[kk + 1] {
                    out[i * n + self.col[k]] += ar * self.val[k];
                }
            }
        }
    }
}

pub(crate) fn to_row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub(crate) fn from_row_major(n: usize, v: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j])
}
