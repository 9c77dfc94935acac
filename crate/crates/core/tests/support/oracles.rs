//! Dense reference implementations used as test oracles.
//!
//! Everything here is written from the textbook definitions with explicit
//! matrices, independently of the stencil code in the library, and solved
//! with ADMM rather than primal-dual iteration.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.cols + c] += v;
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.a[r * self.cols..(r + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * y[r];
            }
        }
        out
    }

    /// `K^T K`.
    pub fn gram(&self) -> Mat {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for r in 0..self.rows {
            let row = &self.a[r * n..(r + 1) * n];
            let nz: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            for &(i, a) in &nz {
                for &(j, b) in &nz {
                    g.a[i * n + j] += a * b;
                }
            }
        }
        g
    }
}

/// Forward difference along columns (`x`) and rows (`y`), zero in the last
/// column/row. Rows of the result: all `x` entries, then all `y` entries.
pub fn grad_matrix(h: usize, w: usize) -> Mat {
    let n = h * w;
    let mut m = Mat::zeros(2 * n, n);
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if j + 1 < w {
                m.add(k, k + 1, 1.0);
                m.add(k, k, -1.0);
            }
            if i + 1 < h {
                m.add(n + k, k + w, 1.0);
                m.add(n + k, k, -1.0);
            }
        }
    }
    m
}

/// Symmetrised gradient of a field stored as `[x; y]`; rows are
/// `[e11; e22; e12]` with `e12 = (dy x + dx y) / 2`.
pub fn sym_grad_matrix(h: usize, w: usize) -> Mat {
    let n = h * w;
    let d = grad_matrix(h, w);
    let mut m = Mat::zeros(3 * n, 2 * n);
    for k in 0..n {
        for c in 0..n {
            let dx = d.at(k, c);
            let dy = d.at(n + k, c);
            m.add(k, c, dx);
            m.add(n + k, n + c, dy);
            m.add(2 * n + k, c, 0.5 * dy);
            m.add(2 * n + k, n + c, 0.5 * dx);
        }
    }
    m
}

/// In-place Cholesky factor (lower) of a symmetric positive definite matrix.
pub fn cholesky(m: &Mat) -> Mat {
    let n = m.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l.at(i, k) * l.at(j, k)).sum();
            if i == j {
                let d = m.at(i, i) - s;
                assert!(d > 0.0, "matrix is not positive definite");
                l.a[i * n + i] = d.sqrt();
            } else {
                l.a[i * n + j] = (m.at(i, j) - s) / l.at(j, j);
            }
        }
    }
    l
}

pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.at(i, k) * y[k];
        }
        y[i] /= l.at(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l.at(k, i) * y[k];
        }
        y[i] /= l.at(i, i);
    }
    y
}

/// Result of a reference solve: the stacked primal variable and its energy.
#[derive(Clone, Debug)]
pub struct Reference {
    pub x: Vec<f64>,
    pub energy: f64,
}

/// `min_x 1/2 ||x[..nf] - f||^2 + sum_k c_k |(K x)_k|` by scaled ADMM with
/// splitting `z = K x`, run for `iters` iterations or until both residuals
/// fall below `1e-13`.
pub fn admm_l1(k: &Mat, f: &[f64], c: &[f64], rho: f64, iters: usize) -> Reference {
    admm_l1_offset(k, &vec![0.0; k.rows], f, c, rho, iters)
}

/// As [`admm_l1`] with the l1 term evaluated at `K x - b`.
pub fn admm_l1_offset(k: &Mat, b: &[f64], f: &[f64], c: &[f64], rho: f64, iters: usize) -> Reference {
    let n = k.cols;
    let nf = f.len();
    let mut sys = k.gram();
    sys.a.iter_mut().for_each(|v| *v *= rho);
    for i in 0..nf {
        sys.a[i * n + i] += 1.0;
    }
    let l = cholesky(&sys);
    let mut z = vec![0.0; k.rows];
    let mut y = vec![0.0; k.rows];
    let mut x = vec![0.0; n];
    for _ in 0..iters {
        let rhs_dual: Vec<f64> = (0..k.rows).map(|r| rho * (z[r] + b[r] - y[r])).collect();
        let mut rhs = k.mul_t(&rhs_dual);
        for i in 0..nf {
            rhs[i] += f[i];
        }
        x = cholesky_solve(&l, &rhs);
        let kx: Vec<f64> = k.mul(&x).iter().zip(b).map(|(v, o)| v - o).collect();
        let mut dual_res = 0.0f64;
        let mut primal_res = 0.0f64;
        for r in 0..k.rows {
            let v = kx[r] + y[r];
            let t = c[r] / rho;
            let znew = v.signum() * (v.abs() - t).max(0.0);
            dual_res = dual_res.max((znew - z[r]).abs());
            z[r] = znew;
            y[r] += kx[r] - z[r];
            primal_res = primal_res.max((kx[r] - z[r]).abs());
        }
        if primal_res < 1e-13 && dual_res < 1e-13 {
            break;
        }
    }
    let energy = l1_energy(k, b, f, c, &x);
    Reference { x, energy }
}

pub fn l1_energy(k: &Mat, b: &[f64], f: &[f64], c: &[f64], x: &[f64]) -> f64 {
    let fid: f64 = x.iter().zip(f).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    fid + k.mul(x).iter().zip(b).zip(c).map(|((v, o), w)| w * (v - o).abs()).sum::<f64>()
}

/// Weighted anisotropic TV denoising.
pub fn reference_tv(f: &[f64], lambda: &[f64], h: usize, w: usize, iters: usize) -> Reference {
    let k = grad_matrix(h, w);
    let c: Vec<f64> = lambda.iter().chain(lambda).copied().collect();
    admm_l1(&k, f, &c, 1.0, iters)
}

/// Weighted second-order TGV denoising over `(u, w)` with
/// `K = [[D, -I], [0, E]]` and weights `(l1, l1, l0, l0, 2 l0)`.
pub fn reference_tgv(f: &[f64], l0: &[f64], l1: &[f64], h: usize, w: usize, iters: usize) -> Reference {
    let n = h * w;
    let d = grad_matrix(h, w);
    let e = sym_grad_matrix(h, w);
    let mut k = Mat::zeros(5 * n, 3 * n);
    for r in 0..2 * n {
        for c in 0..n {
            k.a[r * 3 * n + c] = d.at(r, c);
        }
        k.a[r * 3 * n + n + r] = -1.0;
    }
    for r in 0..3 * n {
        for c in 0..2 * n {
            k.a[(2 * n + r) * 3 * n + n + c] = e.at(r, c);
        }
    }
    let twice: Vec<f64> = l0.iter().map(|v| 2.0 * v).collect();
    let c: Vec<f64> = l1.iter().chain(l1).chain(l0).chain(l0).chain(&twice).copied().collect();
    admm_l1(&k, f, &c, 1.0, iters)
}

/// Weighted TGV value of a fixed image: `min_w sum l1 |Du - w| + sum l0 |E w|`
/// (off-diagonal counted twice). Returns the optimal `w` stacked as `[x; y]`.
pub fn reference_tgv_value(u: &[f64], l0: &[f64], l1: &[f64], h: usize, w: usize, iters: usize) -> Reference {
    let n = h * w;
    let d = grad_matrix(h, w);
    let e = sym_grad_matrix(h, w);
    let mut k = Mat::zeros(5 * n, 2 * n);
    for r in 0..2 * n {
        k.a[r * 2 * n + r] = -1.0;
    }
    for r in 0..3 * n {
        for c in 0..2 * n {
            k.a[(2 * n + r) * 2 * n + c] = e.at(r, c);
        }
    }
    let du = d.mul(u);
    let b: Vec<f64> = du.iter().map(|v| -v).chain(std::iter::repeat_n(0.0, 3 * n)).collect();
    let twice: Vec<f64> = l0.iter().map(|v| 2.0 * v).collect();
    let c: Vec<f64> = l1.iter().chain(l1).chain(l0).chain(l0).chain(&twice).copied().collect();
    admm_l1_offset(&k, &b, &[], &c, 1.0, iters)
}

/// Centred unitary 1D DFT matrix: zero frequency at index `n / 2`.
pub fn centred_dft_1d(n: usize) -> Vec<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    let c = (n / 2) as f64;
    let mut m = vec![Complex64::default(); n * n];
    for k in 0..n {
        for t in 0..n {
            let phase = -2.0 * PI * (k as f64 - c) * (t as f64 - c) / n as f64;
            m[k * n + t] = Complex64::from_polar(s, phase);
        }
    }
    m
}

/// Centred unitary 2D DFT of a row-major `h x w` image, as a dense sum.
pub fn centred_dft_2d(x: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    let fh = centred_dft_1d(h);
    let fw = centred_dft_1d(w);
    let mut out = vec![Complex64::default(); h * w];
    for a in 0..h {
        for b in 0..w {
            let mut acc = Complex64::default();
            for i in 0..h {
                for j in 0..w {
                    acc += fh[a * h + i] * fw[b * w + j] * x[i * w + j];
                }
            }
            out[a * w + b] = acc;
        }
    }
    out
}

/// Dense complex Gaussian elimination with partial pivoting.
pub fn complex_solve(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm())).unwrap();
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / d;
            if factor == Complex64::default() {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= factor * v;
            }
            let v = b[col];
            b[r] -= factor * v;
        }
    }
    let mut x = vec![Complex64::default(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    x
}

/// Small deterministic generator so oracle inputs do not depend on the
/// library's noise model.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}
