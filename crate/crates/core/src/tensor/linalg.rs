//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues below this are treated as exactly zero (rank, support, `0 log 0`).
pub const RANK_CUTOFF: f64 = 1e-12;
/// Maximum absolute entry of `M - M^dagger` accepted for a Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigendecomposition of a nominally Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `i` is the normalized eigenvector of `values[i]`.
    pub vectors: CMat,
}

impl HermEigen {
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > RANK_CUTOFF).count()
    }

    /// Projector onto the span of eigenvectors with eigenvalue above the cutoff.
    pub fn support_projector(&self) -> CMat {
        let n = self.vectors.nrows();
        let mut p = CMat::zeros(n, n);
        for (k, &v) in self.values.iter().enumerate() {
            if v > RANK_CUTOFF {
                let col = self.vectors.column(k);
                p += &col * col.adjoint();
            }
        }
        p
    }

    /// Rebuild `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut out = CMat::zeros(n, n);
        for (k, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            if fv != 0.0 {
                let col = self.vectors.column(k);
                out += (&col * col.adjoint()) * cr(fv);
            }
        }
        out
    }
}

/// Hermitian part `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`, sorted descending.
///
/// Ties (eigenvalues within the rank cutoff of each other) are ordered by the
/// lexicographic order of their eigenvectors, after fixing each eigenvector's
/// phase so its first non-negligible entry is real and positive.
pub fn herm_eigh(m: &CMat) -> HermEigen {
    assert!(m.is_square(), "herm_eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return HermEigen {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        };
    }
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let mut cols: Vec<(f64, CVec)> = (0..n)
        .map(|k| {
            let mut v: CVec = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    cols.sort_by(|(la, va), (lb, vb)| {
        if (la - lb).abs() <= RANK_CUTOFF {
            lex_cmp(va, vb)
        } else {
            lb.partial_cmp(la).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let values = cols.iter().map(|(l, _)| *l).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, (_, v)) in cols.iter().enumerate() {
        vectors.set_column(k, v);
    }
    HermEigen { values, vectors }
}

fn fix_phase(v: &mut CVec) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-9).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

fn lex_cmp(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Eigenvalues only, descending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}

/// `||a - b||_1 / 2`.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    0.5 * trace_norm(&(a - b))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest absolute entry of `m - m^dagger`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().copied().sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `|v><v|`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Row-major digits of `index` for the given dimensions.
pub fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

/// Row-major linear index of `digits`.
pub fn linear(digits: &[usize], dims: &[usize]) -> usize {
    digits
        .iter()
        .zip(dims)
        .fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Base-2 logarithm with the `0 log 0 = 0` convention applied by callers.
#[inline]
pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// Shannon entropy in bits of a list of weights, dropping entries at or below the cutoff.
pub fn entropy_of(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&p| p > RANK_CUTOFF)
        .map(|&p| -p * p.log2())
        .sum()
}
