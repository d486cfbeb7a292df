//! Small complex linear-algebra helpers shared by every module.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector, Vector2};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
/// Horizontal (x, y) coordinate in meters.
pub type Point = Vector2<f64>;

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// `x * I` of size `n`.
pub fn scaled_identity(n: usize, x: f64) -> CMat {
    CMat::from_diagonal_element(n, n, C64::new(x, 0.0))
}

/// `v v^H`.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `v^H X v`.
pub fn quad_form(x: &CMat, v: &CVec) -> C64 {
    let xv = x * v;
    v.iter().zip(xv.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Real part of `tr(C X)` without forming the product.
pub fn trace_inner(c: &CMat, x: &CMat) -> f64 {
    let n = c.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let t = c[(p, q)] * x[(q, p)];
            acc += t.re;
        }
    }
    acc
}

pub fn trace_re(x: &CMat) -> f64 {
    (0..x.nrows()).map(|i| x[(i, i)].re).sum()
}

pub fn frobenius(x: &CMat) -> f64 {
    libm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Modulus of a complex number.
pub fn cabs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Argument of a complex number in `(-π, π]`.
pub fn carg(z: C64) -> f64 {
    libm::atan2(z.im, z.re)
}

/// Largest entrywise deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(x: &CMat) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    let scale = x.iter().map(|z| cabs(*z)).fold(0.0, f64::max);
    let n = x.nrows();
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in p..n {
            worst = worst.max(cabs(x[(p, q)] - x[(q, p)].conj()));
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()).scale(0.5)
}

/// Ascending eigenvalues of the Hermitian part of `x`.
pub fn eigenvalues(x: &CMat) -> Vec<f64> {
    if x.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = hermitian_part(x).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(x: &CMat) -> f64 {
    eigenvalues(x).first().copied().unwrap_or(0.0)
}

/// PSD acceptance rule: `λ_min ≥ −1e−9 · max(1, tr X)`.
pub fn is_psd(x: &CMat) -> bool {
    min_eigenvalue(x) >= -PSD_REL_TOL * trace_re(x).max(1.0)
}

pub const PSD_REL_TOL: f64 = 1e-9;

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues of the Hermitian
/// part clipped to zero.
pub fn project_psd(x: &CMat) -> CMat {
    let h = hermitian_part(x);
    if h.nrows() == 0 {
        return h;
    }
    let eig = h.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return h;
    }
    let mut out = zeros(h.nrows());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(i);
            out += (v * v.adjoint()).scale(l);
        }
    }
    hermitian_part(&out)
}
