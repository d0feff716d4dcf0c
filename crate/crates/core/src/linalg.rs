//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `<x, y>` linear in the first argument.
pub fn inner(x: &CVec, y: &CVec) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sq(x: &CVec) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix with a unit eigenvector.
pub fn min_eigen(m: &CMat) -> (f64, CVec) {
    let (vals, vecs) = hermitian_eigen(m);
    (vals[0], vecs.column(0).into_owned())
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        return op_norm_2x2(m);
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

fn op_norm_2x2(m: &CMat) -> f64 {
    let fro = m.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    ((fro + disc) / 2.0).sqrt()
}

/// Unit vector spanning the (numerical) kernel: the right singular vector of
/// the smallest singular value.
pub fn null_vector(m: &CMat) -> (CVec, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut k = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] < svd.singular_values[k] {
            k = i;
        }
    }
    let v = CVec::from_fn(n, |i, _| v_t[(k, i)].conj());
    (v, svd.singular_values[k])
}

/// Condition number in the 2-norm; infinite for singular input.
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) / std::f64::consts::SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(k, k, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..k {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Evaluates a polynomial (ascending coefficients) at a matrix by Horner's rule.
pub fn poly_at_matrix(coeffs: &[Complex64], t: &CMat) -> CMat {
    let n = t.nrows();
    let mut acc = CMat::zeros(n, n);
    for &a in coeffs.iter().rev() {
        acc = &acc * t;
        for i in 0..n {
            acc[(i, i)] += a;
        }
    }
    acc
}

/// Evaluates a polynomial (ascending coefficients) at a point.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Roots of a polynomial given by ascending coefficients, via the eigenvalues
/// of the companion matrix. Trailing (near) zero leading coefficients are
/// dropped first.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("zero polynomial has no well-defined roots".into()));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let comp = CMat::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    eigenvalues(&comp)
}

/// Eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = m
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::conditioning("Schur iteration did not converge", f64::NAN))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Factor `A = X X*` of a Hermitian positive semidefinite matrix from its
/// eigendecomposition (Cholesky is inaccurate on the near-singular quotients
/// that certificates produce); eigenvalues below zero are clipped. Row `i` of `X` is the vector `a_i` with
/// `A[i][j] = <a_i, a_j>`.
pub fn psd_factor(a: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| vecs[(i, j)] * vals[j].max(0.0).sqrt())
}

/// Converts a matrix to row-major nested vectors.
pub fn to_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Builds a matrix from row-major nested vectors.
pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn roots_of_quadratic() {
        // (z - 1)(z + 2i) = z^2 + (2i - 1) z - 2i
        let r = poly_roots(&[c(0.0, -2.0), c(-1.0, 2.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.len(), 2);
        for want in [c(1.0, 0.0), c(0.0, -2.0)] {
            assert!(r.iter().any(|z| (z - want).norm() < 1e-12), "{r:?}");
        }
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(4, &mut rng);
        let e = &u.adjoint() * &u - CMat::identity(4, 4);
        assert!(e.norm() < 1e-12);
    }

    #[test]
    fn two_by_two_norm_matches_svd() {
        let m = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(-1.0, 0.2), c(0.0, 0.7), c(0.5, -0.5)]);
        assert!((op_norm_2x2(&m) - singular_values(&m)[0]).abs() < 1e-12);
    }

    #[test]
    fn psd_factor_reconstructs_singular_matrix() {
        let x = CVec::from_vec(vec![c(1.0, 0.5), c(-0.2, 0.3), c(0.0, 1.0)]);
        let a = &x * x.adjoint();
        let f = psd_factor(&a);
        assert!(max_abs_diff(&(&f * f.adjoint()), &a) < 1e-12);
    }
}
