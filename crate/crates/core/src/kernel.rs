//! Truncated series for the reproducing kernels `K_alpha` of the Hardy spaces
//! of the disk and of the annulus.
//!
//! On the annulus `{r < |z| < 1}` the space with exponent `a` is spanned by the
//! sections `z^(n+a)`, `n` in `Z`, whose squared norms under normalized
//! arclength are `1 + r^(2(n+a)+1)`. The disk uses `z^n`, `n >= 0`, all of norm 1.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::domain::{BoundaryQuadrature, KernelIndex, PlanarDomain};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

pub const DEFAULT_TRUNCATION: usize = 200;
pub const PSD_TOL: f64 = 1e-10;
pub const REPRODUCING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedKernel {
    domain: PlanarDomain,
    index: KernelIndex,
    truncation: usize,
    /// Basis exponents `n` in increasing order.
    basis: Vec<i64>,
    /// `-ln c_n`, kept in log form so that `r^(2(n+a)+1)` never overflows.
    log_inv_norms: Vec<f64>,
}

impl TruncatedKernel {
    pub fn new(domain: PlanarDomain, index: KernelIndex, truncation: usize) -> Result<Self> {
        domain.validate()?;
        index.check_for(&domain)?;
        if truncation == 0 {
            return Err(Error::Parameter("truncation must be positive".into()));
        }
        let n = truncation as i64;
        let basis: Vec<i64> = match domain {
            PlanarDomain::Disk => (0..=n).collect(),
            PlanarDomain::Annulus { .. } => (-n..=n).collect(),
        };
        let r = domain.inner_radius();
        let a = index.exponent();
        let log_inv_norms = basis
            .iter()
            .map(|&k| match domain {
                PlanarDomain::Disk => 0.0,
                PlanarDomain::Annulus { .. } => {
                    let e = 2.0 * (k as f64 + a) + 1.0;
                    if e >= 0.0 {
                        -(e * r.ln()).exp().ln_1p()
                    } else {
                        // 1 / (1 + r^e) = r^|e| / (1 + r^|e|)
                        -e * r.ln() - (-e * r.ln()).exp().ln_1p()
                    }
                }
            })
            .collect();
        Ok(TruncatedKernel { domain, index, truncation, basis, log_inv_norms })
    }

    /// Kernel for the annulus with exponent `a` or the disk (exponent ignored).
    pub fn with_exponent(domain: PlanarDomain, a: f64, truncation: usize) -> Result<Self> {
        Self::new(domain, KernelIndex::for_domain(&domain, a), truncation)
    }

    /// The Szegő kernel: trivial character.
    pub fn szego(domain: PlanarDomain, truncation: usize) -> Result<Self> {
        Self::with_exponent(domain, 0.0, truncation)
    }

    pub fn domain(&self) -> &PlanarDomain {
        &self.domain
    }

    pub fn index(&self) -> &KernelIndex {
        &self.index
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn basis(&self) -> &[i64] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Squared norm `c_n` of the section at basis position `k`.
    pub fn basis_norm(&self, k: usize) -> f64 {
        (-self.log_inv_norms[k]).exp()
    }

    fn exponent_at(&self, k: usize) -> f64 {
        self.basis[k] as f64 + self.index.exponent()
    }

    /// `z^(n+a)` on the principal branch, for any nonzero `z` (boundary included).
    pub fn section(&self, k: usize, z: Complex64) -> Complex64 {
        let e = self.exponent_at(k);
        if self.domain.is_annulus() {
            (z.ln() * e).exp()
        } else {
            z.powu(self.basis[k] as u32)
        }
    }

    fn check(&self, z: Complex64) -> Result<()> {
        self.domain.check_interior(z)
    }

    /// `K(z, w)`.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.check(z)?;
        self.check(w)?;
        Ok(self.eval_unchecked(z, w))
    }

    /// `K(z, w)` without the interior check, for boundary quadrature.
    pub fn eval_unchecked(&self, z: Complex64, w: Complex64) -> Complex64 {
        match self.domain {
            PlanarDomain::Disk => {
                let p = z * w.conj();
                let mut term = Complex64::new(1.0, 0.0);
                let mut sum = term;
                for _ in 1..self.basis.len() {
                    term *= p;
                    sum += term;
                }
                sum
            }
            PlanarDomain::Annulus { .. } => {
                let x = z.ln() + w.ln().conj();
                self.sum_log_terms(|k| x * self.exponent_at(k), |_| 1.0)
            }
        }
    }

    fn sum_log_terms(&self, log_term: impl Fn(usize) -> Complex64, factor: impl Fn(usize) -> f64) -> Complex64 {
        (0..self.basis.len())
            .map(|k| (log_term(k) + self.log_inv_norms[k]).exp() * factor(k))
            .sum()
    }

    /// `d/dw̄ K(z, w)` by termwise differentiation.
    pub fn dbar_eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.check(z)?;
        self.check(w)?;
        Ok(match self.domain {
            PlanarDomain::Disk => {
                // sum_{n>=1} n z^n conj(w)^(n-1)
                let wb = w.conj();
                let mut zp = z;
                let mut wp = Complex64::new(1.0, 0.0);
                let mut sum = Complex64::new(0.0, 0.0);
                for n in 1..self.basis.len() {
                    sum += zp * wp * n as f64;
                    zp *= z;
                    wp *= wb;
                }
                sum
            }
            PlanarDomain::Annulus { .. } => {
                let (lz, lw) = (z.ln(), w.ln().conj());
                self.sum_log_terms(|k| lz * self.exponent_at(k) + lw * (self.exponent_at(k) - 1.0), |k| self.exponent_at(k))
            }
        })
    }

    /// `d/dz d/dw̄ K(z, w)`.
    pub fn mixed_eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.check(z)?;
        self.check(w)?;
        Ok(match self.domain {
            PlanarDomain::Disk => {
                let p = z * w.conj();
                let mut term = Complex64::new(1.0, 0.0);
                let mut sum = Complex64::new(0.0, 0.0);
                for n in 1..self.basis.len() {
                    sum += term * (n * n) as f64;
                    term *= p;
                }
                sum
            }
            PlanarDomain::Annulus { .. } => {
                let x = z.ln() + w.ln().conj();
                self.sum_log_terms(|k| x * (self.exponent_at(k) - 1.0), |k| self.exponent_at(k).powi(2))
            }
        })
    }

    /// Upper bound for the modulus of the omitted tail of the series at `(z, w)`.
    pub fn tail_bound(&self, z: Complex64, w: Complex64) -> f64 {
        let rho = z.norm() * w.norm();
        let n = self.truncation as f64;
        let a = self.index.exponent();
        let upper = rho.powf(n + 1.0 + a) / (1.0 - rho);
        match self.domain {
            PlanarDomain::Disk => upper,
            PlanarDomain::Annulus { inner_radius: r } => {
                let q = r * r / rho;
                upper + q.powf(n + 1.0 - a) / ((1.0 - q) * r)
            }
        }
    }

    /// Coordinates of `K(., w)` in the orthonormal basis `z^(n+a) / sqrt(c_n)`.
    pub fn coordinates(&self, w: Complex64) -> CVec {
        CVec::from_fn(self.dim(), |k, _| {
            (self.section(k, w) * (0.5 * self.log_inv_norms[k]).exp()).conj()
        })
    }

    /// Coordinates of `d/dw̄ K(., w)`.
    pub fn dbar_coordinates(&self, w: Complex64) -> CVec {
        CVec::from_fn(self.dim(), |k, _| {
            let e = self.exponent_at(k);
            let d = if e == 0.0 {
                Complex64::new(0.0, 0.0)
            } else if self.domain.is_annulus() {
                (w.ln() * (e - 1.0)).exp() * e
            } else {
                w.powu(self.basis[k] as u32 - 1) * e
            };
            (d * (0.5 * self.log_inv_norms[k]).exp()).conj()
        })
    }

    /// Gram matrix `G[i][j] = K(z_i, z_j)`.
    pub fn gram(&self, nodes: &[Complex64]) -> Result<CMat> {
        for &z in nodes {
            self.check(z)?;
        }
        let n = nodes.len();
        let mut g = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(nodes[i], nodes[j]);
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        Ok(g)
    }

    /// Max over basis exponents in `test_exponents` and points `w` of
    /// `|<phi_n, K(., w)>_Q - phi_n(w)|`. An empty test set gives 0.
    pub fn verify_reproducing(&self, q: &BoundaryQuadrature, test_exponents: &[i64], points: &[Complex64]) -> Result<f64> {
        let mut positions = Vec::with_capacity(test_exponents.len());
        for &n in test_exponents {
            let k = self
                .basis
                .iter()
                .position(|&b| b == n)
                .ok_or_else(|| Error::Parameter(format!("test exponent {n} outside the truncated basis")))?;
            positions.push(k);
        }
        for &w in points {
            self.check(w)?;
        }
        let mut defect: f64 = 0.0;
        for &w in points {
            let kw: Vec<Complex64> = q.nodes.iter().map(|&nu| self.eval_unchecked(nu, w)).collect();
            for &k in &positions {
                let phi: Vec<Complex64> = q.nodes.iter().map(|&nu| self.section(k, nu)).collect();
                defect = defect.max((q.inner(&phi, &kw) - self.section(k, w)).norm());
            }
        }
        Ok(defect)
    }

    /// CSV dump of kernel values with header `re_z,im_z,re_w,im_w,re_k,im_k`.
    pub fn csv(&self, pairs: &[(Complex64, Complex64)]) -> Result<String> {
        let mut out = String::from("re_z,im_z,re_w,im_w,re_k,im_k\n");
        for &(z, w) in pairs {
            let k = self.eval(z, w)?;
            writeln!(out, "{},{},{},{},{},{}", z.re, z.im, w.re, w.im, k.re, k.im).expect("writing to a String");
        }
        Ok(out)
    }
}

/// `K̂(z, z)` for the Szegő kernel at the default truncation.
pub fn szego_diag(domain: &PlanarDomain, z: Complex64) -> Result<f64> {
    domain.check_interior(z)?;
    match domain {
        PlanarDomain::Disk => Ok(1.0 / (1.0 - z.norm_sqr())),
        PlanarDomain::Annulus { .. } => Ok(TruncatedKernel::szego(*domain, DEFAULT_TRUNCATION)?.eval(z, z)?.re),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_quadrature;
    use crate::linalg::{c, min_eigen, trace_re};

    fn annulus(r: f64) -> PlanarDomain {
        PlanarDomain::annulus(r).unwrap()
    }

    #[test]
    fn disk_values() {
        let k = TruncatedKernel::szego(PlanarDomain::Disk, 200).unwrap();
        assert_eq!(k.eval(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!((k.eval(c(0.5, 0.0), c(0.5, 0.0)).unwrap() - 4.0 / 3.0).norm() < 1e-14);
        assert!((k.dbar_eval(c(0.3, 0.0), c(0.0, 0.0)).unwrap() - 0.3).norm() < 1e-15);
        assert_eq!(k.dbar_eval(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn rejects_boundary_points() {
        let k = TruncatedKernel::with_exponent(annulus(0.5), 0.25, 50).unwrap();
        assert!(matches!(k.eval(c(0.5, 0.0), c(0.7, 0.0)), Err(Error::OutsideDomain { .. })));
        assert!(k.eval(c(1.0, 0.0), c(0.7, 0.0)).is_err());
        assert!(szego_diag(&PlanarDomain::Disk, c(0.0, 1.0)).is_err());
    }

    #[test]
    fn hermitian_symmetry_is_exact() {
        let k = TruncatedKernel::with_exponent(annulus(0.4), 0.3, 120).unwrap();
        let (z, w) = (c(-0.5, 0.3), c(0.1, -0.7));
        assert_eq!(k.eval(z, w).unwrap(), k.eval(w, z).unwrap().conj());
    }

    #[test]
    fn annulus_reproducing_defect() {
        let d = annulus(0.5);
        let q = build_quadrature(&d, 512).unwrap();
        let k = TruncatedKernel::with_exponent(d, 0.25, 200).unwrap();
        let tests: Vec<i64> = (-6..=6).collect();
        let defect = k.verify_reproducing(&q, &tests, &[c(0.7, 0.0), c(-0.3, 0.5)]).unwrap();
        assert!(defect < 1e-8, "{defect}");
        assert_eq!(k.verify_reproducing(&q, &[], &[c(0.7, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn dbar_matches_finite_difference() {
        let k = TruncatedKernel::with_exponent(annulus(0.5), 0.4, 200).unwrap();
        let (z, w) = (c(0.6, 0.2), c(-0.3, 0.6));
        let h = 1e-6;
        // d/dw̄ = (d/dx + i d/dy) / 2
        let fx = (k.eval(z, w + h).unwrap() - k.eval(z, w - h).unwrap()) / (2.0 * h);
        let fy = (k.eval(z, w + c(0.0, h)).unwrap() - k.eval(z, w - c(0.0, h)).unwrap()) / (2.0 * h);
        let fd = (fx + c(0.0, 1.0) * fy) * 0.5;
        assert!((k.dbar_eval(z, w).unwrap() - fd).norm() < 1e-6);
    }

    #[test]
    fn mixed_derivative_matches_coordinates() {
        let k = TruncatedKernel::with_exponent(annulus(0.5), 0.1, 150).unwrap();
        let (z, w) = (c(0.6, 0.2), c(-0.3, 0.6));
        let dz = k.dbar_coordinates(z);
        let dw = k.dbar_coordinates(w);
        let ip: Complex64 = dw.iter().zip(dz.iter()).map(|(a, b)| a * b.conj()).sum();
        assert!((ip - k.mixed_eval(z, w).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn doubling_truncation_is_within_tail_bound() {
        let d = annulus(0.5);
        let (z, w) = (c(0.8, 0.1), c(0.75, -0.2));
        let k1 = TruncatedKernel::with_exponent(d, 0.5, 20).unwrap();
        let k2 = TruncatedKernel::with_exponent(d, 0.5, 40).unwrap();
        let diff = (k1.eval(z, w).unwrap() - k2.eval(z, w).unwrap()).norm();
        assert!(diff <= k1.tail_bound(z, w), "{diff} vs {}", k1.tail_bound(z, w));
        assert!(k2.tail_bound(z, w) < k1.tail_bound(z, w));
    }

    #[test]
    fn quadrature_gram_is_diagonal() {
        let d = annulus(0.5);
        let q = build_quadrature(&d, 64).unwrap();
        let k = TruncatedKernel::with_exponent(d, 0.25, 10).unwrap();
        for i in 0..k.dim() {
            let fi: Vec<Complex64> = q.nodes.iter().map(|&nu| k.section(i, nu)).collect();
            for j in 0..k.dim() {
                let fj: Vec<Complex64> = q.nodes.iter().map(|&nu| k.section(j, nu)).collect();
                let want = if i == j { k.basis_norm(i) } else { 0.0 };
                let scale = (k.basis_norm(i) * k.basis_norm(j)).sqrt();
                assert!((q.inner(&fi, &fj) - want).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn gram_is_psd() {
        let k = TruncatedKernel::with_exponent(annulus(0.3), 0.7, 200).unwrap();
        let nodes = [c(0.5, 0.0), c(0.51, 0.01), c(-0.4, 0.4), c(0.0, -0.9), c(0.35, 0.0)];
        let g = k.gram(&nodes).unwrap();
        assert!(min_eigen(&g).0 >= -PSD_TOL * trace_re(&g));
    }

    #[test]
    fn szego_annulus_is_stable_and_exceeds_disk() {
        let d = annulus(0.5);
        let z = c(0.7, 0.0);
        let a = TruncatedKernel::szego(d, 200).unwrap().eval(z, z).unwrap().re;
        let b = TruncatedKernel::szego(d, 400).unwrap().eval(z, z).unwrap().re;
        assert!((a - b).abs() < 1e-8);
        assert!((szego_diag(&d, z).unwrap() - a).abs() < 1e-15);
        assert!(a > 1.0 / 0.51);
        assert!((szego_diag(&PlanarDomain::Disk, c(0.6, 0.0)).unwrap() - 1.5625).abs() < 1e-14);
    }

    #[test]
    fn csv_header_and_rows() {
        let k = TruncatedKernel::szego(PlanarDomain::Disk, 10).unwrap();
        let s = k.csv(&[(c(0.0, 0.0), c(0.0, 0.0))]).unwrap();
        assert_eq!(s, "re_z,im_z,re_w,im_w,re_k,im_k\n0,0,0,0,1,0\n");
    }
}
