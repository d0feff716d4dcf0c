//! Rational functions `p/q` with complex coefficients (ascending order) and
//! their functional calculus on matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::linalg::{poly_at_matrix, poly_eval, poly_roots, CMat};

/// Margin used when checking that no pole lies on the closed domain.
pub const POLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFunction {
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default())
        .collect()
}

fn poly_scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

fn poly_derivative(a: &[Complex64]) -> Vec<Complex64> {
    if a.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    a.iter().enumerate().skip(1).map(|(k, x)| x * k as f64).collect()
}

impl RationalFunction {
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Result<Self> {
        if numerator.is_empty() || denominator.is_empty() {
            return Err(Error::InvalidInput("empty coefficient list".into()));
        }
        if denominator.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(RationalFunction { numerator, denominator })
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        RationalFunction { numerator: coeffs, denominator: vec![one()] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn identity() -> Self {
        Self::polynomial(vec![Complex64::new(0.0, 0.0), one()])
    }

    /// Disk automorphism `(z - a) / (1 - conj(a) z)`.
    pub fn mobius(a: Complex64) -> Self {
        RationalFunction { numerator: vec![-a, one()], denominator: vec![one(), -a.conj()] }
    }

    /// `(r - a z) / (z - conj(a) r)`, which is `mobius(a)` evaluated at `r / z`.
    /// For `|a| < 1` it is bounded by one on the annulus with inner radius `r`
    /// and unimodular on the inner circle.
    pub fn inverted_mobius(a: Complex64, r: f64) -> Self {
        RationalFunction {
            numerator: vec![Complex64::new(r, 0.0), -a],
            denominator: vec![-a.conj() * r, one()],
        }
    }

    /// `rotation * prod_k mobius(zeros[k])`.
    pub fn blaschke(zeros: &[Complex64], rotation: Complex64) -> Self {
        let mut f = Self::constant(rotation);
        for &a in zeros {
            f = f.mul(&Self::mobius(a));
        }
        f
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        poly_eval(&self.numerator, z) / poly_eval(&self.denominator, z)
    }

    /// Exact derivative by the quotient rule.
    pub fn derivative_at(&self, z: Complex64) -> Complex64 {
        let p = poly_eval(&self.numerator, z);
        let q = poly_eval(&self.denominator, z);
        let dp = poly_eval(&poly_derivative(&self.numerator), z);
        let dq = poly_eval(&poly_derivative(&self.denominator), z);
        (dp * q - p * dq) / (q * q)
    }

    pub fn mul(&self, other: &Self) -> Self {
        RationalFunction {
            numerator: poly_mul(&self.numerator, &other.numerator),
            denominator: poly_mul(&self.denominator, &other.denominator),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalFunction {
            numerator: poly_add(
                &poly_mul(&self.numerator, &other.denominator),
                &poly_mul(&other.numerator, &self.denominator),
            ),
            denominator: poly_mul(&self.denominator, &other.denominator),
        }
    }

    /// `mobius(u) o self`.
    pub fn post_mobius(&self, u: Complex64) -> Self {
        RationalFunction {
            numerator: poly_add(&self.numerator, &poly_scale(&self.denominator, -u)),
            denominator: poly_add(&self.denominator, &poly_scale(&self.numerator, -u.conj())),
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        poly_roots(&self.denominator)
    }

    /// Fails with a pole error when a root of the denominator lies within
    /// [`POLE_MARGIN`] of the closed domain.
    pub fn check_poles(&self, domain: &PlanarDomain) -> Result<()> {
        for p in self.poles()? {
            if domain.closure_contains(p, POLE_MARGIN) {
                return Err(Error::Pole(format!("denominator vanishes at ({}, {})", p.re, p.im)));
            }
        }
        Ok(())
    }

    /// `p(T) q(T)^{-1}`.
    pub fn at_matrix(&self, t: &CMat) -> Result<CMat> {
        let p = poly_at_matrix(&self.numerator, t);
        let q = poly_at_matrix(&self.denominator, t);
        let inv = q
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Pole("q(T) is singular".into()))?;
        if inv.iter().any(|x| !x.is_finite()) {
            return Err(Error::Pole("q(T) is singular".into()));
        }
        Ok(p * inv)
    }

    /// Supremum of `|f|` over `samples` equispaced points on each boundary circle.
    pub fn boundary_sup(&self, domain: &PlanarDomain, samples: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for radius in domain.boundary_radii() {
            for j in 0..samples {
                let z = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / samples as f64);
                sup = sup.max(self.eval(z).norm());
            }
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};

    #[test]
    fn mobius_vanishes_and_is_inner() {
        let a = c(0.3, -0.4);
        let f = RationalFunction::mobius(a);
        assert!(f.eval(a).norm() < 1e-16);
        assert!((f.boundary_sup(&PlanarDomain::Disk, 64) - 1.0).abs() < 1e-14);
        // phi_a'(a) = 1 / (1 - |a|^2)
        assert!((f.derivative_at(a) - 1.0 / (1.0 - a.norm_sqr())).norm() < 1e-14);
    }

    #[test]
    fn inverted_mobius_on_the_annulus() {
        let f = RationalFunction::inverted_mobius(c(0.2, 0.5), 0.4);
        let d = PlanarDomain::annulus(0.4).unwrap();
        for j in 0..16 {
            let z = Complex64::from_polar(0.4, j as f64);
            assert!((f.eval(z).norm() - 1.0).abs() < 1e-13);
        }
        assert!(f.boundary_sup(&d, 256) <= 1.0 + 1e-13);
        assert!(f.check_poles(&d).is_ok());
    }

    #[test]
    fn pole_detection() {
        let f = RationalFunction::new(vec![one()], vec![c(-0.5, 0.0), one()]).unwrap();
        assert!(matches!(f.check_poles(&PlanarDomain::Disk), Err(Error::Pole(_))));
        let d = PlanarDomain::annulus(0.6).unwrap();
        assert!(f.check_poles(&d).is_ok());
    }

    #[test]
    fn post_mobius_matches_composition() {
        let f = RationalFunction::blaschke(&[c(0.1, 0.2), c(-0.5, 0.0)], c(0.0, 1.0));
        let u = c(0.3, 0.3);
        let g = f.post_mobius(u);
        let z = c(0.2, -0.6);
        let want = RationalFunction::mobius(u).eval(f.eval(z));
        assert!((g.eval(z) - want).norm() < 1e-14);
    }

    #[test]
    fn matrix_calculus_of_diagonal() {
        let t = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.1, 0.0), c(0.0, 0.5)]));
        let f = RationalFunction::mobius(c(0.2, 0.0));
        let ft = f.at_matrix(&t).unwrap();
        let want = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![f.eval(c(0.1, 0.0)), f.eval(c(0.0, 0.5))]));
        assert!(max_abs_diff(&ft, &want) < 1e-15);
        let bad = RationalFunction::new(vec![one()], vec![c(-0.1, 0.0), one()]).unwrap();
        assert!(matches!(bad.at_matrix(&t), Err(Error::Pole(_))));
    }
}
