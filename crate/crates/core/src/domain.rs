//! Planar domains, character indices and boundary quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The unit disk or the annulus `{r < |z| < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlanarDomain {
    Disk,
    Annulus { inner_radius: f64 },
}

impl PlanarDomain {
    pub fn disk() -> Self {
        PlanarDomain::Disk
    }

    pub fn annulus(inner_radius: f64) -> Result<Self> {
        let d = PlanarDomain::Annulus { inner_radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PlanarDomain::Disk => Ok(()),
            PlanarDomain::Annulus { inner_radius } => {
                if inner_radius > 0.0 && inner_radius < 1.0 {
                    Ok(())
                } else {
                    Err(Error::UnsupportedDomain(format!(
                        "annulus inner radius {inner_radius} outside (0, 1)"
                    )))
                }
            }
        }
    }

    /// Number of bounded components of the complement.
    pub fn connectivity(&self) -> usize {
        match self {
            PlanarDomain::Disk => 0,
            PlanarDomain::Annulus { .. } => 1,
        }
    }

    /// Inner radius; zero for the disk.
    pub fn inner_radius(&self) -> f64 {
        match *self {
            PlanarDomain::Disk => 0.0,
            PlanarDomain::Annulus { inner_radius } => inner_radius,
        }
    }

    pub fn is_annulus(&self) -> bool {
        matches!(self, PlanarDomain::Annulus { .. })
    }

    /// Strict interior membership.
    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        z.is_finite()
            && m < 1.0
            && match self {
                PlanarDomain::Disk => true,
                PlanarDomain::Annulus { inner_radius } => m > *inner_radius,
            }
    }

    pub fn check_interior(&self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::outside(z))
        }
    }

    /// Membership in the closed domain enlarged by `margin` on every boundary
    /// circle.
    pub fn closure_contains(&self, z: Complex64, margin: f64) -> bool {
        let m = z.norm();
        m <= 1.0 + margin && m >= self.inner_radius() - margin
    }

    /// Radii of the boundary circles: outer first.
    pub fn boundary_radii(&self) -> Vec<f64> {
        match *self {
            PlanarDomain::Disk => vec![1.0],
            PlanarDomain::Annulus { inner_radius } => vec![1.0, inner_radius],
        }
    }
}

/// Character index `alpha = exp(2 pi i a)`, one exponent `a in [0, 1)` per hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelIndex {
    exponents: Vec<f64>,
}

impl KernelIndex {
    /// The empty index used for the disk.
    pub fn trivial() -> Self {
        KernelIndex { exponents: Vec::new() }
    }

    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        for &a in &exponents {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::Parameter(format!("character exponent {a} outside [0, 1)")));
            }
        }
        Ok(KernelIndex { exponents })
    }

    /// Index for `domain` with exponent `a` (ignored for the disk). The
    /// exponent is reduced modulo one.
    pub fn for_domain(domain: &PlanarDomain, a: f64) -> Self {
        if domain.connectivity() == 0 {
            KernelIndex::trivial()
        } else {
            KernelIndex { exponents: vec![a.rem_euclid(1.0)] }
        }
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// The single exponent of an annulus index, zero for the disk.
    pub fn exponent(&self) -> f64 {
        self.exponents.first().copied().unwrap_or(0.0)
    }

    pub fn characters(&self) -> Vec<Complex64> {
        self.exponents.iter().map(|a| Complex64::from_polar(1.0, 2.0 * PI * a)).collect()
    }

    pub fn check_for(&self, domain: &PlanarDomain) -> Result<()> {
        if self.exponents.len() == domain.connectivity() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "index has {} exponents but the domain has connectivity {}",
                self.exponents.len(),
                domain.connectivity()
            )))
        }
    }
}

/// Trapezoidal rule on each boundary circle with weights normalized by `1/2pi`,
/// so the unit circle carries mass 1 and a circle of radius `r` carries mass `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryQuadrature {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    /// Component label per node: 0 for the outer circle, 1 for the inner one.
    pub components: Vec<usize>,
    pub points_per_component: usize,
}

impl BoundaryQuadrature {
    /// Largest angular frequency `|p - q|` for which `z^p conj(z)^q` is
    /// integrated exactly on every circle.
    pub fn exact_frequency(&self) -> usize {
        self.points_per_component - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_j w_j f_j conj(g_j)` for values sampled at the nodes.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| a * b.conj() * *w).sum()
    }

    pub fn integrate(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| f(z) * w).sum()
    }
}

/// Builds the boundary rule with `points_per_component` equispaced nodes per circle.
pub fn build_quadrature(domain: &PlanarDomain, points_per_component: usize) -> Result<BoundaryQuadrature> {
    domain.validate()?;
    if points_per_component < 4 {
        return Err(Error::Parameter("at least 4 quadrature points per component".into()));
    }
    let p = points_per_component;
    let mut nodes = Vec::with_capacity(p * 2);
    let mut weights = Vec::with_capacity(p * 2);
    let mut components = Vec::with_capacity(p * 2);
    for (label, radius) in domain.boundary_radii().into_iter().enumerate() {
        for j in 0..p {
            nodes.push(Complex64::from_polar(radius, 2.0 * PI * j as f64 / p as f64));
            weights.push(radius / p as f64);
            components.push(label);
        }
    }
    Ok(BoundaryQuadrature { nodes, weights, components, points_per_component: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_four_points() {
        let q = build_quadrature(&PlanarDomain::Disk, 4).unwrap();
        let want = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];
        for (z, w) in q.nodes.iter().zip(want) {
            assert!((z - w).norm() < 1e-15);
        }
        assert!(q.weights.iter().all(|&w| w == 0.25));
    }

    #[test]
    fn annulus_inner_weights() {
        let q = build_quadrature(&PlanarDomain::annulus(0.5).unwrap(), 8).unwrap();
        let inner: Vec<f64> = q.weights.iter().zip(&q.components).filter(|(_, &c)| c == 1).map(|(w, _)| *w).collect();
        assert_eq!(inner.len(), 8);
        assert!(inner.iter().all(|&w| (w - 0.5 / 8.0).abs() < 1e-16));
        let outer_mass: f64 = q.weights.iter().zip(&q.components).filter(|(_, &c)| c == 0).map(|(w, _)| w).sum();
        assert!((outer_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circle_moment_z2_zbar2() {
        let q = build_quadrature(&PlanarDomain::Disk, 64).unwrap();
        let v = q.integrate(|z| z * z * z.conj() * z.conj());
        assert!((v - 1.0).norm() < 1e-14);
        // off-diagonal moments vanish below the exact frequency
        let v = q.integrate(|z| z.powi(5) * z.conj().powi(2));
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_quadrature(&PlanarDomain::Disk, 3), Err(Error::Parameter(_))));
        let bad = PlanarDomain::Annulus { inner_radius: 1.5 };
        assert!(matches!(build_quadrature(&bad, 8), Err(Error::UnsupportedDomain(_))));
        assert!(KernelIndex::new(vec![1.0]).is_err());
    }

    #[test]
    fn connectivity_and_index_length() {
        let a = PlanarDomain::annulus(0.3).unwrap();
        assert_eq!(a.connectivity(), 1);
        assert_eq!(PlanarDomain::Disk.connectivity(), 0);
        assert!(KernelIndex::trivial().check_for(&PlanarDomain::Disk).is_ok());
        assert!(KernelIndex::trivial().check_for(&a).is_err());
        assert_eq!(KernelIndex::for_domain(&a, 1.25).exponent(), 0.25);
    }
}
