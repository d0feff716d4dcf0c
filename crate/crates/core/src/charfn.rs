//! Characteristic functions of the 2x2 disk models
//! `T_mu = [[z1, 0], [mu sqrt(1-|z1|^2) sqrt(1-|z2|^2), z2]]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, haar_unitary, max_abs_diff, op_norm, poly_roots, CMat};
use crate::rational::RationalFunction;
use crate::sampling::sample_rng;

/// Moduli closer than this are treated as equal.
pub const MODULUS_TOL: f64 = 1e-12;
/// Boundary points used when testing coincidence.
pub const COINCIDENCE_POINTS: usize = 64;
/// Coincidence threshold on the boundary residual.
pub const COINCIDENCE_TOL: f64 = 1e-8;
/// Haar samples used by [`search_unitary`].
pub const SEARCH_BUDGET: usize = 10_000;

/// Entries of `theta(u)`, row-major, as rational functions of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFn {
    z1: Complex64,
    z2: Complex64,
    mu: Complex64,
    phi1: RationalFunction,
    phi2: RationalFunction,
}

impl CharFn {
    /// For `z1 == z2` this is the jet model with `lambda = mu`.
    pub fn new(z1: Complex64, z2: Complex64, mu: Complex64) -> Result<Self> {
        for z in [z1, z2] {
            if !(z.norm() < 1.0) {
                return Err(Error::OutsideDomain { re: z.re, im: z.im });
            }
        }
        if !(mu.norm() <= 1.0) {
            return Err(Error::Parameter(format!("|mu| = {} exceeds one", mu.norm())));
        }
        Ok(CharFn { z1, z2, mu, phi1: RationalFunction::mobius(z1), phi2: RationalFunction::mobius(z2) })
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    fn root(&self) -> f64 {
        (1.0 - self.mu.norm_sqr()).max(0.0).sqrt()
    }

    /// The model operator whose characteristic function this is.
    pub fn operator(&self) -> CMat {
        disk_model_matrix(self.z1, self.z2, self.mu)
    }

    fn entries_at(&self, u: Complex64) -> [Complex64; 4] {
        let (p1, p2) = (self.phi1.eval(u), self.phi2.eval(u));
        let r = self.root();
        [p2 * r, -self.mu, self.mu.conj() * p1 * p2, p1 * r]
    }

    /// Entries as rational functions, row-major.
    pub fn entries(&self) -> [RationalFunction; 4] {
        let r = c(self.root(), 0.0);
        [
            self.phi2.mul(&RationalFunction::constant(r)),
            RationalFunction::constant(-self.mu),
            self.phi1.mul(&self.phi2).mul(&RationalFunction::constant(self.mu.conj())),
            self.phi1.mul(&RationalFunction::constant(r)),
        ]
    }

    /// Zeros of `det theta` in the open disk, found from the numerator of the
    /// determinant assembled entry by entry.
    pub fn det_zeros(&self) -> Result<Vec<Complex64>> {
        let [a, b, cc, d] = self.entries();
        let det = a.mul(&d).add(&b.mul(&cc).mul(&RationalFunction::constant(c(-1.0, 0.0))));
        let mut zeros: Vec<Complex64> = poly_roots(&det.numerator)?.into_iter().filter(|z| z.norm() < 1.0).collect();
        zeros.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        Ok(zeros)
    }

    /// `theta(f, g)` applied to `(eta1, eta2)`.
    pub fn apply(&self, eta1: &RationalFunction, eta2: &RationalFunction) -> (RationalFunction, RationalFunction) {
        let [a, b, cc, d] = self.entries();
        (a.mul(eta1).add(&b.mul(eta2)), cc.mul(eta1).add(&d.mul(eta2)))
    }

    /// `|(1-|mu|^2)^{1/2} phi1(z2) f(z2) + mu g(z2)|` for `(f, g) = theta (eta1, eta2)`,
    /// the condition for orthogonality to the dilation subspace.
    pub fn orthogonality_residual(&self, eta1: &RationalFunction, eta2: &RationalFunction) -> f64 {
        let (f, g) = self.apply(eta1, eta2);
        (self.phi1.eval(self.z2) * f.eval(self.z2) * self.root() + self.mu * g.eval(self.z2)).norm()
    }

    /// CSV of `theta` at `points` equispaced boundary points.
    pub fn boundary_csv(&self, points: usize) -> String {
        let mut out = String::from("re_u,im_u,re_t11,im_t11,re_t12,im_t12,re_t21,im_t21,re_t22,im_t22\n");
        for j in 0..points {
            let u = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
            let _ = write!(out, "{:.17e},{:.17e}", u.re, u.im);
            for e in self.entries_at(u) {
                let _ = write!(out, ",{:.17e},{:.17e}", e.re, e.im);
            }
            out.push('\n');
        }
        out
    }
}

/// `T_mu` for the disk.
pub fn disk_model_matrix(z1: Complex64, z2: Complex64, mu: Complex64) -> CMat {
    let off = mu * ((1.0 - z1.norm_sqr()) * (1.0 - z2.norm_sqr())).sqrt();
    CMat::from_row_slice(2, 2, &[z1, c(0.0, 0.0), off, z2])
}

pub fn theta_eval(cf: &CharFn, u: Complex64) -> Result<CMat> {
    if u.norm() > 1.0 {
        return Err(Error::OutsideDomain { re: u.re, im: u.im });
    }
    Ok(CMat::from_row_slice(2, 2, &cf.entries_at(u)))
}

/// `theta(z1) theta(z1)*`.
pub fn theta_product_at_node(cf: &CharFn) -> CMat {
    let t = CMat::from_row_slice(2, 2, &cf.entries_at(cf.z1));
    &t * t.adjoint()
}

/// Largest of `||theta(u)* theta(u) - I||` over `points` boundary points.
pub fn inner_defect(cf: &CharFn, points: usize) -> f64 {
    (0..points)
        .map(|j| {
            let u = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
            let t = CMat::from_row_slice(2, 2, &cf.entries_at(u));
            op_norm(&(t.adjoint() * &t - CMat::identity(2, 2)))
        })
        .fold(0.0, f64::max)
}

/// `diag(e^{i psi/2}, e^{-i psi/2})`, which carries `theta_mu` to
/// `theta_{mu e^{i psi}}` by `D theta D*`.
pub fn phase_unitary(psi: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[Complex64::from_polar(1.0, psi / 2.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, -psi / 2.0)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Unitary `W` with `W* T_{mu1} W = T_{mu2}` when equivalent.
    pub certificate: Option<CMat>,
}

/// Decides unitary equivalence of `T_{mu1}` and `T_{mu2}` from the moduli and
/// returns the diagonal certificate `diag(1, conj(mu2/mu1))`.
pub fn unitary_equiv(mu1: Complex64, mu2: Complex64) -> Equivalence {
    if (mu1.norm() - mu2.norm()).abs() > MODULUS_TOL {
        return Equivalence { equivalent: false, certificate: None };
    }
    let omega = if mu1.norm() == 0.0 || mu2.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        let w = (mu2 / mu1).conj();
        w / w.norm()
    };
    let cert = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), omega]);
    Equivalence { equivalent: true, certificate: Some(cert) }
}

/// `||W* T1 W - T2||` entrywise.
pub fn similarity_residual(w: &CMat, t1: &CMat, t2: &CMat) -> f64 {
    max_abs_diff(&(w.adjoint() * t1 * w), t2)
}

/// Best residual of `U* T1 U - T2` over Haar-random unitaries. A validation
/// aid only; equivalence itself is decided by [`unitary_equiv`].
pub fn search_unitary(t1: &CMat, t2: &CMat, seed: u64, budget: usize) -> (f64, CMat) {
    let mut rng = sample_rng(seed, 0);
    let mut best = (f64::INFINITY, CMat::identity(2, 2));
    for _ in 0..budget {
        let u = haar_unitary(t1.nrows(), &mut rng);
        let r = similarity_residual(&u, t1, t2);
        if r < best.0 {
            best = (r, u);
        }
    }
    // the diagonal family contains every certificate for these models
    for _ in 0..budget {
        let w = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))]);
        let r = similarity_residual(&w, t1, t2);
        if r < best.0 {
            best = (r, w);
        }
    }
    best
}

/// Coincidence test: minimizes over constant diagonal unitaries `U`, `V` the
/// mean square of `U theta1 V - theta2` on the boundary, then reports the
/// largest operator-norm residual of that pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Coincidence {
    pub residual: f64,
    pub coincide: bool,
    pub u: CMat,
    pub v: CMat,
}

pub fn coincidence(a: &CharFn, b: &CharFn) -> Coincidence {
    let samples: Vec<([Complex64; 4], [Complex64; 4])> = (0..COINCIDENCE_POINTS)
        .map(|j| {
            let u = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / COINCIDENCE_POINTS as f64);
            (a.entries_at(u), b.entries_at(u))
        })
        .collect();
    // X_ij = sum theta1_ij conj(theta2_ij)
    let mut x = [c(0.0, 0.0); 4];
    for (t1, t2) in &samples {
        for k in 0..4 {
            x[k] += t1[k] * t2[k].conj();
        }
    }
    // phases: (1,1) b, (1,2) cc, (2,1) s+b, (2,2) s+cc with U = diag(1, e^{is})
    let fit = |s: f64| -> (f64, f64, f64) {
        let e = Complex64::from_polar(1.0, s);
        let zb = x[0] + e * x[2];
        let zc = x[1] + e * x[3];
        (zb.norm() + zc.norm(), -zb.arg(), -zc.arg())
    };
    let steps = 720;
    let mut best_s = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..steps {
        let s = 2.0 * PI * k as f64 / steps as f64;
        let v = fit(s).0;
        if v > best_val {
            best_val = v;
            best_s = s;
        }
    }
    let h = 2.0 * PI / steps as f64;
    let (mut lo, mut hi) = (best_s - h, best_s + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if fit(m1).0 >= fit(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let s = 0.5 * (lo + hi);
    let (_, pb, pc) = fit(s);
    let zero = c(0.0, 0.0);
    let u = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), zero, zero, Complex64::from_polar(1.0, s)]);
    let v = CMat::from_row_slice(2, 2, &[Complex64::from_polar(1.0, pb), zero, zero, Complex64::from_polar(1.0, pc)]);
    let residual = samples
        .iter()
        .map(|(t1, t2)| {
            let m1 = CMat::from_row_slice(2, 2, t1);
            let m2 = CMat::from_row_slice(2, 2, t2);
            op_norm(&(&u * m1 * &v - m2))
        })
        .fold(0.0, f64::max);
    Coincidence { residual, coincide: residual <= COINCIDENCE_TOL, u, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_jet_formula() {
        let lam = c(0.3, 0.4);
        let cf = CharFn::new(c(0.0, 0.0), c(0.0, 0.0), lam).unwrap();
        let u = c(0.2, -0.5);
        let r = (1.0 - lam.norm_sqr()).sqrt();
        let want = CMat::from_row_slice(2, 2, &[u * r, -lam, lam.conj() * u * u, u * r]);
        assert!(max_abs_diff(&theta_eval(&cf, u).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn mu_zero_is_diagonal() {
        let cf = CharFn::new(c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.0)).unwrap();
        let u = c(0.4, 0.4);
        let t = theta_eval(&cf, u).unwrap();
        assert_eq!(t[(0, 1)], c(0.0, 0.0));
        assert!(t[(1, 0)].norm() == 0.0);
        assert!((t[(0, 0)] - RationalFunction::mobius(c(-0.3, 0.0)).eval(u)).norm() < 1e-15);
        assert!(theta_eval(&cf, c(1.1, 0.0)).is_err());
    }

    #[test]
    fn inner_on_the_circle() {
        let cf = CharFn::new(c(0.5, -0.2), c(-0.1, 0.7), c(0.6, 0.3)).unwrap();
        assert!(inner_defect(&cf, 256) < 1e-12);
    }

    #[test]
    fn node_product() {
        let (z1, z2) = (c(0.5, -0.2), c(-0.1, 0.7));
        let cf = CharFn::new(z1, z2, c(0.6, 0.3)).unwrap();
        let p = theta_product_at_node(&cf);
        assert!(p[(1, 0)].norm() < 1e-12 && p[(1, 1)].norm() < 1e-12 && p[(0, 1)].norm() < 1e-12);
        let omega = RationalFunction::mobius(z2).eval(z1);
        let mu2 = 0.45;
        assert!((p[(0, 0)].re - ((1.0 - mu2) * omega.norm_sqr() + mu2)).abs() < 1e-12);
        let unit = CharFn::new(z1, z2, c(0.0, 1.0)).unwrap();
        assert!((theta_product_at_node(&unit)[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equivalence_certificates() {
        let mu = c(0.3, 0.2);
        let mu2 = mu * Complex64::from_polar(1.0, 1.1);
        let e = unitary_equiv(mu, mu2);
        assert!(e.equivalent);
        let (z1, z2) = (c(0.2, 0.1), c(-0.4, 0.3));
        let w = e.certificate.unwrap();
        assert!(similarity_residual(&w, &disk_model_matrix(z1, z2, mu), &disk_model_matrix(z1, z2, mu2)) < 1e-15);
        assert!(!unitary_equiv(c(0.3, 0.0), c(0.0, 0.4 + 1e-3)).equivalent);
        let same = unitary_equiv(mu, mu).certificate.unwrap();
        assert!(max_abs_diff(&same, &CMat::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn phase_covariance_and_coincidence() {
        let (z1, z2, mu, psi) = (c(0.2, 0.1), c(-0.4, 0.3), c(0.3, 0.2), 0.9);
        let a = CharFn::new(z1, z2, mu).unwrap();
        let b = CharFn::new(z1, z2, mu * Complex64::from_polar(1.0, psi)).unwrap();
        let d = phase_unitary(psi);
        let u = c(0.1, -0.6);
        let lhs = theta_eval(&b, u).unwrap();
        let rhs = &d * theta_eval(&a, u).unwrap() * d.adjoint();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-15);
        assert!(coincidence(&a, &b).coincide);
        let far = CharFn::new(z1, z2, c(0.5, 0.0)).unwrap();
        assert!(coincidence(&a, &far).residual > 1e-3);
    }
}
