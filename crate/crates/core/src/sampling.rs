//! Samplers for the unit ball of the algebra of rational functions on the
//! disk or the annulus.
//!
//! Every sample `i` draws from its own ChaCha stream (`seed`, stream `i`), so a
//! batch is reproducible regardless of how it is split across threads.
//!
//! Disk samples are finite Blaschke products. On the annulus there are two
//! kinds: products `B1(z) B2(r/z)` of disk Blaschke factors, optionally
//! post-composed with a disk automorphism, and value samples, which are node
//! values lying on the boundary of the set of interpolable data (computed
//! from the kernel criterion) and therefore nearly extremal.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::kernel::TruncatedKernel;
use crate::linalg::{complex_gaussian, hermitian_eigen, CMat};
use crate::rational::RationalFunction;

/// Largest modulus of a randomly drawn zero.
pub const MAX_ZERO_RADIUS: f64 = 0.995;
/// Relative shrink applied to value samples found by the boundary search.
pub const VALUE_SHRINK: f64 = 1e-6;
/// Every `VALUE_PERIOD`-th annulus sample is a value sample.
pub const VALUE_PERIOD: usize = 4;

/// Deterministic generator for sample `index` of a batch.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A function of sup norm at most one on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitBallSample {
    Rational { function: RationalFunction },
    /// Values at the sampler's nodes of some unit-ball function.
    Values { values: Vec<Complex64> },
}

impl UnitBallSample {
    /// Values at `nodes`. For value samples `nodes` must be the sampler's nodes.
    pub fn values_at(&self, nodes: &[Complex64]) -> Vec<Complex64> {
        match self {
            UnitBallSample::Rational { function } => nodes.iter().map(|&z| function.eval(z)).collect(),
            UnitBallSample::Values { values } => {
                assert_eq!(values.len(), nodes.len(), "value sample used with foreign nodes");
                values.clone()
            }
        }
    }

    pub fn rational(&self) -> Option<&RationalFunction> {
        match self {
            UnitBallSample::Rational { function } => Some(function),
            UnitBallSample::Values { .. } => None,
        }
    }
}

pub fn random_disk_point<R: Rng + ?Sized>(rng: &mut R, max_radius: f64) -> Complex64 {
    let rad = max_radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(rad, 2.0 * PI * rng.random::<f64>())
}

pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

/// Blaschke product of degree `1..=max_degree` with an optional zero pinned at
/// `pin` and a random rotation.
pub fn random_blaschke<R: Rng + ?Sized>(rng: &mut R, max_degree: usize, pin: Option<Complex64>) -> RationalFunction {
    let degree = rng.random_range(1..=max_degree.max(1));
    let mut zeros = Vec::with_capacity(degree);
    if let Some(p) = pin {
        zeros.push(p);
    }
    while zeros.len() < degree {
        zeros.push(random_disk_point(rng, MAX_ZERO_RADIUS));
    }
    RationalFunction::blaschke(&zeros, random_unimodular(rng))
}

#[derive(Debug, Clone)]
pub struct FunctionSampler {
    domain: PlanarDomain,
    max_degree: usize,
    pin: Option<Complex64>,
    value_nodes: Option<ValueSampler>,
}

#[derive(Debug, Clone)]
struct ValueSampler {
    nodes: Vec<Complex64>,
    truncation: usize,
    /// Kernel Gram matrices on the fine exponent grid.
    grams: Vec<CMat>,
}

impl FunctionSampler {
    /// Sampler for `domain`. `value_nodes` (distinct interior points) enables
    /// value samples on the annulus; `pin` forces a zero in rational samples.
    pub fn new(
        domain: PlanarDomain,
        max_degree: usize,
        pin: Option<Complex64>,
        value_nodes: Option<&[Complex64]>,
        grid_size: usize,
        truncation: usize,
    ) -> Result<Self> {
        domain.validate()?;
        if max_degree == 0 {
            return Err(Error::Parameter("max_degree must be at least 1".into()));
        }
        if let Some(p) = pin {
            domain.check_interior(p)?;
        }
        let value_nodes = match value_nodes {
            Some(nodes) if domain.is_annulus() && nodes.len() >= 2 => {
                crate::pick::check_distinct(nodes)?;
                let fine = 8 * grid_size.max(1);
                let grams = crate::exec::par_map(fine, |j| {
                    TruncatedKernel::with_exponent(domain, j as f64 / fine as f64, truncation)?.gram(nodes)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                Some(ValueSampler { nodes: nodes.to_vec(), truncation, grams })
            }
            _ => None,
        };
        Ok(FunctionSampler { domain, max_degree, pin, value_nodes })
    }

    pub fn domain(&self) -> &PlanarDomain {
        &self.domain
    }

    /// Nodes used by value samples, if enabled.
    pub fn value_nodes(&self) -> Option<&[Complex64]> {
        self.value_nodes.as_ref().map(|v| v.nodes.as_slice())
    }

    pub fn sample(&self, seed: u64, index: usize) -> UnitBallSample {
        let mut rng = sample_rng(seed, index);
        self.sample_with(&mut rng, index)
    }

    /// Draws sample `index` from `rng`; the index only selects the sample kind.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, index: usize) -> UnitBallSample {
        match self.domain {
            PlanarDomain::Disk => UnitBallSample::Rational { function: random_blaschke(rng, self.max_degree, self.pin) },
            PlanarDomain::Annulus { inner_radius } => {
                if let (Some(v), 0) = (&self.value_nodes, index % VALUE_PERIOD) {
                    if let Some(values) = v.boundary_values(&self.domain, rng) {
                        return UnitBallSample::Values { values };
                    }
                }
                UnitBallSample::Rational { function: self.annulus_rational(rng, inner_radius) }
            }
        }
    }

    fn annulus_rational<R: Rng + ?Sized>(&self, rng: &mut R, r: f64) -> RationalFunction {
        let degree = rng.random_range(1..=self.max_degree);
        let mut zeros = Vec::new();
        if let Some(p) = self.pin {
            zeros.push(p);
        }
        let mut f = RationalFunction::constant(random_unimodular(rng));
        let mut placed = zeros.len();
        while placed < degree {
            if rng.random::<bool>() {
                zeros.push(random_disk_point(rng, MAX_ZERO_RADIUS));
            } else {
                f = f.mul(&RationalFunction::inverted_mobius(random_disk_point(rng, MAX_ZERO_RADIUS), r));
            }
            placed += 1;
        }
        f = f.mul(&RationalFunction::blaschke(&zeros, Complex64::new(1.0, 0.0)));
        if rng.random::<f64>() < 0.25 {
            f = f.post_mobius(random_disk_point(rng, 0.9));
        }
        f
    }
}

impl ValueSampler {
    /// Values `w` with `w_0 = 0` and a random direction for the rest, scaled to
    /// the boundary of the interpolable set, then shrunk by [`VALUE_SHRINK`]
    /// and post-composed with a random disk automorphism half of the time.
    fn boundary_values<R: Rng + ?Sized>(&self, domain: &PlanarDomain, rng: &mut R) -> Option<Vec<Complex64>> {
        let n = self.nodes.len();
        let mut dir: Vec<Complex64> = (0..n).map(|i| if i == 0 { Complex64::new(0.0, 0.0) } else { complex_gaussian(rng) }).collect();
        let norm = dir.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        dir.iter_mut().for_each(|x| *x /= norm);
        let fine = self.grams.len();
        let limits: Vec<f64> = self.grams.iter().map(|g| max_scale_sq(g, &dir)).collect();
        let j = crate::exec::argmin(&limits)?;
        // refine the binding exponent inside the neighbouring cells
        let h = 1.0 / fine as f64;
        let center = j as f64 * h;
        let scale_at = |a: f64| -> f64 {
            TruncatedKernel::with_exponent(*domain, a.rem_euclid(1.0), self.truncation)
                .and_then(|k| k.gram(&self.nodes))
                .map(|g| max_scale_sq(&g, &dir))
                .unwrap_or(f64::INFINITY)
        };
        let refined = golden_min(scale_at, center - h, center + h, 1e-9);
        let t_sq = limits[j].min(refined);
        if !t_sq.is_finite() || t_sq <= 0.0 {
            return None;
        }
        let t = t_sq.sqrt() * (1.0 - VALUE_SHRINK);
        let mut values: Vec<Complex64> = dir.iter().map(|x| x * t).collect();
        if values.iter().any(|w| w.norm() >= 1.0) {
            return None;
        }
        if rng.random::<bool>() {
            let u = random_disk_point(rng, 0.9);
            values = values.iter().map(|&w| (w - u) / (1.0 - u.conj() * w)).collect();
        }
        Some(values)
    }
}

/// Largest `t^2` with `((1 - t^2 d_i conj(d_j)) G_ij)` positive semidefinite:
/// `1 / lambda_max(L^{-1} D G D* L^{-*})` for `G = L L*`.
fn max_scale_sq(gram: &CMat, dir: &[Complex64]) -> f64 {
    let n = dir.len();
    let Some(ch) = gram.clone().cholesky() else { return 0.0 };
    let l = ch.l();
    let dgd = CMat::from_fn(n, n, |i, j| dir[i] * gram[(i, j)] * dir[j].conj());
    let Some(x) = l.solve_lower_triangular(&dgd) else { return 0.0 };
    let Some(y) = l.solve_lower_triangular(&x.adjoint()) else { return 0.0 };
    let (vals, _) = hermitian_eigen(&y);
    let top = vals[n - 1];
    if top <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / top
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}
