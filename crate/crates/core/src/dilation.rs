//! Explicit dilation subspaces for the 2x2 model operators.
//!
//! Vectors of `H (+) H` (and more generally `H (x) C^k`) are stored as `k`
//! consecutive blocks of coordinates in an orthonormal basis of the truncated
//! space `H`. Compressions are always taken of the adjoint `M* (x) I`, and are
//! compared against the adjoint of the model operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{BoundaryQuadrature, KernelIndex, PlanarDomain};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::homomorphism::{ModelOperatorA, ModelOperatorB};
use crate::kernel::TruncatedKernel;
use crate::linalg::{hermitian_eigen, inner, max_abs_diff, norm_sq, op_norm, CMat, CVec};
use crate::pick::maximize_ratio;
use crate::rational::RationalFunction;

/// Invariance defect above which a subspace is rejected as not co-invariant.
pub const COINVARIANCE_TOL: f64 = 1e-6;
/// Largest accepted condition number of the weighted Gram matrix.
pub const WEIGHTED_COND_MAX: f64 = 1e10;
/// Gram determinants below this are treated as degenerate.
pub const GRAM_DET_MIN: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
enum Coordinates {
    /// Orthonormal basis `z^(n+a) / sqrt(c_n)`.
    Plain(TruncatedKernel),
    /// Orthonormal basis `sum_n C[n][k] b_n` for the normalized Szegő sections `b_n`.
    Weighted { sections: TruncatedKernel, change: CMat },
}

/// A finite section of a Hardy space with the matrix of multiplication by `z`
/// in an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedHardyModel {
    coords: Coordinates,
    m: CMat,
    m_norm: f64,
    domain: PlanarDomain,
}

impl TruncatedHardyModel {
    /// The space of `kernel`; `M` is the weighted shift
    /// `M u_n = sqrt(c_{n+1}/c_n) u_{n+1}` cut at the top index.
    pub fn plain(kernel: TruncatedKernel) -> Self {
        let d = kernel.dim();
        let mut m = CMat::zeros(d, d);
        let mut m_norm: f64 = 0.0;
        for k in 0..d.saturating_sub(1) {
            let w = (kernel.basis_norm(k + 1) / kernel.basis_norm(k)).sqrt();
            m[(k + 1, k)] = Complex64::new(w, 0.0);
            m_norm = m_norm.max(w);
        }
        let domain = *kernel.domain();
        TruncatedHardyModel { coords: Coordinates::Plain(kernel), m, m_norm, domain }
    }

    pub fn domain(&self) -> &PlanarDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Matrix of `M` in the orthonormal basis.
    pub fn multiplication(&self) -> &CMat {
        &self.m
    }

    /// `||M||`, which exceeds one only through truncation.
    pub fn multiplication_norm(&self) -> f64 {
        self.m_norm
    }

    /// Coordinates of the reproducing kernel at `w`.
    pub fn kernel_coords(&self, w: Complex64) -> Result<CVec> {
        self.domain.check_interior(w)?;
        Ok(match &self.coords {
            Coordinates::Plain(k) => k.coordinates(w),
            Coordinates::Weighted { sections, change } => change.adjoint() * sections.coordinates(w),
        })
    }

    /// Coordinates of `d/dw̄` of the reproducing kernel at `w`.
    pub fn dbar_coords(&self, w: Complex64) -> Result<CVec> {
        self.domain.check_interior(w)?;
        Ok(match &self.coords {
            Coordinates::Plain(k) => k.dbar_coordinates(w),
            Coordinates::Weighted { sections, change } => change.adjoint() * sections.dbar_coordinates(w),
        })
    }

    /// Reproducing kernel of the truncated space, `<k_w, k_z>`.
    pub fn kernel_value(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        Ok(inner(&self.kernel_coords(w)?, &self.kernel_coords(z)?))
    }

    /// `t_K = K(z,z) / sqrt(K(z,z) ||dK||^2 - |<dK, K>|^2)`.
    pub fn jet_t(&self, z: Complex64) -> Result<f64> {
        Ok(jet_gram(self, z)?.t_k())
    }
}

/// Weighted Hardy space for the measure `|K̂(nu, z)|^2 |d nu|` discretized by
/// `quadrature`, with sections `z^n`, `|n| <= truncation` (`n >= 0` on the disk).
pub fn weighted_hardy(domain: &PlanarDomain, z: Complex64, quadrature: &BoundaryQuadrature, truncation: usize) -> Result<TruncatedHardyModel> {
    domain.check_interior(z)?;
    let szego = TruncatedKernel::szego(*domain, crate::kernel::DEFAULT_TRUNCATION.max(truncation))?;
    let sections = TruncatedKernel::szego(*domain, truncation)?;
    let d = sections.dim();
    let q = quadrature.len();
    let weight: Vec<f64> = quadrature
        .nodes
        .iter()
        .zip(&quadrature.weights)
        .map(|(&nu, &w)| w * szego.eval_unchecked(nu, z).norm_sqr())
        .collect();
    let b = CMat::from_fn(q, d, |j, k| sections.section(k, quadrature.nodes[j]) / sections.basis_norm(k).sqrt());
    let weighted_b = CMat::from_fn(q, d, |j, k| b[(j, k)] * weight[j]);
    let shifted_b = CMat::from_fn(q, d, |j, k| weighted_b[(j, k)] * quadrature.nodes[j]);
    let g = b.adjoint() * &weighted_b;
    let g1 = b.adjoint() * &shifted_b;
    let (vals, vecs) = hermitian_eigen(&g);
    let cond = vals[d - 1] / vals[0];
    if !(vals[0] > 0.0) || cond > WEIGHTED_COND_MAX {
        return Err(Error::conditioning("weighted Gram matrix; reduce the truncation", cond));
    }
    let change = CMat::from_fn(d, d, |i, k| vecs[(i, k)] / vals[k].sqrt());
    let m = change.adjoint() * g1 * &change;
    let m_norm = op_norm(&m);
    Ok(TruncatedHardyModel { coords: Coordinates::Weighted { sections, change }, m, m_norm, domain: *domain })
}

/// Gram data of a pair of kernel vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGram {
    pub k11: f64,
    pub k22: f64,
    /// `K(z1, z2) = <k_{z2}, k_{z1}>`.
    pub k12: Complex64,
}

impl PairGram {
    pub fn det(&self) -> f64 {
        self.k11 * self.k22 - self.k12.norm_sqr()
    }

    /// `|K(z1,z2)| / sqrt(D)`.
    pub fn s_k(&self) -> f64 {
        self.k12.norm() / self.det().sqrt()
    }
}

/// Gram data of `{K(., z), dbar K(., z)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetGram {
    pub k: f64,
    pub dk_sq: f64,
    /// `<dbar K, K>`.
    pub cross: Complex64,
}

impl JetGram {
    pub fn det(&self) -> f64 {
        self.k * self.dk_sq - self.cross.norm_sqr()
    }

    pub fn t_k(&self) -> f64 {
        self.k / self.det().sqrt()
    }
}

fn jet_gram(model: &TruncatedHardyModel, z: Complex64) -> Result<JetGram> {
    let kz = model.kernel_coords(z)?;
    let dk = model.dbar_coords(z)?;
    let g = JetGram { k: norm_sq(&kz), dk_sq: norm_sq(&dk), cross: inner(&dk, &kz) };
    if g.det() <= GRAM_DET_MIN * g.k * g.dk_sq.max(1.0) {
        return Err(Error::conditioning("jet Gram determinant", g.det()));
    }
    Ok(g)
}

/// Orthonormal `e`, `f` spanning `{K(., z1), K(., z2)}` with `e = k_{z1}/|k_{z1}|`
/// and `f = (K11 k_{z2} - K(z1,z2) k_{z1}) / (sqrt(K11) sqrt(D))`.
pub fn gram_schmidt_pair(model: &TruncatedHardyModel, z1: Complex64, z2: Complex64) -> Result<(CVec, CVec, PairGram)> {
    if z1 == z2 {
        return Err(Error::Degenerate("coincident points; use the jet pair".into()));
    }
    let k1 = model.kernel_coords(z1)?;
    let k2 = model.kernel_coords(z2)?;
    let g = PairGram { k11: norm_sq(&k1), k22: norm_sq(&k2), k12: inner(&k2, &k1) };
    if g.det() <= GRAM_DET_MIN * g.k11 * g.k22 {
        return Err(Error::conditioning("pair Gram determinant", g.det()));
    }
    let e = k1.scale(1.0 / g.k11.sqrt());
    let f = (k2 * Complex64::new(g.k11, 0.0) - k1 * g.k12) / Complex64::new(g.k11.sqrt() * g.det().sqrt(), 0.0);
    Ok((e, f, g))
}

/// Orthonormal `e`, `f` spanning `{K(., z), dbar K(., z)}`.
pub fn gram_schmidt_jet(model: &TruncatedHardyModel, z: Complex64) -> Result<(CVec, CVec, JetGram)> {
    let g = jet_gram(model, z)?;
    let kz = model.kernel_coords(z)?;
    let dk = model.dbar_coords(z)?;
    let e = kz.scale(1.0 / g.k.sqrt());
    let f = (dk * Complex64::new(g.k, 0.0) - kz * g.cross) / Complex64::new(g.k.sqrt() * g.det().sqrt(), 0.0);
    Ok((e, f, g))
}

fn stack(top: &CVec, bottom: &CVec) -> CVec {
    let d = top.len();
    CVec::from_fn(2 * d, |i, _| if i < d { top[i] } else { bottom[i - d] })
}

fn check_unit(c: Complex64, name: &str) -> Result<f64> {
    let n = c.norm_sqr();
    if n > 1.0 {
        return Err(Error::Parameter(format!("|{name}| = {} exceeds one", n.sqrt())));
    }
    Ok((1.0 - n).sqrt())
}

/// `h1 = (0; e(z1))`, `h2 = (sqrt(1-|mu|^2) e(z2); mu f)`.
pub fn build_subspace_m(model: &TruncatedHardyModel, z1: Complex64, z2: Complex64, mu: Complex64) -> Result<[CVec; 2]> {
    let c = check_unit(mu, "mu")?;
    let (e1, f, _) = gram_schmidt_pair(model, z1, z2)?;
    let k2 = model.kernel_coords(z2)?;
    let e2 = k2.scale(1.0 / norm_sq(&k2).sqrt());
    let zero = CVec::zeros(model.dim());
    Ok([stack(&zero, &e1), stack(&e2.scale(c), &(f * mu))])
}

/// `k1 = (0; e(z))`, `k2 = (sqrt(1-|lambda|^2) e(z); lambda f(z))`.
pub fn build_subspace_n(model: &TruncatedHardyModel, z: Complex64, lambda: Complex64) -> Result<[CVec; 2]> {
    let c = check_unit(lambda, "lambda")?;
    let (e, f, _) = gram_schmidt_jet(model, z)?;
    let zero = CVec::zeros(model.dim());
    Ok([stack(&zero, &e), stack(&e.scale(c), &(f * lambda))])
}

/// Compression of `M* (x) I` to the span of orthonormal `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    /// `C[i][j] = <(M* (x) I) v_j, v_i>`.
    pub matrix: CMat,
    /// Largest `||(I - P)(M* (x) I) v_j||`.
    pub invariance_defect: f64,
}

fn copies(model: &TruncatedHardyModel, len: usize) -> Result<usize> {
    let d = model.dim();
    if len == 0 || !len.is_multiple_of(d) {
        return Err(Error::Shape(format!("vector length {len} is not a multiple of {d}")));
    }
    Ok(len / d)
}

/// Applies `X (x) I` blockwise, where `X` acts on one copy of `H`.
fn apply_blockwise(x: &CMat, v: &CVec, k: usize) -> CVec {
    let d = x.nrows();
    let mut out = CVec::zeros(d * k);
    for b in 0..k {
        let part = x * v.rows(b * d, d);
        out.rows_mut(b * d, d).copy_from(&part);
    }
    out
}

fn check_orthonormal(vectors: &[CVec]) -> Result<CMat> {
    let p = CMat::from_columns(vectors);
    let g = p.adjoint() * &p;
    let dev = max_abs_diff(&g, &CMat::identity(vectors.len(), vectors.len()));
    if dev > ORTHONORMAL_TOL {
        return Err(Error::InvalidInput(format!("vectors are not orthonormal (deviation {dev:e})")));
    }
    Ok(p)
}

/// Matrix of `P (M* (x) I) P` on the span of `vectors`, which must be
/// orthonormal and co-invariant up to [`COINVARIANCE_TOL`].
pub fn compress(model: &TruncatedHardyModel, vectors: &[CVec]) -> Result<Compression> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("no vectors to compress onto".into()));
    }
    let k = copies(model, vectors[0].len())?;
    let p = check_orthonormal(vectors)?;
    let m_adj = model.m.adjoint();
    let images: Vec<CVec> = vectors.iter().map(|v| apply_blockwise(&m_adj, v, k)).collect();
    let x = CMat::from_columns(&images);
    let matrix = p.adjoint() * &x;
    let residual = &x - &p * &matrix;
    let invariance_defect = (0..residual.ncols()).map(|j| residual.column(j).norm()).fold(0.0, f64::max);
    if invariance_defect > COINVARIANCE_TOL {
        return Err(Error::NotCoinvariant(invariance_defect));
    }
    Ok(Compression { matrix, invariance_defect })
}

/// Grid-refined maximizer of `|K_a(z1,z2)|^2 / (K_a(z1,z1) K_a(z2,z2))`.
pub fn alpha0_search(domain: &PlanarDomain, z1: Complex64, z2: Complex64, grid_size: usize, truncation: usize) -> Result<KernelIndex> {
    Ok(maximize_ratio(domain, z1, z2, grid_size, truncation)?.index)
}

/// The `k` blocks of each vector as columns of a `d x (k * len)` matrix.
fn block_columns(vectors: &[CVec], d: usize, k: usize) -> CMat {
    CMat::from_fn(d, k * vectors.len(), |r, col| vectors[col / k][(col % k) * d + r])
}

/// Applies `f(M)* (x) I` to every column of `y`. For `f = p/q` this is
/// `conj(q)(M*)^{-1} conj(p)(M*)`, with the inverse applied root by root.
fn apply_function_adjoint(model: &TruncatedHardyModel, f: &RationalFunction, y: &CMat) -> Result<CMat> {
    let d = model.dim();
    let m_adj = model.m.adjoint();
    let conj = |c: &[Complex64]| -> Vec<Complex64> { c.iter().map(|x| x.conj()).collect() };
    let p = conj(&f.numerator);
    let q = conj(&f.denominator);
    let mut acc = CMat::zeros(y.nrows(), y.ncols());
    for &a in p.iter().rev() {
        acc = &m_adj * acc + y * a;
    }
    let roots = crate::linalg::poly_roots(&q)?;
    // leading coefficient after trimming negligible top terms
    let scale = q.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let lead = q.iter().rev().find(|x| x.norm() > 1e-14 * scale).copied().unwrap_or(Complex64::new(1.0, 0.0));
    // the plain model's M* is an upper bidiagonal shift
    let triangular = matches!(model.coords, Coordinates::Plain(_));
    for rho in roots {
        if rho.norm() <= 1.0 {
            return Err(Error::Pole(format!(
                "pole at ({}, {}) cannot be represented on the truncated model",
                rho.conj().re,
                rho.conj().im
            )));
        }
        let shifted = &m_adj - CMat::identity(d, d) * rho;
        let solved = if triangular { shifted.solve_upper_triangular(&acc) } else { shifted.lu().solve(&acc) };
        acc = solved.ok_or_else(|| Error::Pole("singular factor of q(M*)".into()))?;
    }
    Ok(acc / lead)
}

/// Max over `test_functions` of `max |P f(M)* P - f(T)*|` (entrywise) on the
/// span of `vectors`, where `target` is `T`.
pub fn verify_dilation(model: &TruncatedHardyModel, vectors: &[CVec], target: &CMat, test_functions: &[RationalFunction]) -> Result<f64> {
    let k = copies(model, vectors.first().map_or(0, |v| v.len()))?;
    let p = check_orthonormal(vectors)?;
    if target.nrows() != vectors.len() || target.ncols() != vectors.len() {
        return Err(Error::Shape("target size differs from the number of vectors".into()));
    }
    let d = model.dim();
    let blocks = block_columns(vectors, d, k);
    let defects: Vec<Result<f64>> = par_map(test_functions.len(), |i| {
        let f = &test_functions[i];
        f.check_poles(&model.domain)?;
        let y = apply_function_adjoint(model, f, &blocks)?;
        let images: Vec<CVec> = (0..vectors.len())
            .map(|j| CVec::from_fn(d * k, |r, _| y[(r % d, j * k + r / d)]))
            .collect();
        let compressed = p.adjoint() * CMat::from_columns(&images);
        let want = f.at_matrix(target)?.adjoint();
        Ok(max_abs_diff(&compressed, &want))
    });
    defects.into_iter().try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
}

/// Result of building and checking a dilation subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationWitness {
    /// Subspace vectors in `H (+) H` coordinates.
    pub vectors: Vec<Vec<Complex64>>,
    /// Compression of `M* (+) M*`, row-major.
    pub compression: Vec<Vec<Complex64>>,
    /// Adjoint of the model operator, row-major.
    pub target: Vec<Vec<Complex64>>,
    pub defect: f64,
    pub invariance_defect: f64,
    pub orthonormality_defect: f64,
}

impl DilationWitness {
    fn new(vectors: &[CVec], c: &Compression, target_adjoint: &CMat) -> Self {
        let p = CMat::from_columns(vectors);
        let ortho = max_abs_diff(&(p.adjoint() * &p), &CMat::identity(vectors.len(), vectors.len()));
        DilationWitness {
            vectors: vectors.iter().map(|v| v.iter().copied().collect()).collect(),
            compression: crate::linalg::to_rows(&c.matrix),
            target: crate::linalg::to_rows(target_adjoint),
            defect: max_abs_diff(&c.matrix, target_adjoint),
            invariance_defect: c.invariance_defect,
            orthonormality_defect: ortho,
        }
    }
}

/// The model operator reproduced by the subspace `build_subspace_m(z1, z2, mu)`:
/// `A_s` with `s = |K(z1,z2)| / sqrt(D)` and `mu_A = -conj(mu K(z1,z2) / |K(z1,z2)|)`,
/// so that `A_s* = [[conj z1, mu (conj z2 - conj z1) K(z1,z2) / sqrt(D)], [0, conj z2]]`.
pub fn model_for_pair(g: &PairGram, z1: Complex64, z2: Complex64, mu: Complex64) -> Result<ModelOperatorA> {
    if g.k12.norm() == 0.0 {
        return Err(Error::Degenerate("K(z1, z2) vanishes; the subspace decouples".into()));
    }
    let phase = g.k12 / g.k12.norm();
    ModelOperatorA::new(z1, z2, g.s_k(), -(mu * phase).conj())
}

/// The model operator reproduced by `build_subspace_n(z, lambda)`:
/// `B_t` with `t = t_K` and `lambda_B = conj(lambda)`.
pub fn model_for_jet(g: &JetGram, z: Complex64, lambda: Complex64) -> Result<ModelOperatorB> {
    ModelOperatorB::new(z, g.t_k(), lambda.conj())
}

/// Distinct-eigenvalue dilation on `model`: returns the witness and the model
/// operator `A_s` it reproduces.
pub fn dilate_pair(model: &TruncatedHardyModel, z1: Complex64, z2: Complex64, mu: Complex64) -> Result<(DilationWitness, ModelOperatorA)> {
    let vectors = build_subspace_m(model, z1, z2, mu)?;
    let (_, _, g) = gram_schmidt_pair(model, z1, z2)?;
    let a = if mu.norm() == 0.0 {
        // any s works; keep the kernel value
        ModelOperatorA::new(z1, z2, g.s_k().max(f64::MIN_POSITIVE), Complex64::new(0.0, 0.0))?
    } else {
        model_for_pair(&g, z1, z2, mu)?
    };
    let c = compress(model, &vectors)?;
    Ok((DilationWitness::new(&vectors, &c, &a.matrix().adjoint()), a))
}

/// Jet dilation on `model`.
pub fn dilate_jet(model: &TruncatedHardyModel, z: Complex64, lambda: Complex64) -> Result<(DilationWitness, ModelOperatorB)> {
    let vectors = build_subspace_n(model, z, lambda)?;
    let (_, _, g) = gram_schmidt_jet(model, z)?;
    let b = model_for_jet(&g, z, lambda)?;
    let c = compress(model, &vectors)?;
    Ok((DilationWitness::new(&vectors, &c, &b.matrix().adjoint()), b))
}
