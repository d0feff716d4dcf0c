//! Model operators `A_s` and `B_t`, operators with distinct eigenvalues,
//! rational functional calculus, contractivity tests and the finite
//! rank-2 block decomposition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::exec::{argmax, par_map};
use crate::linalg::{condition_number, eigenvalues, hermitian_eigen, null_vector, op_norm, CMat, CVec};
use crate::pick::{extremal_s, extremal_t, DEFAULT_GRID};
use crate::rational::RationalFunction;
use crate::sampling::{FunctionSampler, UnitBallSample};

/// Relative slack when comparing against a critical value.
pub const CRITICAL_SLACK: f64 = 1e-9;
/// Largest accepted condition number of the eigenvector matrix.
pub const EIGVEC_COND_MAX: f64 = 1e8;
/// Smallest eigenvalue gap accepted by the Lagrange construction.
pub const LAGRANGE_GAP: f64 = 1e-6;

/// `[[z1, 0], [s mu (z1 - z2), z2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOperatorA {
    pub z1: Complex64,
    pub z2: Complex64,
    pub s: f64,
    pub mu: Complex64,
}

impl ModelOperatorA {
    pub fn new(z1: Complex64, z2: Complex64, s: f64, mu: Complex64) -> Result<Self> {
        let a = ModelOperatorA { z1, z2, s, mu };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z1 == self.z2 {
            return Err(Error::Degenerate("A_s needs distinct eigenvalues".into()));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::Parameter(format!("s = {} must be positive", self.s)));
        }
        Ok(())
    }

    /// The boundary operator `s = s_*` for the given `mu`.
    pub fn boundary(domain: &PlanarDomain, z1: Complex64, z2: Complex64, mu: Complex64, grid_size: usize, truncation: usize) -> Result<Self> {
        let e = extremal_s(domain, z1, z2, grid_size, truncation)?;
        Self::new(z1, z2, e.s_sq.sqrt(), mu)
    }

    pub fn matrix(&self) -> CMat {
        lower_2x2(self.z1, self.s * self.mu * (self.z1 - self.z2), self.z2)
    }

    /// `r(A)` from the values `r(z1)`, `r(z2)`.
    pub fn from_values(&self, w1: Complex64, w2: Complex64) -> CMat {
        lower_2x2(w1, self.s * self.mu * (w1 - w2), w2)
    }
}

/// `[[z, 0], [t lambda, z]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOperatorB {
    pub z: Complex64,
    pub t: f64,
    pub lambda: Complex64,
}

impl ModelOperatorB {
    pub fn new(z: Complex64, t: f64, lambda: Complex64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("t = {t} must be positive")));
        }
        Ok(ModelOperatorB { z, t, lambda })
    }

    pub fn matrix(&self) -> CMat {
        lower_2x2(self.z, self.t * self.lambda, self.z)
    }

    /// `r(B)` from `r(z)` and `r'(z)`.
    pub fn from_jet(&self, w: Complex64, dw: Complex64) -> CMat {
        lower_2x2(w, self.t * self.lambda * dw, w)
    }
}

fn lower_2x2(a: Complex64, c: Complex64, d: Complex64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, Complex64::new(0.0, 0.0), c, d])
}

/// An `n x n` operator with distinct eigenvalues and unit eigenvectors `v_i`
/// of `T*` (`T* v_i = conj(z_i) v_i`), stored as the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralOperator {
    matrix: CMat,
    eigenvalues: Vec<Complex64>,
    eigenvectors: CMat,
}

impl GeneralOperator {
    /// Computes the eigenvalues, ordered by real then imaginary part.
    pub fn new(matrix: CMat) -> Result<Self> {
        check_square(&matrix)?;
        let mut eig = eigenvalues(&matrix)?;
        eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Self::build(matrix, eig)
    }

    /// Uses the supplied eigenvalue order after checking each one.
    pub fn with_eigenvalues(matrix: CMat, eigenvalues: Vec<Complex64>) -> Result<Self> {
        check_square(&matrix)?;
        if eigenvalues.len() != matrix.nrows() {
            return Err(Error::Shape("one eigenvalue per dimension expected".into()));
        }
        let scale = op_norm(&matrix).max(1.0);
        for &z in &eigenvalues {
            let shifted = &matrix - CMat::identity(matrix.nrows(), matrix.ncols()) * z;
            let (_, sigma) = null_vector(&shifted);
            if sigma > 1e-8 * scale {
                return Err(Error::InvalidInput(format!("({}, {}) is not an eigenvalue", z.re, z.im)));
            }
        }
        Self::build(matrix, eigenvalues)
    }

    fn build(matrix: CMat, eigenvalues: Vec<Complex64>) -> Result<Self> {
        crate::pick::check_distinct(&eigenvalues)?;
        let n = matrix.nrows();
        let adj = matrix.adjoint();
        let mut v = CMat::zeros(n, n);
        for (i, z) in eigenvalues.iter().enumerate() {
            let (mut x, _) = null_vector(&(&adj - CMat::identity(n, n) * z.conj()));
            fix_phase(&mut x);
            v.set_column(i, &x);
        }
        let cond = condition_number(&v);
        if cond > EIGVEC_COND_MAX {
            return Err(Error::conditioning("eigenvector matrix", cond));
        }
        Ok(GeneralOperator { matrix, eigenvalues, eigenvectors: v })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_gap(&self) -> f64 {
        let z = &self.eigenvalues;
        let mut gap = f64::INFINITY;
        for i in 0..z.len() {
            for j in 0..i {
                gap = gap.min((z[i] - z[j]).norm());
            }
        }
        gap
    }

    /// `V_i = prod_{j != i} (T - z_j) / (z_i - z_j)`.
    pub fn lagrange(&self) -> Result<Vec<CMat>> {
        let gap = self.min_gap();
        if gap < LAGRANGE_GAP {
            return Err(Error::conditioning("eigenvalue gap", gap));
        }
        let n = self.dim();
        let z = &self.eigenvalues;
        Ok((0..n)
            .map(|i| {
                let mut v = CMat::identity(n, n);
                for j in (0..n).filter(|&j| j != i) {
                    let factor = (&self.matrix - CMat::identity(n, n) * z[j]) / (z[i] - z[j]);
                    v *= factor;
                }
                v
            })
            .collect())
    }
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Rotates `x` so that its largest entry (first on ties) is real and positive.
pub(crate) fn fix_phase(x: &mut CVec) {
    let mut k = 0;
    for i in 1..x.len() {
        if x[i].norm() > x[k].norm() * (1.0 + 1e-12) {
            k = i;
        }
    }
    let p = x[k];
    if p.norm() > 0.0 {
        let phase = p.conj() / p.norm();
        x.iter_mut().for_each(|c| *c *= phase);
    }
}

fn check_spectrum(r: &RationalFunction, points: &[Complex64]) -> Result<()> {
    let scale: f64 = r.denominator.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for &z in points {
        let q = crate::linalg::poly_eval(&r.denominator, z);
        if q.norm() <= 1e-14 * scale {
            return Err(Error::Pole(format!("pole at the eigenvalue ({}, {})", z.re, z.im)));
        }
    }
    Ok(())
}

/// `r(A_s) = [[r(z1), 0], [s mu (r(z1) - r(z2)), r(z2)]]`.
pub fn calc_a(a: &ModelOperatorA, r: &RationalFunction) -> Result<CMat> {
    check_spectrum(r, &[a.z1, a.z2])?;
    Ok(a.from_values(r.eval(a.z1), r.eval(a.z2)))
}

/// `r(B_t) = [[r(z), 0], [t lambda r'(z), r(z)]]`.
pub fn calc_b(b: &ModelOperatorB, r: &RationalFunction) -> Result<CMat> {
    check_spectrum(r, &[b.z])?;
    Ok(b.from_jet(r.eval(b.z), r.derivative_at(b.z)))
}

/// `p(T) q(T)^{-1}`.
pub fn calc_general(t: &GeneralOperator, r: &RationalFunction) -> Result<CMat> {
    check_spectrum(r, t.eigenvalues())?;
    r.at_matrix(t.matrix())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractivityVerdict {
    pub contractive: bool,
    /// `s |mu|` or `t |lambda|`.
    pub value: f64,
    /// `s_*` or `t_*`.
    pub critical: f64,
    pub reason: String,
}

/// `rho_A` is contractive iff `s |mu| <= s_*` with `s_*^2 = 1/m^2 - 1`.
pub fn contractivity_a(a: &ModelOperatorA, domain: &PlanarDomain, grid_size: usize, truncation: usize) -> Result<ContractivityVerdict> {
    let e = extremal_s(domain, a.z1, a.z2, grid_size, truncation)?;
    let critical = e.s_sq.sqrt();
    let value = a.s * a.mu.norm();
    let contractive = value <= critical * (1.0 + CRITICAL_SLACK);
    let reason = if contractive {
        format!("s|mu| = {value} <= s_* = {critical}")
    } else {
        format!("s|mu| = {value} exceeds s_* = {critical}")
    };
    Ok(ContractivityVerdict { contractive, value, critical, reason })
}

/// `rho_B` is contractive iff `t |lambda| <= 1 / K̂(z, z)`.
pub fn contractivity_b(b: &ModelOperatorB, domain: &PlanarDomain, truncation: usize) -> Result<ContractivityVerdict> {
    let critical = extremal_t(domain, b.z, truncation)?;
    let value = b.t * b.lambda.norm();
    let contractive = value <= critical * (1.0 + CRITICAL_SLACK);
    let reason = if contractive {
        format!("t|lambda| = {value} <= t_* = {critical}")
    } else {
        format!("t|lambda| = {value} exceeds t_* = {critical}")
    };
    Ok(ContractivityVerdict { contractive, value, critical, reason })
}

/// Exact verdict for a 2x2 operator with distinct eigenvalues, through its
/// unitary model `[[z1, sigma], [0, z2]]` with `sigma^2 = ||T||_F^2 - |z1|^2 - |z2|^2`.
pub fn contractivity_2x2(t: &GeneralOperator, domain: &PlanarDomain, grid_size: usize, truncation: usize) -> Result<ContractivityVerdict> {
    if t.dim() != 2 {
        return Err(Error::Shape(format!("{0}x{0} operator; the exact verdict needs 2x2", t.dim())));
    }
    let z = t.eigenvalues();
    let frob: f64 = t.matrix().iter().map(|x| x.norm_sqr()).sum();
    let sigma = (frob - z[0].norm_sqr() - z[1].norm_sqr()).max(0.0).sqrt();
    let a = ModelOperatorA::new(z[1], z[0], 1.0, Complex64::new(sigma, 0.0) / (z[1] - z[0]))?;
    contractivity_a(&a, domain, grid_size, truncation)
}

/// Any operator the von Neumann sampler can evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportedOperator {
    A(ModelOperatorA),
    B(ModelOperatorB),
    General(GeneralOperator),
}

impl SupportedOperator {
    pub fn matrix(&self) -> CMat {
        match self {
            SupportedOperator::A(a) => a.matrix(),
            SupportedOperator::B(b) => b.matrix(),
            SupportedOperator::General(t) => t.matrix().clone(),
        }
    }

    /// Distinct eigenvalues; the first one is where samples are pinned.
    pub fn nodes(&self) -> Vec<Complex64> {
        match self {
            SupportedOperator::A(a) => vec![a.z1, a.z2],
            SupportedOperator::B(b) => vec![b.z],
            SupportedOperator::General(t) => t.eigenvalues().to_vec(),
        }
    }

    fn has_distinct_eigenvalues(&self) -> bool {
        !matches!(self, SupportedOperator::B(_))
    }

    /// `f(T)` for a unit-ball sample; value samples need the Lagrange system
    /// for general operators.
    pub fn apply(&self, sample: &UnitBallSample, lagrange: Option<&[CMat]>) -> Result<CMat> {
        match (self, sample) {
            (SupportedOperator::A(a), UnitBallSample::Rational { function }) => calc_a(a, function),
            (SupportedOperator::A(a), UnitBallSample::Values { values }) => Ok(a.from_values(values[0], values[1])),
            (SupportedOperator::B(b), UnitBallSample::Rational { function }) => calc_b(b, function),
            (SupportedOperator::B(_), UnitBallSample::Values { .. }) => {
                Err(Error::InvalidInput("value samples need distinct eigenvalues".into()))
            }
            (SupportedOperator::General(t), UnitBallSample::Rational { function }) => calc_general(t, function),
            (SupportedOperator::General(t), UnitBallSample::Values { values }) => {
                let v = lagrange.ok_or_else(|| Error::InvalidInput("Lagrange matrices required".into()))?;
                let n = t.dim();
                Ok(values.iter().zip(v).fold(CMat::zeros(n, n), |acc, (w, vi)| acc + vi * *w))
            }
        }
    }

    pub fn check_domain(&self, domain: &PlanarDomain) -> Result<()> {
        for z in self.nodes() {
            domain.check_interior(z)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnConfig {
    pub sample_count: usize,
    pub max_degree: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub truncation: usize,
}

impl VnConfig {
    pub fn new(sample_count: usize, max_degree: usize, seed: u64) -> Self {
        VnConfig { sample_count, max_degree, seed, grid_size: DEFAULT_GRID, truncation: crate::kernel::DEFAULT_TRUNCATION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnReport {
    pub max_norm: f64,
    pub witness_index: usize,
    pub witness: UnitBallSample,
    pub sample_count: usize,
}

/// Sampler matching [`vn_sample_check`]: pinned at the first eigenvalue, with
/// value samples at the eigenvalues when they are distinct.
pub fn operator_sampler(op: &SupportedOperator, domain: &PlanarDomain, config: &VnConfig) -> Result<FunctionSampler> {
    let nodes = op.nodes();
    let value_nodes = op.has_distinct_eigenvalues().then_some(nodes.as_slice());
    FunctionSampler::new(*domain, config.max_degree, Some(nodes[0]), value_nodes, config.grid_size, config.truncation)
}

/// `||f(T)||` for samples `0..sample_count`, in sample order.
pub fn sample_norms(op: &SupportedOperator, sampler: &FunctionSampler, seed: u64, sample_count: usize) -> Result<Vec<f64>> {
    let lagrange = match op {
        SupportedOperator::General(t) => Some(t.lagrange()?),
        _ => None,
    };
    par_map(sample_count, |i| {
        let s = sampler.sample(seed, i);
        op.apply(&s, lagrange.as_deref()).map(|m| op_norm(&m))
    })
    .into_iter()
    .collect()
}

/// Largest `||f(T)||` over sampled unit-ball functions `f`: a lower bound
/// for the norm of the homomorphism `f -> f(T)`.
pub fn vn_sample_check(op: &SupportedOperator, domain: &PlanarDomain, config: &VnConfig) -> Result<VnReport> {
    op.check_domain(domain)?;
    if config.sample_count == 0 {
        return Err(Error::Parameter("sample_count must be positive".into()));
    }
    let sampler = operator_sampler(op, domain, config)?;
    let norms = sample_norms(op, &sampler, config.seed, config.sample_count)?;
    let best = argmax(&norms).ok_or_else(|| Error::conditioning("all sampled norms are NaN", f64::NAN))?;
    Ok(VnReport {
        max_norm: norms[best],
        witness_index: best,
        witness: sampler.sample(config.seed, best),
        sample_count: config.sample_count,
    })
}

/// One summand of a rank-2 decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rank2Block {
    /// `[[z1, sigma], [0, z2]]`.
    Pair { z1: Complex64, z2: Complex64, sigma: f64 },
    Diagonal { z: Complex64 },
}

/// A rank-2 block as a model operator, up to the swap of the two basis vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSummand {
    A(ModelOperatorA),
    B(ModelOperatorB),
    Scalar(Complex64),
}

impl Rank2Block {
    pub fn dim(&self) -> usize {
        match self {
            Rank2Block::Pair { .. } => 2,
            Rank2Block::Diagonal { .. } => 1,
        }
    }

    pub fn matrix(&self) -> CMat {
        match *self {
            Rank2Block::Pair { z1, z2, sigma } => {
                CMat::from_row_slice(2, 2, &[z1, Complex64::new(sigma, 0.0), Complex64::new(0.0, 0.0), z2])
            }
            Rank2Block::Diagonal { z } => CMat::from_element(1, 1, z),
        }
    }

    /// `[[z1, sigma], [0, z2]]` is the swap of `[[z2, 0], [sigma, z1]]`, which is
    /// `A_s` with `s = 1`, `mu = sigma / (z2 - z1)`, or `B_t` with `t = sigma`.
    pub fn to_model(&self) -> ModelSummand {
        match *self {
            Rank2Block::Pair { z1, z2, sigma } if z1 != z2 => {
                ModelSummand::A(ModelOperatorA { z1: z2, z2: z1, s: 1.0, mu: Complex64::new(sigma, 0.0) / (z2 - z1) })
            }
            Rank2Block::Pair { z1, sigma, .. } => {
                ModelSummand::B(ModelOperatorB { z: z1, t: sigma, lambda: Complex64::new(1.0, 0.0) })
            }
            Rank2Block::Diagonal { z } => ModelSummand::Scalar(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank2Decomposition {
    /// Unitary with `U* T U = blocks[0] (+) blocks[1] (+) ...`.
    pub u: CMat,
    pub blocks: Vec<Rank2Block>,
}

impl Rank2Decomposition {
    pub fn block_diagonal(&self) -> CMat {
        let n: usize = self.blocks.iter().map(|b| b.dim()).sum();
        let mut m = CMat::zeros(n, n);
        let mut at = 0;
        for b in &self.blocks {
            let d = b.dim();
            m.view_mut((at, at), (d, d)).copy_from(&b.matrix());
            at += d;
        }
        m
    }
}

/// Splits `T = [[z1 I_p, C], [0, z2 I_q]]` into 2x2 blocks `[[z1, sigma_i], [0, z2]]`
/// (one per nonzero singular value of `C`) and a diagonal remainder.
pub fn rank2_decompose(t: &CMat, p: usize) -> Result<Rank2Decomposition> {
    check_square(t)?;
    let n = t.nrows();
    if p == 0 || p >= n {
        return Err(Error::Shape(format!("split {p} must lie strictly inside 0..{n}")));
    }
    let q = n - p;
    let z1 = t[(0, 0)];
    let z2 = t[(p, p)];
    let tol = 1e-10 * op_norm(t).max(1.0);
    for i in 0..n {
        for j in 0..n {
            let want = match (i < p, j < p) {
                (true, true) => if i == j { Some(z1) } else { Some(Complex64::new(0.0, 0.0)) },
                (false, false) => if i == j { Some(z2) } else { Some(Complex64::new(0.0, 0.0)) },
                (false, true) => Some(Complex64::new(0.0, 0.0)),
                (true, false) => None,
            };
            if let Some(w) = want {
                if (t[(i, j)] - w).norm() > tol {
                    return Err(Error::Shape(format!("entry ({i}, {j}) breaks the two-eigenvalue block form")));
                }
            }
        }
    }
    let c = t.view((0, p), (p, q)).into_owned();
    let k = p.min(q);
    let svd = c.clone().svd(true, true);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u_thin = svd.u.expect("requested u");
    let v_thin = svd.v_t.expect("requested v_t").adjoint();
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_c = complete_basis(&CMat::from_fn(p, k, |i, j| u_thin[(i, order[j])]));
    let v_c = complete_basis(&CMat::from_fn(q, k, |i, j| v_thin[(i, order[j])]));
    let sigma_tol = 1e-12 * sigma.first().copied().unwrap_or(0.0).max(1.0);
    // columns of W = U_c (+) V_c, then grouped into pairs (i, p + i)
    let mut columns: Vec<CVec> = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    let top = |j: usize| -> CVec { CVec::from_fn(n, |i, _| if i < p { u_c[(i, j)] } else { Complex64::new(0.0, 0.0) }) };
    let bottom = |j: usize| -> CVec { CVec::from_fn(n, |i, _| if i >= p { v_c[(i - p, j)] } else { Complex64::new(0.0, 0.0) }) };
    let mut paired = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if s > sigma_tol {
            columns.push(top(i));
            columns.push(bottom(i));
            blocks.push(Rank2Block::Pair { z1, z2, sigma: s });
            paired += 1;
        }
    }
    for j in paired..p {
        columns.push(top(j));
        blocks.push(Rank2Block::Diagonal { z: z1 });
    }
    for j in paired..q {
        columns.push(bottom(j));
        blocks.push(Rank2Block::Diagonal { z: z2 });
    }
    let u = CMat::from_columns(&columns);
    Ok(Rank2Decomposition { u, blocks })
}

/// Extends orthonormal columns to a unitary using eigenvectors of the
/// complementary projection.
fn complete_basis(cols: &CMat) -> CMat {
    let (n, k) = cols.shape();
    if k == n {
        return cols.clone();
    }
    let proj = CMat::identity(n, n) - cols * cols.adjoint();
    let (_, vecs) = hermitian_eigen(&proj);
    let mut out = CMat::zeros(n, n);
    out.view_mut((0, 0), (n, k)).copy_from(cols);
    for j in 0..(n - k) {
        let mut x = vecs.column(k + j).into_owned();
        fix_phase(&mut x);
        out.set_column(k + j, &x);
    }
    out
}
