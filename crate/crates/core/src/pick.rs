//! Abrahamse-Pick matrices, feasibility over a grid of characters and the
//! extremal quantities `s` and `t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{KernelIndex, PlanarDomain};
use crate::error::{Error, Result};
use crate::exec::{argmax, argmin, par_map};
use crate::kernel::{TruncatedKernel, PSD_TOL};
use crate::linalg::{min_eigen, trace_re, CMat, CVec};

pub const DEFAULT_GRID: usize = 128;
/// Relative level below which a nonnegative verdict is flagged as marginal.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Extra slack on target norms.
pub const TARGET_SLACK: f64 = 1e-12;

/// Interpolation targets: scalars or `k x k` matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Scalar(Vec<Complex64>),
    Matrix(Vec<CMat>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Scalar(w) => w.len(),
            Targets::Matrix(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Block size `k` (1 for scalars).
    pub fn block(&self) -> usize {
        match self {
            Targets::Scalar(_) => 1,
            Targets::Matrix(w) => w.first().map_or(1, |m| m.nrows()),
        }
    }

    /// Largest target norm.
    pub fn max_norm(&self) -> f64 {
        match self {
            Targets::Scalar(w) => w.iter().map(|x| x.norm()).fold(0.0, f64::max),
            Targets::Matrix(w) => w.iter().map(crate::linalg::op_norm).fold(0.0, f64::max),
        }
    }
}

/// Nodes in the domain together with targets.
///
/// Targets of norm above one are accepted so that the problem can be judged
/// infeasible; [`PickProblem::within_unit_ball`] reports whether they satisfy
/// the usual bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PickProblem {
    pub domain: PlanarDomain,
    pub nodes: Vec<Complex64>,
    pub targets: Targets,
}

impl PickProblem {
    pub fn new(domain: PlanarDomain, nodes: Vec<Complex64>, targets: Targets) -> Result<Self> {
        domain.validate()?;
        if nodes.len() != targets.len() {
            return Err(Error::InvalidInput(format!("{} nodes but {} targets", nodes.len(), targets.len())));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidInput("no interpolation nodes".into()));
        }
        for &z in &nodes {
            domain.check_interior(z)?;
        }
        check_distinct(&nodes)?;
        if let Targets::Matrix(w) = &targets {
            let k = w[0].nrows();
            if w.iter().any(|m| m.nrows() != k || m.ncols() != k) {
                return Err(Error::Shape("matrix targets must share one square size".into()));
            }
        }
        Ok(PickProblem { domain, nodes, targets })
    }

    pub fn scalar(domain: PlanarDomain, nodes: Vec<Complex64>, targets: Vec<Complex64>) -> Result<Self> {
        Self::new(domain, nodes, Targets::Scalar(targets))
    }

    pub fn within_unit_ball(&self) -> bool {
        self.targets.max_norm() <= 1.0 + TARGET_SLACK
    }
}

pub(crate) fn check_distinct(nodes: &[Complex64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::Degenerate(format!("nodes {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickMatrix {
    pub index: KernelIndex,
    pub entries: CMat,
    pub min_eigenvalue: f64,
    pub min_eigenvector: CVec,
}

impl PickMatrix {
    pub fn trace(&self) -> f64 {
        trace_re(&self.entries)
    }
}

/// Builds the Pick matrix from a precomputed kernel Gram matrix.
pub fn pick_from_gram(targets: &Targets, gram: &CMat) -> CMat {
    match targets {
        Targets::Scalar(w) => CMat::from_fn(w.len(), w.len(), |i, j| (1.0 - w[i] * w[j].conj()) * gram[(i, j)]),
        Targets::Matrix(w) => {
            let n = w.len();
            let k = targets.block();
            let mut m = CMat::zeros(n * k, n * k);
            for i in 0..n {
                for j in 0..n {
                    let block = (CMat::identity(k, k) - &w[i] * w[j].adjoint()) * gram[(i, j)];
                    m.view_mut((i * k, j * k), (k, k)).copy_from(&block);
                }
            }
            m
        }
    }
}

/// `M(w, alpha)[i][j] = (1 - w_i conj(w_j)) K_alpha(z_i, z_j)`, Hermitian part.
pub fn pick_matrix(problem: &PickProblem, index: &KernelIndex, truncation: usize) -> Result<PickMatrix> {
    if truncation < 50 {
        return Err(Error::Parameter("truncation below 50".into()));
    }
    let kernel = TruncatedKernel::new(problem.domain, index.clone(), truncation)?;
    let gram = kernel.gram(&problem.nodes)?;
    let raw = pick_from_gram(&problem.targets, &gram);
    let entries = crate::linalg::hermitian_part(&raw);
    let (min_eigenvalue, min_eigenvector) = min_eigen(&entries);
    Ok(PickMatrix { index: index.clone(), entries, min_eigenvalue, min_eigenvector })
}

/// Exponents `j / grid_size`; the disk has the single trivial index.
pub fn index_grid(domain: &PlanarDomain, grid_size: usize) -> Vec<KernelIndex> {
    if domain.connectivity() == 0 {
        vec![KernelIndex::trivial()]
    } else {
        (0..grid_size.max(1)).map(|j| KernelIndex::for_domain(domain, j as f64 / grid_size.max(1) as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickWitness {
    pub index: KernelIndex,
    pub vector: Vec<Complex64>,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// Nonnegative verdict with `|lambda_min|` within the marginal band.
    pub marginal: bool,
    pub witness: Option<PickWitness>,
    pub grid_resolution: f64,
    /// `(exponent, lambda_min / trace)` for every grid point.
    pub profile: Vec<(f64, f64)>,
}

/// Feasible iff `lambda_min(M(w, alpha)) >= -1e-10 trace` at every grid point.
/// For the annulus this is a necessary condition checked at resolution
/// `1 / grid_size`.
pub fn feasibility(problem: &PickProblem, grid_size: usize, truncation: usize) -> Result<FeasibilityVerdict> {
    if grid_size == 0 {
        return Err(Error::Parameter("grid_size must be at least 1".into()));
    }
    let grid = index_grid(&problem.domain, grid_size);
    let mats: Vec<Result<PickMatrix>> = par_map(grid.len(), |j| pick_matrix(problem, &grid[j], truncation));
    let mats: Vec<PickMatrix> = mats.into_iter().collect::<Result<_>>()?;
    let rel: Vec<f64> = mats.iter().map(|m| m.min_eigenvalue / m.trace().abs().max(f64::MIN_POSITIVE)).collect();
    let worst = argmin(&rel).expect("grid is nonempty");
    let feasible = rel[worst] >= -PSD_TOL;
    let marginal = feasible && rel[worst] <= MARGINAL_TOL;
    let witness = (!feasible).then(|| PickWitness {
        index: mats[worst].index.clone(),
        vector: mats[worst].min_eigenvector.iter().copied().collect(),
        eigenvalue: mats[worst].min_eigenvalue,
    });
    Ok(FeasibilityVerdict {
        feasible,
        marginal,
        witness,
        grid_resolution: if problem.domain.connectivity() == 0 { 0.0 } else { 1.0 / grid_size as f64 },
        profile: grid.iter().zip(&rel).map(|(g, &v)| (g.exponent(), v)).collect(),
    })
}

/// `|K(z1,z2)|^2 / (K(z1,z1) K(z2,z2))` for one kernel.
pub fn kernel_ratio(kernel: &TruncatedKernel, z1: Complex64, z2: Complex64) -> Result<f64> {
    let k12 = kernel.eval(z1, z2)?;
    let k11 = kernel.eval(z1, z1)?.re;
    let k22 = kernel.eval(z2, z2)?.re;
    Ok(k12.norm_sqr() / (k11 * k22))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMaximum {
    pub index: KernelIndex,
    pub ratio: f64,
    /// `(exponent, ratio)` over the grid before refinement.
    pub profile: Vec<(f64, f64)>,
}

/// Maximizes the kernel ratio over the character grid, then refines around
/// the best grid point by golden-section search. Ties go to the smaller exponent.
pub fn maximize_ratio(domain: &PlanarDomain, z1: Complex64, z2: Complex64, grid_size: usize, truncation: usize) -> Result<RatioMaximum> {
    domain.check_interior(z1)?;
    domain.check_interior(z2)?;
    if z1 == z2 {
        return Err(Error::Degenerate("coincident pair; use the jet quantities".into()));
    }
    let grid = index_grid(domain, grid_size);
    let ratio_at = |a: f64| -> Result<f64> {
        let k = TruncatedKernel::with_exponent(*domain, a, truncation)?;
        kernel_ratio(&k, z1, z2)
    };
    let values: Vec<f64> = par_map(grid.len(), |j| ratio_at(grid[j].exponent()))
        .into_iter()
        .collect::<Result<_>>()?;
    let best = argmax(&values).expect("grid is nonempty");
    let profile: Vec<(f64, f64)> = grid.iter().zip(&values).map(|(g, &v)| (g.exponent(), v)).collect();
    if domain.connectivity() == 0 || grid.len() < 2 {
        return Ok(RatioMaximum { index: grid[best].clone(), ratio: values[best], profile });
    }
    let h = 1.0 / grid.len() as f64;
    let center = grid[best].exponent();
    let (a_ref, v_ref) = golden_max(|x| ratio_at(x.rem_euclid(1.0)), center - h, center + h, 1e-10)?;
    let (exp, ratio) = if v_ref > values[best] { (a_ref.rem_euclid(1.0), v_ref) } else { (center, values[best]) };
    Ok(RatioMaximum { index: KernelIndex::for_domain(domain, exp), ratio, profile })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalS {
    pub s_sq: f64,
    pub m_sq: f64,
    pub alpha0: KernelIndex,
}

/// `m^2 = 1 - sup_alpha |K(z1,z2)|^2 / (K(z1,z1) K(z2,z2))`, with
/// `m = sup{|g(z2)| : ||g|| <= 1, g(z1) = 0}` and `s^2 = 1/m^2 - 1`.
pub fn extremal_s(domain: &PlanarDomain, z1: Complex64, z2: Complex64, grid_size: usize, truncation: usize) -> Result<ExtremalS> {
    let best = maximize_ratio(domain, z1, z2, grid_size, truncation)?;
    let m_sq = 1.0 - best.ratio;
    if m_sq <= 0.0 {
        return Err(Error::conditioning("kernel ratio at or above one", best.ratio));
    }
    Ok(ExtremalS { s_sq: 1.0 / m_sq - 1.0, m_sq, alpha0: best.index })
}

/// `t = 1 / K̂(z, z)`, the reciprocal of the Ahlfors derivative bound.
pub fn extremal_t(domain: &PlanarDomain, z: Complex64, truncation: usize) -> Result<f64> {
    let k = TruncatedKernel::szego(*domain, truncation)?;
    Ok(1.0 / k.eval(z, z)?.re)
}
