//! The linear map `L_T : (f(z_1), ..., f(z_n)) -> f(T)` on the interpolation
//! body `I_z`, through the Lagrange matrices of `T`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::exec::{argmax, par_map};
use crate::homomorphism::{contractivity_2x2, GeneralOperator, SupportedOperator, VnConfig};
use crate::linalg::{c, haar_unitary, kron, max_abs_diff, op_norm, to_rows, CMat};
use crate::pick::{check_distinct, feasibility, FeasibilityVerdict, PickProblem, Targets};
use crate::rational::RationalFunction;
use crate::sampling::{random_disk_point, sample_rng, FunctionSampler, MAX_ZERO_RADIUS};

/// Tolerance of the idempotent-system identities.
pub const LAGRANGE_TOL: f64 = 1e-10;
/// Sampled norms above `1 + EXCESS_TOL` count as exceeding one.
pub const EXCESS_TOL: f64 = 1e-9;
/// Agreement required between matched samples in [`homeqlin_check`].
pub const MATCH_TOL: f64 = 1e-6;
const MAX_POTAPOV_FACTORS: usize = 3;
const NODE_MATCH_TOL: f64 = 1e-9;

/// Distinct interior nodes `z_1, ..., z_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTuple {
    pub domain: PlanarDomain,
    pub nodes: Vec<Complex64>,
}

impl NodeTuple {
    pub fn new(domain: PlanarDomain, nodes: Vec<Complex64>) -> Result<Self> {
        domain.validate()?;
        for &z in &nodes {
            domain.check_interior(z)?;
        }
        check_distinct(&nodes)?;
        Ok(NodeTuple { domain, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `V_i` with `f(T) = sum f(z_i) V_i`, indexed like the operator's eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeSystem {
    pub operator: GeneralOperator,
    pub matrices: Vec<CMat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeDefects {
    /// `max |sum V_i - I|`.
    pub partition: f64,
    /// `max_{i,j} max |V_i V_j - delta_ij V_i|`.
    pub idempotent: f64,
    /// `max |sum z_i V_i - T|`.
    pub resolution: f64,
}

impl LagrangeSystem {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn defects(&self) -> LagrangeDefects {
        let n = self.dim();
        let id = CMat::identity(n, n);
        let sum = self.matrices.iter().fold(CMat::zeros(n, n), |acc, v| acc + v);
        let mut idempotent: f64 = 0.0;
        for (i, vi) in self.matrices.iter().enumerate() {
            for (j, vj) in self.matrices.iter().enumerate() {
                let want = if i == j { vi.clone() } else { CMat::zeros(n, n) };
                idempotent = idempotent.max(max_abs_diff(&(vi * vj), &want));
            }
        }
        let res = self.apply_values(self.operator.eigenvalues());
        LagrangeDefects {
            partition: max_abs_diff(&sum, &id),
            idempotent,
            resolution: max_abs_diff(&res, self.operator.matrix()),
        }
    }

    /// `sum w_i V_i`.
    pub fn apply_values(&self, w: &[Complex64]) -> CMat {
        let n = self.dim();
        self.matrices.iter().zip(w).fold(CMat::zeros(n, n), |acc, (v, w)| acc + v * *w)
    }

    /// `sum V_i (x) W_i`.
    pub fn apply_matrices(&self, w: &[CMat]) -> CMat {
        let n = self.dim();
        let k = w.first().map_or(1, |m| m.nrows());
        self.matrices.iter().zip(w).fold(CMat::zeros(n * k, n * k), |acc, (v, w)| acc + kron(v, w))
    }

    /// The same system with `V_i` listed in the order of `nodes`.
    pub fn reordered(&self, nodes: &NodeTuple) -> Result<Vec<CMat>> {
        let eig = self.operator.eigenvalues();
        if nodes.len() != eig.len() {
            return Err(Error::InvalidInput(format!("{} nodes for {} eigenvalues", nodes.len(), eig.len())));
        }
        nodes
            .nodes
            .iter()
            .map(|z| {
                eig.iter()
                    .position(|e| (e - z).norm() <= NODE_MATCH_TOL * (1.0 + z.norm()))
                    .map(|i| self.matrices[i].clone())
                    .ok_or_else(|| Error::InvalidInput(format!("node ({}, {}) is not an eigenvalue", z.re, z.im)))
            })
            .collect()
    }
}

pub fn lagrange_matrices(t: &GeneralOperator) -> Result<LagrangeSystem> {
    Ok(LagrangeSystem { operator: t.clone(), matrices: t.lagrange()? })
}

/// Membership of `targets` in `I_z` (or its level-k version for matrix
/// targets), by the Pick criterion.
pub fn membership(nodes: &NodeTuple, targets: Targets, grid_size: usize, truncation: usize) -> Result<FeasibilityVerdict> {
    let problem = PickProblem::new(nodes.domain, nodes.nodes.clone(), targets)?;
    feasibility(&problem, grid_size, truncation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtConfig {
    pub sample_count: usize,
    pub max_degree: usize,
    pub seed: u64,
    pub level: usize,
    pub grid_size: usize,
    pub truncation: usize,
}

impl LtConfig {
    pub fn new(sample_count: usize, max_degree: usize, seed: u64, level: usize) -> Self {
        let v = VnConfig::new(sample_count, max_degree, seed);
        LtConfig { sample_count, max_degree, seed, level, grid_size: v.grid_size, truncation: v.truncation }
    }

    fn vn(&self) -> VnConfig {
        VnConfig {
            sample_count: self.sample_count,
            max_degree: self.max_degree,
            seed: self.seed,
            grid_size: self.grid_size,
            truncation: self.truncation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtReport {
    pub level: usize,
    /// Running maximum of the sampled norms.
    pub bound: f64,
    pub witness_index: usize,
    /// `R(z_i)` of the witness, one row-major matrix per node.
    pub witness: Vec<Vec<Vec<Complex64>>>,
    pub sample_count: usize,
    pub exceeds_one: bool,
    /// Exact contractivity verdict of `T`, available for 2x2 operators.
    pub contractive: Option<bool>,
    /// Set when the bound exceeds one although `T` is contractive.
    pub candidate_counterexample: bool,
}

/// Sampler shared by the level-1 bound and the von Neumann check.
pub fn tuple_sampler(nodes: &NodeTuple, max_degree: usize, grid_size: usize, truncation: usize) -> Result<FunctionSampler> {
    FunctionSampler::new(nodes.domain, max_degree, Some(nodes.nodes[0]), Some(&nodes.nodes), grid_size, truncation)
}

/// `U (I - P + phi(z) P) ...` with at most three factors, at `nodes`.
fn potapov_values<R: Rng + ?Sized>(rng: &mut R, domain: &PlanarDomain, k: usize, nodes: &[Complex64]) -> Vec<CMat> {
    let factors = rng.random_range(1..=MAX_POTAPOV_FACTORS);
    let mut values: Vec<CMat> = vec![haar_unitary(k, rng); nodes.len()];
    for _ in 0..factors {
        let q = haar_unitary(k, rng);
        let rank = rng.random_range(1..k);
        let cols = q.columns(0, rank);
        let p = cols * cols.adjoint();
        let a = random_disk_point(rng, MAX_ZERO_RADIUS);
        let phi = match domain {
            PlanarDomain::Annulus { inner_radius } if rng.random_bool(0.5) => RationalFunction::inverted_mobius(a, *inner_radius),
            _ => RationalFunction::mobius(a),
        };
        let id = CMat::identity(k, k);
        for (v, &z) in values.iter_mut().zip(nodes) {
            let factor = &id - &p + &p * phi.eval(z);
            *v = &*v * factor;
        }
    }
    values
}

struct LevelSample {
    norm: f64,
    values: Vec<CMat>,
}

/// Sample `index` at level `k`. The first diagonal entry is the level-1
/// sample with the same index, so level-k norms dominate level-1 norms.
fn level_sample(sampler: &FunctionSampler, lagrange: &LagrangeSystem, v: &[CMat], nodes: &NodeTuple, seed: u64, index: usize, k: usize) -> LevelSample {
    let mut rng = sample_rng(seed, index);
    let scalar = sampler.sample_with(&mut rng, index).values_at(&nodes.nodes);
    let system = LagrangeSystem { operator: lagrange.operator.clone(), matrices: v.to_vec() };
    if k == 1 {
        let norm = op_norm(&system.apply_values(&scalar));
        return LevelSample { norm, values: scalar.iter().map(|w| CMat::from_element(1, 1, *w)).collect() };
    }
    let mut diag: Vec<Vec<Complex64>> = vec![scalar];
    for _ in 1..k {
        diag.push(sampler.sample_with(&mut rng, index).values_at(&nodes.nodes));
    }
    let u = haar_unitary(k, &mut rng);
    let w = haar_unitary(k, &mut rng);
    let diagonal: Vec<CMat> = (0..nodes.len())
        .map(|i| {
            let d = CMat::from_fn(k, k, |a, b| if a == b { diag[a][i] } else { c(0.0, 0.0) });
            &u * d * &w
        })
        .collect();
    let potapov = potapov_values(&mut rng, &nodes.domain, k, &nodes.nodes);
    let n_diag = op_norm(&system.apply_matrices(&diagonal));
    let n_pot = op_norm(&system.apply_matrices(&potapov));
    if n_pot > n_diag {
        LevelSample { norm: n_pot, values: potapov }
    } else {
        LevelSample { norm: n_diag, values: diagonal }
    }
}

/// Sampled lower bound for `sup ||sum V_i (x) R(z_i)||` over the unit ball of
/// `k x k` matrix functions.
pub fn lt_norm_lower_bound(sys: &LagrangeSystem, nodes: &NodeTuple, config: &LtConfig) -> Result<LtReport> {
    if config.level == 0 {
        return Err(Error::Parameter("level must be at least 1".into()));
    }
    if config.sample_count == 0 {
        return Err(Error::Parameter("sample_count must be positive".into()));
    }
    let v = sys.reordered(nodes)?;
    let sampler = tuple_sampler(nodes, config.max_degree, config.grid_size, config.truncation)?;
    let norms: Vec<f64> = par_map(config.sample_count, |i| level_sample(&sampler, sys, &v, nodes, config.seed, i, config.level).norm);
    let best = argmax(&norms).ok_or_else(|| Error::conditioning("all sampled norms are NaN", f64::NAN))?;
    let witness = level_sample(&sampler, sys, &v, nodes, config.seed, best, config.level);
    let contractive = match sys.dim() {
        2 => Some(contractivity_2x2(&sys.operator, &nodes.domain, config.grid_size, config.truncation)?.contractive),
        _ => None,
    };
    let exceeds_one = norms[best] > 1.0 + EXCESS_TOL;
    Ok(LtReport {
        level: config.level,
        bound: norms[best],
        witness_index: best,
        witness: witness.values.iter().map(to_rows).collect(),
        sample_count: config.sample_count,
        exceeds_one,
        contractive,
        candidate_counterexample: exceeds_one && contractive == Some(true),
    })
}

/// Sample-by-sample comparison of `||f(T)||` with `||sum f(z_i) V_i||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeqlinReport {
    pub sample_count: usize,
    pub homomorphism_max: f64,
    pub homomorphism_witness: usize,
    pub linear_max: f64,
    pub linear_witness: usize,
    /// Largest per-sample difference of the two norms.
    pub max_discrepancy: f64,
    pub agree: bool,
}

pub fn homeqlin_check(t: &GeneralOperator, nodes: &NodeTuple, config: &LtConfig) -> Result<HomeqlinReport> {
    let sys = lagrange_matrices(t)?;
    let v = sys.reordered(nodes)?;
    let sampler = tuple_sampler(nodes, config.max_degree, config.grid_size, config.truncation)?;
    let op = SupportedOperator::General(t.clone());
    op.check_domain(&nodes.domain)?;
    let vn = config.vn();
    let pairs: Vec<Result<(f64, f64)>> = par_map(vn.sample_count, |i| {
        let s = sampler.sample(vn.seed, i);
        let hom = match s.rational() {
            Some(f) => op_norm(&crate::homomorphism::calc_general(t, f)?),
            None => op_norm(&op.apply(&s, Some(&sys.matrices))?),
        };
        let w = s.values_at(&nodes.nodes);
        let lin = op_norm(&LagrangeSystem { operator: t.clone(), matrices: v.clone() }.apply_values(&w));
        Ok((hom, lin))
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let hom: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let lin: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let max_discrepancy = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let hw = argmax(&hom).ok_or_else(|| Error::conditioning("all sampled norms are NaN", f64::NAN))?;
    let lw = argmax(&lin).ok_or_else(|| Error::conditioning("all sampled norms are NaN", f64::NAN))?;
    Ok(HomeqlinReport {
        sample_count: vn.sample_count,
        homomorphism_max: hom[hw],
        homomorphism_witness: hw,
        linear_max: lin[lw],
        linear_witness: lw,
        max_discrepancy,
        agree: max_discrepancy <= MATCH_TOL,
    })
}
