//! Kernels built from the eigenvectors of `T*`, the Pick-type contractivity
//! test they induce, and Schur-product certificates of dilatability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilation::{compress, TruncatedHardyModel};
use crate::domain::{KernelIndex, PlanarDomain};
use crate::error::{Error, Result};
use crate::exec::{argmin, par_map};
use crate::homomorphism::{contractivity_2x2, GeneralOperator};
use crate::kernel::{TruncatedKernel, PSD_TOL};
use crate::linalg::{c, hermitian_eigen, hermitian_part, max_abs_diff, min_eigen, psd_factor, to_rows, trace_re, CMat, CVec};
use crate::opspace::{tuple_sampler, NodeTuple};
use crate::pick::index_grid;
use crate::sampling::UnitBallSample;

/// Kernel values below this make the entrywise quotient singular.
pub const QUOTIENT_MIN: f64 = 1e-14;
/// Tolerance of the reconstruction `K = K_alpha o A`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
const BUNDLE_ITERATIONS: usize = 5000;
const BUNDLE_TOL: f64 = 1e-9;

/// `K[j][i] = <v_i, v_j>` for the unit eigenvectors `v_i` of `T*`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenKernel {
    pub nodes: Vec<Complex64>,
    pub gram: CMat,
    pub operator: GeneralOperator,
}

impl EigenKernel {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn eigen_kernel(t: &GeneralOperator) -> Result<EigenKernel> {
    let v = t.eigenvectors();
    let gram = hermitian_part(&(v.adjoint() * v));
    let (lmin, _) = min_eigen(&gram);
    if !(lmin > 0.0) {
        return Err(Error::conditioning("eigenvector Gram matrix", lmin));
    }
    Ok(EigenKernel { nodes: t.eigenvalues().to_vec(), gram, operator: t.clone() })
}

/// `P[i][j] = (1 - conj(f(z_i)) f(z_j)) K[j][i]`.
pub fn pick_type_matrix(ek: &EigenKernel, values: &[Complex64]) -> CMat {
    let n = ek.len();
    hermitian_part(&CMat::from_fn(n, n, |i, j| (1.0 - values[i].conj() * values[j]) * ek.gram[(j, i)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickViolation {
    pub sample_index: usize,
    pub sample: UnitBallSample,
    pub eigenvalue: f64,
    pub eigenvector: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickTestVerdict {
    /// No sampled matrix had `lambda_min < -1e-10 trace`.
    pub no_violation_found: bool,
    /// Most negative `lambda_min / trace` over the samples.
    pub min_relative_eigenvalue: f64,
    pub violation: Option<PickViolation>,
    pub sample_count: usize,
    /// Exact verdict of the 2x2 model criterion, when `T` is 2x2.
    pub exact_contractive: Option<bool>,
}

/// Samples unit-ball functions and tests the Pick-type matrix of each.
pub fn contractivity_pick_test(
    ek: &EigenKernel,
    domain: &PlanarDomain,
    sample_count: usize,
    max_degree: usize,
    seed: u64,
    grid_size: usize,
    truncation: usize,
) -> Result<PickTestVerdict> {
    if sample_count == 0 {
        return Err(Error::Parameter("sample_count must be positive".into()));
    }
    let nodes = NodeTuple::new(*domain, ek.nodes.clone())?;
    let sampler = tuple_sampler(&nodes, max_degree, grid_size, truncation)?;
    let rel: Vec<f64> = par_map(sample_count, |i| {
        let w = sampler.sample(seed, i).values_at(&ek.nodes);
        let p = pick_type_matrix(ek, &w);
        min_eigen(&p).0 / trace_re(&p).abs().max(f64::MIN_POSITIVE)
    });
    let worst = argmin(&rel).ok_or_else(|| Error::conditioning("all sampled eigenvalues are NaN", f64::NAN))?;
    let violated = rel[worst] < -PSD_TOL;
    let violation = violated.then(|| {
        let sample = sampler.sample(seed, worst);
        let p = pick_type_matrix(ek, &sample.values_at(&ek.nodes));
        let (eigenvalue, v) = min_eigen(&p);
        PickViolation { sample_index: worst, sample, eigenvalue, eigenvector: v.iter().copied().collect() }
    });
    Ok(PickTestVerdict {
        no_violation_found: !violated,
        min_relative_eigenvalue: rel[worst],
        violation,
        sample_count,
        exact_contractive: match ek.len() {
            2 => Some(contractivity_2x2(&ek.operator, domain, grid_size, truncation)?.contractive),
            _ => None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurCertificate {
    pub index: KernelIndex,
    /// `A[i][j] = K[j][i] / K_alpha(z_j, z_i)`, row-major.
    pub quotient: Vec<Vec<Complex64>>,
    pub min_eigenvalue: f64,
    /// `lambda_min(A) >= -1e-10 trace(A)`.
    pub psd: bool,
    /// Rows `a_i` with `A[i][j] = <a_i, a_j>`, present when `psd`.
    pub vectors: Option<Vec<Vec<Complex64>>>,
    /// `max |K[j][i] - K_alpha(z_j, z_i) <a_i, a_j>|`, present when `psd`.
    pub reconstruction_defect: Option<f64>,
}

/// Quotient and factorization at one index.
pub fn schur_certificate_at(ek: &EigenKernel, domain: &PlanarDomain, index: &KernelIndex, truncation: usize) -> Result<SchurCertificate> {
    let kernel = TruncatedKernel::new(*domain, index.clone(), truncation)?;
    let g = kernel.gram(&ek.nodes)?;
    if let Some(bad) = g.iter().map(|x| x.norm()).find(|&x| x < QUOTIENT_MIN) {
        return Err(Error::Degenerate(format!("kernel entry {bad:e} makes the quotient singular")));
    }
    let n = ek.len();
    let a = hermitian_part(&CMat::from_fn(n, n, |i, j| ek.gram[(j, i)] / g[(j, i)]));
    let (min_eigenvalue, _) = min_eigen(&a);
    let psd = min_eigenvalue >= -PSD_TOL * trace_re(&a).abs();
    let (vectors, reconstruction_defect) = if psd {
        let x = psd_factor(&a);
        let rebuilt = CMat::from_fn(n, n, |j, i| g[(j, i)] * x.row(i).dot(&x.row(j).conjugate()));
        (Some(to_rows(&x)), Some(max_abs_diff(&rebuilt, &ek.gram)))
    } else {
        (None, None)
    };
    Ok(SchurCertificate { index: index.clone(), quotient: to_rows(&a), min_eigenvalue, psd, vectors, reconstruction_defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchurVerdict {
    CertifiedDilatable,
    NoCertificateOnGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub verdict: SchurVerdict,
    pub certificate: Option<SchurCertificate>,
    /// `(exponent, lambda_min(A) / trace(A))` for every grid point; `None`
    /// where the quotient was singular.
    pub profile: Vec<(f64, Option<f64>)>,
    pub grid_resolution: f64,
}

/// First grid index (smallest exponent) whose quotient is positive
/// semidefinite.
pub fn schur_certificate(ek: &EigenKernel, domain: &PlanarDomain, grid_size: usize, truncation: usize) -> Result<SchurReport> {
    if grid_size == 0 {
        return Err(Error::Parameter("grid_size must be at least 1".into()));
    }
    let grid = index_grid(domain, grid_size);
    let certs: Vec<Result<SchurCertificate>> = par_map(grid.len(), |j| schur_certificate_at(ek, domain, &grid[j], truncation));
    let mut profile = Vec::with_capacity(grid.len());
    let mut found = None;
    let mut any = false;
    for (idx, cert) in grid.iter().zip(certs) {
        match cert {
            Ok(cert) => {
                any = true;
                let tr = cert.quotient.iter().enumerate().map(|(i, r)| r[i].re).sum::<f64>().abs();
                profile.push((idx.exponent(), Some(cert.min_eigenvalue / tr.max(f64::MIN_POSITIVE))));
                if cert.psd && found.is_none() {
                    found = Some(cert);
                }
            }
            Err(Error::Degenerate(_)) => profile.push((idx.exponent(), None)),
            Err(e) => return Err(e),
        }
    }
    if !any {
        return Err(Error::Degenerate("every grid quotient is singular".into()));
    }
    Ok(SchurReport {
        verdict: if found.is_some() { SchurVerdict::CertifiedDilatable } else { SchurVerdict::NoCertificateOnGrid },
        certificate: found,
        profile,
        grid_resolution: if domain.connectivity() == 0 { 0.0 } else { 1.0 / grid_size as f64 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// Rows `a_i`.
    pub vectors: Vec<Vec<Complex64>>,
    /// `max |<v_i, v_j> - K_alpha(z_j, z_i) <a_i, a_j>|`.
    pub gram_defect: f64,
    /// Compression of `M* (x) I` to the embedded span, in the standard basis
    /// of `C^n`, row-major.
    pub compression: Option<Vec<Vec<Complex64>>>,
    /// `max |compression - T*|`.
    pub compression_defect: Option<f64>,
    pub invariance_defect: Option<f64>,
}

/// `v_i -> K_alpha(., z_i) (x) a_i`. With `truncation`, also builds the span in
/// the truncated model and compresses `M* (x) I` onto it.
pub fn embedding_vectors(cert: &SchurCertificate, ek: &EigenKernel, domain: &PlanarDomain, truncation: Option<usize>) -> Result<Embedding> {
    let rows = cert
        .vectors
        .as_ref()
        .filter(|_| cert.psd)
        .ok_or_else(|| Error::InvalidInput("certificate is not positive semidefinite".into()))?;
    let n = ek.len();
    let a = crate::linalg::from_rows(rows)?;
    let kernel = TruncatedKernel::new(*domain, cert.index.clone(), crate::kernel::DEFAULT_TRUNCATION.max(truncation.unwrap_or(0)))?;
    let g = kernel.gram(&ek.nodes)?;
    let rebuilt = CMat::from_fn(n, n, |j, i| g[(j, i)] * a.row(i).dot(&a.row(j).conjugate()));
    let gram_defect = max_abs_diff(&rebuilt, &ek.gram);
    let mut out = Embedding { vectors: rows.clone(), gram_defect, compression: None, compression_defect: None, invariance_defect: None };
    if let Some(nt) = truncation {
        let model = TruncatedHardyModel::plain(TruncatedKernel::new(*domain, cert.index.clone(), nt)?);
        let d = model.dim();
        let k = a.ncols();
        // columns W_i = k_{z_i} (x) a_i, block b holding a_i[b] k_{z_i}
        let w: Vec<CVec> = ek
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let kz = model.kernel_coords(z)?;
                Ok(CVec::from_fn(d * k, |r, _| kz[r % d] * a[(i, r / d)]))
            })
            .collect::<Result<_>>()?;
        let v = ek.operator.eigenvectors();
        let v_inv = v.clone().try_inverse().ok_or_else(|| Error::conditioning("eigenvector matrix", f64::INFINITY))?;
        let gamma = CMat::from_columns(&w) * v_inv;
        let cols: Vec<CVec> = (0..n).map(|j| gamma.column(j).into_owned()).collect();
        let comp = compress(&model, &cols)?;
        out.compression_defect = Some(max_abs_diff(&comp.matrix, &ek.operator.matrix().adjoint()));
        out.invariance_defect = Some(comp.invariance_defect);
        out.compression = Some(to_rows(&comp.matrix));
    }
    Ok(out)
}

/// `K = sum_l K_{alpha_l} o A_l^T` with positive semidefinite `A_l`, for a
/// block-diagonal bundle kernel with line-bundle blocks `alpha_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleCertificate {
    pub indices: Vec<KernelIndex>,
    /// `A_l`, row-major, with `A_l[i][j] = <x_i^l, x_j^l>`.
    pub blocks: Vec<Vec<Vec<Complex64>>>,
    /// `max |K - sum_l K_{alpha_l} o A_l^T|` after the final projection.
    pub residual: f64,
    pub iterations: usize,
}

/// Alternating projections between the affine set of exact decompositions and
/// the product of positive semidefinite cones. `None` when the iteration does
/// not reach the tolerance.
pub fn bundle_schur_certificate(ek: &EigenKernel, domain: &PlanarDomain, exponents: &[f64], truncation: usize) -> Result<Option<BundleCertificate>> {
    if exponents.is_empty() {
        return Err(Error::Parameter("bundle rank must be at least 1".into()));
    }
    let n = ek.len();
    let indices: Vec<KernelIndex> = exponents.iter().map(|&a| KernelIndex::for_domain(domain, a)).collect();
    let grams = indices
        .iter()
        .map(|idx| TruncatedKernel::new(*domain, idx.clone(), truncation)?.gram(&ek.nodes))
        .collect::<Result<Vec<_>>>()?;
    let weight = CMat::from_fn(n, n, |i, j| c(grams.iter().map(|g| g[(i, j)].norm_sqr()).sum::<f64>(), 0.0));
    if weight.iter().any(|w| w.re < QUOTIENT_MIN * QUOTIENT_MIN) {
        return Err(Error::Degenerate("kernel entries vanish for every block".into()));
    }
    let scale = ek.gram.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let residual_of = |h: &[CMat]| -> CMat {
        let sum = h.iter().zip(&grams).fold(CMat::zeros(n, n), |acc, (h, g)| acc + g.component_mul(h));
        &ek.gram - sum
    };
    let mut h: Vec<CMat> = vec![CMat::zeros(n, n); grams.len()];
    for it in 1..=BUNDLE_ITERATIONS {
        let r = residual_of(&h);
        let lambda = r.component_div(&weight);
        for (h, g) in h.iter_mut().zip(&grams) {
            *h += g.map(|x| x.conj()).component_mul(&lambda);
        }
        for h in h.iter_mut() {
            let (vals, vecs) = hermitian_eigen(&hermitian_part(h));
            let clipped = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&v| c(v.max(0.0), 0.0))));
            *h = &vecs * clipped * vecs.adjoint();
        }
        let res = residual_of(&h).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if res <= BUNDLE_TOL * scale {
            return Ok(Some(BundleCertificate {
                indices,
                blocks: h.iter().map(|m| to_rows(&m.transpose())).collect(),
                residual: res,
                iterations: it,
            }));
        }
    }
    Ok(None)
}

/// Scans nondecreasing `rank`-tuples of grid exponents in lexicographic order
/// and returns the first bundle certificate.
pub fn bundle_search(ek: &EigenKernel, domain: &PlanarDomain, rank: usize, grid_size: usize, truncation: usize) -> Result<Option<BundleCertificate>> {
    if rank == 0 || grid_size == 0 {
        return Err(Error::Parameter("rank and grid_size must be positive".into()));
    }
    let grid: Vec<f64> = index_grid(domain, grid_size).iter().map(|i| i.exponent()).collect();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize; rank];
    loop {
        tuples.push(cur.clone());
        let mut pos = rank;
        while pos > 0 && cur[pos - 1] + 1 == grid.len() {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        cur[pos - 1] += 1;
        for p in pos..rank {
            cur[p] = cur[pos - 1];
        }
    }
    let results = par_map(tuples.len(), |t| {
        let ex: Vec<f64> = tuples[t].iter().map(|&j| grid[j]).collect();
        bundle_schur_certificate(ek, domain, &ex, truncation)
    });
    for r in results {
        match r {
            Ok(Some(cert)) => return Ok(Some(cert)),
            Ok(None) | Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}
