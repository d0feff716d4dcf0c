//! Execution of each job kind.

use num_complex::Complex64;
use planar_dilation::charfn::{coincidence, inner_defect, similarity_residual, theta_product_at_node, unitary_equiv, CharFn};
use planar_dilation::dilation::{alpha0_search, dilate_jet, dilate_pair, verify_dilation, weighted_hardy, TruncatedHardyModel};
use planar_dilation::factorization::{bundle_search, contractivity_pick_test, eigen_kernel, embedding_vectors, schur_certificate, SchurVerdict};
use planar_dilation::homomorphism::{
    contractivity_2x2, contractivity_a, contractivity_b, vn_sample_check, GeneralOperator, ModelOperatorA, ModelOperatorB,
    SupportedOperator, VnConfig,
};
use planar_dilation::kernel::{PSD_TOL, REPRODUCING_TOL};
use planar_dilation::linalg::{from_rows, to_rows, CVec};
use planar_dilation::opspace::{homeqlin_check, lagrange_matrices, lt_norm_lower_bound, LtConfig, NodeTuple, EXCESS_TOL};
use planar_dilation::pick::{extremal_s, extremal_t, feasibility, PickProblem, Targets};
use planar_dilation::rational::RationalFunction;
use planar_dilation::sampling::{random_blaschke, sample_rng};
use planar_dilation::{build_quadrature, PlanarDomain, Result, TruncatedKernel};
use serde_json::{json, Value};

use crate::job::*;

/// Entrywise tolerance of compressions on the disk.
const DISK_DILATION_TOL: f64 = 1e-6;
/// The annulus models converge more slowly in the truncation.
const ANNULUS_DILATION_TOL: f64 = 1e-5;
const INNER_POINTS: usize = 256;

pub struct Outcome {
    pub parameters: Value,
    pub tolerances: Value,
    pub result: Value,
    /// Completed with a negative verdict.
    pub negative: bool,
    pub csv: Option<String>,
}

pub fn run(job: &Job) -> Result<Outcome> {
    match job {
        Job::Kernel(j) => kernel(j),
        Job::Pick(j) => pick(j),
        Job::Contract(j) => contract(j),
        Job::Dilate(j) => dilate(j),
        Job::Charfn(j) => charfn(j),
        Job::OpspaceExperiment(j) => opspace(j),
        Job::Factorize(j) => factorize(j),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn sampling_value(s: &Option<Sampling>) -> Value {
    match s {
        Some(s) => json!({"sample_count": s.sample_count, "max_degree": s.max_degree, "seed": s.seed}),
        None => Value::Null,
    }
}

fn kernel(j: &KernelJob) -> Result<Outcome> {
    let k = TruncatedKernel::with_exponent(j.domain, j.exponent, j.truncation)?;
    let values = j
        .points
        .iter()
        .map(|[z, w]| Ok(json!({"z": z, "w": w, "k": k.eval(*z, *w)?, "tail_bound": k.tail_bound(*z, *w)})))
        .collect::<Result<Vec<_>>>()?;
    let mut negative = false;
    let verify = match &j.verify {
        Some(v) => {
            let q = build_quadrature(&j.domain, v.quadrature_points)?;
            let defect = k.verify_reproducing(&q, &v.test_exponents, &v.test_points)?;
            negative = !(defect < REPRODUCING_TOL);
            json!({
                "defect": defect,
                "pass": !negative,
                "quadrature_points": v.quadrature_points,
                "test_exponents": v.test_exponents,
            })
        }
        None => Value::Null,
    };
    let pairs: Vec<(Complex64, Complex64)> = j.points.iter().map(|p| (p[0], p[1])).collect();
    Ok(Outcome {
        parameters: json!({"domain": j.domain, "exponent": k.index().exponent(), "truncation": j.truncation}),
        tolerances: json!({"reproducing": REPRODUCING_TOL}),
        result: json!({"values": values, "verify": verify}),
        negative,
        csv: Some(k.csv(&pairs)?),
    })
}

fn pick(j: &PickJob) -> Result<Outcome> {
    match j {
        PickJob::Feasibility { domain, nodes, targets, grid_size, truncation } => {
            let targets = match targets {
                TargetSpec::Scalar(w) => Targets::Scalar(w.clone()),
                TargetSpec::Matrix(w) => Targets::Matrix(w.iter().map(|m| from_rows(m)).collect::<Result<_>>()?),
            };
            let problem = PickProblem::new(*domain, nodes.clone(), targets)?;
            let verdict = feasibility(&problem, *grid_size, *truncation)?;
            let mut csv = String::from("exponent,relative_min_eigenvalue\n");
            for (a, v) in &verdict.profile {
                csv.push_str(&format!("{a:.17e},{v:.17e}\n"));
            }
            Ok(Outcome {
                parameters: json!({"domain": domain, "grid_size": grid_size, "truncation": truncation}),
                tolerances: json!({"psd_relative": PSD_TOL, "marginal": planar_dilation::pick::MARGINAL_TOL}),
                negative: !verdict.feasible,
                result: to_value(&verdict),
                csv: Some(csv),
            })
        }
        PickJob::ExtremalS { domain, z1, z2, grid_size, truncation } => {
            let e = extremal_s(domain, *z1, *z2, *grid_size, *truncation)?;
            Ok(Outcome {
                parameters: json!({"domain": domain, "grid_size": grid_size, "truncation": truncation}),
                tolerances: json!({}),
                result: to_value(&e),
                negative: false,
                csv: None,
            })
        }
        PickJob::ExtremalT { domain, z, truncation } => {
            let t = extremal_t(domain, *z, *truncation)?;
            Ok(Outcome {
                parameters: json!({"domain": domain, "truncation": truncation}),
                tolerances: json!({}),
                result: json!({"t": t}),
                negative: false,
                csv: None,
            })
        }
    }
}

fn contract(j: &ContractJob) -> Result<Outcome> {
    let (op, verdict) = match &j.operator {
        OperatorSpec::A(a) => {
            a.validate()?;
            (SupportedOperator::A(*a), Some(contractivity_a(a, &j.domain, j.grid_size, j.truncation)?))
        }
        OperatorSpec::ABoundary { z1, z2, mu } => {
            let a = ModelOperatorA::boundary(&j.domain, *z1, *z2, *mu, j.grid_size, j.truncation)?;
            (SupportedOperator::A(a), Some(contractivity_a(&a, &j.domain, j.grid_size, j.truncation)?))
        }
        OperatorSpec::B(b) => {
            let b = ModelOperatorB::new(b.z, b.t, b.lambda)?;
            (SupportedOperator::B(b), Some(contractivity_b(&b, &j.domain, j.truncation)?))
        }
        OperatorSpec::General { matrix } => {
            let t = GeneralOperator::new(from_rows(matrix)?)?;
            let v = match t.dim() {
                2 => Some(contractivity_2x2(&t, &j.domain, j.grid_size, j.truncation)?),
                _ => None,
            };
            (SupportedOperator::General(t), v)
        }
    };
    op.check_domain(&j.domain)?;
    let vn = match &j.sampling {
        Some(s) => {
            let config = VnConfig { sample_count: s.sample_count, max_degree: s.max_degree, seed: s.seed, grid_size: j.grid_size, truncation: j.truncation };
            Some(vn_sample_check(&op, &j.domain, &config)?)
        }
        None => None,
    };
    let negative = verdict.as_ref().is_some_and(|v| !v.contractive) || vn.as_ref().is_some_and(|r| r.max_norm > 1.0 + EXCESS_TOL);
    Ok(Outcome {
        parameters: json!({
            "domain": j.domain,
            "grid_size": j.grid_size,
            "truncation": j.truncation,
            "sampling": sampling_value(&j.sampling),
        }),
        tolerances: json!({"critical_slack": planar_dilation::homomorphism::CRITICAL_SLACK, "norm_excess": EXCESS_TOL}),
        result: json!({"matrix": to_rows(&op.matrix()), "verdict": verdict, "von_neumann": vn}),
        negative,
        csv: None,
    })
}

fn dilate(j: &DilateJob) -> Result<Outcome> {
    let tol = if j.domain.is_annulus() { ANNULUS_DILATION_TOL } else { DISK_DILATION_TOL };
    let (model, mut witness, target, model_report) = match j.model {
        DilationSpec::Pair { z1, z2, mu } => {
            let index = match j.domain {
                PlanarDomain::Disk => planar_dilation::KernelIndex::trivial(),
                PlanarDomain::Annulus { .. } => alpha0_search(&j.domain, z1, z2, j.grid_size, j.truncation)?,
            };
            let model = TruncatedHardyModel::plain(TruncatedKernel::new(j.domain, index.clone(), j.truncation)?);
            let (w, a) = dilate_pair(&model, z1, z2, mu)?;
            let report = json!({"kind": "a", "operator": a, "kernel_index": index.exponent()});
            (model, w, a.matrix(), report)
        }
        DilationSpec::Jet { z, lambda } => {
            let model = match j.domain {
                PlanarDomain::Disk => TruncatedHardyModel::plain(TruncatedKernel::szego(j.domain, j.truncation)?),
                PlanarDomain::Annulus { .. } => {
                    let q = build_quadrature(&j.domain, j.weighted_quadrature)?;
                    weighted_hardy(&j.domain, z, &q, j.weighted_truncation)?
                }
            };
            let (w, b) = dilate_jet(&model, z, lambda)?;
            let report = json!({"kind": "b", "operator": b, "extremal_t": extremal_t(&j.domain, z, j.truncation)?});
            (model, w, b.matrix(), report)
        }
    };
    let verify = match &j.verify {
        Some(s) => {
            let vectors: Vec<CVec> = witness.vectors.iter().map(|v| CVec::from_vec(v.clone())).collect();
            let mut fs = vec![RationalFunction::identity()];
            fs.extend((0..s.sample_count).map(|i| random_blaschke(&mut sample_rng(s.seed, i), s.max_degree, None)));
            Some(verify_dilation(&model, &vectors, &target, &fs)?)
        }
        None => None,
    };
    let negative = witness.defect > tol || verify.is_some_and(|d| d > tol);
    if !j.emit_vectors {
        witness.vectors.clear();
    }
    Ok(Outcome {
        parameters: json!({
            "domain": j.domain,
            "truncation": j.truncation,
            "grid_size": j.grid_size,
            "model_dimension": model.dim(),
            "weighted_truncation": j.weighted_truncation,
            "weighted_quadrature": j.weighted_quadrature,
            "verify": sampling_value(&j.verify),
        }),
        tolerances: json!({"defect": tol, "coinvariance": planar_dilation::dilation::COINVARIANCE_TOL}),
        result: json!({
            "model": model_report,
            "witness": witness,
            "multiplication_norm": model.multiplication_norm(),
            "verify_defect": verify,
        }),
        negative,
        csv: None,
    })
}

fn charfn(j: &CharfnJob) -> Result<Outcome> {
    let cf = CharFn::new(j.z1, j.z2, j.mu)?;
    let compare = match j.compare_mu {
        Some(mu2) => {
            let other = CharFn::new(j.z1, j.z2, mu2)?;
            let e = unitary_equiv(j.mu, mu2);
            let residual = e.certificate.as_ref().map(|w| similarity_residual(w, &cf.operator(), &other.operator()));
            let co = coincidence(&cf, &other);
            Some(json!({
                "mu": mu2,
                "equivalent": e.equivalent,
                "certificate": e.certificate.as_ref().map(to_rows),
                "certificate_residual": residual,
                "coincidence_residual": co.residual,
                "coincide": co.coincide,
            }))
        }
        None => None,
    };
    let negative = compare.as_ref().is_some_and(|c| c["equivalent"] == Value::Bool(false));
    Ok(Outcome {
        parameters: json!({"boundary_points": j.boundary_points, "inner_points": INNER_POINTS}),
        tolerances: json!({
            "modulus": planar_dilation::charfn::MODULUS_TOL,
            "coincidence": planar_dilation::charfn::COINCIDENCE_TOL,
        }),
        result: json!({
            "operator": to_rows(&cf.operator()),
            "inner_defect": inner_defect(&cf, INNER_POINTS),
            "node_product": to_rows(&theta_product_at_node(&cf)),
            "det_zeros": cf.det_zeros()?,
            "compare": compare,
        }),
        negative,
        csv: Some(cf.boundary_csv(j.boundary_points)),
    })
}

fn opspace(j: &OpspaceJob) -> Result<Outcome> {
    let t = GeneralOperator::new(from_rows(&j.matrix)?)?;
    let sys = lagrange_matrices(&t)?;
    let nodes = NodeTuple::new(j.domain, t.eigenvalues().to_vec())?;
    let s = &j.sampling;
    let reports = j
        .levels
        .iter()
        .map(|&level| {
            let config = LtConfig { sample_count: s.sample_count, max_degree: s.max_degree, seed: s.seed, level, grid_size: j.grid_size, truncation: j.truncation };
            lt_norm_lower_bound(&sys, &nodes, &config)
        })
        .collect::<Result<Vec<_>>>()?;
    let homeqlin = if j.homeqlin {
        let config = LtConfig::new(s.sample_count, s.max_degree, s.seed, 1);
        let config = LtConfig { grid_size: j.grid_size, truncation: j.truncation, ..config };
        Some(homeqlin_check(&t, &nodes, &config)?)
    } else {
        None
    };
    let negative = reports.iter().any(|r| r.exceeds_one);
    Ok(Outcome {
        parameters: json!({
            "domain": j.domain,
            "levels": j.levels,
            "grid_size": j.grid_size,
            "truncation": j.truncation,
            "sampling": sampling_value(&Some(s.clone())),
        }),
        tolerances: json!({
            "lagrange": planar_dilation::opspace::LAGRANGE_TOL,
            "norm_excess": EXCESS_TOL,
            "match": planar_dilation::opspace::MATCH_TOL,
        }),
        result: json!({
            "nodes": nodes.nodes,
            "lagrange_defects": sys.defects(),
            "bounds": reports,
            "homeqlin": homeqlin,
        }),
        negative,
        csv: None,
    })
}

fn factorize(j: &FactorizeJob) -> Result<Outcome> {
    let t = GeneralOperator::new(from_rows(&j.matrix)?)?;
    let ek = eigen_kernel(&t)?;
    let report = schur_certificate(&ek, &j.domain, j.grid_size, j.truncation)?;
    let embedding = match &report.certificate {
        Some(cert) => Some(embedding_vectors(cert, &ek, &j.domain, j.embedding_truncation)?),
        None => None,
    };
    let bundle = match (report.verdict, j.bundle_rank) {
        (SchurVerdict::NoCertificateOnGrid, Some(rank)) => bundle_search(&ek, &j.domain, rank, j.grid_size, j.truncation)?,
        _ => None,
    };
    let pick_test = match &j.sampling {
        Some(s) => Some(contractivity_pick_test(&ek, &j.domain, s.sample_count, s.max_degree, s.seed, j.grid_size, j.truncation)?),
        None => None,
    };
    let certified = report.verdict == SchurVerdict::CertifiedDilatable || bundle.is_some();
    let mut csv = String::from("exponent,relative_min_eigenvalue\n");
    for (a, v) in &report.profile {
        match v {
            Some(v) => csv.push_str(&format!("{a:.17e},{v:.17e}\n")),
            None => csv.push_str(&format!("{a:.17e},\n")),
        }
    }
    Ok(Outcome {
        parameters: json!({
            "domain": j.domain,
            "grid_size": j.grid_size,
            "truncation": j.truncation,
            "embedding_truncation": j.embedding_truncation,
            "bundle_rank": j.bundle_rank,
            "sampling": sampling_value(&j.sampling),
        }),
        tolerances: json!({
            "psd_relative": PSD_TOL,
            "quotient_min": planar_dilation::factorization::QUOTIENT_MIN,
            "reconstruction": planar_dilation::factorization::RECONSTRUCTION_TOL,
        }),
        result: json!({
            "kernel": to_rows(&ek.gram),
            "nodes": ek.nodes,
            "schur": report,
            "embedding": embedding,
            "bundle": bundle,
            "pick_test": pick_test,
        }),
        negative: !certified,
        csv: Some(csv),
    })
}
