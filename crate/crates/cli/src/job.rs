//! Job specifications read from JSON.

use num_complex::Complex64;
use planar_dilation::homomorphism::{ModelOperatorA, ModelOperatorB};
use planar_dilation::PlanarDomain;
use serde::Deserialize;

pub const SCHEMA: u64 = 1;

fn truncation() -> usize {
    planar_dilation::kernel::DEFAULT_TRUNCATION
}

fn grid() -> usize {
    planar_dilation::pick::DEFAULT_GRID
}

fn quadrature() -> usize {
    512
}

fn max_degree() -> usize {
    5
}

fn test_exponents() -> Vec<i64> {
    (-5..=5).collect()
}

fn boundary_points() -> usize {
    64
}

fn levels() -> Vec<usize> {
    vec![1]
}

fn weighted_truncation() -> usize {
    80
}

fn weighted_quadrature() -> usize {
    1024
}

#[derive(Debug)]
pub enum Job {
    Kernel(KernelJob),
    Pick(PickJob),
    Contract(ContractJob),
    Dilate(DilateJob),
    Charfn(CharfnJob),
    OpspaceExperiment(OpspaceJob),
    Factorize(FactorizeJob),
}

impl Job {
    /// Deserializes the body of a `command` job, reporting the failing field path.
    pub fn from_value(command: &str, body: serde_json::Value) -> Result<Job, String> {
        fn parse<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, String> {
            use serde_path_to_error::Segment;
            serde_path_to_error::deserialize(v).map_err(|e| {
                let mut pointer = String::new();
                for seg in e.path().iter() {
                    match seg {
                        Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                        Segment::Map { key } => pointer.push_str(&format!("/{key}")),
                        Segment::Enum { .. } | Segment::Unknown => {}
                    }
                }
                if pointer.is_empty() {
                    pointer.push('/');
                }
                format!("at {pointer}: {}", e.into_inner())
            })
        }
        Ok(match command {
            "kernel" => Job::Kernel(parse(body)?),
            "pick" => Job::Pick(parse(body)?),
            "contract" => Job::Contract(parse(body)?),
            "dilate" => Job::Dilate(parse(body)?),
            "charfn" => Job::Charfn(parse(body)?),
            "opspace-experiment" => Job::OpspaceExperiment(parse(body)?),
            "factorize" => Job::Factorize(parse(body)?),
            other => return Err(format!("at /command: unknown command {other:?}")),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Job::Kernel(_) => "kernel",
            Job::Pick(_) => "pick",
            Job::Contract(_) => "contract",
            Job::Dilate(_) => "dilate",
            Job::Charfn(_) => "charfn",
            Job::OpspaceExperiment(_) => "opspace-experiment",
            Job::Factorize(_) => "factorize",
        }
    }

    /// Replaces every seed in the job.
    pub fn override_seed(&mut self, seed: u64) {
        let sampling = match self {
            Job::Contract(j) => j.sampling.as_mut(),
            Job::Dilate(j) => j.verify.as_mut(),
            Job::OpspaceExperiment(j) => Some(&mut j.sampling),
            Job::Factorize(j) => j.sampling.as_mut(),
            Job::Kernel(_) | Job::Pick(_) | Job::Charfn(_) => None,
        };
        if let Some(s) = sampling {
            s.seed = seed;
        }
    }
}

/// Sampling knobs; the seed is mandatory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub sample_count: usize,
    #[serde(default = "max_degree")]
    pub max_degree: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelJob {
    pub domain: PlanarDomain,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default = "truncation")]
    pub truncation: usize,
    /// Pairs `(z, w)` at which `K(z, w)` is reported.
    #[serde(default)]
    pub points: Vec<[Complex64; 2]>,
    pub verify: Option<VerifySpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "quadrature")]
    pub quadrature_points: usize,
    #[serde(default = "test_exponents")]
    pub test_exponents: Vec<i64>,
    pub test_points: Vec<Complex64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Scalar(Vec<Complex64>),
    Matrix(Vec<Vec<Vec<Complex64>>>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PickJob {
    Feasibility {
        domain: PlanarDomain,
        nodes: Vec<Complex64>,
        targets: TargetSpec,
        #[serde(default = "grid")]
        grid_size: usize,
        #[serde(default = "truncation")]
        truncation: usize,
    },
    ExtremalS {
        domain: PlanarDomain,
        z1: Complex64,
        z2: Complex64,
        #[serde(default = "grid")]
        grid_size: usize,
        #[serde(default = "truncation")]
        truncation: usize,
    },
    ExtremalT {
        domain: PlanarDomain,
        z: Complex64,
        #[serde(default = "truncation")]
        truncation: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    A(ModelOperatorA),
    /// `A_s` with `s` at the contractivity boundary of the domain.
    ABoundary { z1: Complex64, z2: Complex64, mu: Complex64 },
    B(ModelOperatorB),
    General { matrix: Vec<Vec<Complex64>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractJob {
    pub domain: PlanarDomain,
    pub operator: OperatorSpec,
    #[serde(default = "grid")]
    pub grid_size: usize,
    #[serde(default = "truncation")]
    pub truncation: usize,
    pub sampling: Option<Sampling>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DilationSpec {
    Pair { z1: Complex64, z2: Complex64, mu: Complex64 },
    Jet { z: Complex64, lambda: Complex64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilateJob {
    pub domain: PlanarDomain,
    pub model: DilationSpec,
    #[serde(default = "truncation")]
    pub truncation: usize,
    #[serde(default = "grid")]
    pub grid_size: usize,
    /// Truncation and quadrature of the weighted model used for annulus jets.
    #[serde(default = "weighted_truncation")]
    pub weighted_truncation: usize,
    #[serde(default = "weighted_quadrature")]
    pub weighted_quadrature: usize,
    /// Random Blaschke test functions for the dilation check.
    pub verify: Option<Sampling>,
    /// Emit the subspace vectors (large) in the witness.
    #[serde(default)]
    pub emit_vectors: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharfnJob {
    pub z1: Complex64,
    pub z2: Complex64,
    pub mu: Complex64,
    #[serde(default = "boundary_points")]
    pub boundary_points: usize,
    /// Second parameter for the equivalence test.
    pub compare_mu: Option<Complex64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpspaceJob {
    pub domain: PlanarDomain,
    pub matrix: Vec<Vec<Complex64>>,
    #[serde(default = "levels")]
    pub levels: Vec<usize>,
    pub sampling: Sampling,
    #[serde(default = "grid")]
    pub grid_size: usize,
    #[serde(default = "truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub homeqlin: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizeJob {
    pub domain: PlanarDomain,
    pub matrix: Vec<Vec<Complex64>>,
    #[serde(default = "grid")]
    pub grid_size: usize,
    #[serde(default = "truncation")]
    pub truncation: usize,
    pub sampling: Option<Sampling>,
    /// Truncation of the model used to check the embedded compression.
    pub embedding_truncation: Option<usize>,
    /// Rank of a diagonal bundle to search when no line-bundle certificate exists.
    pub bundle_rank: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_fill_optional_knobs() {
        let job = Job::from_value("kernel", json!({"domain": {"kind": "disk"}})).unwrap();
        let Job::Kernel(k) = job else { panic!("wrong variant") };
        assert_eq!(k.truncation, planar_dilation::kernel::DEFAULT_TRUNCATION);
        assert!(k.points.is_empty() && k.verify.is_none());
    }

    #[test]
    fn seeds_are_required_and_overridable() {
        let body = json!({"domain": {"kind": "disk"}, "matrix": [[[0.1, 0.0]]], "sampling": {"sample_count": 3}});
        let err = Job::from_value("opspace-experiment", body).unwrap_err();
        assert!(err.starts_with("at /sampling:") && err.contains("seed"), "{err}");
        let body = json!({"domain": {"kind": "disk"}, "matrix": [[[0.1, 0.0]]], "sampling": {"sample_count": 3, "seed": 1}});
        let mut job = Job::from_value("opspace-experiment", body).unwrap();
        job.override_seed(42);
        let Job::OpspaceExperiment(o) = job else { panic!("wrong variant") };
        assert_eq!(o.sampling.seed, 42);
        assert_eq!(o.sampling.max_degree, 5);
    }

    #[test]
    fn nested_tags_select_variants() {
        let body = json!({"mode": "extremal-t", "domain": {"kind": "annulus", "inner_radius": 0.5}, "z": [0.7, 0.0]});
        assert!(matches!(Job::from_value("pick", body).unwrap(), Job::Pick(PickJob::ExtremalT { .. })));
        let body = json!({"domain": {"kind": "disk"}, "operator": {"kind": "general", "matrix": [[[0.1, 0.0]]]}});
        let Job::Contract(c) = Job::from_value("contract", body).unwrap() else { panic!("wrong variant") };
        assert!(matches!(c.operator, OperatorSpec::General { .. }));
        assert!(Job::from_value("frobnicate", json!({})).unwrap_err().contains("/command"));
    }
}
