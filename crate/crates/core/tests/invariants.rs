//! Property tests over random inputs.

use std::f64::consts::PI;

use nalgebra::DVector;
use planar_dilation::charfn::{inner_defect, phase_unitary, theta_eval, CharFn};
use planar_dilation::exec::{par_map, seq_map};
use planar_dilation::homomorphism::{calc_a, contractivity_a, rank2_decompose, GeneralOperator, ModelOperatorA};
use planar_dilation::linalg::{max_abs_diff, min_eigen, op_norm, CMat};
use planar_dilation::opspace::lagrange_matrices;
use planar_dilation::pick::{feasibility, PickProblem};
use planar_dilation::rational::RationalFunction;
use planar_dilation::sampling::{random_blaschke, sample_rng};
use planar_dilation::{Complex64, PlanarDomain, TruncatedKernel};
use proptest::prelude::*;

type C = Complex64;

fn disk_point(max: f64) -> impl Strategy<Value = C> {
    (0.0..max, -PI..PI).prop_map(|(r, t)| C::from_polar(r, t))
}

fn annulus_point() -> impl Strategy<Value = C> {
    (0.56..0.94, -PI..PI).prop_map(|(r, t)| C::from_polar(r, t))
}

fn pseudo_hyperbolic(a: C, b: C) -> f64 {
    ((a - b) / (1.0 - b.conj() * a)).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_hermitian_and_positive(z in prop::collection::vec(annulus_point(), 3), a in 0.0..1.0f64) {
        let k = TruncatedKernel::with_exponent(PlanarDomain::annulus(0.5).unwrap(), a, 120).unwrap();
        for &x in &z {
            for &y in &z {
                let d = (k.eval(x, y).unwrap() - k.eval(y, x).unwrap().conj()).norm();
                prop_assert!(d < 1e-12 * k.eval(x, x).unwrap().re.max(1.0));
            }
        }
        let g = k.gram(&z).unwrap();
        let (lmin, _) = min_eigen(&g);
        prop_assert!(lmin > -1e-10 * g.trace().re);
    }

    #[test]
    fn disk_two_point_pick_is_schwarz_pick(z1 in disk_point(0.9), z2 in disk_point(0.9), w1 in disk_point(0.95), w2 in disk_point(0.95)) {
        let dz = pseudo_hyperbolic(z1, z2);
        let dw = pseudo_hyperbolic(w1, w2);
        prop_assume!(dz > 1e-3 && (dz - dw).abs() > 1e-6);
        let p = PickProblem::scalar(PlanarDomain::Disk, vec![z1, z2], vec![w1, w2]).unwrap();
        let v = feasibility(&p, 1, 400).unwrap();
        prop_assert_eq!(v.feasible, dw <= dz);
    }

    #[test]
    fn disk_contractivity_matches_closed_form(z1 in disk_point(0.8), z2 in disk_point(0.8), s in 0.05..3.0f64, mu in 0.0..1.0f64) {
        let m = pseudo_hyperbolic(z1, z2);
        prop_assume!(m > 0.05);
        let s_star = (1.0 / (m * m) - 1.0).sqrt();
        prop_assume!((s * mu - s_star).abs() > 1e-6 * s_star);
        let a = ModelOperatorA::new(z1, z2, s, C::new(mu, 0.0)).unwrap();
        let v = contractivity_a(&a, &PlanarDomain::Disk, 1, 200).unwrap();
        prop_assert_eq!(v.contractive, s * mu <= s_star);
    }

    #[test]
    fn values_determine_the_calculus(z1 in disk_point(0.8), z2 in disk_point(0.8), seed in 0u64..1000) {
        prop_assume!((z1 - z2).norm() > 1e-3);
        let a = ModelOperatorA::new(z1, z2, 0.7, C::new(0.3, 0.4)).unwrap();
        let f = random_blaschke(&mut sample_rng(seed, 0), 4, None);
        let direct = calc_a(&a, &f).unwrap();
        prop_assert!(max_abs_diff(&direct, &a.from_values(f.eval(z1), f.eval(z2))) < 1e-9);
    }

    #[test]
    fn blaschke_samples_lie_in_the_unit_ball(seed in 0u64..10_000, z in disk_point(0.999)) {
        let f = random_blaschke(&mut sample_rng(seed, 1), 5, None);
        prop_assert!(f.eval(z).norm() <= 1.0 + 1e-12);
        let u = C::from_polar(1.0, z.arg());
        prop_assert!((f.eval(u).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverted_mobius_is_bounded_on_the_annulus(a in disk_point(0.95), z in annulus_point()) {
        let f = RationalFunction::inverted_mobius(a, 0.5);
        prop_assert!(f.eval(z).norm() <= 1.0 + 1e-12);
        let inner = C::from_polar(0.5, z.arg());
        prop_assert!((f.eval(inner).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn characteristic_function_is_inner_and_covariant(z1 in disk_point(0.9), z2 in disk_point(0.9), mu in disk_point(1.0), psi in -PI..PI) {
        let cf = CharFn::new(z1, z2, mu).unwrap();
        prop_assert!(inner_defect(&cf, 64) < 1e-10);
        let rotated = CharFn::new(z1, z2, mu * C::from_polar(1.0, psi)).unwrap();
        let d = phase_unitary(psi);
        for j in 0..16 {
            let u = C::from_polar(0.9, 2.0 * PI * j as f64 / 16.0);
            let lhs = theta_eval(&rotated, u).unwrap();
            let rhs = &d * theta_eval(&cf, u).unwrap() * d.adjoint();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn rank2_blocks_are_unitarily_equivalent(entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6), z1 in disk_point(0.9), z2 in disk_point(0.9)) {
        let (p, q) = (3, 2);
        let mut t = CMat::zeros(5, 5);
        for i in 0..5 {
            t[(i, i)] = if i < p { z1 } else { z2 };
        }
        for (k, &(re, im)) in entries.iter().enumerate() {
            t[(k / q, p + k % q)] = C::new(re, im);
        }
        let d = rank2_decompose(&t, p).unwrap();
        prop_assert!(max_abs_diff(&(d.u.adjoint() * &d.u), &CMat::identity(5, 5)) < 1e-12);
        prop_assert!(max_abs_diff(&(d.u.adjoint() * &t * &d.u), &d.block_diagonal()) < 1e-10);
    }

    #[test]
    fn lagrange_matrices_resolve_the_identity(z in prop::collection::vec(disk_point(0.9), 3), off in prop::collection::vec(-0.5..0.5f64, 3)) {
        let sep = (0..3).all(|i| (0..i).all(|j| (z[i] - z[j]).norm() > 0.05));
        prop_assume!(sep);
        let mut t = CMat::from_diagonal(&DVector::from_vec(z.clone()));
        t[(1, 0)] = C::new(off[0], 0.0);
        t[(2, 0)] = C::new(off[1], 0.0);
        t[(2, 1)] = C::new(off[2], 0.0);
        let sys = lagrange_matrices(&GeneralOperator::new(t).unwrap()).unwrap();
        let d = sys.defects();
        prop_assert!(d.partition < 1e-9 && d.idempotent < 1e-9 && d.resolution < 1e-9);
    }

    #[test]
    fn parallel_and_sequential_maps_agree(n in 0usize..500, seed in 0u64..100) {
        let f = |i: usize| op_norm(&CMat::from_element(2, 2, C::new((i as f64 + seed as f64).sin(), 0.0)));
        prop_assert_eq!(par_map(n, f), seq_map(n, f));
    }
}
