use std::sync::Arc;

use proptest::prelude::*;

use jstar::algebra::{make_cartan_type1, make_cartan_type4, make_full, AlgebraDescriptor};
use jstar::controls::{corollary_bound, ControlDescriptor};
use jstar::maps::{make_example23, MapDescriptor, MatrixMap};
use jstar::matrix::{CMatrix, Complex};
use jstar::scalars::{decompose_lambda, unimodular_triple};
use jstar::stability::{defect_mixed, extract, ExtractionParams};

fn algebra(index: usize) -> AlgebraDescriptor {
    match index % 6 {
        0 => make_full(1).unwrap(),
        1 => make_full(2).unwrap(),
        2 => make_full(3).unwrap(),
        3 => make_cartan_type1(2, 3).unwrap(),
        4 => make_cartan_type1(3, 1).unwrap(),
        _ => make_cartan_type4(4).unwrap(),
    }
}

fn element() -> impl Strategy<Value = CMatrix> {
    (0usize..6, any::<u64>(), -6i32..6).prop_map(|(a, seed, e)| algebra(a).sample(seed, 2f64.powi(e)))
}

fn pair() -> impl Strategy<Value = (CMatrix, CMatrix)> {
    (0usize..6, any::<u64>(), any::<u64>()).prop_map(|(a, s, t)| {
        let alg = algebra(a);
        (alg.sample(s, 1.0), alg.sample(t, 1.0))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn triple_norm_is_cube(x in element()) {
        let n = x.spectral_norm();
        prop_assert!((x.triple().spectral_norm() - n.powi(3)).abs() <= 1e-9 * n.powi(3).max(1.0));
    }

    #[test]
    fn adjoint_is_isometric(x in element()) {
        prop_assert!(rel(x.adjoint().spectral_norm(), x.spectral_norm()) <= 1e-12);
        prop_assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn norm_is_homogeneous(x in element(), re in -10.0f64..10.0, im in -10.0f64..10.0) {
        let lambda = Complex::new(re, im);
        prop_assert!((x.scale(lambda).spectral_norm() - lambda.norm() * x.spectral_norm()).abs()
            <= 1e-12 * lambda.norm() * x.spectral_norm() + f64::MIN_POSITIVE);
    }

    #[test]
    fn norm_obeys_triangle_inequality((x, y) in pair()) {
        let lhs = x.add(&y).unwrap().spectral_norm();
        prop_assert!(lhs <= (x.spectral_norm() + y.spectral_norm()) * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_norm_is_bracketed_by_frobenius(x in element()) {
        let (s, f) = (x.spectral_norm(), x.frobenius_norm());
        let k = x.rows().min(x.cols()) as f64;
        prop_assert!(s <= f * (1.0 + 1e-12));
        prop_assert!(f <= s * k.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn projection_contracts_and_is_idempotent(a in 0usize..6, seed in any::<u64>()) {
        let alg = algebra(a);
        let (r, c) = alg.ambient();
        let full = make_cartan_type1(r, c).unwrap();
        let x = full.sample(seed, 1.0);
        let p = alg.project(&x).unwrap();
        prop_assert!(p.frobenius_norm() <= x.frobenius_norm() * (1.0 + 1e-12));
        let pp = alg.project(&p).unwrap();
        prop_assert!(pp.distance(&p).unwrap() <= 1e-12 * (1.0 + p.spectral_norm()));
        prop_assert!(alg.membership_residual(&p).unwrap() <= 1e-12 * (1.0 + p.spectral_norm()));
    }

    #[test]
    fn corollary_matches_closed_form(alpha in 0.0f64..20.0, p in 0.0f64..0.99, nx in 0.0f64..100.0) {
        let cor = corollary_bound(alpha, p, nx).unwrap();
        let tilde = ControlDescriptor::power(alpha, p).unwrap().eval_tilde(nx, nx, 0.0).unwrap();
        prop_assert!((cor - tilde).abs() <= 1e-12 * cor.max(tilde).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn tilde_is_monotone(
        alpha in 0.0f64..10.0, p in 0.0f64..0.99, c in 0.0f64..10.0,
        n in prop::array::uniform3(0.0f64..100.0), bump in 0.0f64..5.0, which in 0usize..3,
    ) {
        let ctrl = ControlDescriptor::sum(vec![
            ControlDescriptor::constant(c).unwrap(),
            ControlDescriptor::power(alpha, p).unwrap(),
        ]).unwrap();
        let mut m = n;
        m[which] += bump;
        let base = ctrl.eval_tilde(n[0], n[1], n[2]).unwrap();
        prop_assert!(ctrl.eval_tilde(m[0], m[1], m[2]).unwrap() >= base);
        let bigger = ControlDescriptor::sum(vec![
            ControlDescriptor::constant(c + bump).unwrap(),
            ControlDescriptor::power(alpha + bump, p).unwrap(),
        ]).unwrap();
        prop_assert!(bigger.eval_tilde(n[0], n[1], n[2]).unwrap() >= base);
    }

    #[test]
    fn power_tilde_scaling_law(alpha in 0.01f64..10.0, p in 0.0f64..0.99, n in prop::array::uniform3(0.0f64..100.0)) {
        let ctrl = ControlDescriptor::power(alpha, p).unwrap();
        let base = ctrl.eval_tilde(n[0], n[1], n[2]).unwrap();
        let doubled = ctrl.eval_tilde(2.0 * n[0], 2.0 * n[1], 2.0 * n[2]).unwrap();
        prop_assert!((doubled - 2f64.powf(p) * base).abs() <= 1e-12 * doubled.max(f64::MIN_POSITIVE));
    }

    // The certified remainder always brackets the closed form. Its size falls
    // below 1e-9·(1 + φ̃) at 60 terms only while 2^{60(p−1)} ≤ 1e-9, i.e. p ≤ 0.5.
    #[test]
    fn truncated_series_brackets_closed_form(
        alpha in 0.0f64..10.0, p in 0.0f64..0.99, c in 0.0f64..10.0, n in prop::array::uniform3(0.0f64..100.0),
    ) {
        let ctrl = ControlDescriptor::sum(vec![
            ControlDescriptor::constant(c).unwrap(),
            ControlDescriptor::power(alpha, p).unwrap(),
        ]).unwrap();
        let tilde = ctrl.eval_tilde(n[0], n[1], n[2]).unwrap();
        let s = ctrl.eval_tilde_series(n[0], n[1], n[2], 60).unwrap();
        prop_assert!((tilde - s.value).abs() <= s.tail_bound);
        if p <= 0.5 {
            prop_assert!(s.tail_bound <= 1e-9 * (1.0 + tilde));
        }
    }

    #[test]
    fn unimodular_triple_invariants(r in 0.0f64..=3.0, theta in 0.0f64..std::f64::consts::TAU) {
        let z = Complex::from_polar(r, theta);
        let t = unimodular_triple(z).unwrap();
        prop_assert!(t.modulus_defect() <= 1e-12);
        prop_assert!(t.sum_defect() <= 1e-12 * (1.0 + r));
    }

    #[test]
    fn decomposition_invariants(r in 1e-6f64..1e4, theta in 0.0f64..std::f64::consts::TAU) {
        let lambda = Complex::from_polar(r, theta);
        let d = decompose_lambda(lambda).unwrap();
        prop_assert!(d.m as f64 > 4.0 * r && (d.m as f64 - 1.0) <= 4.0 * r);
        prop_assert!(d.triple.modulus_defect() <= 1e-12);
        prop_assert!(d.reconstruction_residual() <= 1e-12 * (1.0 + r));
    }

    #[test]
    fn decomposition_rotates_with_lambda(r in 1e-3f64..100.0, theta in 0.0f64..6.0, phi in 0.0f64..6.0) {
        let lambda = Complex::from_polar(r, theta);
        let turn = Complex::from_polar(1.0, phi);
        let (a, b) = (decompose_lambda(lambda).unwrap(), decompose_lambda(lambda * turn).unwrap());
        prop_assume!(a.m == b.m);
        for (u, v) in a.triple.mus().iter().zip(b.triple.mus()) {
            prop_assert!((u * turn - v).norm() <= 1e-12);
        }
    }

    #[test]
    fn extraction_fixes_zero(a in 0usize..6, alpha in 0.0f64..2.0, p in 0.0f64..0.99, seed in any::<u64>()) {
        let alg = Arc::new(algebra(a));
        let (r, c) = alg.ambient();
        let inner = MapDescriptor::transpose(alg.clone());
        let inner = if r == c { inner.unwrap() } else { MapDescriptor::zero(alg.clone()).unwrap() };
        let h = MapDescriptor::ball_noise(inner, alpha, p, 8.0, seed).unwrap();
        let out = extract(&h, &CMatrix::zeros(r, c), &ExtractionParams::default()).unwrap();
        prop_assert!(out.converged && out.value.is_zero());
    }

    #[test]
    fn truncated_map_extracts_to_zero(seed in any::<u64>(), e in -20i32..10) {
        let alg = Arc::new(make_full(2).unwrap());
        let h = make_example23(MapDescriptor::transpose(alg.clone()).unwrap()).unwrap();
        let x = alg.sample(seed, 2f64.powi(e));
        let out = extract(&h, &x, &ExtractionParams::default()).unwrap();
        prop_assert!(out.converged && out.value.is_zero());
        prop_assert!(h.eval(&x).unwrap().distance(&out.value).unwrap() <= 4.0);
    }

    #[test]
    fn exact_maps_have_no_mixed_defect(seeds in prop::array::uniform3(any::<u64>()), phase in 0.0f64..6.3) {
        let alg = Arc::new(make_full(2).unwrap());
        let h = MapDescriptor::transpose(alg.clone()).unwrap();
        let [x, y, z] = seeds.map(|s| alg.sample(s, 1.0));
        let d = defect_mixed(&h, Complex::from_polar(1.0, phase), &x, &y, &z).unwrap();
        prop_assert!(d <= 1e-12 * (1.0 + z.spectral_norm().powi(3)));
    }
}
