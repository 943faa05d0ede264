use nalgebra::{DMatrix, DVector};
use phygital_core::temporal::{lie_bracket, shear_tensor, sync_cost, FlowField, TabulatedField};
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #[test]
    fn linear_brackets_are_commutators(a in matrix(3), b in matrix(3), x in point(3)) {
        let got = lie_bracket(&FlowField::linear(a.clone()), &FlowField::linear(b.clone()), &x).unwrap();
        let expect = (&b * &a - &a * &b) * DVector::from_vec(x);
        prop_assert!((got - &expect).amax() <= 1e-12 * (1.0 + expect.amax()));
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(a in matrix(4), b in matrix(4), x in point(4), s in -4.0f64..4.0) {
        let (fa, fb) = (FlowField::linear(a), FlowField::linear(b));
        let xy = lie_bracket(&fa, &fb, &x).unwrap();
        let yx = lie_bracket(&fb, &fa, &x).unwrap();
        prop_assert!((&xy + &yx).amax() < 1e-10);
        let scaled = lie_bracket(&fa.scaled(s), &fb, &x).unwrap();
        prop_assert!((scaled - &xy * s).amax() < 1e-10 * (1.0 + xy.amax() * s.abs()));
    }

    #[test]
    fn jacobi_identity_for_linear_fields(a in matrix(3), b in matrix(3), c in matrix(3), x in point(3)) {
        // [[A,B],C] + [[B,C],A] + [[C,A],B] = 0 on the matrix level
        let comm = |p: &DMatrix<f64>, q: &DMatrix<f64>| q * p - p * q;
        let (fa, fb, fc) = (FlowField::linear(a.clone()), FlowField::linear(b.clone()), FlowField::linear(c.clone()));
        let ab = FlowField::linear(comm(&a, &b));
        let bc = FlowField::linear(comm(&b, &c));
        let ca = FlowField::linear(comm(&c, &a));
        let sum = lie_bracket(&ab, &fc, &x).unwrap() + lie_bracket(&bc, &fa, &x).unwrap() + lie_bracket(&ca, &fb, &x).unwrap();
        let scale = 1e3 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        prop_assert!(sum.amax() < 1e-12 * scale);
    }

    #[test]
    fn sync_cost_is_additive_over_concatenation(
        vals in prop::collection::vec(0.0f64..10.0, 3..40),
        cut in 1usize..38,
        c in 0.0f64..5.0,
    ) {
        let series: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, v)| (i as f64 * 0.1, *v)).collect();
        let cut = cut.min(series.len() - 2);
        let whole = sync_cost(&series, c).unwrap();
        let parts = sync_cost(&series[..=cut], c).unwrap() + sync_cost(&series[cut..], c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole));
    }

    #[test]
    fn sync_cost_additivity_is_exact_on_dyadic_samples(
        vals in prop::collection::vec(0u32..256, 3..20),
        cut in 1usize..18,
    ) {
        let series: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, v)| (i as f64 * 0.25, *v as f64 / 8.0)).collect();
        let cut = cut.min(series.len() - 2);
        let whole = sync_cost(&series, 1.0).unwrap();
        prop_assert_eq!(whole, sync_cost(&series[..=cut], 1.0).unwrap() + sync_cost(&series[cut..], 1.0).unwrap());
    }
}

fn analytic_x(p: &[f64]) -> Vec<f64> {
    vec![p[0].sin() * p[1], p[1].cos() + p[0] * p[0]]
}

fn analytic_y(p: &[f64]) -> Vec<f64> {
    vec![p[0] * p[1], (-p[0]).exp()]
}

fn exact_bracket(p: &[f64]) -> DVector<f64> {
    let (x, y) = (p[0], p[1]);
    let jx = DMatrix::from_row_slice(2, 2, &[x.cos() * y, x.sin(), 2.0 * x, -y.sin()]);
    let jy = DMatrix::from_row_slice(2, 2, &[y, x, -(-x).exp(), 0.0]);
    let xv = DVector::from_vec(analytic_x(p));
    let yv = DVector::from_vec(analytic_y(p));
    jy * xv - jx * yv
}

#[test]
fn tabulated_bracket_error_is_second_order_in_the_step() {
    let spacing = 1.0 / 32.0;
    let axis: Vec<f64> = (-32..=32).map(|i| i as f64 * spacing).collect();
    let tx = TabulatedField::sample(vec![axis.clone(), axis.clone()], analytic_x).unwrap();
    let ty = TabulatedField::sample(vec![axis.clone(), axis], analytic_y).unwrap();
    let probes = [[0.25, -0.5], [-0.375, 0.125], [0.5, 0.5]];
    let err = |h: f64| {
        let fx = FlowField::Tabulated(tx.clone().with_fd_step(h));
        let fy = FlowField::Tabulated(ty.clone().with_fd_step(h));
        probes
            .iter()
            .map(|p| (lie_bracket(&fx, &fy, p).unwrap() - exact_bracket(p)).norm())
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [4.0, 2.0, 1.0].iter().map(|m| err(m * spacing)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn shear_tensor_is_symmetric_with_zero_diagonal() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let region: Vec<_> = [[1.0, 0.0], [0.0, 1.0], [0.5, -0.5]].iter().map(|p| DVector::from_column_slice(p)).collect();
    let s = shear_tensor([&FlowField::linear(a), &FlowField::linear(b), &FlowField::linear(c)], &region).unwrap();
    for i in 0..3 {
        assert_eq!(s.tensor_norms[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(s.tensor_norms[i][j], s.tensor_norms[j][i]);
        }
    }
    assert!(s.tensor_norms[0][1] > 0.0);
}
