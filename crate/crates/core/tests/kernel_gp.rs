mod common;

use std::sync::Arc;

use common::{random_vector, test_rng};
use geodesic_core::kernel::{
    build_gram, posterior_weights, se_kernel_deriv, time_gram, GeodesicModel, KernelParams, Mesh, ModelBasis,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_model(n: usize, d: usize, epsilon: f64, seed: u64) -> GeodesicModel {
    let mut r = test_rng(seed);
    let mesh = Mesh::uniform(n).unwrap();
    let kernel = KernelParams::isotropic(mesh.default_lambda_sq(), d).unwrap();
    let basis = Arc::new(ModelBasis::new(mesh, kernel, epsilon).unwrap());
    let x = random_vector(&mut r, d, -1.0, 1.0);
    let y = random_vector(&mut r, d, -1.0, 1.0);
    let acc = DMatrix::from_fn(n, d, |_, _| r.random_range(-3.0..3.0));
    GeodesicModel::new(basis, x, y, acc).unwrap()
}

#[test]
fn kernel_value_on_the_diagonal_is_one() {
    assert_eq!(se_kernel_deriv(0.3, 0.3, 0.05, 0, 0).unwrap(), 1.0);
}

#[test]
fn second_time_derivative_matches_central_difference() {
    let (t, s, l) = (0.0, 0.5, 0.05);
    let h = 1e-4;
    let k = |t: f64| se_kernel_deriv(t, s, l, 0, 0).unwrap();
    let fd = (k(t + h) - 2.0 * k(t) + k(t - h)) / (h * h);
    let exact = se_kernel_deriv(t, s, l, 2, 0).unwrap();
    assert!(((fd - exact) / exact).abs() < 1e-6, "fd {fd} exact {exact}");
}

#[test]
fn fourth_order_cross_derivative_is_symmetric() {
    for (a, b) in [(0.1, 0.7), (0.9, 0.2), (0.4, 0.45)] {
        let ab = se_kernel_deriv(a, b, 0.03, 2, 2).unwrap();
        let ba = se_kernel_deriv(b, a, 0.03, 2, 2).unwrap();
        assert!((ab - ba).abs() < 1e-12 * ab.abs().max(1.0));
    }
}

#[test]
fn orders_outside_range_are_rejected() {
    assert!(se_kernel_deriv(0.0, 0.1, 0.1, 3, 0).is_err());
    assert!(se_kernel_deriv(0.0, 0.1, 0.1, 0, 3).is_err());
    assert!(se_kernel_deriv(0.0, 0.1, 0.0, 0, 0).is_err());
}

#[test]
fn three_knot_gram_layout() {
    let mesh = Mesh::uniform(3).unwrap();
    let kernel = KernelParams::isotropic(0.25, 2).unwrap();
    let g = build_gram(&mesh, &kernel, 1e-7).unwrap();
    let k = g.time_gram();
    assert_eq!(k.shape(), (5, 5));
    assert!((k[(0, 1)] - (-2.0f64).exp()).abs() < 1e-15);
    assert!(geodesic_core::linalg::is_symmetric(k, 1e-14));
}

#[test]
fn jitter_touches_only_the_knot_diagonal() {
    let mesh = Mesh::uniform(7).unwrap();
    let kernel = KernelParams::isotropic(mesh.default_lambda_sq(), 1).unwrap();
    let raw = time_gram(&mesh, kernel.lambda_sq());
    let g = build_gram(&mesh, &kernel, 1e-7).unwrap();
    let diff = g.time_gram() - &raw;
    for i in 0..diff.nrows() {
        for j in 0..diff.ncols() {
            let expected = if i == j && i >= 2 { 1e-7 } else { 0.0 };
            let scale = raw[(i, j)].abs().max(1.0);
            assert!((diff[(i, j)] - expected).abs() < 1e-15 * scale, "entry ({i},{j})");
        }
    }
}

#[test]
fn factorization_reproduces_gram() {
    for n in [5, 10, 25, 50, 100] {
        let mesh = Mesh::uniform(n).unwrap();
        let kernel = KernelParams::isotropic(mesh.default_lambda_sq(), 2).unwrap();
        let g = build_gram(&mesh, &kernel, 1e-7).unwrap();
        let err = (g.time_gram_factor().reconstruct() - g.time_gram()).norm() / g.time_gram().norm();
        assert!(err < 1e-10, "N={n}: {err}");
    }
}

#[test]
fn duplicate_knots_are_rejected() {
    assert!(Mesh::from_knots(vec![0.0, 0.5, 0.5, 1.0]).is_err());
}

#[test]
fn velocity_weights_match_difference_of_position_weights() {
    let mesh = Mesh::uniform(10).unwrap();
    let kernel = KernelParams::isotropic(mesh.default_lambda_sq(), 1).unwrap();
    let g = build_gram(&mesh, &kernel, 1e-7).unwrap();
    let h = 1e-5;
    for &t in &[0.05, 0.33, 0.5, 0.81] {
        let w1 = posterior_weights(t, &mesh, &kernel, &g, 1).unwrap();
        let fd = (posterior_weights(t + h, &mesh, &kernel, &g, 0).unwrap()
            - posterior_weights(t - h, &mesh, &kernel, &g, 0).unwrap())
            / (2.0 * h);
        assert!((w1 - fd).amax() < 1e-5);
    }
}

#[test]
fn zero_accelerations_velocity_is_chord() {
    let m = random_model(10, 3, 1e-7, 1).with_accelerations(DMatrix::zeros(10, 3));
    let chord = m.end() - m.start();
    for &t in &[0.0, 0.2, 0.7, 1.0] {
        assert!((m.eval(t, 1).unwrap() - &chord).amax() < 1e-12);
    }
}

#[test]
fn boundary_interpolation_for_random_accelerations() {
    for seed in 0..10 {
        let m = random_model(12, 3, 1e-7, seed);
        let tol0 = 1e-8 * (1.0 + m.start().norm());
        let tol1 = 1e-8 * (1.0 + m.end().norm());
        assert!((m.eval(0.0, 0).unwrap() - m.start()).norm() <= tol0);
        assert!((m.eval(1.0, 0).unwrap() - m.end()).norm() <= tol1);
    }
}

#[test]
fn acceleration_interpolation_tightens_with_epsilon() {
    let gaps: Vec<f64> = [1e-5, 1e-7, 1e-9]
        .iter()
        .map(|&eps| {
            let m = random_model(10, 2, eps, 5);
            (m.at_knots(2) - m.accelerations()).amax()
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn derivative_evaluations_match_finite_differences() {
    for seed in 0..5 {
        let m = random_model(10, 2, 1e-7, seed);
        for &t in &[0.1, 0.37, 0.5, 0.9] {
            let h1 = 1e-5;
            let v_fd = (m.eval(t + h1, 0).unwrap() - m.eval(t - h1, 0).unwrap()) / (2.0 * h1);
            assert!((m.eval(t, 1).unwrap() - v_fd).amax() < 1e-4);
            let h2 = 1e-4;
            let a_fd =
                (m.eval(t + h2, 0).unwrap() - m.eval(t, 0).unwrap() * 2.0 + m.eval(t - h2, 0).unwrap()) / (h2 * h2);
            assert!((m.eval(t, 2).unwrap() - &a_fd).amax() < 1e-4 * (1.0 + a_fd.amax()), "{a_fd}");
        }
    }
}

#[test]
fn time_gram_path_equals_full_kronecker_solve() {
    let n = 5;
    let d = 2;
    let mut r = test_rng(11);
    let mesh = Mesh::uniform(n).unwrap();
    let a = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    let v = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
    let kernel = KernelParams::new(mesh.default_lambda_sq(), v.clone()).unwrap();
    let basis = Arc::new(ModelBasis::new(mesh.clone(), kernel.clone(), 1e-7).unwrap());
    let x = random_vector(&mut r, d, -1.0, 1.0);
    let y = random_vector(&mut r, d, -1.0, 1.0);
    let acc = DMatrix::from_fn(n, d, |_, _| r.random_range(-2.0..2.0));
    let model = GeodesicModel::new(basis.clone(), x.clone(), y.clone(), acc.clone()).unwrap();

    // Residual stack, column-stacked: dimension-major blocks of length N + 2.
    let mut resid = DVector::zeros(d * (n + 2));
    for j in 0..d {
        for k in 0..n {
            resid[j * (n + 2) + 2 + k] = acc[(k, j)];
        }
    }
    let big_g = v.kronecker(basis.gram.time_gram());
    let alpha = big_g.cholesky().unwrap().solve(&resid);
    for &t in &[0.0, 0.21, 0.5, 0.77, 1.0] {
        for order in 0..=2 {
            let row = geodesic_core::kernel::cross_covariance(t, &mesh, kernel.lambda_sq(), order);
            let cross = v.kronecker(&row.transpose());
            let prior = match order {
                0 => &x + (&y - &x) * t,
                1 => &y - &x,
                _ => DVector::zeros(d),
            };
            let explicit = prior + cross * &alpha;
            let fast = model.eval(t, order).unwrap();
            assert!((explicit - fast).amax() < 1e-9, "t={t} order={order}");
        }
    }
}

#[test]
fn cached_knot_table_matches_direct_evaluation() {
    let m = random_model(8, 2, 1e-7, 3);
    for order in 0..=2 {
        let table = m.at_knots(order);
        for (i, &t) in m.mesh().knots().iter().enumerate() {
            let direct = m.eval(t, order).unwrap();
            assert!((table.row(i).transpose() - direct).amax() < 1e-9 * (1.0 + table.amax()));
        }
    }
}

#[test]
fn amplitude_rule_scales_data_covariance() {
    let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let a = DVector::from_vec(vec![1.0, 0.0]);
    let b = DVector::from_vec(vec![0.0, 1.0]);
    let v = KernelParams::data_amplitude(&s, &a, &b);
    let q = (&a - &b).dot(&(&s * (&a - &b)));
    assert!((v - &s * q).amax() < 1e-14);
    // Coincident endpoints fall back to the identity.
    assert_eq!(KernelParams::data_amplitude(&s, &a, &a), DMatrix::identity(2, 2));
}

proptest! {
    #[test]
    fn kernel_is_symmetric_under_argument_swap(t in 0.0f64..1.0, s in 0.0f64..1.0, l in 0.01f64..1.0) {
        for (m, n) in [(0, 0), (1, 1), (2, 2), (0, 2)] {
            let a = se_kernel_deriv(t, s, l, m, n).unwrap();
            let b = se_kernel_deriv(s, t, l, n, m).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn kernel_is_stationary(t in 0.0f64..1.0, s in 0.0f64..1.0, shift in -1.0f64..1.0, l in 0.01f64..1.0) {
        for m in 0..=2 {
            for n in 0..=2 {
                let a = se_kernel_deriv(t, s, l, m, n).unwrap();
                let b = se_kernel_deriv(t + shift, s + shift, l, m, n).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn posterior_pins_endpoints(seed in 0u64..1000, n in 3usize..30) {
        let m = random_model(n, 2, 1e-7, seed);
        prop_assert!((m.eval(0.0, 0).unwrap() - m.start()).norm() <= 1e-8 * (1.0 + m.start().norm()));
        prop_assert!((m.eval(1.0, 0).unwrap() - m.end()).norm() <= 1e-8 * (1.0 + m.end().norm()));
    }
}
