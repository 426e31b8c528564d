mod common;

use common::*;
use projstab::mlp::{jacobian, jacobian_frobenius_sq, param_gradients, Dense, Network};
use projstab::Matrix;

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut r = rng(11);
    for trial in 0..20 {
        let net = random_net(&mut r, 100);
        let d = net.input_dim();
        let x = random_matrix(&mut r, 4, d, 1.0);
        let y = random_matrix(&mut r, 4, 2, 1.0);
        for lambda in [0.0, 10.0] {
            let (g, loss) = param_gradients(&net, &x, &y, lambda).unwrap();
            let analytic: Vec<f64> = g.iter().collect();
            let numeric = fd_param_gradient(&net, &x, &y, lambda, 1e-6);
            let err = relative_error(&analytic, &numeric);
            assert!(err < 1e-6, "trial {trial} lambda {lambda}: relative error {err}");
            let oracle = loss_oracle(&net, &x, &y, lambda);
            assert!((loss.total - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }
    }
}

#[test]
fn input_jacobians_match_finite_differences() {
    let mut r = rng(12);
    for _ in 0..20 {
        let net = random_net(&mut r, 100);
        let x: Vec<f64> = (0..net.input_dim()).map(|_| normal(&mut r)).collect();
        let j = jacobian(&net, &x).unwrap();
        let analytic: Vec<f64> = (0..2).flat_map(|o| j.row(o).to_vec()).collect();
        let err = relative_error(&analytic, &fd_jacobian(&net, &x, 1e-6));
        assert!(err < 1e-6, "relative error {err}");
    }
}

#[test]
fn linear_network_jacobian_is_its_weight() {
    let w = vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0];
    let net = Network::from_layers(vec![Dense::new(3, 2, w.clone(), vec![0.4, -0.2]).unwrap()]).unwrap();
    let j = jacobian(&net, &[0.3, -0.7, 2.0]).unwrap();
    for o in 0..2 {
        assert_eq!(j.row(o), &w[o * 3..(o + 1) * 3]);
    }
    let batch = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 5.0]).unwrap();
    let frob: f64 = w.iter().map(|v| v * v).sum();
    assert!((jacobian_frobenius_sq(&net, &batch).unwrap() - frob).abs() < 1e-12);
}

#[test]
fn penalty_adds_twice_lambda_weight_on_linear_net() {
    let w = vec![0.5, -1.5, 2.0, 0.25];
    let net = Network::from_layers(vec![Dense::new(2, 2, w.clone(), vec![0.0; 2]).unwrap()]).unwrap();
    let x = Matrix::new(1, 2, vec![0.7, -0.1]).unwrap();
    let y = Matrix::new(1, 2, vec![0.2, 0.9]).unwrap();
    let (g0, _) = param_gradients(&net, &x, &y, 0.0).unwrap();
    let (g1, _) = param_gradients(&net, &x, &y, 10.0).unwrap();
    let a: Vec<f64> = g0.iter().collect();
    let b: Vec<f64> = g1.iter().collect();
    for k in 0..4 {
        assert!((b[k] - a[k] - 20.0 * w[k]).abs() < 1e-12);
    }
    assert_eq!(a[4..], b[4..]);
}
