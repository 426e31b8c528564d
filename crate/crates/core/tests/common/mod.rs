//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use projstab::mlp::{forward, init_network, jacobian, project, Dense, Network};
use projstab::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let v = (0..rows * cols).map(|_| scale * normal(rng)).collect();
    Matrix::new(rows, cols, v).unwrap()
}

/// A random ReLU network with at most `max_params` parameters and random
/// (non-zero) biases.
pub fn random_net(rng: &mut ChaCha8Rng, max_params: usize) -> Network {
    loop {
        let hidden = rng.random_range(1..=3);
        let mut widths = vec![rng.random_range(1..=5)];
        for _ in 0..hidden {
            widths.push(rng.random_range(2..=6));
        }
        widths.push(2);
        let params: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params > max_params {
            continue;
        }
        let base = init_network(&widths, rng.random()).unwrap();
        let layers = base
            .layers()
            .iter()
            .map(|l| {
                let bias = (0..l.outputs()).map(|_| 0.3 * normal(rng)).collect();
                Dense::new(l.inputs(), l.outputs(), l.weights().to_vec(), bias).unwrap()
            })
            .collect();
        return Network::from_layers(layers).unwrap();
    }
}

/// Flat parameters in the order weights-then-bias per layer.
pub fn flat_params(net: &Network) -> Vec<f64> {
    net.layers()
        .iter()
        .flat_map(|l| l.weights().iter().chain(l.bias()).copied())
        .collect()
}

pub fn with_params(net: &Network, flat: &[f64]) -> Network {
    let mut at = 0;
    let layers = net
        .layers()
        .iter()
        .map(|l| {
            let nw = l.inputs() * l.outputs();
            let w = flat[at..at + nw].to_vec();
            let b = flat[at + nw..at + nw + l.outputs()].to_vec();
            at += nw + l.outputs();
            Dense::new(l.inputs(), l.outputs(), w, b).unwrap()
        })
        .collect();
    Network::from_layers(layers).unwrap()
}

/// `mean ||f(x) - y||^2 + lambda * mean ||J_f(x)||_F^2`, computed row by row.
pub fn loss_oracle(net: &Network, x: &Matrix, y: &Matrix, lambda: f64) -> f64 {
    let n = x.rows();
    let mut mse = 0.0;
    let mut jac = 0.0;
    for i in 0..n {
        let z = project(net, x.row(i)).unwrap();
        let t = y.row(i);
        mse += (z[0] - t[0]).powi(2) + (z[1] - t[1]).powi(2);
        if lambda > 0.0 {
            let j = jacobian(net, x.row(i)).unwrap();
            for o in 0..2 {
                jac += j.row(o).iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    mse / n as f64 + lambda * jac / n as f64
}

/// Central finite differences of [`loss_oracle`] in every parameter.
pub fn fd_param_gradient(net: &Network, x: &Matrix, y: &Matrix, lambda: f64, h: f64) -> Vec<f64> {
    let p = flat_params(net);
    (0..p.len())
        .map(|k| {
            let mut up = p.clone();
            let mut down = p.clone();
            up[k] += h;
            down[k] -= h;
            (loss_oracle(&with_params(net, &up), x, y, lambda)
                - loss_oracle(&with_params(net, &down), x, y, lambda))
                / (2.0 * h)
        })
        .collect()
}

/// Central finite-difference Jacobian, `2 x d` row-major.
pub fn fd_jacobian(net: &Network, x: &[f64], h: f64) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; 2 * d];
    for j in 0..d {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[j] += h;
        down[j] -= h;
        let a = project(net, &up).unwrap();
        let b = project(net, &down).unwrap();
        for o in 0..2 {
            out[o * d + j] = (a[o] - b[o]) / (2.0 * h);
        }
    }
    out
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn d_dev_oracle(z0: [f64; 2], cloud: &[[f64; 2]]) -> f64 {
    let mut total = 0.0;
    for z in cloud.iter().rev() {
        let dx = z[0] - z0[0];
        let dy = z[1] - z0[1];
        total += (dx * dx + dy * dy).sqrt();
    }
    total / cloud.len() as f64
}

pub fn d_bias_oracle(z0: [f64; 2], cloud: &[[f64; 2]]) -> f64 {
    let n = cloud.len() as f64;
    let mx = cloud.iter().rev().map(|z| z[0]).sum::<f64>() / n;
    let my = cloud.iter().rev().map(|z| z[1]).sum::<f64>() / n;
    ((mx - z0[0]).powi(2) + (my - z0[1]).powi(2)).sqrt()
}

/// Exhaustive nearest-anchor assignment; ties go to the smaller index.
pub fn assign_oracle(z: [f64; 2], anchors: &[[f64; 2]]) -> usize {
    let mut best = 0;
    for k in 1..anchors.len() {
        let dk = (z[0] - anchors[k][0]).powi(2) + (z[1] - anchors[k][1]).powi(2);
        let db = (z[0] - anchors[best][0]).powi(2) + (z[1] - anchors[best][1]).powi(2);
        if dk < db {
            best = k;
        }
    }
    best
}

pub fn e_na_oracle(anchors: &[[f64; 2]], clouds: &[Vec<[f64; 2]>]) -> f64 {
    let mut sum = 0.0;
    for (a, cloud) in clouds.iter().enumerate() {
        let wrong = cloud.iter().filter(|z| assign_oracle(**z, anchors) != a).count();
        sum += wrong as f64 / cloud.len() as f64;
    }
    sum / anchors.len() as f64
}

pub fn points_to_matrix(points: &[[f64; 2]]) -> Matrix {
    Matrix::new(points.len(), 2, points.iter().flatten().copied().collect()).unwrap()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `rank(i, j)` counted directly: one plus the number of points closer to
/// `i` than `j`, with equal distances ordered by index.
pub fn rank_oracle(m: &Matrix, i: usize, j: usize) -> usize {
    let dij = sq_dist(m.row(i), m.row(j));
    1 + (0..m.rows())
        .filter(|&l| l != i && l != j)
        .filter(|&l| {
            let dil = sq_dist(m.row(i), m.row(l));
            dil < dij || (dil == dij && l < j)
        })
        .count()
}

/// Brute-force trustworthiness; continuity is `tc_oracle(low, high, k)`.
pub fn tc_oracle(high: &Matrix, low: &Matrix, k: usize) -> f64 {
    let n = high.rows();
    let mut penalty = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rl = rank_oracle(low, i, j);
            let rh = rank_oracle(high, i, j);
            if rl <= k && rh > k {
                penalty += rh - k;
            }
        }
    }
    let (n, k) = (n as f64, k as f64);
    1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty as f64
}

/// Forward pass evaluated one row at a time through `project`.
pub fn forward_rows(net: &Network, x: &Matrix) -> Matrix {
    let v: Vec<f64> = (0..x.rows()).flat_map(|i| project(net, x.row(i)).unwrap()).collect();
    let m = Matrix::new(x.rows(), 2, v).unwrap();
    debug_assert_eq!(m.shape(), forward(net, x).unwrap().shape());
    m
}
