//! Writes the synthetic blob benchmark used by the acceptance suite:
//! ten isotropic Gaussian blobs in 50 dimensions (200 points each) and a
//! reference embedding given by the top two principal components.
//!
//! ```text
//! cargo run --release -p projstab --example make_blobs -- <out-dir>
//! ```

use std::fs;
use std::path::PathBuf;

use projstab::data::{write_matrix, MatrixFormat};
use projstab::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const CLASSES: usize = 10;
const PER_CLASS: usize = 200;
const DIM: usize = 50;
const CENTER_SPREAD: f64 = 3.0;
const SEED: u64 = 20_240_917;

fn top_components(data: &[f64], n: usize, d: usize) -> [Vec<f64>; 2] {
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| data[i * d + j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let row = &data[i * d..(i + 1) * d];
        for a in 0..d {
            let xa = row[a] - mean[a];
            for b in 0..d {
                cov[a * d + b] += xa * (row[b] - mean[b]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);

    let mut comps: Vec<Vec<f64>> = Vec::new();
    for c in 0..2 {
        let mut v: Vec<f64> = (0..d).map(|j| 1.0 + (j * (c + 1)) as f64 * 0.01).collect();
        for _ in 0..5000 {
            let mut w: Vec<f64> = (0..d)
                .map(|a| (0..d).map(|b| cov[a * d + b] * v[b]).sum())
                .collect();
            for p in &comps {
                let dot: f64 = w.iter().zip(p).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(p).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.into_iter().map(|x| x / norm).collect();
        }
        // Fix the sign so the largest-magnitude loading is positive.
        let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        comps.push(v);
    }
    [comps[0].clone(), comps[1].clone()]
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/blobs".into())
        .into();
    fs::create_dir_all(&out).expect("create output directory");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let centers: Vec<Vec<f64>> = (0..CLASSES)
        .map(|_| (0..DIM).map(|_| CENTER_SPREAD * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();

    let n = CLASSES * PER_CLASS;
    let mut values = Vec::with_capacity(n * DIM);
    let mut labels = String::new();
    // Interleave classes so that row order carries no class structure.
    for i in 0..n {
        let class = i % CLASSES;
        for c in &centers[class] {
            values.push(c + rng.sample::<f64, _>(StandardNormal));
        }
        labels.push_str(&format!("{class}\n"));
    }

    let pcs = top_components(&values, n, DIM);
    let mean: Vec<f64> = (0..DIM)
        .map(|j| (0..n).map(|i| values[i * DIM + j]).sum::<f64>() / n as f64)
        .collect();
    let mut emb = Vec::with_capacity(2 * n);
    for i in 0..n {
        let row = &values[i * DIM..(i + 1) * DIM];
        for pc in &pcs {
            emb.push(row.iter().zip(&mean).zip(pc).map(|((x, m), p)| (x - m) * p).sum::<f64>());
        }
    }

    let data = Matrix::new(n, DIM, values).unwrap();
    let embedding = Matrix::new(n, 2, emb).unwrap();
    write_matrix(&data, out.join("data.pstb"), MatrixFormat::Binary).unwrap();
    write_matrix(&embedding, out.join("embedding.csv"), MatrixFormat::Csv).unwrap();
    fs::write(out.join("labels.csv"), labels).unwrap();
    println!("wrote {n}x{DIM} blobs to {}", out.display());
}
