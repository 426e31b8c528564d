//! Isotropic Gaussian perturbation clouds around anchors.
//!
//! A target radius `r` fixes the per-coordinate noise scale through
//! `E||eps||^2 = d sigma^2`, i.e. `sigma = r / sqrt(d)`. Noisy copies are
//! optionally clipped elementwise, which shrinks the realized radius; the
//! root-mean-square displacement after clipping is the effective radius.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Domain};

/// Default percentile of pairwise distances used as the noise radius.
pub const DEFAULT_PERCENTILE: f64 = 0.25;
/// Default number of pairs sampled when the exact pair count is larger.
pub const DEFAULT_PAIR_BUDGET: usize = 1_000_000;
/// Samples per anchor for the stability metrics.
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clip {
    pub low: f64,
    pub high: f64,
}

impl Clip {
    pub const UNIT: Clip = Clip { low: 0.0, high: 1.0 };

    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::Config(format!(
                "clip bounds must satisfy low < high, got [{low}, {high}]"
            )));
        }
        Ok(Clip { low, high })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    radius: f64,
    sigma: f64,
    dim: usize,
    pub samples: usize,
    pub clip: Option<Clip>,
    pub seed: u64,
}

impl NoiseSpec {
    /// Noise with target radius `radius`; `sigma = radius / sqrt(dim)`.
    pub fn from_radius(
        radius: f64,
        dim: usize,
        samples: usize,
        clip: Option<Clip>,
        seed: u64,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        Self::checked(radius, sigma_from_radius(radius, dim), dim, samples, clip, seed)
    }

    /// Noise with explicit per-coordinate `sigma >= 0`; `radius = sigma * sqrt(dim)`.
    pub fn from_sigma(
        sigma: f64,
        dim: usize,
        samples: usize,
        clip: Option<Clip>,
        seed: u64,
    ) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
        }
        Self::checked(sigma * (dim as f64).sqrt(), sigma, dim, samples, clip, seed)
    }

    fn checked(
        radius: f64,
        sigma: f64,
        dim: usize,
        samples: usize,
        clip: Option<Clip>,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if samples == 0 {
            return Err(Error::Config("samples per anchor must be at least 1".into()));
        }
        Ok(NoiseSpec {
            radius,
            sigma,
            dim,
            samples,
            clip,
            seed,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn sigma_from_radius(radius: f64, dim: usize) -> f64 {
    radius / (dim as f64).sqrt()
}

/// Linear interpolation between order statistics: position `(m-1) p / 100`.
pub fn percentile_of_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Maps a linear index over unordered pairs `(i, j), i < j`, enumerated by
/// `j` then `i`, to the pair.
fn unrank_pair(k: u64) -> (usize, usize) {
    let mut j = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as u64;
    while j * (j - 1) / 2 > k {
        j -= 1;
    }
    while (j + 1) * j / 2 <= k {
        j += 1;
    }
    let i = k - j * (j - 1) / 2;
    (i as usize, j as usize)
}

/// `p`-th percentile of pairwise Euclidean distances between rows.
///
/// Exact when the number of pairs fits in `pair_budget`; otherwise computed
/// over `pair_budget` distinct pairs drawn uniformly from a seeded stream.
pub fn pairwise_distance_percentile(
    data: &Matrix,
    p: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    let n = data.rows();
    if n < 2 {
        return Err(Error::Validation("need at least two rows for pairwise distances".into()));
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::Config(format!("percentile must lie in (0, 100), got {p}")));
    }
    if pair_budget == 0 {
        return Err(Error::Config("pair budget must be at least 1".into()));
    }
    let total = n as u64 * (n as u64 - 1) / 2;
    let mut dists = if total <= pair_budget as u64 {
        let mut d = Vec::with_capacity(total as usize);
        for j in 1..n {
            for i in 0..j {
                d.push(euclid(data.row(i), data.row(j)));
            }
        }
        d
    } else {
        let mut rng = rng::keyed(seed, Domain::PairSample, &[]);
        index::sample(&mut rng, total as usize, pair_budget)
            .into_iter()
            .map(|k| {
                let (i, j) = unrank_pair(k as u64);
                euclid(data.row(i), data.row(j))
            })
            .collect()
    };
    dists.sort_by(f64::total_cmp);
    let r = percentile_of_sorted(&dists, p);
    if r <= 0.0 {
        return Err(Error::Degenerate(format!(
            "the {p}th percentile of pairwise distances is 0"
        )));
    }
    Ok(r)
}

/// Noisy copies of one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCloud {
    pub anchor: usize,
    /// `N x d` clipped inputs.
    pub samples: Matrix,
    /// `N x 2` projections, filled in once a model is applied.
    pub projections: Option<Matrix>,
    pub r_eff: f64,
}

/// Draws `spec.samples` noisy copies of `x0`.
///
/// Sample `i` of anchor `anchor` uses its own stream keyed by
/// `(spec.seed, anchor, i)`, so clouds do not depend on generation order.
pub fn perturb_samples(x0: &[f64], anchor: usize, spec: &NoiseSpec) -> Result<PerturbationCloud> {
    if x0.len() != spec.dim {
        return Err(Error::Dimension {
            expected: spec.dim,
            actual: x0.len(),
        });
    }
    if let Some(c) = spec.clip {
        if let Some(v) = x0.iter().find(|v| **v < c.low || **v > c.high) {
            return Err(Error::Validation(format!(
                "anchor {anchor} has coordinate {v} outside the clip range [{}, {}]",
                c.low, c.high
            )));
        }
    }
    let mut values = Vec::with_capacity(spec.samples * spec.dim);
    for i in 0..spec.samples {
        let mut rng = rng::keyed(spec.seed, Domain::Perturb, &[anchor as u64, i as u64]);
        for &x in x0 {
            let eps: f64 = rng.sample(StandardNormal);
            let mut v = x + spec.sigma * eps;
            if let Some(c) = spec.clip {
                v = v.clamp(c.low, c.high);
            }
            values.push(v);
        }
    }
    let samples = Matrix::from_raw(spec.samples, spec.dim, values);
    let r_eff = effective_radius(&samples, x0);
    Ok(PerturbationCloud {
        anchor,
        samples,
        projections: None,
        r_eff,
    })
}

/// Root-mean-square of `||x_i - x0||` over the rows of `samples`.
pub fn effective_radius(samples: &Matrix, x0: &[f64]) -> f64 {
    let sum: f64 = samples
        .iter_rows()
        .map(|row| row.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    (sum / samples.rows() as f64).sqrt()
}
