//! Trustworthiness and continuity of a projection.
//!
//! For neighborhood size `k` over `n` points,
//!
//! ```text
//! T(k) = 1 - 2 / (n k (2n - 3k - 1)) * sum_i sum_{j in U_k(i)} (r_high(i, j) - k)
//! ```
//!
//! where `U_k(i)` holds the projected k-nearest neighbors of `i` that are not
//! among its k-nearest neighbors in the original space and `r_high` is the
//! rank in the original space. Continuity swaps the two spaces. Ranks are
//! exact brute-force orderings with ties broken by the smaller index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Full neighbor ordering of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    n: usize,
    /// Row `i`: the other `n - 1` points, nearest first.
    order: Vec<u32>,
    /// `rank[i * n + j]`, 1-based; 0 on the diagonal.
    rank: Vec<u32>,
}

impl RankTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.order[i * (self.n - 1)..(i + 1) * (self.n - 1)]
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.rank[i * self.n + j] as usize
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force Euclidean ranking of all points from every point.
pub fn knn_ranks(points: &Matrix) -> Result<RankTable> {
    let n = points.rows();
    if n < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 points for neighbor ranks, got {n}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::Validation("too many points for rank table".into()));
    }
    let mut order = Vec::with_capacity(n * (n - 1));
    let mut rank = vec![0u32; n * n];
    let mut dist = vec![0.0f64; n];
    let mut idx: Vec<u32> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let p = points.row(i);
        for (j, d) in dist.iter_mut().enumerate() {
            *d = dist_sq(p, points.row(j));
        }
        idx.clear();
        idx.extend((0..n as u32).filter(|&j| j as usize != i));
        idx.sort_by(|&a, &b| dist[a as usize].total_cmp(&dist[b as usize]).then(a.cmp(&b)));
        for (r, &j) in idx.iter().enumerate() {
            rank[i * n + j as usize] = r as u32 + 1;
        }
        order.extend_from_slice(&idx);
    }
    Ok(RankTable { n, order, rank })
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 2 * k >= n {
        return Err(Error::Validation(format!(
            "neighborhood size k = {k} must satisfy 1 <= k < n/2 for n = {n}"
        )));
    }
    Ok(())
}

/// Penalizes points that are neighbors in `ranked_by` but not in `judged_by`
/// by their rank in `judged_by`.
fn rank_penalty(judged_by: &RankTable, ranked_by: &RankTable, k: usize) -> Result<f64> {
    let n = judged_by.len();
    if ranked_by.len() != n {
        return Err(Error::Validation(format!(
            "rank tables cover {n} and {} points",
            ranked_by.len()
        )));
    }
    check_k(n, k)?;
    let mut sum = 0u64;
    for i in 0..n {
        for &j in &ranked_by.neighbors(i)[..k] {
            let r = judged_by.rank(i, j as usize);
            if r > k {
                sum += (r - k) as u64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum as f64)
}

pub fn trustworthiness(high: &RankTable, low: &RankTable, k: usize) -> Result<f64> {
    rank_penalty(high, low, k)
}

pub fn continuity(high: &RankTable, low: &RankTable, k: usize) -> Result<f64> {
    rank_penalty(low, high, k)
}

/// Powers of two `2, 4, 8, ..` strictly below `n / 2`.
pub fn k_sequence(n: usize) -> Vec<usize> {
    std::iter::successors(Some(2usize), |k| k.checked_mul(2))
        .take_while(|&k| 2 * k < n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityScores {
    pub ks: Vec<usize>,
    pub t: Vec<f64>,
    pub c: Vec<f64>,
    pub t_avg: f64,
    pub c_avg: f64,
}

/// Mean trustworthiness and continuity over [`k_sequence`].
pub fn averaged_tc(high: &Matrix, low: &Matrix) -> Result<QualityScores> {
    if high.rows() != low.rows() {
        return Err(Error::Validation(format!(
            "high has {} rows but low has {}",
            high.rows(),
            low.rows()
        )));
    }
    let ks = k_sequence(high.rows());
    if ks.is_empty() {
        return Err(Error::Validation(format!(
            "{} points admit no neighborhood size k >= 2 with k < n/2",
            high.rows()
        )));
    }
    let rh = knn_ranks(high)?;
    let rl = knn_ranks(low)?;
    let t = ks
        .iter()
        .map(|&k| trustworthiness(&rh, &rl, k))
        .collect::<Result<Vec<_>>>()?;
    let c = ks
        .iter()
        .map(|&k| continuity(&rh, &rl, k))
        .collect::<Result<Vec<_>>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(QualityScores {
        t_avg: mean(&t),
        c_avg: mean(&c),
        ks,
        t,
        c,
    })
}
