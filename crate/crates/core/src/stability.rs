//! Local stability of a projection around its anchors.
//!
//! With `z0 = f(x0)` and `z_i = f(x~_i)`:
//!
//! * mean displacement `D_dev = (1/N) sum ||z_i - z0||`,
//! * displacement bias `D_bias = ||(1/N) sum z_i - z0||`,
//! * nearest-anchor assignment error `E_NA`, the fraction of cloud points
//!   whose nearest anchor (in 2D) is not their own, averaged over anchors.
//!
//! `D_bias <= D_dev` always holds by the triangle inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn norm(dx: f64, dy: f64) -> f64 {
    dx.hypot(dy)
}

fn check_cloud(proj: &Matrix) -> Result<()> {
    if proj.cols() != 2 {
        return Err(Error::Metric(format!(
            "projected cloud must have 2 columns, has {}",
            proj.cols()
        )));
    }
    Ok(())
}

pub fn mean_displacement(z0: [f64; 2], proj: &Matrix) -> f64 {
    let sum: f64 = proj
        .iter_rows()
        .map(|z| norm(z[0] - z0[0], z[1] - z0[1]))
        .sum();
    sum / proj.rows() as f64
}

/// Mean of the rows of a two-column matrix.
pub fn cloud_mean(proj: &Matrix) -> [f64; 2] {
    let mut s = [0.0, 0.0];
    for z in proj.iter_rows() {
        s[0] += z[0];
        s[1] += z[1];
    }
    let n = proj.rows() as f64;
    [s[0] / n, s[1] / n]
}

pub fn displacement_bias(z0: [f64; 2], proj: &Matrix) -> f64 {
    let mut s = [0.0, 0.0];
    for z in proj.iter_rows() {
        s[0] += z[0] - z0[0];
        s[1] += z[1] - z0[1];
    }
    let n = proj.rows() as f64;
    norm(s[0] / n, s[1] / n)
}

/// Index of the nearest anchor; ties go to the smallest index.
pub fn nearest_anchor(z: [f64; 2], anchors: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, a) in anchors.iter().enumerate() {
        let (dx, dy) = (z[0] - a[0], z[1] - a[1]);
        let d = dx * dx + dy * dy;
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn check_distinct(anchors: &[[f64; 2]]) -> Result<()> {
    for (i, a) in anchors.iter().enumerate() {
        if let Some(j) = anchors[..i].iter().position(|b| b == a) {
            return Err(Error::Metric(format!(
                "anchors {j} and {i} project to the same point {a:?}"
            )));
        }
    }
    Ok(())
}

/// Assignment of every cloud point to its nearest anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignments {
    /// `per_anchor[a][i]` is the anchor nearest to point `i` of cloud `a`.
    pub per_anchor: Vec<Vec<usize>>,
    /// Fraction of cloud `a` assigned to another anchor.
    pub rates: Vec<f64>,
    /// Mean of `rates`.
    pub error: f64,
}

pub fn nearest_anchor_error(anchors: &[[f64; 2]], clouds: &[&Matrix]) -> Result<Assignments> {
    if anchors.is_empty() {
        return Err(Error::Metric("need at least one anchor".into()));
    }
    if anchors.len() != clouds.len() {
        return Err(Error::Metric(format!(
            "{} anchors but {} clouds",
            anchors.len(),
            clouds.len()
        )));
    }
    check_distinct(anchors)?;
    let mut per_anchor = Vec::with_capacity(anchors.len());
    let mut rates = Vec::with_capacity(anchors.len());
    for (a, cloud) in clouds.iter().enumerate() {
        check_cloud(cloud)?;
        let assigned: Vec<usize> = cloud
            .iter_rows()
            .map(|z| nearest_anchor([z[0], z[1]], anchors))
            .collect();
        let wrong = assigned.iter().filter(|&&k| k != a).count();
        rates.push(wrong as f64 / cloud.rows() as f64);
        per_anchor.push(assigned);
    }
    let error = rates.iter().sum::<f64>() / anchors.len() as f64;
    Ok(Assignments {
        per_anchor,
        rates,
        error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorStability {
    pub anchor: usize,
    pub d_dev: f64,
    pub d_bias: f64,
    pub misassignment_rate: f64,
    #[serde(skip)]
    pub assignments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySummary {
    pub per_anchor: Vec<AnchorStability>,
    pub mean_d_dev: f64,
    pub mean_d_bias: f64,
    pub e_na: f64,
}

/// All three measures for projected anchors `z0` and their projected clouds.
pub fn assess(anchors: &[[f64; 2]], clouds: &[&Matrix]) -> Result<StabilitySummary> {
    let assign = nearest_anchor_error(anchors, clouds)?;
    let per_anchor: Vec<AnchorStability> = anchors
        .iter()
        .zip(clouds)
        .zip(assign.per_anchor)
        .enumerate()
        .map(|(a, ((&z0, cloud), assignments))| AnchorStability {
            anchor: a,
            d_dev: mean_displacement(z0, cloud),
            d_bias: displacement_bias(z0, cloud),
            misassignment_rate: assign.rates[a],
            assignments,
        })
        .collect();
    let n = per_anchor.len() as f64;
    Ok(StabilitySummary {
        mean_d_dev: per_anchor.iter().map(|s| s.d_dev).sum::<f64>() / n,
        mean_d_bias: per_anchor.iter().map(|s| s.d_bias).sum::<f64>() / n,
        e_na: assign.error,
        per_anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(points).unwrap()
    }

    #[test]
    fn collapsed_cloud_has_no_displacement() {
        let c = cloud(&[[1.0, 2.0]; 4]);
        assert_eq!(mean_displacement([1.0, 2.0], &c), 0.0);
        assert_eq!(displacement_bias([1.0, 2.0], &c), 0.0);
    }

    #[test]
    fn uniform_shift_of_three_four() {
        let c = cloud(&[[4.0, 5.0]; 3]);
        assert_eq!(mean_displacement([1.0, 1.0], &c), 5.0);
        assert_eq!(displacement_bias([1.0, 1.0], &c), 5.0);
    }

    #[test]
    fn symmetric_cloud_is_unbiased() {
        let c = cloud(&[[2.0, 0.0], [0.0, 0.0], [2.0, 0.0], [0.0, 0.0]]);
        assert_eq!(mean_displacement([1.0, 0.0], &c), 1.0);
        assert_eq!(displacement_bias([1.0, 0.0], &c), 0.0);
    }

    #[test]
    fn hand_counted_assignment_error() {
        let anchors = [[0.0, 0.0], [10.0, 0.0]];
        let a = cloud(&[[1.0, 0.0], [6.0, 0.0]]);
        let b = cloud(&[[9.0, 0.0], [9.0, 0.0]]);
        let r = nearest_anchor_error(&anchors, &[&a, &b]).unwrap();
        assert_eq!(r.rates, vec![0.5, 0.0]);
        assert_eq!(r.error, 0.25);
        assert_eq!(r.per_anchor, vec![vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn single_anchor_never_misassigns() {
        let c = cloud(&[[100.0, -3.0], [5.0, 5.0]]);
        assert_eq!(nearest_anchor_error(&[[0.0, 0.0]], &[&c]).unwrap().error, 0.0);
    }

    #[test]
    fn ties_go_to_smaller_anchor() {
        assert_eq!(nearest_anchor([0.0, 0.0], &[[1.0, 0.0], [-1.0, 0.0]]), 0);
    }

    #[test]
    fn duplicate_anchors_are_an_error() {
        let c = cloud(&[[0.0, 0.0]]);
        assert!(matches!(
            nearest_anchor_error(&[[1.0, 1.0], [1.0, 1.0]], &[&c, &c]),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn assess_combines_measures() {
        let anchors = [[0.0, 0.0], [10.0, 0.0]];
        let a = cloud(&[[1.0, 0.0], [6.0, 0.0]]);
        let b = cloud(&[[9.0, 0.0], [9.0, 0.0]]);
        let s = assess(&anchors, &[&a, &b]).unwrap();
        assert_eq!(s.per_anchor[0].d_dev, 3.5);
        assert_eq!(s.per_anchor[0].d_bias, 3.5);
        assert_eq!(s.per_anchor[1].d_dev, 1.0);
        assert_eq!(s.mean_d_dev, 2.25);
        assert_eq!(s.e_na, 0.25);
    }
}
