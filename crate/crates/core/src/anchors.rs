//! Class-centroid anchors chosen in projection space.

use std::fmt::Write as _;

use crate::data::Labels;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    /// Row of the anchor in the dataset.
    pub index: usize,
    pub class: usize,
    /// High-dimensional input `x0`.
    pub input: Vec<f64>,
    /// Reference-embedding coordinate used for selection.
    pub reference: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub entries: Vec<Anchor>,
    pub per_class: usize,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with header `index,class,z0x,z0y` (reference coordinates).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,class,z0x,z0y\n");
        for a in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{:?},{:?}",
                a.index, a.class, a.reference[0], a.reference[1]
            );
        }
        out
    }
}

fn dist_sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

fn centroids_of(embedding: &Matrix, labels: &Labels, rows: &[usize]) -> Result<Vec<[f64; 2]>> {
    let k = labels.class_count();
    let mut sums = vec![[0.0f64; 2]; k];
    let mut counts = vec![0usize; k];
    for &r in rows {
        let c = labels.values()[r];
        let p = embedding.point(r);
        sums[c][0] += p[0];
        sums[c][1] += p[1];
        counts[c] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Selection(format!("class {c} has no members")));
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64])
        .collect())
}

fn check(embedding: &Matrix, labels: &Labels) -> Result<()> {
    if embedding.cols() != 2 {
        return Err(Error::Validation(format!(
            "embedding must have 2 columns, has {}",
            embedding.cols()
        )));
    }
    if embedding.rows() != labels.len() {
        return Err(Error::Validation(format!(
            "embedding has {} rows but there are {} labels",
            embedding.rows(),
            labels.len()
        )));
    }
    Ok(())
}

/// Arithmetic mean of the embedded points of each class.
pub fn class_centroids(embedding: &Matrix, labels: &Labels) -> Result<Vec<[f64; 2]>> {
    check(embedding, labels)?;
    let rows: Vec<usize> = (0..embedding.rows()).collect();
    centroids_of(embedding, labels, &rows)
}

/// Per class, the `per_class` members whose embedded points lie nearest the
/// class centroid; ties go to the smaller row index.
pub fn select_anchors(
    data: &Matrix,
    embedding: &Matrix,
    labels: &Labels,
    per_class: usize,
) -> Result<AnchorSet> {
    let rows: Vec<usize> = (0..data.rows()).collect();
    select_anchors_among(data, embedding, labels, &rows, per_class)
}

/// Like [`select_anchors`] but restricted to the candidate `rows` (for
/// instance the test split). Centroids are computed over the candidates.
pub fn select_anchors_among(
    data: &Matrix,
    embedding: &Matrix,
    labels: &Labels,
    rows: &[usize],
    per_class: usize,
) -> Result<AnchorSet> {
    check(embedding, labels)?;
    if data.rows() != embedding.rows() {
        return Err(Error::Validation(format!(
            "data has {} rows but embedding has {}",
            data.rows(),
            embedding.rows()
        )));
    }
    if per_class == 0 {
        return Err(Error::Selection("anchors per class must be at least 1".into()));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= data.rows()) {
        return Err(Error::Validation(format!("candidate row {r} out of range")));
    }
    let centroids = centroids_of(embedding, labels, rows)?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.class_count()];
    for &r in rows {
        members[labels.values()[r]].push(r);
    }

    let mut entries = Vec::with_capacity(per_class * members.len());
    for (class, candidates) in members.iter_mut().enumerate() {
        if candidates.len() < per_class {
            return Err(Error::Selection(format!(
                "class {class} has {} candidates, fewer than {per_class} anchors",
                candidates.len()
            )));
        }
        let c = centroids[class];
        candidates.sort_by(|&a, &b| {
            dist_sq(embedding.point(a), c)
                .total_cmp(&dist_sq(embedding.point(b), c))
                .then(a.cmp(&b))
        });
        for &index in &candidates[..per_class] {
            entries.push(Anchor {
                index,
                class,
                input: data.row(index).to_vec(),
                reference: embedding.point(index),
            });
        }
    }

    for (i, a) in entries.iter().enumerate() {
        if let Some(b) = entries[..i].iter().find(|b| b.reference == a.reference) {
            return Err(Error::Selection(format!(
                "anchors at rows {} and {} share the embedded location {:?}",
                b.index, a.index, a.reference
            )));
        }
    }
    Ok(AnchorSet { entries, per_class })
}
