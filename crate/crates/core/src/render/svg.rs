//! SVG 1.1 output.
//!
//! The `viewBox` is expressed in data coordinates with the y axis flipped
//! (a data point `(x, y)` is drawn at `(x, -y)`), so lengths such as the
//! mean-displacement radius appear unscaled in the markup. Structure:
//!
//! * `g#background`: the reference scatter, `circle.bg` colored by class,
//! * `g#cells` (Voronoi mode only): one `polygon.cell` per anchor,
//! * `g#anchor-<a>` per anchor `a` in anchor-set order, holding
//!   `line.displacement`, `circle.sample`, `circle.ddev`, `ellipse.pca` and
//!   `path.anchor-cross` as the mode requires. Misassigned samples carry
//!   the extra class `misassigned`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::geometry::{pca_ellipse, voronoi_cells, BoundingBox, Point};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Domain};
use crate::stability::AnchorStability;

/// Categorical colors cycled by class id.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub const MAX_BACKGROUND_POINTS: usize = 20_000;
pub const VIEW_MARGIN: f64 = 0.05;

fn color(class: usize) -> &'static str {
    PALETTE[class % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AnchorLines,
    LocalPca,
    Voronoi,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::AnchorLines, Mode::LocalPca, Mode::Voronoi];

    pub fn name(self) -> &'static str {
        match self {
            Mode::AnchorLines => "anchor_lines",
            Mode::LocalPca => "local_pca",
            Mode::Voronoi => "voronoi",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown render mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnchor {
    pub class: usize,
    /// Model projection `f(x0)` of the clean anchor.
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    background: Vec<(Point, usize)>,
    anchors: Vec<SceneAnchor>,
    clouds: Vec<Matrix>,
    bounds: BoundingBox,
}

impl Scene {
    /// Builds a scene; the background is subsampled to at most
    /// [`MAX_BACKGROUND_POINTS`] rows with a seeded choice. The view box
    /// covers every background point, anchor and cloud point with a 5% margin.
    pub fn new(
        background: &Matrix,
        classes: &[usize],
        anchors: Vec<SceneAnchor>,
        clouds: Vec<Matrix>,
        seed: u64,
    ) -> Result<Self> {
        if background.cols() != 2 || classes.len() != background.rows() {
            return Err(Error::Diagnostics(
                "background must be n x 2 with one class per row".into(),
            ));
        }
        if anchors.len() != clouds.len() {
            return Err(Error::Diagnostics(format!(
                "{} anchors but {} clouds",
                anchors.len(),
                clouds.len()
            )));
        }
        if clouds.iter().any(|c| c.cols() != 2) {
            return Err(Error::Diagnostics("projected clouds must have 2 columns".into()));
        }
        let keep: Vec<usize> = if background.rows() > MAX_BACKGROUND_POINTS {
            let mut rng = rng::keyed(seed, Domain::Background, &[]);
            let mut idx = index::sample(&mut rng, background.rows(), MAX_BACKGROUND_POINTS).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..background.rows()).collect()
        };
        let background: Vec<(Point, usize)> =
            keep.iter().map(|&i| (background.point(i), classes[i])).collect();

        let mut all: Vec<Point> = background.iter().map(|(p, _)| *p).collect();
        all.extend(anchors.iter().map(|a| a.position));
        for c in &clouds {
            all.extend((0..c.rows()).map(|i| c.point(i)));
        }
        let bounds = BoundingBox::covering(&all, VIEW_MARGIN)?;
        Ok(Scene {
            background,
            anchors,
            clouds,
            bounds,
        })
    }

    pub fn bounds(&self) -> &BoundingBox {
        &self.bounds
    }

    pub fn anchors(&self) -> &[SceneAnchor] {
        &self.anchors
    }

    pub fn clouds(&self) -> &[Matrix] {
        &self.clouds
    }

    pub fn background_len(&self) -> usize {
        self.background.len()
    }

    pub fn anchor_positions(&self) -> Vec<Point> {
        self.anchors.iter().map(|a| a.position).collect()
    }
}

/// Drawing constants. Sizes are fractions of the view-box diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub pixel_width: f64,
    pub ellipse_scale: f64,
    pub background_radius: f64,
    pub sample_radius: f64,
    pub stroke: f64,
    pub cross: f64,
    pub background_opacity: f64,
    pub cell_opacity: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            pixel_width: 800.0,
            ellipse_scale: 2.0,
            background_radius: 0.002,
            sample_radius: 0.0025,
            stroke: 0.0008,
            cross: 0.012,
            background_opacity: 0.35,
            cell_opacity: 0.15,
        }
    }
}

fn num(v: f64) -> String {
    // -0 and 0 render identically.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

fn xy(p: Point) -> (String, String) {
    (num(p[0]), num(-p[1]))
}

fn check_stats(scene: &Scene, mode: Mode, stats: &[AnchorStability]) -> Result<()> {
    if stats.len() != scene.anchors.len() {
        return Err(Error::Diagnostics(format!(
            "{} stability entries for {} anchors",
            stats.len(),
            scene.anchors.len()
        )));
    }
    for (a, s) in stats.iter().enumerate() {
        if s.anchor != a {
            return Err(Error::Diagnostics(format!(
                "stability entry {a} refers to anchor {}",
                s.anchor
            )));
        }
        if mode == Mode::Voronoi && s.assignments.len() != scene.clouds[a].rows() {
            return Err(Error::Diagnostics(format!(
                "anchor {a} has {} assignments for {} samples",
                s.assignments.len(),
                scene.clouds[a].rows()
            )));
        }
    }
    Ok(())
}

/// Renders one diagnostic document.
pub fn render_diagnostic(
    scene: &Scene,
    mode: Mode,
    stats: &[AnchorStability],
    style: &Style,
) -> Result<String> {
    check_stats(scene, mode, stats)?;
    let b = &scene.bounds;
    let diag = b.width().hypot(b.height());
    let stroke = num(style.stroke * diag);
    let mut s = String::new();
    let height = style.pixel_width * b.height() / b.width();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}" data-mode="{}">"#,
        num(style.pixel_width),
        num(height),
        num(b.min[0]),
        num(-b.max[1]),
        num(b.width()),
        num(b.height()),
        mode.name()
    );
    let _ = writeln!(
        s,
        r##"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="#ffffff"/>"##,
        num(b.min[0]),
        num(-b.max[1]),
        num(b.width()),
        num(b.height())
    );

    let bg_r = num(style.background_radius * diag);
    let _ = writeln!(
        s,
        r#"<g id="background" fill-opacity="{}">"#,
        num(style.background_opacity)
    );
    for (p, class) in &scene.background {
        let (x, y) = xy(*p);
        let _ = writeln!(
            s,
            r#"<circle class="bg class-{class}" cx="{x}" cy="{y}" r="{bg_r}" fill="{}"/>"#,
            color(*class)
        );
    }
    s.push_str("</g>\n");

    if mode == Mode::Voronoi {
        let cells = voronoi_cells(&scene.anchor_positions(), b)?;
        let _ = writeln!(s, r#"<g id="cells" fill-opacity="{}">"#, num(style.cell_opacity));
        for (a, cell) in cells.iter().enumerate() {
            let pts: Vec<String> = cell
                .iter()
                .map(|&p| {
                    let (x, y) = xy(p);
                    format!("{x},{y}")
                })
                .collect();
            let _ = writeln!(
                s,
                r##"<polygon id="cell-{a}" class="cell cell-{a}" data-anchor="{a}" points="{}" fill="{}" stroke="#444444" stroke-width="{stroke}"/>"##,
                pts.join(" "),
                color(scene.anchors[a].class)
            );
        }
        s.push_str("</g>\n");
    }

    let sample_r = num(style.sample_radius * diag);
    for (a, anchor) in scene.anchors.iter().enumerate() {
        let stat = &stats[a];
        let cloud = &scene.clouds[a];
        let col = color(anchor.class);
        let (ax, ay) = xy(anchor.position);
        let _ = writeln!(
            s,
            r#"<g id="anchor-{a}" class="anchor" data-class="{}">"#,
            anchor.class
        );
        match mode {
            Mode::AnchorLines => {
                for i in 0..cloud.rows() {
                    let (x, y) = xy(cloud.point(i));
                    let _ = writeln!(
                        s,
                        r#"<line class="displacement" x1="{ax}" y1="{ay}" x2="{x}" y2="{y}" stroke="{col}" stroke-opacity="0.4" stroke-width="{stroke}"/>"#
                    );
                }
                for i in 0..cloud.rows() {
                    let (x, y) = xy(cloud.point(i));
                    let _ = writeln!(
                        s,
                        r#"<circle class="sample" cx="{x}" cy="{y}" r="{sample_r}" fill="{col}"/>"#
                    );
                }
                let _ = writeln!(
                    s,
                    r##"<circle class="ddev" cx="{ax}" cy="{ay}" r="{}" fill="none" stroke="#000000" stroke-width="{stroke}"/>"##,
                    num(stat.d_dev)
                );
            }
            Mode::LocalPca => {
                for i in 0..cloud.rows() {
                    let (x, y) = xy(cloud.point(i));
                    let _ = writeln!(
                        s,
                        r#"<circle class="sample" cx="{x}" cy="{y}" r="{sample_r}" fill="{col}" fill-opacity="0.5"/>"#
                    );
                }
                let e = pca_ellipse(cloud, style.ellipse_scale)?;
                let (cx, cy) = xy(e.center);
                // Flipping y negates angles.
                let deg = -e.angle().to_degrees();
                let _ = writeln!(
                    s,
                    r##"<ellipse class="pca" cx="{cx}" cy="{cy}" rx="{}" ry="{}" transform="rotate({} {cx} {cy})" fill="none" stroke="#000000" stroke-width="{stroke}"/>"##,
                    num(e.major),
                    num(e.minor),
                    num(deg)
                );
            }
            Mode::Voronoi => {
                for i in 0..cloud.rows() {
                    let (x, y) = xy(cloud.point(i));
                    let k = stat.assignments[i];
                    let (extra, fill) = if k == a {
                        ("", color(scene.anchors[k].class))
                    } else {
                        (" misassigned", color(scene.anchors[k].class))
                    };
                    let _ = writeln!(
                        s,
                        r#"<circle class="sample cell-{k}{extra}" data-assigned="{k}" cx="{x}" cy="{y}" r="{sample_r}" fill="{fill}"/>"#
                    );
                }
            }
        }
        let h = style.cross * diag;
        let (p, q) = (anchor.position[0], -anchor.position[1]);
        let _ = writeln!(
            s,
            r##"<path class="anchor-cross" d="M{} {} L{} {} M{} {} L{} {}" stroke="#000000" stroke-width="{}"/>"##,
            num(p - h),
            num(q - h),
            num(p + h),
            num(q + h),
            num(p - h),
            num(q + h),
            num(p + h),
            num(q - h),
            num(2.0 * style.stroke * diag)
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_diagnostic(
    scene: &Scene,
    mode: Mode,
    stats: &[AnchorStability],
    style: &Style,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let doc = render_diagnostic(scene, mode, stats, style)?;
    fs::write(path, doc).map_err(|e| Error::io(path, e))
}
