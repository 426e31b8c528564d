//! Per-anchor SVG diagnostics drawn over a scatter of the reference
//! projection: anchor lines with a mean-displacement circle, local PCA
//! ellipses, and the Voronoi partition of the projected anchors.

mod geometry;
mod svg;

pub use geometry::{
    clip_half_plane, contains_point, pca_ellipse, polygon_area, voronoi_cells, BoundingBox,
    EllipseParams, Point,
};
pub use svg::{render_diagnostic, write_diagnostic, Mode, Scene, SceneAnchor, Style, PALETTE};
