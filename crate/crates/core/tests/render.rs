mod common;

use common::*;
use proptest::prelude::*;
use projstab::render::{
    contains_point, pca_ellipse, polygon_area, render_diagnostic, voronoi_cells, BoundingBox, Mode,
    Scene, SceneAnchor, Style,
};
use projstab::stability::{assess, displacement_bias};
use projstab::Matrix;

fn distinct_anchors() -> impl Strategy<Value = Vec<[f64; 2]>> {
    proptest::collection::vec([-0.45..0.45f64, -0.45..0.45f64], 1..=12).prop_map(|jit| {
        jit.iter()
            .enumerate()
            .map(|(i, j)| [(i % 4) as f64 + j[0], (i / 4) as f64 + j[1]])
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cells_tile_the_box_and_hold_their_points(
        anchors in distinct_anchors(),
        probes in proptest::collection::vec([-1.0..4.0f64, -1.0..3.0f64], 50),
    ) {
        let b = BoundingBox::new([-1.0, -1.0], [4.0, 3.0]).unwrap();
        let cells = voronoi_cells(&anchors, &b).unwrap();
        let total: f64 = cells.iter().map(|c| polygon_area(c)).sum();
        prop_assert!((total - b.area()).abs() <= 1e-6 * b.area());
        for p in probes {
            let a = assign_oracle(p, &anchors);
            prop_assert!(contains_point(&cells[a], p, 1e-9), "{:?} not in cell {}", p, a);
        }
    }

    #[test]
    fn ellipse_rotates_with_the_cloud(seed in any::<u64>(), theta in -3.1..3.1f64) {
        let mut r = rng(seed);
        let pts: Vec<[f64; 2]> = (0..200).map(|_| [3.0 * normal(&mut r), 0.5 * normal(&mut r) + 1.0]).collect();
        let (s, c) = theta.sin_cos();
        let rotated: Vec<[f64; 2]> = pts.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
        let e = pca_ellipse(&points_to_matrix(&pts), 2.0).unwrap();
        let f = pca_ellipse(&points_to_matrix(&rotated), 2.0).unwrap();
        prop_assert!((e.major - f.major).abs() < 1e-6 && (e.minor - f.minor).abs() < 1e-6);
        let turned = [c * e.major_axis[0] - s * e.major_axis[1], s * e.major_axis[0] + c * e.major_axis[1]];
        // Axis directions are defined up to sign.
        let dot = turned[0] * f.major_axis[0] + turned[1] * f.major_axis[1];
        prop_assert!((dot.abs() - 1.0).abs() < 1e-6);
        let dot = e.major_axis[0] * e.minor_axis[0] + e.major_axis[1] * e.minor_axis[1];
        prop_assert!(dot.abs() < 1e-9);
    }

    #[test]
    fn ellipse_offset_is_the_bias(seed in any::<u64>(), z0 in [-5.0..5.0f64, -5.0..5.0f64]) {
        let mut r = rng(seed);
        let pts: Vec<[f64; 2]> = (0..30).map(|_| [normal(&mut r) + 0.7, normal(&mut r)]).collect();
        let m = points_to_matrix(&pts);
        let e = pca_ellipse(&m, 2.0).unwrap();
        let offset = (e.center[0] - z0[0]).hypot(e.center[1] - z0[1]);
        prop_assert!((offset - displacement_bias(z0, &m)).abs() <= 1e-12);
    }
}

#[test]
fn isotropic_cloud_gives_equal_axes() {
    let mut r = rng(5);
    let m = random_matrix(&mut r, 2000, 2, 0.3);
    let e = pca_ellipse(&m, 2.0).unwrap();
    assert!(e.major >= e.minor);
    assert!((e.major - e.minor) / e.major < 0.05);
}

#[test]
fn collinear_cloud_has_zero_minor_axis() {
    let m = points_to_matrix(&[[0.0, 1.0], [1.0, 1.0], [3.0, 1.0], [-2.0, 1.0]]);
    let e = pca_ellipse(&m, 2.0).unwrap();
    assert_eq!(e.minor, 0.0);
    assert!((e.major_axis[0].abs() - 1.0).abs() < 1e-12);
}

fn scene_case() -> (Scene, Vec<projstab::stability::AnchorStability>) {
    let mut r = rng(9);
    let anchors = [[0.0, 0.0], [2.0, 0.5], [0.5, 2.0]];
    let clouds: Vec<Matrix> = anchors
        .iter()
        .map(|a| {
            let pts: Vec<[f64; 2]> =
                (0..50).map(|_| [a[0] + 0.8 * normal(&mut r), a[1] + 0.8 * normal(&mut r)]).collect();
            points_to_matrix(&pts)
        })
        .collect();
    let stats = assess(&anchors, &clouds.iter().collect::<Vec<_>>()).unwrap();
    let background = random_matrix(&mut r, 30, 2, 1.5);
    let classes: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let scene_anchors = anchors
        .iter()
        .enumerate()
        .map(|(i, p)| SceneAnchor { class: i, position: *p })
        .collect();
    (Scene::new(&background, &classes, scene_anchors, clouds, 1).unwrap(), stats.per_anchor)
}

fn group(doc: &str, a: usize) -> &str {
    let start = doc.find(&format!(r#"<g id="anchor-{a}""#)).unwrap();
    &doc[start..start + doc[start..].find("</g>").unwrap()]
}

fn attr(element: &str, name: &str) -> f64 {
    let key = format!(r#" {name}=""#);
    let s = &element[element.find(&key).unwrap() + key.len()..];
    s[..s.find('"').unwrap()].parse().unwrap()
}

#[test]
fn anchor_lines_draw_one_line_per_sample_and_the_mean_circle() {
    let (scene, stats) = scene_case();
    let doc = render_diagnostic(&scene, Mode::AnchorLines, &stats, &Style::default()).unwrap();
    for (a, st) in stats.iter().enumerate() {
        let g = group(&doc, a);
        assert_eq!(g.matches(r#"<line class="displacement""#).count(), 50);
        let circle = &g[g.find(r#"class="ddev""#).unwrap()..];
        assert_eq!(attr(circle, "r"), st.d_dev);
        assert_eq!(g.matches(r#"class="anchor-cross""#).count(), 1);
    }
}

#[test]
fn voronoi_tints_follow_the_assignment() {
    let (scene, stats) = scene_case();
    let doc = render_diagnostic(&scene, Mode::Voronoi, &stats, &Style::default()).unwrap();
    assert_eq!(doc.matches(r#"<polygon id="cell-"#).count(), 3);
    let cells = voronoi_cells(&scene.anchor_positions(), scene.bounds()).unwrap();
    let box_area = scene.bounds().area();
    assert!((cells.iter().map(|c| polygon_area(c)).sum::<f64>() - box_area).abs() <= 1e-6 * box_area);
    for (a, st) in stats.iter().enumerate() {
        let g = group(&doc, a);
        let samples: Vec<&str> = g.split("<circle class=\"sample ").skip(1).collect();
        assert_eq!(samples.len(), st.assignments.len());
        for (i, (s, &k)) in samples.iter().zip(&st.assignments).enumerate() {
            assert!(s.starts_with(&format!("cell-{k}")));
            assert_eq!(s.contains("misassigned"), k != a);
            let p = scene.clouds()[a].point(i);
            assert!(contains_point(&cells[k], p, 1e-9));
        }
    }
}

#[test]
fn rendering_is_byte_stable() {
    let (scene, stats) = scene_case();
    for mode in Mode::ALL {
        let a = render_diagnostic(&scene, mode, &stats, &Style::default()).unwrap();
        let b = render_diagnostic(&scene, mode, &stats, &Style::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(r#"<g id="background""#));
    }
}
