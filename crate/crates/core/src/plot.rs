//! SVG figures.
//!
//! Overhead plots map world metres to SVG user units with
//! `u = (x - origin_x) * scale`, `v = (extent_y - (y - origin_y)) * scale`,
//! so north is up. Ego overlays map image coordinates `(column, row)` to
//! `u = column * pixel`, `v = (rows - row) * pixel`, putting the nearest
//! row at the bottom as a forward camera would.

use std::fmt::Write;

use crate::controller::NavStep;
use crate::dynamics::{rollout, ActionSequence, State};
use crate::error::{Error, Result};
use crate::terrain::{class_color, project_to_image, EgoObservation, RenderConfig, TerrainMap};

pub const SAMPLE_COLOR: &str = "#d62728";
pub const CHOSEN_COLOR: &str = "#1f77b4";

fn hex(c: [f32; 3]) -> String {
    let b = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", b(c[0]), b(c[1]), b(c[2]))
}

/// World-to-SVG transform of an overhead plot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub origin: [f64; 2],
    pub extent_y: f64,
    pub scale: f64,
}

impl Affine {
    pub fn for_map(map: &TerrainMap, scale: f64) -> Self {
        Self { origin: map.origin, extent_y: map.extent()[1], scale }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [(p[0] - self.origin[0]) * self.scale, (self.extent_y - (p[1] - self.origin[1])) * self.scale]
    }
}

fn points(pts: impl IntoIterator<Item = [f64; 2]>) -> String {
    let mut s = String::new();
    for p in pts {
        if !s.is_empty() {
            s.push(' ');
        }
        let _ = write!(s, "{:.3},{:.3}", p[0], p[1]);
    }
    s
}

fn star(c: [f64; 2], r: f64) -> String {
    let pts = (0..10).map(|i| {
        let a = std::f64::consts::PI * (i as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
        let rr = if i % 2 == 0 { r } else { r * 0.45 };
        [c[0] + rr * a.cos(), c[1] + rr * a.sin()]
    });
    points(pts)
}

/// What to draw over the terrain.
#[derive(Debug, Clone, Default)]
pub struct OverheadPlot<'a> {
    pub path: &'a [State],
    pub waypoints: &'a [[f64; 2]],
    pub goal: Option<[f64; 2]>,
}

/// Terrain colours, the driven path, a square at its start, circles at the
/// waypoints and a star at the goal. `scale` is SVG units per metre.
pub fn overhead_svg(map: &TerrainMap, plot: &OverheadPlot, scale: f64) -> Result<String> {
    if plot.path.is_empty() {
        return Err(Error::EmptyLog("the path has no poses".into()));
    }
    let af = Affine::for_map(map, scale);
    let ext = map.extent();
    let (w, h) = (ext[0] * scale, ext[1] * scale);
    let cell = map.resolution * scale;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#);
    let _ = writeln!(s, r#"<g id="terrain" shape-rendering="crispEdges">"#);
    let colors: Vec<String> = map.classes.iter().map(|c| hex(class_color(c.tag))).collect();
    for iy in 0..map.height {
        let mut ix = 0;
        while ix < map.width {
            let k = map.class_index(ix, iy);
            let start = ix;
            while ix < map.width && map.class_index(ix, iy) == k {
                ix += 1;
            }
            let x = start as f64 * cell;
            let y = (map.height - 1 - iy) as f64 * cell;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{cell:.3}" fill="{}"/>"#,
                (ix - start) as f64 * cell,
                colors[k as usize]
            );
        }
    }
    s.push_str("</g>\n");
    let pts: Vec<[f64; 2]> = plot.path.iter().map(|p| af.apply(p.position())).collect();
    if pts.len() > 1 {
        let _ = writeln!(s, r#"<polyline id="path" fill="none" stroke="{CHOSEN_COLOR}" stroke-width="{:.3}" points="{}"/>"#, 0.08 * scale, points(pts.iter().copied()));
    }
    let m = 0.3 * scale;
    let _ = writeln!(
        s,
        r#"<rect id="start" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="white" stroke="black"/>"#,
        pts[0][0] - m / 2.0,
        pts[0][1] - m / 2.0,
        m,
        m
    );
    for (i, wp) in plot.waypoints.iter().enumerate() {
        let c = af.apply(*wp);
        let _ = writeln!(s, r#"<circle class="waypoint" data-index="{i}" cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="black" stroke-width="{:.3}"/>"#, c[0], c[1], 0.5 * scale, 0.05 * scale);
    }
    if let Some(g) = plot.goal {
        let _ = writeln!(s, r#"<polygon id="goal" points="{}" fill="gold" stroke="black"/>"#, star(af.apply(g), 0.4 * scale));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn projected(robot: &State, u: &ActionSequence, dt: f64, render: &RenderConfig, pixel: f64) -> Vec<[f64; 2]> {
    rollout(*robot, u, dt)
        .states
        .iter()
        .filter_map(|s| project_to_image(robot, s.position(), render))
        .map(|[c, r]| [c * pixel, (render.height as f64 - r) * pixel])
        .collect()
}

/// The ego observation with every sampled sequence's canonical rollout in
/// red and the chosen (weighted-mean) sequence in blue. Points behind the
/// camera are dropped; the rest are clipped to the image.
pub fn ego_overlay_svg(obs: &EgoObservation, step: &NavStep, render: &RenderConfig, dt: f64, pixel: f64) -> String {
    let (w, h) = (obs.width as f64 * pixel, obs.height as f64 * pixel);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#);
    let _ = writeln!(s, r#"<defs><clipPath id="frame"><rect x="0" y="0" width="{w:.3}" height="{h:.3}"/></clipPath></defs>"#);
    s.push_str("<g id=\"observation\" shape-rendering=\"crispEdges\">\n");
    for r in 0..obs.height {
        for c in 0..obs.width {
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{pixel:.3}" height="{pixel:.3}" fill="{}"/>"#,
                c as f64 * pixel,
                (obs.height - 1 - r) as f64 * pixel,
                hex(obs.rgb(r, c))
            );
        }
    }
    s.push_str("</g>\n<g clip-path=\"url(#frame)\" fill=\"none\">\n");
    for u in &step.diagnostics.samples {
        let _ = writeln!(s, r#"<polyline class="sample" stroke="{SAMPLE_COLOR}" stroke-opacity="0.35" points="{}"/>"#, points(projected(&step.state, u, dt, render, pixel)));
    }
    let _ = writeln!(
        s,
        r#"<polyline class="chosen" stroke="{CHOSEN_COLOR}" stroke-width="2" points="{}"/>"#,
        points(projected(&step.state, &step.diagnostics.mean, dt, render, pixel))
    );
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::MppiDiagnostics;
    use crate::dynamics::Control;

    fn polyline_points(svg: &str, id: &str) -> Vec<[f64; 2]> {
        let line = svg.lines().find(|l| l.contains(&format!("id=\"{id}\""))).unwrap();
        let start = line.find("points=\"").unwrap() + 8;
        let end = start + line[start..].find('"').unwrap();
        line[start..end]
            .split(' ')
            .map(|p| {
                let mut it = p.split(',').map(|v| v.parse::<f64>().unwrap());
                [it.next().unwrap(), it.next().unwrap()]
            })
            .collect()
    }

    #[test]
    fn single_point_path_draws_only_the_start() {
        let map = TerrainMap::open(8, 8, 0.5);
        let svg = overhead_svg(&map, &OverheadPlot { path: &[State::new(1.0, 1.0, 0.0)], ..Default::default() }, 10.0).unwrap();
        assert!(svg.contains("id=\"start\""));
        assert!(!svg.contains("id=\"path\""));
        assert!(!svg.contains("id=\"goal\""));
    }

    #[test]
    fn empty_path_is_an_error() {
        let map = TerrainMap::open(8, 8, 0.5);
        assert!(overhead_svg(&map, &OverheadPlot::default(), 10.0).is_err());
    }

    #[test]
    fn path_vertices_follow_the_affine_map() {
        let map = TerrainMap::open(20, 10, 0.5);
        let path = [State::new(1.0, 1.0, 0.0), State::new(2.5, 3.0, 0.0), State::new(7.25, 4.5, 0.0)];
        let svg = overhead_svg(&map, &OverheadPlot { path: &path, waypoints: &[[3.0, 3.0]], goal: Some([9.0, 4.0]) }, 20.0).unwrap();
        let pts = polyline_points(&svg, "path");
        assert_eq!(pts.len(), 3);
        for (p, s) in pts.iter().zip(&path) {
            // inverse of u = x * 20, v = (5 - y) * 20
            assert!((p[0] / 20.0 - s.chi).abs() < 1e-3);
            assert!((5.0 - p[1] / 20.0 - s.y).abs() < 1e-3);
        }
        assert_eq!(svg.matches("class=\"waypoint\"").count(), 1);
        assert!(svg.contains("id=\"goal\""));
    }

    #[test]
    fn overlay_has_one_polyline_per_sample_plus_chosen() {
        let obs = EgoObservation::filled(8, 8, [0.5; 3]);
        let u = ActionSequence::constant(Control::new(0.5, 0.1), 20);
        let step = NavStep {
            state: State::default(),
            diagnostics: MppiDiagnostics { samples: vec![u.clone(); 128], rewards: vec![0.0; 128], weights: vec![1.0 / 128.0; 128], mean: u, chosen_tau: 0.0 },
        };
        let render = RenderConfig { width: 8, height: 8, ..Default::default() };
        let svg = ego_overlay_svg(&obs, &step, &render, 0.1, 10.0);
        assert_eq!(svg.matches(&format!("stroke=\"{SAMPLE_COLOR}\"")).count(), 128);
        assert_eq!(svg.matches(&format!("stroke=\"{CHOSEN_COLOR}\"")).count(), 1);
    }
}
