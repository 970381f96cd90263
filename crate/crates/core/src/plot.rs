//! SVG rendering of environments and trajectories.
//!
//! Planar scenarios are drawn as a single view. Spatial scenarios are drawn
//! as three orthographic projections, with obstacle cells shaded by the
//! fraction of the viewing depth that is occupied.

use std::fmt::Write;

use crate::barrier::psi_point;
use crate::geometry::{Dimension, Vec3};
use crate::scenarios::Scenario;
use crate::sim::SimResult;

const VIEW_SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotOptions {
    /// Obstacle raster cells along the longer axis of each view.
    pub resolution: usize,
    /// Depth samples per cell in projected views.
    pub depth_samples: usize,
    /// Number of agent outlines drawn along the trajectory.
    pub snapshots: usize,
    /// Time at which the obstacle is drawn when there is no trajectory.
    pub t: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            resolution: 160,
            depth_samples: 24,
            snapshots: 8,
            t: 0.0,
        }
    }
}

/// Axis-aligned window mapped onto one panel of the figure.
#[derive(Clone, Copy, Debug)]
struct View {
    axes: (usize, usize),
    depth: Option<usize>,
    lower: Vec3,
    upper: Vec3,
    scale: f64,
    origin: (f64, f64),
}

impl View {
    fn width(&self) -> f64 {
        (self.upper[self.axes.0] - self.lower[self.axes.0]) * self.scale
    }

    fn height(&self) -> f64 {
        (self.upper[self.axes.1] - self.lower[self.axes.1]) * self.scale
    }

    fn map(&self, p: &Vec3) -> (f64, f64) {
        let (a, b) = self.axes;
        (
            self.origin.0 + (p[a] - self.lower[a]) * self.scale,
            self.origin.1 + self.height() - (p[b] - self.lower[b]) * self.scale,
        )
    }
}

fn bounds(scenario: &Scenario, results: &[SimResult]) -> (Vec3, Vec3) {
    let (mut lo, mut hi) = scenario.bounding_box();
    for r in results {
        let pad = scenario.agent.circumradius();
        for p in &r.positions {
            for axis in 0..scenario.dimension().len() {
                lo[axis] = lo[axis].min(p[axis] - pad);
                hi[axis] = hi[axis].max(p[axis] + pad);
            }
        }
    }
    (lo, hi)
}

fn views(dim: Dimension, lo: Vec3, hi: Vec3) -> Vec<View> {
    let panels: Vec<((usize, usize), Option<usize>)> = match dim {
        Dimension::Planar => vec![((0, 1), None)],
        Dimension::Spatial => vec![((0, 1), Some(2)), ((0, 2), Some(1)), ((1, 2), Some(0))],
    };
    let mut x = MARGIN;
    panels
        .into_iter()
        .map(|(axes, depth)| {
            let extent = (hi[axes.0] - lo[axes.0]).max(hi[axes.1] - lo[axes.1]);
            let view = View {
                axes,
                depth,
                lower: lo,
                upper: hi,
                scale: VIEW_SIZE / extent,
                origin: (x, MARGIN),
            };
            x += view.width() + MARGIN;
            view
        })
        .collect()
}

/// Andrew's monotone chain on the projected points.
fn hull_2d(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn draw_obstacle(svg: &mut String, scenario: &Scenario, view: &View, opts: &PlotOptions, t: f64, opacity: f64) {
    let env = &scenario.environment;
    let (a, b) = view.axes;
    let extent = (view.upper[a] - view.lower[a]).max(view.upper[b] - view.lower[b]);
    let cell = extent / opts.resolution as f64;
    let nx = ((view.upper[a] - view.lower[a]) / cell).ceil() as usize;
    let ny = ((view.upper[b] - view.lower[b]) / cell).ceil() as usize;
    let depth_n = if view.depth.is_some() { opts.depth_samples.max(1) } else { 1 };
    let px = cell * view.scale;

    let occupancy = |i: usize, j: usize| -> usize {
        let mut p = Vec3::zeros();
        p[a] = view.lower[a] + (i as f64 + 0.5) * cell;
        p[b] = view.lower[b] + (j as f64 + 0.5) * cell;
        (0..depth_n)
            .filter(|&k| {
                if let Some(d) = view.depth {
                    p[d] = view.lower[d] + (k as f64 + 0.5) / depth_n as f64 * (view.upper[d] - view.lower[d]);
                }
                psi_point(env, &p, t) < 0.0
            })
            .count()
    };

    let _ = writeln!(svg, "<g fill=\"#5a6270\" stroke=\"none\">");
    for j in 0..ny {
        let mut i = 0;
        while i < nx {
            let occ = occupancy(i, j);
            if occ == 0 {
                i += 1;
                continue;
            }
            let run_start = i;
            while i + 1 < nx && occupancy(i + 1, j) == occ {
                i += 1;
            }
            i += 1;
            let mut corner = Vec3::zeros();
            corner[a] = view.lower[a] + run_start as f64 * cell;
            corner[b] = view.lower[b] + (j + 1) as f64 * cell;
            let (x, y) = view.map(&corner);
            let fill = opacity * occ as f64 / depth_n as f64;
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{px:.2}\" fill-opacity=\"{fill:.3}\"/>",
                (i - run_start) as f64 * px,
            );
        }
    }
    let _ = writeln!(svg, "</g>");
}

fn draw_marker(svg: &mut String, view: &View, p: &Vec3, color: &str, label: &str) {
    let (x, y) = view.map(p);
    let _ = writeln!(
        svg,
        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"><title>{label}</title></circle>"
    );
}

fn snapshot_indices(len: usize, count: usize) -> Vec<usize> {
    if len == 0 || count == 0 {
        return Vec::new();
    }
    if count == 1 || len == 1 {
        return vec![len - 1];
    }
    let mut idx: Vec<usize> = (0..count)
        .map(|k| ((k as f64 / (count - 1) as f64) * (len - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Renders the scenario with any number of simulated trajectories. Agent
/// outlines are drawn along the first one only.
pub fn render_svg(scenario: &Scenario, results: &[SimResult], opts: &PlotOptions) -> String {
    let (lo, hi) = bounds(scenario, results);
    let result = results.first();
    let panels = views(scenario.dimension(), lo, hi);
    let width = panels.iter().map(|v| v.width() + MARGIN).sum::<f64>() + MARGIN;
    let height = panels.iter().map(|v| v.height()).fold(0.0, f64::max) + 2.0 * MARGIN;

    let snapshots = result.map_or_else(Vec::new, |r| snapshot_indices(r.len(), opts.snapshots));
    let obstacle_times: Vec<f64> = match result {
        Some(r) if !scenario.environment.is_static() && !snapshots.is_empty() => {
            snapshots.iter().map(|&i| r.times[i]).collect()
        }
        _ => vec![opts.t],
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    );
    let _ = writeln!(svg, "<title>{}</title>", scenario.name);
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for view in &panels {
        let (x0, y0) = view.origin;
        let _ = writeln!(
            svg,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#bbb\"/>",
            view.width(),
            view.height()
        );
        let names = ["x", "y", "z"];
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}-{}</text>",
            x0,
            y0 - 6.0,
            names[view.axes.0],
            names[view.axes.1]
        );

        let layer_opacity = 1.0 / obstacle_times.len() as f64;
        for &t in &obstacle_times {
            draw_obstacle(&mut svg, scenario, view, opts, t, layer_opacity.max(0.15));
        }

        if let Some(r) = result {
            for (k, &i) in snapshots.iter().enumerate() {
                let hull = hull_2d(
                    scenario
                        .agent
                        .vertices(&r.positions[i])
                        .iter()
                        .map(|v| view.map(v))
                        .collect(),
                );
                let shade = 0.3 + 0.7 * k as f64 / snapshots.len().max(1) as f64;
                if hull.len() >= 3 {
                    let _ = writeln!(
                        svg,
                        "<polygon points=\"{}\" fill=\"#2a7de1\" fill-opacity=\"0.15\" stroke=\"#2a7de1\" stroke-opacity=\"{shade:.2}\"/>",
                        points_attr(&hull)
                    );
                }
            }
        }
        for (k, r) in results.iter().enumerate() {
            let path: Vec<(f64, f64)> = r.positions.iter().map(|p| view.map(p)).collect();
            let stroke = if k == 0 { 1.8 } else { 0.8 };
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#d9480f\" stroke-width=\"{stroke}\"/>",
                points_attr(&path)
            );
            if let Some(first) = r.positions.first() {
                draw_marker(&mut svg, view, first, "#2b8a3e", "start");
            }
        }
        draw_marker(&mut svg, view, &scenario.controller.goal, "#c92a2a", "goal");
    }
    let _ = writeln!(svg, "</svg>");
    svg
}
