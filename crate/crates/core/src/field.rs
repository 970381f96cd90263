//! Regular sampling grids and barrier field dumps.

use std::io::Write;

use crate::barrier::{h_smooth, psi_agent};
use crate::error::{Error, Result};
use crate::geometry::{Dimension, Vec3};
use crate::scenarios::Scenario;
use crate::sim::fmt17;

/// Axis-aligned lattice with `resolution` points per axis, endpoints
/// included. Planar grids ignore the z axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dimension: Dimension,
    pub lower: Vec3,
    pub upper: Vec3,
    pub resolution: usize,
}

impl Grid {
    pub fn new(dimension: Dimension, lower: Vec3, upper: Vec3, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid("grid resolution", "need at least 2 points per axis"));
        }
        for axis in 0..dimension.len() {
            if !(upper[axis] > lower[axis]) {
                return Err(Error::invalid(
                    "grid bounds",
                    format!("upper must exceed lower on axis {axis}"),
                ));
            }
        }
        Ok(Grid {
            dimension,
            lower,
            upper,
            resolution,
        })
    }

    /// Grid over the scenario's padded bounding box.
    pub fn around(scenario: &Scenario, resolution: usize) -> Result<Self> {
        let (lower, upper) = scenario.bounding_box();
        Grid::new(scenario.dimension(), lower, upper, resolution)
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dimension.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let s = i as f64 / (self.resolution - 1) as f64;
        self.lower[axis] + (self.upper[axis] - self.lower[axis]) * s
    }

    /// Points in row-major order (x fastest).
    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        let n = self.resolution;
        (0..self.len()).map(move |idx| {
            let mut p = Vec3::zeros();
            for axis in 0..self.dimension.len() {
                let i = (idx / n.pow(axis as u32)) % n;
                p[axis] = self.coordinate(axis, i);
            }
            p
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub position: Vec3,
    pub psi: f64,
    pub h: f64,
}

/// Nonsmooth and smooth barrier values of the scenario's agent at every
/// grid point, at time `t`.
pub fn sample_field(scenario: &Scenario, grid: &Grid, t: f64) -> Vec<FieldSample> {
    grid.points()
        .map(|p| FieldSample {
            position: p,
            psi: psi_agent(&scenario.environment, &scenario.agent, &p, t),
            h: h_smooth(&scenario.environment, &scenario.agent, &p, t, &scenario.cbf).value,
        })
        .collect()
}

pub fn write_field_csv<W: Write>(
    dimension: Dimension,
    samples: &[FieldSample],
    mut out: W,
) -> std::io::Result<()> {
    let axes = &["x", "y", "z"][..dimension.len()];
    writeln!(out, "{},psi,h", axes.join(","))?;
    for s in samples {
        let mut row: Vec<String> = s.position.iter().take(dimension.len()).map(|c| fmt17(*c)).collect();
        row.push(fmt17(s.psi));
        row.push(fmt17(s.h));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin;

    #[test]
    fn grid_covers_corners() {
        let g = Grid::new(
            Dimension::Planar,
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 2.0, 0.0),
            3,
        )
        .unwrap();
        let pts: Vec<Vec3> = g.points().collect();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(pts[1], Vec3::new(0.0, 0.0, 0.0));
        assert_eq!(pts[8], Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn corner_field_changes_sign_at_wall() {
        let s = builtin("convex-corner").unwrap();
        let g = Grid::new(
            Dimension::Planar,
            Vec3::new(0.0, 4.0, 0.0),
            Vec3::new(4.0, 4.0 + 1e-9, 0.0),
            41,
        )
        .unwrap();
        let samples = sample_field(&s, &g, 0.0);
        for f in samples.iter().take(41) {
            let x = f.position.x;
            if x < 2.0 - 1e-9 {
                assert!(f.psi < 0.0);
            } else if x > 2.0 + 1e-9 {
                assert!(f.psi > 0.0);
            }
        }
    }

    #[test]
    fn time_varying_field_moves() {
        let s = builtin("revolving-door").unwrap();
        let g = Grid::around(&s, 20).unwrap();
        let a = sample_field(&s, &g, 0.0);
        let b = sample_field(&s, &g, 2.0);
        assert!(a.iter().zip(&b).any(|(x, y)| x.psi != y.psi));
    }

    #[test]
    fn csv_layout() {
        let s = builtin("pyramid").unwrap();
        let g = Grid::around(&s, 2).unwrap();
        let mut buf = Vec::new();
        write_field_csv(s.dimension(), &sample_field(&s, &g, 0.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y,z,psi,h");
        assert_eq!(text.lines().count(), 9);
    }
}
