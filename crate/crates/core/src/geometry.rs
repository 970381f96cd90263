//! Half-spaces, unions of convex regions, vertex-described agents and the
//! rigid motions that carry time-varying walls.
//!
//! All vectors are stored as [`Vec3`]. Planar problems embed their
//! coordinates as `(x, y, 0)` and rotate about the z axis, so 2D and 3D share
//! one code path. [`Dimension`] converts between the embedded form and the
//! `p`-component form used at the API boundary.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

const MIN_NORMAL_NORM: f64 = 1e-12;

/// Ambient dimension of a navigation problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dimension {
    Planar,
    Spatial,
}

impl Dimension {
    pub fn from_len(len: usize) -> Result<Self> {
        match len {
            2 => Ok(Dimension::Planar),
            3 => Ok(Dimension::Spatial),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    pub fn len(self) -> usize {
        match self {
            Dimension::Planar => 2,
            Dimension::Spatial => 3,
        }
    }

    /// Embeds `p` coordinates into a [`Vec3`], checking the component count.
    pub fn embed(self, coords: &[f64], context: &str) -> Result<Vec3> {
        if coords.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: context.to_string(),
                expected: self.len(),
                found: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(context, format!("non-finite component {bad}")));
        }
        Ok(match self {
            Dimension::Planar => Vec3::new(coords[0], coords[1], 0.0),
            Dimension::Spatial => Vec3::new(coords[0], coords[1], coords[2]),
        })
    }

    /// The first `p` components of `v`.
    pub fn project(self, v: &Vec3) -> Vec<f64> {
        v.as_slice()[..self.len()].to_vec()
    }

    /// Whether `v` lives in the embedded subspace (z = 0 for planar problems).
    pub fn contains(self, v: &Vec3) -> bool {
        match self {
            Dimension::Planar => v.z == 0.0,
            Dimension::Spatial => true,
        }
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        Dimension::from_len(value)
    }
}

impl From<Dimension> for usize {
    fn from(value: Dimension) -> Self {
        value.len()
    }
}

/// Constant-rate rigid motion: rotation about a fixed center followed by a
/// constant translation. The pose at `t = 0` is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidMotion {
    /// Angular velocity vector (rad/s). Planar motions use `(0, 0, omega)`.
    pub angular_velocity: Vec3,
    pub rotation_center: Vec3,
    pub linear_velocity: Vec3,
}

impl RigidMotion {
    /// Planar rotation at `omega` rad/s about `center`, plus a drift.
    pub fn planar(omega: f64, center: [f64; 2], linear_velocity: [f64; 2]) -> Self {
        RigidMotion {
            angular_velocity: Vec3::new(0.0, 0.0, omega),
            rotation_center: Vec3::new(center[0], center[1], 0.0),
            linear_velocity: Vec3::new(linear_velocity[0], linear_velocity[1], 0.0),
        }
    }

    /// Spatial rotation with angular velocity `axis_rate` (direction = axis,
    /// norm = rate in rad/s) about `center`, plus a drift.
    pub fn spatial(axis_rate: Vec3, center: Vec3, linear_velocity: Vec3) -> Self {
        RigidMotion {
            angular_velocity: axis_rate,
            rotation_center: center,
            linear_velocity,
        }
    }

    pub fn rotation(&self, t: f64) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(self.angular_velocity * t)
    }

    /// Position at time `t` of a point attached to the moving frame.
    pub fn point_at(&self, reference: &Vec3, t: f64) -> Vec3 {
        let c = self.rotation_center;
        c + self.rotation(t) * (reference - c) + self.linear_velocity * t
    }

    pub fn direction_at(&self, reference: &Vec3, t: f64) -> Vec3 {
        self.rotation(t) * reference
    }
}

/// One linear wall `psi(p) = n . (p - w)`; positive on the safe side.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    normal: Vec3,
    anchor: Vec3,
    motion: Option<RigidMotion>,
}

/// A half-space frozen at one instant, with the rates needed for `dpsi/dt`.
#[derive(Clone, Copy, Debug)]
pub struct PosedHalfSpace {
    pub normal: Vec3,
    pub anchor: Vec3,
    pub normal_rate: Vec3,
    pub anchor_rate: Vec3,
}

impl PosedHalfSpace {
    #[inline]
    pub fn eval(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.anchor))
    }

    #[inline]
    pub fn time_derivative(&self, p: &Vec3) -> f64 {
        self.normal_rate.dot(&(p - self.anchor)) - self.normal.dot(&self.anchor_rate)
    }
}

impl HalfSpace {
    /// Normals are kept as given; use [`HalfSpace::normalized`] for unit walls.
    pub fn new(normal: Vec3, anchor: Vec3) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > MIN_NORMAL_NORM) {
            return Err(Error::ZeroNormal {
                context: "half-space".into(),
                norm,
            });
        }
        if !anchor.iter().all(|c| c.is_finite()) || !normal.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("half-space", "non-finite normal or anchor"));
        }
        Ok(HalfSpace {
            normal,
            anchor,
            motion: None,
        })
    }

    pub fn planar(normal: [f64; 2], anchor: [f64; 2]) -> Result<Self> {
        HalfSpace::new(
            Vec3::new(normal[0], normal[1], 0.0),
            Vec3::new(anchor[0], anchor[1], 0.0),
        )
    }

    pub fn spatial(normal: [f64; 3], anchor: [f64; 3]) -> Result<Self> {
        HalfSpace::new(Vec3::from(normal), Vec3::from(anchor))
    }

    pub fn with_motion(mut self, motion: RigidMotion) -> Self {
        self.motion = Some(motion);
        self
    }

    /// Same wall with a unit-length normal. Barrier magnitudes, and so the
    /// effective smoothing sharpness, scale with the normal's length.
    pub fn normalized(&self) -> Self {
        HalfSpace {
            normal: self.normal / self.normal.norm(),
            ..self.clone()
        }
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    pub fn motion(&self) -> Option<&RigidMotion> {
        self.motion.as_ref()
    }

    pub fn is_static(&self) -> bool {
        self.motion.is_none()
    }

    pub fn without_motion(&self) -> Self {
        HalfSpace {
            motion: None,
            ..self.clone()
        }
    }

    pub fn normal_at(&self, t: f64) -> Vec3 {
        match &self.motion {
            Some(m) => m.direction_at(&self.normal, t),
            None => self.normal,
        }
    }

    pub fn anchor_at(&self, t: f64) -> Vec3 {
        match &self.motion {
            Some(m) => m.point_at(&self.anchor, t),
            None => self.anchor,
        }
    }

    pub fn pose(&self, t: f64) -> PosedHalfSpace {
        match &self.motion {
            None => PosedHalfSpace {
                normal: self.normal,
                anchor: self.anchor,
                normal_rate: Vec3::zeros(),
                anchor_rate: Vec3::zeros(),
            },
            Some(m) => {
                let rot = m.rotation(t);
                let omega = m.angular_velocity;
                let normal = rot * self.normal;
                let arm = rot * (self.anchor - m.rotation_center);
                PosedHalfSpace {
                    normal,
                    anchor: m.rotation_center + arm + m.linear_velocity * t,
                    normal_rate: omega.cross(&normal),
                    anchor_rate: omega.cross(&arm) + m.linear_velocity,
                }
            }
        }
    }

    /// `n(t) . (p - w(t))`.
    pub fn eval(&self, p: &Vec3, t: f64) -> f64 {
        self.pose(t).eval(p)
    }

    /// Analytic `dpsi/dt` at a fixed point; zero for static walls.
    pub fn time_derivative(&self, p: &Vec3, t: f64) -> f64 {
        self.pose(t).time_derivative(p)
    }
}

/// Index set of the half-spaces whose intersection forms one convex region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexRegion {
    indices: Vec<usize>,
}

impl ConvexRegion {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("convex region"));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "convex region",
                format!("duplicate half-space index {}", w[0]),
            ));
        }
        Ok(ConvexRegion { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// Free space as a union of convex regions over a shared list of walls.
/// The region topology is fixed at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeEnvironment {
    dimension: Dimension,
    half_spaces: Vec<HalfSpace>,
    regions: Vec<ConvexRegion>,
}

impl PolytopeEnvironment {
    pub fn new(
        dimension: Dimension,
        half_spaces: Vec<HalfSpace>,
        regions: Vec<ConvexRegion>,
    ) -> Result<Self> {
        if half_spaces.is_empty() {
            return Err(Error::Empty("half-space list"));
        }
        if regions.is_empty() {
            return Err(Error::Empty("region list"));
        }
        for (i, hs) in half_spaces.iter().enumerate() {
            let planar_ok = |v: &Vec3| dimension.contains(v);
            let motion_ok = hs.motion.as_ref().is_none_or(|m| match dimension {
                Dimension::Planar => {
                    m.angular_velocity.x == 0.0
                        && m.angular_velocity.y == 0.0
                        && planar_ok(&m.rotation_center)
                        && planar_ok(&m.linear_velocity)
                }
                Dimension::Spatial => true,
            });
            if !planar_ok(&hs.normal) || !planar_ok(&hs.anchor) || !motion_ok {
                return Err(Error::invalid(
                    format!("half-space {i}"),
                    "leaves the plane of a 2D environment",
                ));
            }
        }
        let mut referenced = vec![false; half_spaces.len()];
        for (j, region) in regions.iter().enumerate() {
            for &i in region.indices() {
                if i >= half_spaces.len() {
                    return Err(Error::InvalidRegion {
                        region: j,
                        reason: format!(
                            "half-space index {i} out of range ({} half-spaces)",
                            half_spaces.len()
                        ),
                    });
                }
                referenced[i] = true;
            }
        }
        if let Some(i) = referenced.iter().position(|r| !r) {
            return Err(Error::UnreferencedHalfSpace(i));
        }
        Ok(PolytopeEnvironment {
            dimension,
            half_spaces,
            regions,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn half_spaces(&self) -> &[HalfSpace] {
        &self.half_spaces
    }

    pub fn regions(&self) -> &[ConvexRegion] {
        &self.regions
    }

    pub fn num_half_spaces(&self) -> usize {
        self.half_spaces.len()
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn is_static(&self) -> bool {
        self.half_spaces.iter().all(HalfSpace::is_static)
    }

    /// Copy of the environment with every wall frozen at its reference pose.
    pub fn without_motion(&self) -> Self {
        PolytopeEnvironment {
            half_spaces: self.half_spaces.iter().map(HalfSpace::without_motion).collect(),
            ..self.clone()
        }
    }

    pub fn pose(&self, t: f64) -> Vec<PosedHalfSpace> {
        self.half_spaces.iter().map(|hs| hs.pose(t)).collect()
    }
}

/// Translating polytope agent, described by vertex offsets from its center.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentShape {
    offsets: Vec<Vec3>,
}

impl AgentShape {
    pub fn new(offsets: Vec<Vec3>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Empty("agent offset list"));
        }
        if offsets.iter().any(|o| !o.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("agent offsets", "non-finite component"));
        }
        Ok(AgentShape { offsets })
    }

    /// The single-vertex agent at its center.
    pub fn point() -> Self {
        AgentShape {
            offsets: vec![Vec3::zeros()],
        }
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_point(&self) -> bool {
        self.offsets.len() == 1 && self.offsets[0] == Vec3::zeros()
    }

    pub fn circumradius(&self) -> f64 {
        self.offsets.iter().map(|o| o.norm()).fold(0.0, f64::max)
    }

    pub fn check_dimension(&self, dimension: Dimension) -> Result<()> {
        match self.offsets.iter().position(|o| !dimension.contains(o)) {
            Some(k) => Err(Error::invalid(
                format!("agent offset {k}"),
                "leaves the plane of a 2D environment",
            )),
            None => Ok(()),
        }
    }

    pub fn vertices(&self, center: &Vec3) -> Vec<Vec3> {
        self.offsets.iter().map(|o| center + o).collect()
    }
}

/// Vertex positions `p + dp_k`, in offset order.
pub fn agent_vertices(shape: &AgentShape, center: &Vec3) -> Vec<Vec3> {
    shape.vertices(center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn static_wall_eval() {
        let hs = HalfSpace::planar([1.0, 0.0], [2.0, 2.0]).unwrap();
        assert_eq!(hs.eval(&Vec3::new(3.0, 3.0, 0.0), 0.0), 1.0);
        assert_eq!(hs.eval(&Vec3::new(2.0, 2.0, 0.0), 5.0), 0.0);
        assert_eq!(hs.time_derivative(&Vec3::new(7.0, -1.0, 0.0), 3.0), 0.0);
    }

    #[test]
    fn quarter_turn_rotates_normal() {
        let hs = HalfSpace::planar([1.0, 0.0], [0.0, 0.0])
            .unwrap()
            .with_motion(RigidMotion::planar(FRAC_PI_2, [0.0, 0.0], [0.0, 0.0]));
        assert_abs_diff_eq!(hs.eval(&Vec3::new(0.0, 1.0, 0.0), 1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotating_wall_time_derivative() {
        let hs = HalfSpace::planar([1.0, 0.0], [0.0, 0.0])
            .unwrap()
            .with_motion(RigidMotion::planar(0.2, [0.0, 0.0], [0.0, 0.0]));
        assert_abs_diff_eq!(hs.time_derivative(&Vec3::new(1.0, 0.0, 0.0), 0.0), 0.0);
        assert_abs_diff_eq!(
            hs.time_derivative(&Vec3::new(0.0, 1.0, 0.0), 0.0),
            0.2,
            epsilon = 1e-15
        );
        let p = Vec3::new(0.0, 1.0, 0.0);
        let step = 1e-5;
        let fd = (hs.eval(&p, step) - hs.eval(&p, -step)) / (2.0 * step);
        assert!((fd - 0.2).abs() <= 1e-6);
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(matches!(
            HalfSpace::planar([0.0, 1e-13], [0.0, 0.0]),
            Err(Error::ZeroNormal { .. })
        ));
    }

    #[test]
    fn normalized_keeps_direction() {
        let hs = HalfSpace::planar([3.0, 4.0], [1.0, 1.0]).unwrap().normalized();
        assert_abs_diff_eq!(hs.normal().norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hs.normal().x, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn region_validation() {
        assert!(matches!(ConvexRegion::new(vec![]), Err(Error::Empty(_))));
        assert!(ConvexRegion::new(vec![1, 0, 1]).is_err());
        let hs = vec![
            HalfSpace::planar([1.0, 0.0], [0.0, 0.0]).unwrap(),
            HalfSpace::planar([0.0, 1.0], [0.0, 0.0]).unwrap(),
        ];
        let out_of_range = PolytopeEnvironment::new(
            Dimension::Planar,
            hs.clone(),
            vec![ConvexRegion::new(vec![0, 2]).unwrap()],
        );
        assert!(matches!(out_of_range, Err(Error::InvalidRegion { region: 0, .. })));
        let unreferenced = PolytopeEnvironment::new(
            Dimension::Planar,
            hs,
            vec![ConvexRegion::new(vec![1]).unwrap()],
        );
        assert!(matches!(unreferenced, Err(Error::UnreferencedHalfSpace(0))));
    }

    #[test]
    fn planar_environment_rejects_out_of_plane_walls() {
        let hs = HalfSpace::spatial([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]).unwrap();
        let env = PolytopeEnvironment::new(
            Dimension::Planar,
            vec![hs],
            vec![ConvexRegion::new(vec![0]).unwrap()],
        );
        assert!(env.is_err());
    }

    #[test]
    fn vertices_follow_center() {
        assert_eq!(
            agent_vertices(&AgentShape::point(), &Vec3::new(1.0, 2.0, 0.0)),
            vec![Vec3::new(1.0, 2.0, 0.0)]
        );
        let square = AgentShape::new(vec![
            Vec3::new(0.5, 0.5, 0.0),
            Vec3::new(-0.5, 0.5, 0.0),
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::new(0.5, -0.5, 0.0),
        ])
        .unwrap();
        assert_eq!(square.vertices(&Vec3::zeros()), square.offsets().to_vec());

        let hexagon: Vec<Vec3> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let shape = AgentShape::new(hexagon.clone()).unwrap();
        let shifted = shape.vertices(&Vec3::new(1.0, 0.0, 0.0));
        for (v, o) in shifted.iter().zip(&hexagon) {
            assert_eq!(v.x, o.x + 1.0);
            assert_eq!(v.y, o.y);
        }
    }

    #[test]
    fn dimension_embedding() {
        let d = Dimension::Planar;
        assert_eq!(d.embed(&[1.0, 2.0], "x").unwrap(), Vec3::new(1.0, 2.0, 0.0));
        assert!(matches!(
            d.embed(&[1.0, 2.0, 3.0], "x0"),
            Err(Error::DimensionMismatch { expected: 2, found: 3, .. })
        ));
        assert_eq!(Dimension::Spatial.project(&Vec3::new(1.0, 2.0, 3.0)), vec![1.0, 2.0, 3.0]);
        assert!(Dimension::from_len(4).is_err());
    }
}
