//! Bundled navigation problems and the JSON scenario format.
//!
//! Sizes, start points and goals of the bundled fixtures are read off
//! published figures and are representative rather than exact. Region
//! topologies, agent vertex counts and controller/barrier parameters are
//! the published ones.

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::barrier::{CbfParams, SmoothBarrier};
use crate::error::{Error, Result};
use crate::filter::DesiredController;
use crate::geometry::{
    AgentShape, ConvexRegion, Dimension, HalfSpace, PolytopeEnvironment, RigidMotion, Vec3,
};
use crate::sim::{Integrator, SimConfig};

pub const BUILTIN_NAMES: &[&str] = &[
    "convex-corner",
    "concave-corner",
    "l-shape",
    "crossroad",
    "ellipse",
    "revolving-door",
    "pyramid",
];

/// Complete problem description: environment, agent, controller, barrier
/// parameters, default simulation settings and extra start points.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub environment: PolytopeEnvironment,
    pub agent: AgentShape,
    pub controller: DesiredController,
    pub cbf: CbfParams,
    pub default_sim: SimConfig,
    pub alternative_starts: Vec<Vec3>,
}

impl Scenario {
    pub fn dimension(&self) -> Dimension {
        self.environment.dimension()
    }

    pub fn barrier(&self) -> SmoothBarrier<'_> {
        SmoothBarrier {
            environment: &self.environment,
            agent: &self.agent,
            params: &self.cbf,
        }
    }

    /// The primary start followed by the alternative ones.
    pub fn starts(&self) -> Vec<Vec3> {
        std::iter::once(self.default_sim.x0)
            .chain(self.alternative_starts.iter().copied())
            .collect()
    }

    /// Same problem with every wall held at its reference pose.
    pub fn without_motion(&self) -> Self {
        Scenario {
            name: format!("{}-static", self.name),
            environment: self.environment.without_motion(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dimension();
        self.agent.check_dimension(dim)?;
        self.controller.validate()?;
        self.cbf.validate()?;
        self.default_sim.validate()?;
        for (name, v) in [("controller.goal", &self.controller.goal), ("sim.x0", &self.default_sim.x0)]
            .into_iter()
            .chain(self.alternative_starts.iter().map(|s| ("alternative_starts", s)))
        {
            if !dim.contains(v) {
                return Err(Error::invalid(name, "leaves the plane of a 2D scenario"));
            }
        }
        Ok(())
    }

    /// Axis-aligned box around the walls' reference anchors, the starts and
    /// the goal, padded by the agent circumradius.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let points = self
            .environment
            .half_spaces()
            .iter()
            .map(|hs| *hs.anchor())
            .chain(self.starts())
            .chain(std::iter::once(self.controller.goal));
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let pad = Vec3::repeat(self.agent.circumradius());
        let (mut lo, mut hi) = (lo - pad, hi + pad);
        if self.dimension() == Dimension::Planar {
            lo.z = 0.0;
            hi.z = 0.0;
        }
        (lo, hi)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.into_scenario()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(self))
            .expect("scenario serialization is infallible");
        text.push('\n');
        text
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text)
}

pub fn save(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|e| Error::io(path, e))
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let scenario = match name {
        "convex-corner" => convex_corner(),
        "concave-corner" => concave_corner(),
        "l-shape" => l_shape(),
        "crossroad" => crossroad(),
        "ellipse" => ellipse(),
        "revolving-door" => revolving_door(),
        "pyramid" => pyramid(),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Environment variable naming a directory of `<name>.json` scenario files.
pub const SCENARIO_DIR_ENV: &str = "POLYCBF_SCENARIO_DIR";

/// Looks `reference` up as a file path, then as `<name>.json` in the
/// directory named by [`SCENARIO_DIR_ENV`], then as a builtin name.
pub fn resolve(reference: &str) -> Result<Scenario> {
    let path = Path::new(reference);
    if path.is_file() {
        return load(path);
    }
    if let Some(dir) = std::env::var_os(SCENARIO_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{reference}.json"));
        if candidate.is_file() {
            return load(candidate);
        }
    }
    builtin(reference)
}

// ---------------------------------------------------------------------------
// Bundled fixtures

fn p2(x: f64, y: f64) -> Vec3 {
    Vec3::new(x, y, 0.0)
}

fn planar_walls(walls: &[([f64; 2], [f64; 2])]) -> Vec<HalfSpace> {
    walls
        .iter()
        .map(|(n, w)| HalfSpace::planar(*n, *w).expect("fixture normals are nonzero"))
        .collect()
}

fn regions(sets: &[&[usize]]) -> Vec<ConvexRegion> {
    sets.iter()
        .map(|s| ConvexRegion::new(s.to_vec()).expect("fixture regions are valid"))
        .collect()
}

/// Controller and barrier settings shared by every fixture: K_p = 1, u_max = 1,
/// kappa = 5, alpha(h) = 2h.
fn standard(
    name: &str,
    environment: PolytopeEnvironment,
    agent: AgentShape,
    goal: Vec3,
    buffer: f64,
    x0: Vec3,
    alternative_starts: Vec<Vec3>,
) -> Scenario {
    Scenario {
        name: name.into(),
        environment,
        agent,
        controller: DesiredController {
            goal,
            gain: 1.0,
            u_max: 1.0,
        },
        cbf: CbfParams {
            kappa: 5.0,
            buffer,
            alpha_gain: 2.0,
        },
        default_sim: SimConfig::new(x0),
        alternative_starts,
    }
}

const CORNER: [([f64; 2], [f64; 2]); 2] = [([1.0, 0.0], [2.0, 2.0]), ([0.0, 1.0], [2.0, 2.0])];

fn convex_corner() -> Scenario {
    let env = PolytopeEnvironment::new(Dimension::Planar, planar_walls(&CORNER), regions(&[&[0, 1]]))
        .unwrap();
    // The goal lies beyond the x = 2 wall; the agent slides along it and stops.
    standard(
        "convex-corner",
        env,
        AgentShape::point(),
        p2(0.5, 3.5),
        0.0,
        p2(5.0, 5.0),
        vec![p2(6.0, 3.0), p2(4.0, 6.0)],
    )
}

fn concave_corner() -> Scenario {
    let env = PolytopeEnvironment::new(
        Dimension::Planar,
        planar_walls(&CORNER),
        regions(&[&[0], &[1]]),
    )
    .unwrap();
    standard(
        "concave-corner",
        env,
        AgentShape::point(),
        p2(-0.5, 4.0),
        0.7,
        p2(5.0, -1.0),
        vec![p2(4.0, -2.0), p2(6.0, 0.5)],
    )
}

/// L-shaped obstacle with vertices (0,0), (4,0), (4,2), (2,2), (2,4), (0,4).
/// Its reflex corner at (2,2) is the convex corner of free space.
fn l_shape() -> Scenario {
    let walls = planar_walls(&[
        ([-1.0, 0.0], [0.0, 0.0]),
        ([0.0, -1.0], [0.0, 0.0]),
        ([1.0, 0.0], [4.0, 0.0]),
        ([0.0, 1.0], [0.0, 4.0]),
        ([1.0, 0.0], [2.0, 2.0]),
        ([0.0, 1.0], [2.0, 2.0]),
    ]);
    let env = PolytopeEnvironment::new(
        Dimension::Planar,
        walls,
        regions(&[&[0], &[1], &[2], &[3], &[4, 5]]),
    )
    .unwrap();
    standard(
        "l-shape",
        env,
        AgentShape::point(),
        p2(3.0, 3.0),
        0.7,
        p2(-1.0, 5.0),
        vec![
            p2(5.0, -1.0),
            p2(-2.0, 6.0),
            p2(6.0, -2.0),
            p2(0.0, 5.0),
            p2(5.0, 0.0),
        ],
    )
}

fn diamond(radius: f64) -> AgentShape {
    AgentShape::new(vec![
        p2(radius, 0.0),
        p2(0.0, radius),
        p2(-radius, 0.0),
        p2(0.0, -radius),
    ])
    .unwrap()
}

/// Two roads of half-width 1 crossing at the origin.
fn crossroad() -> Scenario {
    let walls = planar_walls(&[
        ([0.0, 1.0], [0.0, -1.0]),
        ([0.0, -1.0], [0.0, 1.0]),
        ([1.0, 0.0], [-1.0, 0.0]),
        ([-1.0, 0.0], [1.0, 0.0]),
    ]);
    let env = PolytopeEnvironment::new(Dimension::Planar, walls, regions(&[&[0, 1], &[2, 3]]))
        .unwrap();
    standard(
        "crossroad",
        env,
        diamond(0.3),
        p2(0.0, 5.0),
        0.7,
        p2(-5.0, 0.0),
        vec![p2(5.0, 0.2), p2(0.2, -5.0)],
    )
}

/// Vertices of an `n`-gon inscribed in an axis-aligned ellipse, at angles
/// `2 pi m / n`, counterclockwise.
pub fn ellipse_polygon(semi_x: f64, semi_y: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / n as f64;
            p2(semi_x * a.cos(), semi_y * a.sin())
        })
        .collect()
}

/// Unit outward walls of a counterclockwise convex polygon, one per edge,
/// anchored at the edge's first vertex.
fn exterior_walls(polygon: &[Vec3]) -> Vec<HalfSpace> {
    (0..polygon.len())
        .map(|j| {
            let a = polygon[j];
            let b = polygon[(j + 1) % polygon.len()];
            let d = b - a;
            HalfSpace::new(p2(d.y, -d.x), a).unwrap().normalized()
        })
        .collect()
}

/// Ellipse agent around an ellipse obstacle, both as 32-gons. Free space is
/// the union of the 32 edge exteriors.
fn ellipse() -> Scenario {
    let obstacle = ellipse_polygon(1.5, 1.0, 32);
    let walls = exterior_walls(&obstacle);
    let sets: Vec<ConvexRegion> = (0..32).map(|j| ConvexRegion::new(vec![j]).unwrap()).collect();
    let env = PolytopeEnvironment::new(Dimension::Planar, walls, sets).unwrap();
    let agent = AgentShape::new(ellipse_polygon(0.5, 0.3, 32)).unwrap();
    standard(
        "ellipse",
        env,
        agent,
        p2(4.0, -0.2),
        0.0,
        p2(-4.0, 0.3),
        vec![p2(-4.0, -1.0), p2(-3.0, 2.5)],
    )
}

pub fn regular_polygon(radius: f64, n: usize, phase: f64) -> Vec<Vec3> {
    (0..n)
        .map(|m| {
            let a = phase + 2.0 * PI * m as f64 / n as f64;
            p2(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

/// Cross-shaped four-wing door (a non-convex dodecagon) spinning about the
/// origin. Free space: four tip half-spaces and four notch quadrants,
/// listed counterclockwise starting from the +x wing.
fn revolving_door() -> Scenario {
    const ARM: f64 = 1.5;
    const HALF_THICKNESS: f64 = 0.1;
    const OMEGA: f64 = 0.2;
    let (l, w) = (ARM, HALF_THICKNESS);
    let local: [([f64; 2], [f64; 2]); 12] = [
        ([1.0, 0.0], [l, 0.0]),
        ([0.0, 1.0], [w, w]),
        ([1.0, 0.0], [w, w]),
        ([0.0, 1.0], [0.0, l]),
        ([-1.0, 0.0], [-w, w]),
        ([0.0, 1.0], [-w, w]),
        ([-1.0, 0.0], [-l, 0.0]),
        ([0.0, -1.0], [-w, -w]),
        ([-1.0, 0.0], [-w, -w]),
        ([0.0, -1.0], [0.0, -l]),
        ([1.0, 0.0], [w, -w]),
        ([0.0, -1.0], [w, -w]),
    ];
    // Reference pose: wings along the diagonals.
    let (s, c) = FRAC_PI_4.sin_cos();
    let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
    let motion = RigidMotion::planar(OMEGA, [0.0, 0.0], [0.0, 0.0]);
    let walls = local
        .iter()
        .map(|(n, a)| HalfSpace::planar(rot(*n), rot(*a)).unwrap().with_motion(motion))
        .collect();
    let env = PolytopeEnvironment::new(
        Dimension::Planar,
        walls,
        regions(&[&[0], &[1, 2], &[3], &[4, 5], &[6], &[7, 8], &[9], &[10, 11]]),
    )
    .unwrap();
    let agent = AgentShape::new(regular_polygon(0.3, 6, 0.0)).unwrap();
    standard(
        "revolving-door",
        env,
        agent,
        p2(3.0, 0.0),
        0.0,
        p2(-3.0, 0.0),
        vec![p2(-3.0, 0.5), p2(-2.5, -1.0)],
    )
}

/// Square pyramid (base half-width 1, height 1.5) standing on the ground.
/// Walls: the plane through the apex, four faces, the ground.
fn pyramid() -> Scenario {
    const BASE: f64 = 1.0;
    const HEIGHT: f64 = 1.5;
    let face = |nx: f64, ny: f64| {
        HalfSpace::spatial([HEIGHT * nx, HEIGHT * ny, BASE], [BASE * nx, BASE * ny, 0.0])
            .unwrap()
            .normalized()
    };
    let walls = vec![
        HalfSpace::spatial([0.0, 0.0, 1.0], [0.0, 0.0, HEIGHT]).unwrap(),
        face(1.0, 0.0),
        face(0.0, 1.0),
        face(-1.0, 0.0),
        face(0.0, -1.0),
        HalfSpace::spatial([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]).unwrap(),
    ];
    let env = PolytopeEnvironment::new(
        Dimension::Spatial,
        walls,
        regions(&[&[0], &[1, 5], &[2, 5], &[3, 5], &[4, 5]]),
    )
    .unwrap();
    let half = 0.25;
    let cube = (0..8)
        .map(|m| {
            let sign = |bit: usize| if m & bit == 0 { -half } else { half };
            Vec3::new(sign(1), sign(2), sign(4))
        })
        .collect();
    standard(
        "pyramid",
        env,
        AgentShape::new(cube).unwrap(),
        Vec3::new(3.0, 0.4, 0.0),
        0.0,
        Vec3::new(-3.0, -0.6, 1.0),
        vec![Vec3::new(-3.0, 1.0, 1.5), Vec3::new(-2.5, -2.0, 0.8)],
    )
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dimension: usize,
    halfspaces: Vec<HalfSpaceFile>,
    regions: Vec<Vec<usize>>,
    agent: AgentFile,
    controller: ControllerFile,
    cbf: CbfParams,
    sim: SimFile,
    #[serde(default)]
    alternative_starts: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HalfSpaceFile {
    normal: Vec<f64>,
    anchor: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    motion: Option<MotionFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_rate: Option<Vec<f64>>,
    center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linear_velocity: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    offsets: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    goal: Vec<f64>,
    gain: f64,
    u_max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    dt: f64,
    t_end: f64,
    x0: Vec<f64>,
    goal_tolerance: f64,
    #[serde(default = "default_stride")]
    record_stride: usize,
    #[serde(default)]
    integrator: Integrator,
}

fn default_stride() -> usize {
    1
}

impl ScenarioFile {
    fn from_scenario(s: &Scenario) -> Self {
        let dim = s.dimension();
        let proj = |v: &Vec3| dim.project(v);
        ScenarioFile {
            name: Some(s.name.clone()),
            dimension: dim.len(),
            halfspaces: s
                .environment
                .half_spaces()
                .iter()
                .map(|hs| HalfSpaceFile {
                    normal: proj(hs.normal()),
                    anchor: proj(hs.anchor()),
                    motion: hs.motion().map(|m| MotionFile {
                        omega: (dim == Dimension::Planar).then_some(m.angular_velocity.z),
                        axis_rate: (dim == Dimension::Spatial).then(|| proj(&m.angular_velocity)),
                        center: proj(&m.rotation_center),
                        linear_velocity: Some(proj(&m.linear_velocity)),
                    }),
                })
                .collect(),
            regions: s
                .environment
                .regions()
                .iter()
                .map(|r| r.indices().to_vec())
                .collect(),
            agent: AgentFile {
                offsets: s.agent.offsets().iter().map(proj).collect(),
            },
            controller: ControllerFile {
                goal: proj(&s.controller.goal),
                gain: s.controller.gain,
                u_max: s.controller.u_max,
            },
            cbf: s.cbf,
            sim: SimFile {
                dt: s.default_sim.dt,
                t_end: s.default_sim.t_end,
                x0: proj(&s.default_sim.x0),
                goal_tolerance: s.default_sim.goal_tolerance,
                record_stride: s.default_sim.record_stride,
                integrator: s.default_sim.integrator,
            },
            alternative_starts: s.alternative_starts.iter().map(proj).collect(),
        }
    }

    fn into_scenario(self) -> Result<Scenario> {
        let dim = Dimension::from_len(self.dimension)
            .map_err(|_| Error::Config(format!("dimension: must be 2 or 3, got {}", self.dimension)))?;
        let cfg = |e: Error| Error::Config(e.to_string());

        let mut half_spaces = Vec::with_capacity(self.halfspaces.len());
        for (i, hs) in self.halfspaces.iter().enumerate() {
            let normal = dim.embed(&hs.normal, &format!("halfspaces[{i}].normal")).map_err(cfg)?;
            let anchor = dim.embed(&hs.anchor, &format!("halfspaces[{i}].anchor")).map_err(cfg)?;
            let mut wall = HalfSpace::new(normal, anchor).map_err(|e| match e {
                Error::ZeroNormal { norm, .. } => Error::Config(format!(
                    "halfspaces[{i}].normal: near-zero norm {norm:e}"
                )),
                other => cfg(other),
            })?;
            if let Some(m) = &hs.motion {
                wall = wall.with_motion(motion_from_file(m, dim, i)?);
            }
            half_spaces.push(wall);
        }

        let mut region_list = Vec::with_capacity(self.regions.len());
        for (j, set) in self.regions.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&i| i >= half_spaces.len()) {
                return Err(Error::Config(format!(
                    "regions[{j}]: half-space index {bad} out of range ({} half-spaces)",
                    half_spaces.len()
                )));
            }
            region_list.push(
                ConvexRegion::new(set.clone())
                    .map_err(|e| Error::Config(format!("regions[{j}]: {e}")))?,
            );
        }
        let environment = PolytopeEnvironment::new(dim, half_spaces, region_list).map_err(cfg)?;

        let offsets = self
            .agent
            .offsets
            .iter()
            .enumerate()
            .map(|(k, o)| dim.embed(o, &format!("agent.offsets[{k}]")))
            .collect::<Result<Vec<_>>>()
            .map_err(cfg)?;
        let agent = AgentShape::new(offsets).map_err(|e| Error::Config(format!("agent: {e}")))?;

        let controller = DesiredController {
            goal: dim.embed(&self.controller.goal, "controller.goal").map_err(cfg)?,
            gain: self.controller.gain,
            u_max: self.controller.u_max,
        };
        let default_sim = SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            x0: dim.embed(&self.sim.x0, "sim.x0").map_err(cfg)?,
            goal_tolerance: self.sim.goal_tolerance,
            record_stride: self.sim.record_stride,
            integrator: self.sim.integrator,
        };
        let alternative_starts = self
            .alternative_starts
            .iter()
            .enumerate()
            .map(|(k, s)| dim.embed(s, &format!("alternative_starts[{k}]")))
            .collect::<Result<Vec<_>>>()
            .map_err(cfg)?;

        let scenario = Scenario {
            name: self.name.unwrap_or_else(|| "custom".into()),
            environment,
            agent,
            controller,
            cbf: self.cbf,
            default_sim,
            alternative_starts,
        };
        scenario.validate().map_err(cfg)?;
        Ok(scenario)
    }
}

fn motion_from_file(m: &MotionFile, dim: Dimension, i: usize) -> Result<RigidMotion> {
    let ctx = |field: &str| format!("halfspaces[{i}].motion.{field}");
    let cfg = |e: Error| Error::Config(e.to_string());
    let center = dim.embed(&m.center, &ctx("center")).map_err(cfg)?;
    let linear = match &m.linear_velocity {
        Some(v) => dim.embed(v, &ctx("linear_velocity")).map_err(cfg)?,
        None => Vec3::zeros(),
    };
    let angular = match (dim, m.omega, &m.axis_rate) {
        (Dimension::Planar, Some(omega), None) => Vec3::new(0.0, 0.0, omega),
        (Dimension::Spatial, None, Some(axis)) => {
            dim.embed(axis, &ctx("axis_rate")).map_err(cfg)?
        }
        (Dimension::Planar, _, _) => {
            return Err(Error::Config(format!("{}: 2D motions take 'omega' only", ctx("omega"))))
        }
        (Dimension::Spatial, _, _) => {
            return Err(Error::Config(format!(
                "{}: 3D motions take 'axis_rate' only",
                ctx("axis_rate")
            )))
        }
    };
    if !angular.z.is_finite() || !angular.iter().all(|c| c.is_finite()) {
        return Err(Error::Config(format!("{}: non-finite rate", ctx("omega"))));
    }
    Ok(RigidMotion::spatial(angular, center, linear))
}
