//! Closed-form smooth control barrier functions for polytope-shaped agents
//! navigating polytope-shaped, possibly moving and non-convex environments.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: half-spaces, convex regions, environments, agent shapes,
//!   rigid motions.
//! * [`barrier`]: nonsmooth max-min compositions and their log-sum-exp
//!   smoothing with analytic gradients.
//! * [`filter`]: desired controller and closed-form safety filter.
//! * [`sim`]: fixed-step closed-loop simulation.
//! * [`scenarios`]: bundled problems and the JSON scenario format.
//! * [`verify`]: independent oracles and audit harnesses.
//! * [`field`] and [`plot`]: grid sampling and SVG output for the CLI.

pub mod barrier;
pub mod error;
pub mod field;
pub mod filter;
pub mod geometry;
pub mod plot;
pub mod scenarios;
pub mod sim;
pub mod verify;

pub use barrier::{h_smooth, psi_agent, psi_point, softmax_lse, softmin_lse, BarrierEvaluation, CbfParams, SmoothBarrier};
pub use error::{Error, Result};
pub use filter::{desired_velocity, safe_velocity, DesiredController, FilterResult};
pub use geometry::{agent_vertices, AgentShape, ConvexRegion, Dimension, HalfSpace, PolytopeEnvironment, RigidMotion, Vec3};
pub use scenarios::{builtin, resolve, Scenario, BUILTIN_NAMES};
pub use sim::{Integrator, SimConfig, SimResult, Termination};
