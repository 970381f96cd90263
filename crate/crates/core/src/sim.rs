//! Fixed-step simulation of the filtered single integrator.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{safe_velocity, FilterResult};
use crate::geometry::{Dimension, Vec3};
use crate::scenarios::Scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Classic RK4 with the controller re-evaluated at every stage.
    #[default]
    Rk4,
    /// Forward Euler; for `p' = u` this is exactly a zero-order hold of the
    /// filtered input over each step.
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub x0: Vec3,
    pub goal_tolerance: f64,
    pub record_stride: usize,
    pub integrator: Integrator,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 0.01;
    pub const DEFAULT_T_END: f64 = 20.0;
    pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.05;

    pub fn new(x0: Vec3) -> Self {
        SimConfig {
            dt: Self::DEFAULT_DT,
            t_end: Self::DEFAULT_T_END,
            x0,
            goal_tolerance: Self::DEFAULT_GOAL_TOLERANCE,
            record_stride: 1,
            integrator: Integrator::Rk4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::invalid(
                "t_end",
                format!("must be at least dt = {}, got {}", self.dt, self.t_end),
            ));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(Error::invalid(
                "goal_tolerance",
                format!("must be positive, got {}", self.goal_tolerance),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        if !self.x0.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("x0", "non-finite component"));
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Goal,
    Horizon,
    Error(String),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Goal => "goal",
            Termination::Horizon => "horizon",
            Termination::Error(_) => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub dimension: Dimension,
    pub times: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub h_values: Vec<f64>,
    pub u_desired: Vec<Vec3>,
    pub u_safe: Vec<Vec3>,
    pub constraint_active: Vec<bool>,
    pub min_h: f64,
    pub reached_goal_at: Option<f64>,
    pub termination: Termination,
}

impl SimResult {
    fn new(dimension: Dimension) -> Self {
        SimResult {
            dimension,
            times: Vec::new(),
            positions: Vec::new(),
            h_values: Vec::new(),
            u_desired: Vec::new(),
            u_safe: Vec::new(),
            constraint_active: Vec::new(),
            min_h: f64::INFINITY,
            reached_goal_at: None,
            termination: Termination::Horizon,
        }
    }

    fn record(&mut self, t: f64, p: Vec3, ctrl: &FilterResult) {
        self.times.push(t);
        self.positions.push(p);
        self.h_values.push(ctrl.h);
        self.u_desired.push(ctrl.u_desired);
        self.u_safe.push(ctrl.u_safe);
        self.constraint_active.push(ctrl.constraint_active);
        self.min_h = self.min_h.min(ctrl.h);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_position(&self) -> Option<&Vec3> {
        self.positions.last()
    }

    /// Trajectory as CSV with a header row and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let axes = &["x", "y", "z"][..self.dimension.len()];
        let mut header = vec!["t".to_string()];
        for prefix in ["p", "u_des", "u_safe"] {
            header.extend(axes.iter().map(|a| format!("{prefix}_{a}")));
        }
        header.push("h".into());
        header.push("constraint_active".into());
        writeln!(out, "{}", header.join(","))?;

        let n = self.dimension.len();
        for i in 0..self.len() {
            let mut row = vec![fmt17(self.times[i])];
            for v in [&self.positions[i], &self.u_desired[i], &self.u_safe[i]] {
                row.extend(v.iter().take(n).map(|c| fmt17(*c)));
            }
            row.push(fmt17(self.h_values[i]));
            row.push(if self.constraint_active[i] { "1" } else { "0" }.into());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Filtered input `k(p, t)` of the closed loop.
pub fn closed_loop(scenario: &Scenario, p: &Vec3, t: f64) -> Result<FilterResult> {
    let eval = scenario.barrier().evaluate(p, t);
    let u_des = scenario.controller.velocity(p);
    safe_velocity(&eval, &u_des, &scenario.cbf).map_err(|e| match e {
        Error::DegenerateGradient {
            grad_norm,
            constraint,
            ..
        } => Error::DegenerateGradient {
            grad_norm,
            constraint,
            position: Some(scenario.dimension().project(p)),
            time: Some(t),
        },
        other => other,
    })
}

/// Advances the closed loop by one step of length `dt` from `(state, t)`.
/// Returns the new state and the filter output at the starting state.
pub fn step(
    scenario: &Scenario,
    state: &Vec3,
    t: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<(Vec3, FilterResult)> {
    let first = closed_loop(scenario, state, t)?;
    let next = advance(scenario, state, t, dt, integrator, &first)?;
    Ok((next, first))
}

fn advance(
    scenario: &Scenario,
    p: &Vec3,
    t: f64,
    dt: f64,
    integrator: Integrator,
    first: &FilterResult,
) -> Result<Vec3> {
    let k1 = first.u_safe;
    match integrator {
        Integrator::Euler => Ok(p + k1 * dt),
        Integrator::Rk4 => {
            let half = 0.5 * dt;
            let k2 = closed_loop(scenario, &(p + k1 * half), t + half)?.u_safe;
            let k3 = closed_loop(scenario, &(p + k2 * half), t + half)?.u_safe;
            let k4 = closed_loop(scenario, &(p + k3 * dt), t + dt)?.u_safe;
            Ok(p + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
        }
    }
}

/// Integrates from `config.x0` until the goal, the horizon or a filter error.
///
/// Refuses to start unless `h(x0, 0) > 0`. A filter failure mid-run ends the
/// run with [`Termination::Error`] and keeps the trajectory logged so far.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let dimension = scenario.dimension();
    let h0 = scenario.barrier().evaluate(&config.x0, 0.0).value;
    if !(h0 > 0.0) {
        return Err(Error::UnsafeStart {
            h: h0,
            position: dimension.project(&config.x0),
        });
    }

    let mut result = SimResult::new(dimension);
    let n_steps = config.num_steps();
    let goal = scenario.controller.goal;
    let mut p = config.x0;
    for k in 0..=n_steps {
        let t = k as f64 * config.dt;
        let ctrl = match closed_loop(scenario, &p, t) {
            Ok(c) => c,
            Err(e) => {
                result.termination = Termination::Error(e.to_string());
                break;
            }
        };
        let at_goal = (p - goal).norm() <= config.goal_tolerance;
        let last = k == n_steps;
        let recorded = k % config.record_stride == 0 || at_goal || last;
        if recorded {
            result.record(t, p, &ctrl);
        }
        if at_goal {
            result.termination = Termination::Goal;
            result.reached_goal_at = Some(t);
            break;
        }
        if last {
            result.termination = Termination::Horizon;
            break;
        }
        match advance(scenario, &p, t, config.dt, config.integrator, &ctrl) {
            Ok(next) => p = next,
            Err(e) => {
                if !recorded {
                    result.record(t, p, &ctrl);
                }
                result.termination = Termination::Error(e.to_string());
                break;
            }
        }
    }
    Ok(result)
}
