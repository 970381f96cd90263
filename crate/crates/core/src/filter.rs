//! Goal-seeking desired controller and the closed-form safety filter for
//! single-integrator dynamics `p' = u`.

use crate::barrier::{BarrierEvaluation, CbfParams};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const MIN_GRADIENT_NORM: f64 = 1e-10;

/// Saturated proportional controller towards a goal point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesiredController {
    pub goal: Vec3,
    pub gain: f64,
    pub u_max: f64,
}

impl DesiredController {
    pub fn new(goal: Vec3, gain: f64, u_max: f64) -> Result<Self> {
        let ctrl = DesiredController { goal, gain, u_max };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::invalid("controller gain", format!("must be positive, got {}", self.gain)));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(Error::invalid("controller u_max", format!("must be positive, got {}", self.u_max)));
        }
        Ok(())
    }

    pub fn velocity(&self, p: &Vec3) -> Vec3 {
        desired_velocity(self, p)
    }
}

/// `sat(K_p (p_g - p))`: rescaled to norm `u_max` when it would exceed it.
pub fn desired_velocity(ctrl: &DesiredController, p: &Vec3) -> Vec3 {
    let u = (ctrl.goal - p) * ctrl.gain;
    let norm = u.norm();
    if norm > ctrl.u_max {
        u * (ctrl.u_max / norm)
    } else {
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterResult {
    pub u_safe: Vec3,
    pub u_desired: Vec3,
    pub h: f64,
    pub constraint_active: bool,
    /// `dh/dt + alpha(h)` evaluated at `u_safe`; nonnegative up to rounding.
    pub slack: f64,
}

/// Minimally modifies `u_des` so that `grad h . u + dh/dt >= -gain * h`.
///
/// The problem has one affine constraint and an identity Hessian, so its
/// minimizer is the Euclidean projection of `u_des` onto the constraint
/// half-space.
pub fn safe_velocity(
    eval: &BarrierEvaluation,
    u_des: &Vec3,
    params: &CbfParams,
) -> Result<FilterResult> {
    let grad = &eval.gradient;
    let offset = eval.time_partial + params.alpha(eval.value);
    let a = grad.dot(u_des) + offset;
    if a >= 0.0 {
        return Ok(FilterResult {
            u_safe: *u_des,
            u_desired: *u_des,
            h: eval.value,
            constraint_active: false,
            slack: a,
        });
    }
    let grad_sq = grad.norm_squared();
    if !(grad_sq.sqrt() > MIN_GRADIENT_NORM) {
        return Err(Error::DegenerateGradient {
            grad_norm: grad_sq.sqrt(),
            constraint: a,
            position: None,
            time: None,
        });
    }
    let u_safe = u_des + grad * (-a / grad_sq);
    Ok(FilterResult {
        u_safe,
        u_desired: *u_des,
        h: eval.value,
        constraint_active: true,
        slack: grad.dot(&u_safe) + offset,
    })
}
