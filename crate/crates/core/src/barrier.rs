//! Nonsmooth max-min compositions of linear walls and their log-sum-exp
//! smoothing into a continuously differentiable barrier candidate.
//!
//! For an environment made of regions `I_j` and an agent with vertices
//! `p_k = p + dp_k`, the nonsmooth barrier is
//!
//! ```text
//! phi(p, t) = max_j min_{i in I_j} min_k psi_i(p_k, t)
//! ```
//!
//! and the smooth candidate is
//!
//! ```text
//! h(p, t) = (1/kappa) ln( sum_j ( sum_{i in I_j} sum_k exp(-kappa psi_i(p_k, t)) )^-1 ) - b/kappa
//! ```
//!
//! Both are evaluated with max/min shifts so that no exponential overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AgentShape, PolytopeEnvironment, PosedHalfSpace, Vec3};

/// Smoothing sharpness, buffer and linear class-K gain `alpha(h) = gain * h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbfParams {
    pub kappa: f64,
    pub buffer: f64,
    pub alpha_gain: f64,
}

impl CbfParams {
    pub fn new(kappa: f64, buffer: f64, alpha_gain: f64) -> Result<Self> {
        let params = CbfParams {
            kappa,
            buffer,
            alpha_gain,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if !(self.buffer >= 0.0 && self.buffer.is_finite()) {
            return Err(Error::invalid(
                "buffer",
                format!("must be nonnegative, got {}", self.buffer),
            ));
        }
        if !(self.alpha_gain > 0.0 && self.alpha_gain.is_finite()) {
            return Err(Error::invalid(
                "alpha_gain",
                format!("must be positive, got {}", self.alpha_gain),
            ));
        }
        Ok(())
    }

    /// Buffer `ln(N_p)`: the smallest value for which the smoothed barrier
    /// provably never exceeds the nonsmooth one.
    pub fn provable_buffer(num_regions: usize) -> f64 {
        (num_regions as f64).ln()
    }

    pub fn with_buffer(self, buffer: f64) -> Self {
        CbfParams { buffer, ..self }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        CbfParams { kappa, ..self }
    }

    #[inline]
    pub fn alpha(&self, h: f64) -> f64 {
        self.alpha_gain * h
    }
}

/// Smooth barrier value with its partial derivatives, plus the nonsmooth
/// value it approximates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierEvaluation {
    pub value: f64,
    /// Gradient with respect to the agent center.
    pub gradient: Vec3,
    pub time_partial: f64,
    pub nonsmooth_value: f64,
}

/// `(1/kappa) ln sum exp(kappa a_i)`, an upper bound on `max a_i`.
pub fn softmax_lse(values: &[f64], kappa: f64) -> Result<f64> {
    let max = values
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::Empty("log-sum-exp argument list"))?;
    let sum: f64 = values.iter().map(|a| (kappa * (a - max)).exp()).sum();
    Ok(max + sum.ln() / kappa)
}

/// `-(1/kappa) ln sum exp(-kappa b_i)`, a lower bound on `min b_i`.
pub fn softmin_lse(values: &[f64], kappa: f64) -> Result<f64> {
    let min = values
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or(Error::Empty("log-sum-exp argument list"))?;
    let sum: f64 = values.iter().map(|b| (-kappa * (b - min)).exp()).sum();
    Ok(min - sum.ln() / kappa)
}

/// `max_j min_{i in I_j} psi_i(p)` for a point at `p`.
pub fn psi_point(env: &PolytopeEnvironment, p: &Vec3, t: f64) -> f64 {
    let posed = env.pose(t);
    env.regions()
        .iter()
        .map(|region| {
            region
                .indices()
                .iter()
                .map(|&i| posed[i].eval(p))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_j min_{i in I_j} min_k psi_i(p_k)`; nonnegative only if every
/// vertex lies in one common convex region.
pub fn psi_agent(env: &PolytopeEnvironment, shape: &AgentShape, center: &Vec3, t: f64) -> f64 {
    let posed = env.pose(t);
    let vertices = shape.vertices(center);
    env.regions()
        .iter()
        .map(|region| {
            region
                .indices()
                .iter()
                .flat_map(|&i| vertices.iter().map(move |v| (i, v)))
                .map(|(i, v)| posed[i].eval(v))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smooth barrier, gradient and time partial at `center`, time `t`.
pub fn h_smooth(
    env: &PolytopeEnvironment,
    shape: &AgentShape,
    center: &Vec3,
    t: f64,
    params: &CbfParams,
) -> BarrierEvaluation {
    let posed = env.pose(t);
    let vertices = shape.vertices(center);
    evaluate_posed(env, &posed, &vertices, params)
}

struct RegionTerm {
    min: f64,
    sum: f64,
    gradient: Vec3,
    time_partial: f64,
}

fn evaluate_posed(
    env: &PolytopeEnvironment,
    posed: &[PosedHalfSpace],
    vertices: &[Vec3],
    params: &CbfParams,
) -> BarrierEvaluation {
    let kappa = params.kappa;
    let nv = vertices.len();
    // psi_i(p_k) for every wall and vertex, shared across regions.
    let psi: Vec<f64> = posed
        .iter()
        .flat_map(|hs| vertices.iter().map(move |v| hs.eval(v)))
        .collect();

    let terms: Vec<RegionTerm> = env
        .regions()
        .iter()
        .map(|region| {
            let min = region
                .indices()
                .iter()
                .flat_map(|&i| psi[i * nv..(i + 1) * nv].iter().copied())
                .fold(f64::INFINITY, f64::min);
            let mut sum = 0.0;
            let mut gradient = Vec3::zeros();
            let mut time_partial = 0.0;
            for &i in region.indices() {
                let hs = &posed[i];
                let mut wall_weight = 0.0;
                for (k, v) in vertices.iter().enumerate() {
                    let e = (-kappa * (psi[i * nv + k] - min)).exp();
                    wall_weight += e;
                    if hs.normal_rate != Vec3::zeros() || hs.anchor_rate != Vec3::zeros() {
                        time_partial += e * hs.time_derivative(v);
                    }
                }
                sum += wall_weight;
                gradient += hs.normal * wall_weight;
            }
            RegionTerm {
                min,
                sum,
                gradient: gradient / sum,
                time_partial: time_partial / sum,
            }
        })
        .collect();

    let max = terms.iter().map(|r| r.min).fold(f64::NEG_INFINITY, f64::max);
    // 1/S_j = exp(kappa m_j) / s_j, shifted by exp(kappa max).
    let reciprocals: Vec<f64> = terms
        .iter()
        .map(|r| (kappa * (r.min - max)).exp() / r.sum)
        .collect();
    let total: f64 = reciprocals.iter().sum();

    let mut gradient = Vec3::zeros();
    let mut time_partial = 0.0;
    for (r, w) in terms.iter().zip(&reciprocals) {
        let weight = w / total;
        gradient += r.gradient * weight;
        time_partial += r.time_partial * weight;
    }

    BarrierEvaluation {
        value: max + (total.ln() - params.buffer) / kappa,
        gradient,
        time_partial,
        nonsmooth_value: max,
    }
}

/// An environment, agent and smoothing parameters bundled for repeated
/// evaluation.
#[derive(Clone, Copy, Debug)]
pub struct SmoothBarrier<'a> {
    pub environment: &'a PolytopeEnvironment,
    pub agent: &'a AgentShape,
    pub params: &'a CbfParams,
}

impl SmoothBarrier<'_> {
    pub fn evaluate(&self, center: &Vec3, t: f64) -> BarrierEvaluation {
        h_smooth(self.environment, self.agent, center, t, self.params)
    }

    pub fn nonsmooth(&self, center: &Vec3, t: f64) -> f64 {
        psi_agent(self.environment, self.agent, center, t)
    }
}
