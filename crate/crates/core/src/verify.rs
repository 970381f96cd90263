//! Independent oracles and audit harnesses.
//!
//! Every audit is deterministic for a given seed and returns an
//! [`AuditReport`] that serializes to JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::barrier::{h_smooth, psi_agent, psi_point, softmax_lse, softmin_lse, BarrierEvaluation, CbfParams};
use crate::error::{Error, Result};
use crate::field::Grid;
use crate::filter::safe_velocity;
use crate::geometry::{AgentShape, Dimension, PolytopeEnvironment, Vec3};
use crate::scenarios::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub name: String,
    pub parameters: Value,
    pub worst_case: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AuditReport {
    /// Passes when `worst_case <= threshold`.
    fn upper(name: impl Into<String>, parameters: Value, worst_case: f64, threshold: f64, seed: Option<u64>) -> Self {
        AuditReport {
            name: name.into(),
            parameters,
            worst_case,
            threshold,
            passed: worst_case <= threshold,
            seed,
        }
    }

    /// Passes when `worst_case >= threshold`.
    fn lower(name: impl Into<String>, parameters: Value, worst_case: f64, threshold: f64, seed: Option<u64>) -> Self {
        AuditReport {
            passed: worst_case >= threshold,
            ..Self::upper(name, parameters, worst_case, threshold, seed)
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_in_box(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3, dim: Dimension) -> Vec3 {
    let mut p = Vec3::zeros();
    for axis in 0..dim.len() {
        p[axis] = rng.random_range(lo[axis]..=hi[axis]);
    }
    p
}

fn random_vector(rng: &mut ChaCha8Rng, dim: Dimension, scale: f64) -> Vec3 {
    let mut v = Vec3::zeros();
    for axis in 0..dim.len() {
        v[axis] = rng.random_range(-scale..=scale);
    }
    v
}

/// Uniform sample from the probability simplex (flat Dirichlet).
fn simplex_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Times at which a scenario is audited: `0` for static environments, a
/// spread over the default horizon otherwise.
fn audit_time(rng: &mut ChaCha8Rng, scenario: &Scenario) -> f64 {
    if scenario.environment.is_static() {
        0.0
    } else {
        rng.random_range(0.0..=scenario.default_sim.t_end)
    }
}

// ---------------------------------------------------------------------------
// Safety filter

/// Dense-grid minimizer of `|u - u_des|^2` subject to the barrier
/// constraint, over lattice points in a ball of `grid_radius` around
/// `u_des`. `grid_n` points per axis; use an odd count so `u_des` is on the
/// lattice.
pub fn qp_bruteforce(
    eval: &BarrierEvaluation,
    u_des: &Vec3,
    params: &CbfParams,
    dimension: Dimension,
    grid_radius: f64,
    grid_n: usize,
) -> Result<Vec3> {
    if grid_n < 100 {
        return Err(Error::invalid("grid_n", "need at least 100 points per axis"));
    }
    let spacing = 2.0 * grid_radius / (grid_n - 1) as f64;
    let offset = eval.time_partial + params.alpha(eval.value);
    let r2 = grid_radius * grid_radius;
    let mut best: Option<(f64, Vec3)> = None;
    let nz = if dimension == Dimension::Spatial { grid_n } else { 1 };
    for iz in 0..nz {
        for iy in 0..grid_n {
            for ix in 0..grid_n {
                let mut d = Vec3::new(
                    -grid_radius + ix as f64 * spacing,
                    -grid_radius + iy as f64 * spacing,
                    0.0,
                );
                if dimension == Dimension::Spatial {
                    d.z = -grid_radius + iz as f64 * spacing;
                }
                let dist2 = d.norm_squared();
                if dist2 > r2 {
                    continue;
                }
                let u = u_des + d;
                if eval.gradient.dot(&u) + offset < 0.0 {
                    continue;
                }
                if best.is_none_or(|(b, _)| dist2 < b) {
                    best = Some((dist2, u));
                }
            }
        }
    }
    best.map(|(_, u)| u).ok_or(Error::NoFeasibleGridPoint)
}

fn random_filter_instance(rng: &mut ChaCha8Rng, dim: Dimension) -> (BarrierEvaluation, Vec3, CbfParams) {
    let gradient = loop {
        let g = random_vector(rng, dim, 2.0);
        if g.norm() > 0.05 {
            break g;
        }
    };
    let eval = BarrierEvaluation {
        value: rng.random_range(-1.0..=3.0),
        gradient,
        time_partial: if rng.random_bool(0.5) { rng.random_range(-1.0..=1.0) } else { 0.0 },
        nonsmooth_value: 0.0,
    };
    let params = CbfParams {
        kappa: 5.0,
        buffer: 0.0,
        alpha_gain: rng.random_range(0.1..=5.0),
    };
    (eval, random_vector(rng, dim, 3.0), params)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KktAudit {
    /// Most negative constraint slack at the returned input.
    pub min_slack: f64,
    /// Largest `|sin|` of the angle between `u - u_des` and `grad h`.
    pub max_parallel_error: f64,
    /// Most negative multiplier `(u - u_des) . grad h / |grad h|^2`.
    pub min_multiplier: f64,
    /// Largest `|multiplier * slack|`.
    pub max_complementarity: f64,
    /// Largest improvement over the filter found among random feasible inputs.
    pub max_suboptimality: f64,
    /// Largest change when filtering the filter's own output.
    pub max_idempotence_error: f64,
}

/// Checks the optimality conditions of the closed-form filter on random
/// instances: feasibility, parallel correction with a nonnegative
/// multiplier, complementary slackness, minimality and idempotence.
pub fn filter_kkt_check(n: usize, seed: u64, dimension: Dimension, feasible_probes: usize) -> Result<KktAudit> {
    let mut rng = rng(seed);
    let mut audit = KktAudit {
        min_slack: f64::INFINITY,
        min_multiplier: f64::INFINITY,
        ..KktAudit::default()
    };
    for _ in 0..n {
        let (eval, u_des, params) = random_filter_instance(&mut rng, dimension);
        let r = safe_velocity(&eval, &u_des, &params)?;
        let g = eval.gradient;
        let offset = eval.time_partial + params.alpha(eval.value);
        let slack = g.dot(&r.u_safe) + offset;
        let delta = r.u_safe - u_des;
        let multiplier = delta.dot(&g) / g.norm_squared();
        let parallel = if delta.norm() > 0.0 {
            delta.cross(&g).norm() / (delta.norm() * g.norm())
        } else {
            0.0
        };
        audit.min_slack = audit.min_slack.min(slack);
        audit.max_parallel_error = audit.max_parallel_error.max(parallel);
        audit.min_multiplier = audit.min_multiplier.min(multiplier);
        audit.max_complementarity = audit.max_complementarity.max((multiplier * slack).abs());

        let again = safe_velocity(&eval, &r.u_safe, &params)?;
        audit.max_idempotence_error = audit.max_idempotence_error.max((again.u_safe - r.u_safe).norm());

        let cost = delta.norm();
        for _ in 0..feasible_probes {
            let v = u_des + random_vector(&mut rng, dimension, 2.0 * cost + 1.0);
            if g.dot(&v) + offset >= 0.0 {
                audit.max_suboptimality = audit.max_suboptimality.max(cost - (v - u_des).norm());
            }
        }
    }
    Ok(audit)
}

pub fn filter_kkt_audit(n: usize, seed: u64, dimension: Dimension) -> Result<AuditReport> {
    let a = filter_kkt_check(n, seed, dimension, 0)?;
    let passed = a.min_slack >= -1e-12
        && a.max_parallel_error <= 1e-9
        && a.min_multiplier >= -1e-12
        && a.max_complementarity <= 1e-10
        && a.max_idempotence_error <= 1e-12;
    Ok(AuditReport {
        name: "filter-kkt".into(),
        parameters: json!({
            "instances": n,
            "dimension": dimension.len(),
            "min_slack": a.min_slack,
            "max_parallel_error": a.max_parallel_error,
            "min_multiplier": a.min_multiplier,
            "max_complementarity": a.max_complementarity,
            "max_idempotence_error": a.max_idempotence_error,
        }),
        worst_case: -a.min_slack.min(0.0),
        threshold: 1e-12,
        passed,
        seed: Some(seed),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BruteforceComparison {
    /// Largest `|cost(brute) - cost(closed)|` in grid spacings, where cost is
    /// the distance to `u_des`.
    pub max_cost_gap: f64,
    /// Most negative `cost(brute) - cost(closed)` in grid spacings; negative
    /// values mean the grid found a better feasible input.
    pub min_signed_cost_gap: f64,
    /// Largest distance between the two minimizers in grid spacings.
    pub max_distance: f64,
    /// Largest distance divided by `sqrt(2 sqrt(2) d s + 2 s^2)`, the bound
    /// implied by a feasible lattice point within `sqrt(2) s` of the exact
    /// minimizer (`d` the correction length, `s` the spacing).
    pub max_distance_over_bound: f64,
}

/// Compares the closed form against [`qp_bruteforce`] on random planar
/// instances. The lattice radius is `1.5 d + 0.1` for a correction of
/// length `d`.
pub fn filter_bruteforce_check(n: usize, seed: u64, grid_n: usize) -> Result<BruteforceComparison> {
    let mut rng = rng(seed);
    let mut cmp = BruteforceComparison::default();
    for _ in 0..n {
        let (eval, u_des, params) = random_filter_instance(&mut rng, Dimension::Planar);
        let closed = safe_velocity(&eval, &u_des, &params)?.u_safe;
        let violation = -(eval.gradient.dot(&u_des) + eval.time_partial + params.alpha(eval.value));
        let d = violation.max(0.0) / eval.gradient.norm();
        let radius = 1.5 * d + 0.1;
        let spacing = 2.0 * radius / (grid_n - 1) as f64;
        let brute = qp_bruteforce(&eval, &u_des, &params, Dimension::Planar, radius, grid_n)?;
        let gap = ((brute - u_des).norm() - (closed - u_des).norm()) / spacing;
        let distance = (brute - closed).norm();
        let bound = (2.0 * std::f64::consts::SQRT_2 * d * spacing + 2.0 * spacing * spacing).sqrt();
        cmp.max_cost_gap = cmp.max_cost_gap.max(gap.abs());
        cmp.min_signed_cost_gap = cmp.min_signed_cost_gap.min(gap);
        cmp.max_distance = cmp.max_distance.max(distance / spacing);
        cmp.max_distance_over_bound = cmp.max_distance_over_bound.max(distance / bound);
    }
    Ok(cmp)
}

/// Passes when the optimal costs agree within two grid spacings and the
/// minimizers are within the lattice bound of each other.
pub fn filter_bruteforce_audit(n: usize, seed: u64, grid_n: usize) -> Result<AuditReport> {
    let c = filter_bruteforce_check(n, seed, grid_n)?;
    Ok(AuditReport {
        name: "filter-bruteforce".into(),
        parameters: json!({
            "instances": n,
            "grid_n": grid_n,
            "unit": "grid spacings",
            "min_signed_cost_gap": c.min_signed_cost_gap,
            "max_distance": c.max_distance,
            "max_distance_over_bound": c.max_distance_over_bound,
        }),
        worst_case: c.max_cost_gap,
        threshold: 2.0,
        passed: c.max_cost_gap <= 2.0 && c.max_distance_over_bound <= 1.0,
        seed: Some(seed),
    })
}

// ---------------------------------------------------------------------------
// Smoothing

/// Worst violation of `max a <= softmax <= max a + ln N / kappa` and the
/// mirrored bounds for softmin, over random inputs.
pub fn sandwich_audit(n: usize, seed: u64) -> Result<AuditReport> {
    let mut rng = rng(seed);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..n {
        let len = rng.random_range(1..=24);
        let scale = [1.0, 10.0, 100.0][rng.random_range(0..3)];
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-scale..=scale)).collect();
        let kappa = 10f64.powf(rng.random_range(-1.0..=2.0));
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let gap = (len as f64).ln() / kappa;
        let smax = softmax_lse(&values, kappa)?;
        let smin = softmin_lse(&values, kappa)?;
        worst = worst
            .max(max - smax)
            .max(smax - (max + gap))
            .max((min - gap) - smin)
            .max(smin - min);
    }
    Ok(AuditReport::upper(
        "sandwich",
        json!({ "instances": n }),
        worst,
        1e-12,
        Some(seed),
    ))
}

// ---------------------------------------------------------------------------
// Geometry

/// Smallest `psi(sum_k lambda_k p_k) - phi(center)` over random convex
/// combinations of the agent's vertices. Nonnegative when the agent's hull
/// stays inside the region that certifies `phi`.
pub fn hull_containment_sample(
    env: &PolytopeEnvironment,
    shape: &AgentShape,
    center: &Vec3,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = rng(seed);
    hull_gap(env, shape, center, t, n_samples, &mut rng)
}

fn hull_gap(
    env: &PolytopeEnvironment,
    shape: &AgentShape,
    center: &Vec3,
    t: f64,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let phi = psi_agent(env, shape, center, t);
    let vertices = shape.vertices(center);
    (0..n_samples)
        .map(|_| {
            let lambda = simplex_weights(rng, vertices.len());
            let point = vertices
                .iter()
                .zip(&lambda)
                .fold(Vec3::zeros(), |acc, (v, l)| acc + v * *l);
            psi_point(env, &point, t) - phi
        })
        .fold(f64::INFINITY, f64::min)
}

/// [`hull_containment_sample`] over `n_pairs` random (state, weights) pairs
/// drawn in the scenario's bounding box.
pub fn hull_containment_audit(scenario: &Scenario, n_pairs: usize, seed: u64) -> AuditReport {
    let mut rng = rng(seed);
    let (lo, hi) = scenario.bounding_box();
    let dim = scenario.dimension();
    let mut worst = f64::INFINITY;
    for _ in 0..n_pairs {
        let p = uniform_in_box(&mut rng, &lo, &hi, dim);
        let t = audit_time(&mut rng, scenario);
        worst = worst.min(hull_gap(&scenario.environment, &scenario.agent, &p, t, 1, &mut rng));
    }
    AuditReport::lower(
        format!("hull-containment/{}", scenario.name),
        json!({ "pairs": n_pairs }),
        worst,
        -1e-12,
        Some(seed),
    )
}

/// Largest `h - phi` over the grid at time `t`.
pub fn under_approximation_audit(
    env: &PolytopeEnvironment,
    shape: &AgentShape,
    params: &CbfParams,
    grid: &Grid,
    t: f64,
) -> f64 {
    grid.points()
        .map(|p| h_smooth(env, shape, &p, t, params).value - psi_agent(env, shape, &p, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sup |h + b/kappa - phi|` over the grid for each smoothing sharpness.
pub fn kappa_convergence(scenario: &Scenario, kappas: &[f64], grid: &Grid, t: f64) -> Vec<(f64, f64)> {
    let env = &scenario.environment;
    let shape = &scenario.agent;
    kappas
        .iter()
        .map(|&kappa| {
            let params = scenario.cbf.with_kappa(kappa);
            let sup = grid
                .points()
                .map(|p| {
                    let e = h_smooth(env, shape, &p, t, &params);
                    (e.value + params.buffer / kappa - e.nonsmooth_value).abs()
                })
                .fold(0.0, f64::max);
            (kappa, sup)
        })
        .collect()
}

/// Checks that the smoothing error shrinks like `1/kappa` between
/// `kappa = 5` and `kappa = 100` and stays within `ln(N_w + N_p)/kappa`.
/// `worst_case` is the error ratio `sup(100) / sup(5)`.
pub fn convergence_audit(scenario: &Scenario, resolution: usize) -> Result<AuditReport> {
    let grid = Grid::around(scenario, resolution)?;
    let kappas = [5.0, 10.0, 20.0, 50.0, 100.0];
    let sups = kappa_convergence(scenario, &kappas, &grid, 0.0);
    let coarse = sups[0].1;
    let fine = sups[sups.len() - 1].1;
    let env = &scenario.environment;
    let bound = ((env.num_half_spaces() + env.num_regions()) as f64).ln() / 100.0 + 1e-9;
    let ratio = fine / coarse;
    Ok(AuditReport {
        name: format!("convergence/{}", scenario.name),
        parameters: json!({
            "resolution": resolution,
            "sup_by_kappa": sups.iter().map(|(k, s)| json!([k, s])).collect::<Vec<_>>(),
            "bound_at_100": bound,
        }),
        worst_case: ratio,
        threshold: 0.1,
        passed: ratio <= 0.1 && fine <= bound,
        seed: None,
    })
}

// ---------------------------------------------------------------------------
// Derivatives

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientAudit {
    pub max_rel_gradient_error: f64,
    pub max_rel_time_error: f64,
    /// Largest `|dh/dt|` seen; exactly zero for static environments.
    pub max_abs_time_partial: f64,
}

impl GradientAudit {
    pub fn worst(&self) -> f64 {
        self.max_rel_gradient_error.max(self.max_rel_time_error)
    }
}

/// Error relative to `max(1, |reference|)`, so that near-zero gradients are
/// judged in absolute terms.
fn rel_error(analytic: f64, numeric: f64, scale: f64) -> f64 {
    (analytic - numeric).abs() / scale.max(1.0)
}

/// Compares the analytic gradient and time partial of `h` against central
/// differences with the given step at `n_states` random states.
pub fn gradient_check(scenario: &Scenario, params: &CbfParams, n_states: usize, step: f64, seed: u64) -> GradientAudit {
    let mut rng = rng(seed);
    let (lo, hi) = scenario.bounding_box();
    let dim = scenario.dimension();
    let env = &scenario.environment;
    let shape = &scenario.agent;
    let h = |p: &Vec3, t: f64| h_smooth(env, shape, p, t, params).value;
    let mut audit = GradientAudit {
        max_rel_gradient_error: 0.0,
        max_rel_time_error: 0.0,
        max_abs_time_partial: 0.0,
    };
    for _ in 0..n_states {
        let p = uniform_in_box(&mut rng, &lo, &hi, dim);
        let t = audit_time(&mut rng, scenario);
        let eval = h_smooth(env, shape, &p, t, params);
        let scale = eval.gradient.norm();
        let mut fd = Vec3::zeros();
        for axis in 0..dim.len() {
            let mut e = Vec3::zeros();
            e[axis] = step;
            fd[axis] = (h(&(p + e), t) - h(&(p - e), t)) / (2.0 * step);
        }
        audit.max_rel_gradient_error = audit
            .max_rel_gradient_error
            .max((eval.gradient - fd).norm() / scale.max(1.0));
        let fd_t = (h(&p, t + step) - h(&p, t - step)) / (2.0 * step);
        audit.max_rel_time_error = audit
            .max_rel_time_error
            .max(rel_error(eval.time_partial, fd_t, eval.time_partial.abs()));
        audit.max_abs_time_partial = audit.max_abs_time_partial.max(eval.time_partial.abs());
    }
    audit
}

pub fn gradient_audit(scenario: &Scenario, n_states: usize, seed: u64) -> AuditReport {
    let a = gradient_check(scenario, &scenario.cbf, n_states, 1e-5, seed);
    AuditReport::upper(
        format!("gradients/{}", scenario.name),
        json!({
            "states": n_states,
            "step": 1e-5,
            "kappa": scenario.cbf.kappa,
            "max_rel_gradient_error": a.max_rel_gradient_error,
            "max_rel_time_error": a.max_rel_time_error,
        }),
        a.worst(),
        1e-5,
        Some(seed),
    )
}

/// Grid audit of `h <= phi` with the provable buffer `ln(N_p)`.
pub fn provable_buffer_audit(scenario: &Scenario, resolution: usize) -> Result<AuditReport> {
    let grid = Grid::around(scenario, resolution)?;
    let params = scenario
        .cbf
        .with_buffer(CbfParams::provable_buffer(scenario.environment.num_regions()));
    let t = 0.0;
    let worst = under_approximation_audit(&scenario.environment, &scenario.agent, &params, &grid, t);
    let configured = under_approximation_audit(&scenario.environment, &scenario.agent, &scenario.cbf, &grid, t);
    Ok(AuditReport::upper(
        format!("under-approximation/{}", scenario.name),
        json!({
            "resolution": resolution,
            "buffer": params.buffer,
            "t": t,
            "configured_buffer": scenario.cbf.buffer,
            "configured_worst_case": configured,
        }),
        worst,
        1e-12,
        None,
    ))
}
