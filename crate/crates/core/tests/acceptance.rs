//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use polycbf::field::Grid;
use polycbf::sim::run;
use polycbf::verify::{
    convergence_audit, filter_bruteforce_check, filter_kkt_audit, gradient_audit, gradient_check,
    hull_containment_audit, provable_buffer_audit, sandwich_audit, under_approximation_audit,
};
use polycbf::{builtin, CbfParams, Dimension, Scenario, SimConfig, SimResult, Termination, BUILTIN_NAMES};

const SEED: u64 = 20_241;
const SAFETY: f64 = -1e-3;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail }
    }
}

fn timed(scenario: &Scenario, config: &SimConfig) -> (SimResult, Duration) {
    let start = Instant::now();
    let r = run(scenario, config).expect("simulation failed");
    (r, start.elapsed())
}

fn goal_distance(scenario: &Scenario, r: &SimResult) -> f64 {
    (r.final_position().unwrap() - scenario.controller.goal).norm()
}

fn l_shape_reproduction() -> Outcome {
    let s = builtin("l-shape").unwrap();
    let params_ok = (s.cbf.kappa, s.cbf.buffer, s.cbf.alpha_gain) == (5.0, 0.7, 2.0)
        && s.controller.gain == 1.0
        && s.controller.u_max == 1.0
        && s.default_sim.dt == 0.01;
    let mut reached = 0;
    let mut primary = false;
    let mut min_h = f64::INFINITY;
    let mut slowest = Duration::ZERO;
    for (k, x0) in s.starts().into_iter().enumerate() {
        let (r, elapsed) = timed(&s, &SimConfig { x0, ..s.default_sim });
        let ok = r.reached_goal_at.is_some() && goal_distance(&s, &r) <= 0.05;
        if ok {
            reached += 1;
            primary |= k == 0;
        }
        min_h = min_h.min(r.min_h);
        slowest = slowest.max(elapsed);
    }
    let alternatives = reached - usize::from(primary);
    Outcome::new(
        params_ok && primary && alternatives >= 3 && min_h >= SAFETY && slowest < Duration::from_secs(1),
        format!("primary {primary}, alternatives reached {alternatives}, min h {min_h:.3e}, slowest run {slowest:?}"),
    )
}

fn ellipse_reproduction() -> Outcome {
    let s = builtin("ellipse").unwrap();
    let terms = s.agent.num_vertices() * s.environment.num_half_spaces();
    let (r, _) = timed(&s, &s.default_sim);
    let reached = r.reached_goal_at.is_some();
    let horizon = SimConfig {
        t_end: 20.0,
        goal_tolerance: 1e-12,
        ..s.default_sim
    };
    let (full, elapsed) = timed(&s, &horizon);
    let full_length = full.termination == Termination::Horizon && full.times.last() == Some(&20.0);
    Outcome::new(
        terms == 1024
            && s.cbf.buffer == 0.0
            && reached
            && r.min_h >= SAFETY
            && full_length
            && full.min_h >= SAFETY
            && elapsed < Duration::from_secs(5),
        format!(
            "{terms} terms, reached {reached}, min h {:.3e}, 20 s horizon in {elapsed:?}",
            r.min_h.min(full.min_h)
        ),
    )
}

fn revolving_door() -> Outcome {
    let s = builtin("revolving-door").unwrap();
    let omega_ok = s
        .environment
        .half_spaces()
        .iter()
        .all(|hs| hs.motion().is_some_and(|m| m.angular_velocity.z == 0.2));
    let (r, _) = timed(&s, &s.default_sim);
    let through = r.positions.iter().any(|p| p.norm() < 1.5);
    let reached = r.reached_goal_at.is_some();
    let frozen = s.without_motion();
    let (st, _) = timed(&frozen, &frozen.default_sim);
    let deadlock = st.termination == Termination::Horizon && st.reached_goal_at.is_none();
    Outcome::new(
        omega_ok && through && reached && r.min_h >= SAFETY && deadlock,
        format!(
            "through door {through}, reached at {:?}, min h {:.3e}, static door deadlock {deadlock}",
            r.reached_goal_at, r.min_h
        ),
    )
}

fn pyramid() -> Outcome {
    let s = builtin("pyramid").unwrap();
    let (r, _) = timed(&s, &s.default_sim);
    let end = r.final_position().unwrap();
    let goal = s.controller.goal;
    let horizontal = (end.x - goal.x).hypot(end.y - goal.y);
    Outcome::new(
        horizontal <= 0.05 && end.z > 0.25 && r.min_h >= SAFETY,
        format!(
            "final ({:.3}, {:.3}, {:.3}), horizontal gap {horizontal:.3e}, min h {:.3e}",
            end.x, end.y, end.z, r.min_h
        ),
    )
}

fn sandwich() -> Outcome {
    let report = sandwich_audit(100_000, SEED).unwrap();
    Outcome::new(report.passed, format!("worst violation {:.3e} over 1e5 inputs", report.worst_case))
}

fn under_approximation() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let resolution = if s.dimension() == Dimension::Planar { 200 } else { 50 };
        let report = provable_buffer_audit(&s, resolution).unwrap();
        passed &= report.passed;
        parts.push(format!("{name} {:.2e}", report.worst_case));
    }

    // A moving environment at a pose other than the reference one.
    let door = builtin("revolving-door").unwrap();
    let params = door
        .cbf
        .with_buffer(CbfParams::provable_buffer(door.environment.num_regions()));
    let grid = Grid::around(&door, 200).unwrap();
    let moved = under_approximation_audit(&door.environment, &door.agent, &params, &grid, 3.7);
    passed &= moved <= 1e-12;
    parts.push(format!("door at t=3.7 {moved:.2e}"));

    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        if s.environment.num_regions() != 1 {
            continue;
        }
        let grid = Grid::around(&s, 200).unwrap();
        let worst = under_approximation_audit(&s.environment, &s.agent, &s.cbf.with_buffer(0.0), &grid, 0.0);
        passed &= worst <= 0.0;
        parts.push(format!("{name} b=0 {worst:.2e}"));
    }
    Outcome::new(passed, format!("max h - phi: {}", parts.join(", ")))
}

fn hull_containment() -> Outcome {
    let mut passed = true;
    let mut worst = f64::INFINITY;
    for name in BUILTIN_NAMES {
        let report = hull_containment_audit(&builtin(name).unwrap(), 10_000, SEED);
        passed &= report.passed;
        worst = worst.min(report.worst_case);
    }
    Outcome::new(passed, format!("worst gap {worst:.3e} over 1e4 pairs per scenario"))
}

fn gradients() -> Outcome {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let report = gradient_audit(&s, 1000, SEED);
        passed &= report.passed;
        worst = worst.max(report.worst_case);
        let sharp = gradient_check(&s, &s.cbf.with_kappa(20.0), 1000, 1e-5, SEED + 1).worst();
        passed &= sharp <= 1e-5;
        worst = worst.max(sharp);
    }
    Outcome::new(passed, format!("worst relative error {worst:.3e} at kappa 5 and 20"))
}

fn filter_optimality() -> Outcome {
    let planar = filter_kkt_audit(100_000, SEED, Dimension::Planar).unwrap();
    let spatial = filter_kkt_audit(100_000, SEED + 1, Dimension::Spatial).unwrap();
    let brute = filter_bruteforce_check(1000, SEED + 2, 201).unwrap();
    let spacing_ok = brute.max_cost_gap <= 2.0 && brute.max_distance_over_bound <= 1.0;
    Outcome::new(
        planar.passed && spatial.passed && spacing_ok,
        format!(
            "min slack {:.2e}/{:.2e}, brute force cost gap {:.3} spacings, distance/bound {:.3}",
            planar.worst_case, spatial.worst_case, brute.max_cost_gap, brute.max_distance_over_bound
        ),
    )
}

fn convergence() -> Outcome {
    let report = convergence_audit(&builtin("l-shape").unwrap(), 200).unwrap();
    Outcome::new(
        report.passed,
        format!(
            "sup(100)/sup(5) = {:.4}, sups {}",
            report.worst_case, report.parameters["sup_by_kappa"]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("l-shape reproduction", l_shape_reproduction),
        ("ellipse reproduction", ellipse_reproduction),
        ("revolving door", revolving_door),
        ("pyramid", pyramid),
        ("smoothing sandwich", sandwich),
        ("under-approximation", under_approximation),
        ("hull containment", hull_containment),
        ("gradient audit", gradients),
        ("filter optimality", filter_optimality),
        ("convergence in kappa", convergence),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        failures += usize::from(!outcome.passed);
        println!("{tag} [{}] {name}: {}", k + 1, outcome.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
