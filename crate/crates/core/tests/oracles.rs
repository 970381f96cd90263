//! Independent re-implementations checked against the library.

use polycbf::geometry::{AgentShape, ConvexRegion, Dimension, HalfSpace, PolytopeEnvironment, Vec3};
use polycbf::{builtin, h_smooth, psi_agent, psi_point, CbfParams};

fn p2(x: f64, y: f64) -> Vec3 {
    Vec3::new(x, y, 0.0)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// The L-shape exterior written out by hand: each row is (normal, anchor).
fn l_shape_walls() -> Vec<([f64; 2], [f64; 2])> {
    vec![
        ([-1.0, 0.0], [0.0, 0.0]),
        ([0.0, -1.0], [0.0, 0.0]),
        ([1.0, 0.0], [4.0, 0.0]),
        ([0.0, 1.0], [0.0, 4.0]),
        ([1.0, 0.0], [2.0, 2.0]),
        ([0.0, 1.0], [2.0, 2.0]),
    ]
}

fn l_shape_regions() -> Vec<Vec<usize>> {
    vec![vec![0], vec![1], vec![2], vec![3], vec![4, 5]]
}

fn wall(i: usize, p: &[f64; 2]) -> f64 {
    let (n, w) = l_shape_walls()[i];
    n[0] * (p[0] - w[0]) + n[1] * (p[1] - w[1])
}

/// Straight-line, unshifted formula:
/// `h = (1/k) ln sum_j (sum_{i in I_j} exp(-k psi_i))^-1 - b/k`.
fn naive_h(p: &[f64; 2], kappa: f64, buffer: f64) -> (f64, [f64; 2]) {
    let walls = l_shape_walls();
    let mut total = 0.0;
    let mut weighted = [0.0; 2];
    for region in l_shape_regions() {
        let mut s = 0.0;
        let mut ds = [0.0; 2];
        for &i in &region {
            let e = (-kappa * wall(i, p)).exp();
            s += e;
            ds[0] += -kappa * e * walls[i].0[0];
            ds[1] += -kappa * e * walls[i].0[1];
        }
        total += 1.0 / s;
        // d(1/s) = -ds / s^2
        weighted[0] += -ds[0] / (s * s);
        weighted[1] += -ds[1] / (s * s);
    }
    let h = total.ln() / kappa - buffer / kappa;
    let grad = [weighted[0] / (kappa * total), weighted[1] / (kappa * total)];
    (h, grad)
}

#[test]
fn l_shape_matches_unshifted_formula() {
    let s = builtin("l-shape").unwrap();
    for (kappa, buffer) in [(5.0, 0.7), (5.0, 0.0), (20.0, 5f64.ln()), (1.0, 0.3)] {
        let params = CbfParams::new(kappa, buffer, 2.0).unwrap();
        for ix in 0..=24 {
            for iy in 0..=24 {
                let p = [-2.0 + 0.37 * ix as f64, -2.0 + 0.41 * iy as f64];
                let (h, grad) = naive_h(&p, kappa, buffer);
                let e = h_smooth(&s.environment, &s.agent, &p2(p[0], p[1]), 0.0, &params);
                assert!(close(e.value, h, 1e-12), "h at {p:?}: {} vs {h}", e.value);
                assert!(close(e.gradient.x, grad[0], 1e-12), "dx at {p:?}");
                assert!(close(e.gradient.y, grad[1], 1e-12), "dy at {p:?}");
                assert_eq!(e.time_partial, 0.0);
            }
        }
    }
}

#[test]
fn l_shape_region_enumeration() {
    let s = builtin("l-shape").unwrap();
    // Inside the notch quadrant x >= 2, y >= 2, which only the last region covers.
    let p = [3.0, 2.5];
    let values: Vec<f64> = l_shape_regions()
        .iter()
        .map(|r| r.iter().map(|&i| wall(i, &p)).fold(f64::INFINITY, f64::min))
        .collect();
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert_eq!(best.0, 4);
    assert_eq!(*best.1, 0.5);
    assert_eq!(psi_point(&s.environment, &p2(p[0], p[1]), 0.0), 0.5);

    // Inside the obstacle every region is violated.
    let inside = p2(1.0, 1.0);
    assert!(psi_point(&s.environment, &inside, 0.0) < 0.0);
}

#[test]
fn crossroad_diamond_touching_both_road_edges() {
    let s = builtin("crossroad").unwrap();
    // Radius-0.3 diamond whose top and right vertices sit on y = 1 and x = 1.
    let phi = psi_agent(&s.environment, &s.agent, &p2(0.7, 0.7), 0.0);
    assert!(phi.abs() <= 1e-15, "{phi}");
    assert!(psi_agent(&s.environment, &s.agent, &p2(0.6, 0.6), 0.0) > 0.0);
    assert!(psi_agent(&s.environment, &s.agent, &p2(0.8, 0.8), 0.0) < 0.0);
}

#[test]
fn square_in_box_clearance() {
    let half = 2.0;
    let env = PolytopeEnvironment::new(
        Dimension::Planar,
        vec![
            HalfSpace::planar([1.0, 0.0], [-half, 0.0]).unwrap(),
            HalfSpace::planar([-1.0, 0.0], [half, 0.0]).unwrap(),
            HalfSpace::planar([0.0, 1.0], [0.0, -half]).unwrap(),
            HalfSpace::planar([0.0, -1.0], [0.0, half]).unwrap(),
        ],
        vec![ConvexRegion::new(vec![0, 1, 2, 3]).unwrap()],
    )
    .unwrap();
    let r = 0.5;
    let square = AgentShape::new(vec![p2(r, r), p2(-r, r), p2(-r, -r), p2(r, -r)]).unwrap();
    for (cx, cy) in [(0.0, 0.0), (0.3, -0.2), (-1.1, 0.9), (1.4, 1.45)] {
        let clearance = (half - r - f64::abs(cx)).min(half - r - f64::abs(cy));
        let phi = psi_agent(&env, &square, &p2(cx, cy), 0.0);
        assert!((phi - clearance).abs() <= 1e-15, "({cx}, {cy}): {phi} vs {clearance}");
    }
}

#[test]
fn single_region_is_plain_softmin() {
    let s = builtin("convex-corner").unwrap();
    let kappa = 5.0;
    let params = CbfParams::new(kappa, 0.0, 2.0).unwrap();
    for (x, y) in [(3.0, 3.0), (2.5, 7.0), (10.0, 2.1), (1.0, 1.0)] {
        let a = x - 2.0;
        let b = y - 2.0;
        let expected = -((-kappa * a).exp() + (-kappa * b).exp()).ln() / kappa;
        let e = h_smooth(&s.environment, &s.agent, &p2(x, y), 0.0, &params);
        assert!(close(e.value, expected, 1e-14), "{} vs {expected}", e.value);
        assert!(e.value <= a.min(b));
    }
}

#[test]
fn ellipse_polygon_vertices() {
    let s = builtin("ellipse").unwrap();
    assert_eq!(s.agent.num_vertices(), 32);
    assert_eq!(s.environment.num_half_spaces(), 32);
    for (m, v) in s.agent.offsets().iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * m as f64 / 32.0;
        assert!((v.x - 0.5 * angle.cos()).abs() < 1e-15);
        assert!((v.y - 0.3 * angle.sin()).abs() < 1e-15);
    }
}

/// Door walls rotated by hand about the origin.
#[test]
fn revolving_door_rotates_rigidly() {
    let s = builtin("revolving-door").unwrap();
    let omega = 0.2;
    let t = 2.5;
    let rot = |v: Vec3, a: f64| Vec3::new(v.x * a.cos() - v.y * a.sin(), v.x * a.sin() + v.y * a.cos(), 0.0);
    for hs in s.environment.half_spaces() {
        let n = rot(*hs.normal(), omega * t);
        let w = rot(*hs.anchor(), omega * t);
        let p = p2(0.7, -1.9);
        let expected = n.dot(&(p - w));
        assert!((hs.eval(&p, t) - expected).abs() < 1e-14);
    }
}
