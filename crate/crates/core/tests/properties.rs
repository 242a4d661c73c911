use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use phasemap::dynsys::*;
use phasemap::integrate::flow;
use phasemap::liegroup::{conj, GroupElement, Rotation};
use phasemap::reconstruct::{delta, delta_axis_formula, phase};
use proptest::prelude::*;

fn bowl() -> SystemSpec {
    make_ball_system(SurfaceProfile::paraboloid(0.5), (0.2, 3.0)).unwrap()
}

fn body() -> SystemSpec {
    make_rigid_body([1.0, 2.0, 3.0]).unwrap()
}

fn rotation() -> impl Strategy<Value = Rotation> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..PI)
        .prop_filter("axis", |(x, y, z, _)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z, a)| Rotation::from_axis_angle(&Vector3::new(x, y, z), a).unwrap())
}

fn element(spec: &SystemSpec) -> impl Strategy<Value = GroupElement> {
    let group = spec.group();
    (0.0..TAU, rotation()).prop_map(move |(t, r)| GroupElement::new(group, t, r))
}

fn ball_state() -> impl Strategy<Value = PhasePoint> {
    (0.6..1.4f64, 0.0..TAU, -0.3..0.3f64, -0.3..0.3f64, -0.5..0.5f64, rotation()).prop_map(
        |(r, phi, dr, dt, w, q)| {
            let v = bowl().ball().unwrap().circular_speed(r, w).unwrap();
            let (c, s) = (phi.cos(), phi.sin());
            let radial = [dr * c, dr * s];
            let tangential = [-(v + dt) * s, (v + dt) * c];
            PhasePoint::ball([r * c, r * s], [radial[0] + tangential[0], radial[1] + tangential[1]], q, w)
        },
    )
}

fn body_state() -> impl Strategy<Value = PhasePoint> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, rotation()).prop_map(|(a, b, c, q)| PhasePoint::rigid_body(q, [a, b, c]))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ball_field_is_invariant(m in ball_state(), g in element(&bowl())) {
        let spec = bowl();
        let lhs = spec.vector_field(&spec.act(&g, &m).unwrap()).unwrap().to_vec();
        let rhs = spec.push_forward(&g, &spec.vector_field(&m).unwrap()).unwrap().to_vec();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn body_field_is_invariant(m in body_state(), g in element(&body())) {
        let spec = body();
        let lhs = spec.vector_field(&spec.act(&g, &m).unwrap()).unwrap().to_vec();
        let rhs = spec.push_forward(&g, &spec.vector_field(&m).unwrap()).unwrap().to_vec();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn reduction_and_energy_are_invariant(m in ball_state(), n in body_state(), g in element(&bowl())) {
        for (spec, x) in [(bowl(), m), (body(), n)] {
            let g = GroupElement::new(spec.group(), g.theta, g.rotation);
            let y = spec.act(&g, &x).unwrap();
            let (a, b) = (spec.reduce(&x).unwrap().to_vec(), spec.reduce(&y).unwrap().to_vec());
            prop_assert!(max_abs_diff(&a, &b) < 1e-12);
            prop_assert!((spec.energy(&x).unwrap() - spec.energy(&y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn action_is_a_left_action(m in ball_state(), g in element(&bowl()), h in element(&bowl())) {
        let spec = bowl();
        let lhs = spec.act(&(g * h), &m).unwrap();
        let rhs = spec.act(&g, &spec.act(&h, &m).unwrap()).unwrap();
        prop_assert!(spec.state_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn rolling_constraint_holds_on_states(m in ball_state()) {
        prop_assert!(bowl().constraint_residual(&m).unwrap() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flow_commutes_with_action(m in ball_state(), n in body_state(), g in element(&bowl()), t in 0.1..3.0f64) {
        for (spec, x) in [(bowl(), m), (body(), n)] {
            let g = GroupElement::new(spec.group(), g.theta, g.rotation);
            let lhs = flow(&spec, &spec.act(&g, &x).unwrap(), t, 1e-11).unwrap();
            let rhs = spec.act(&g, &flow(&spec, &x, t, 1e-11).unwrap()).unwrap();
            prop_assert!(spec.state_distance(&lhs, &rhs) < 1e-8);
        }
    }

    #[test]
    fn phase_is_equivariant_and_delta_invariant(m in ball_state(), g in element(&bowl())) {
        let spec = bowl();
        let p = phase(&spec, &m).unwrap();
        let q = phase(&spec, &spec.act(&g, &m).unwrap()).unwrap();
        prop_assert!((p.tau - q.tau).abs() < 1e-8 * p.tau);
        prop_assert!(q.gamma.distance(&conj(&g, &p.gamma).unwrap()) < 1e-7);
        prop_assume!(p.regular);
        let d = delta(&spec, &m).unwrap();
        let axis = p.gamma.rotation.axis().unwrap();
        prop_assert!((delta_axis_formula(&axis).unwrap() - d).norm() < 1e-8
            || (delta_axis_formula(&axis).unwrap() + d).norm() < 1e-8);
    }
}
