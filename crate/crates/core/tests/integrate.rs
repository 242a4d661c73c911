use nalgebra::Vector3;
use phasemap::dynsys::{make_ball_system, make_rigid_body, PhasePoint, SurfaceProfile, SystemSpec};
use phasemap::integrate::{find_reduced_period, flow, integrate};
use phasemap::liegroup::{exp_so3, GroupElement, Rotation};
use phasemap::Error;
use std::f64::consts::PI;

const TOL: f64 = 1e-10;

fn body() -> SystemSpec {
    make_rigid_body([1.0, 2.0, 3.0]).unwrap()
}

fn bowl() -> SystemSpec {
    make_ball_system(SurfaceProfile::paraboloid(0.5), (0.2, 3.0)).unwrap()
}

fn tilted() -> Rotation {
    Rotation::from_axis_angle(&Vector3::new(0.3, -0.2, 0.9), 0.8).unwrap()
}

fn ball_point(eps: f64) -> PhasePoint {
    let spec = bowl();
    let v = spec.ball().unwrap().circular_speed(1.0, 0.3).unwrap();
    PhasePoint::ball([1.0, 0.0], [eps, v * (1.0 + eps)], tilted(), 0.3)
}

#[test]
fn zero_time_is_identity() {
    let m = PhasePoint::rigid_body(tilted(), [0.4, 0.1, -0.7]);
    assert_eq!(flow(&body(), &m, 0.0, TOL).unwrap(), m);
}

#[test]
fn semigroup_property() {
    for (spec, m) in [
        (body(), PhasePoint::rigid_body(tilted(), [0.4, 0.1, -0.7])),
        (bowl(), ball_point(0.05)),
    ] {
        let direct = flow(&spec, &m, 2.5, TOL).unwrap();
        let split = flow(&spec, &flow(&spec, &m, 1.1, TOL).unwrap(), 1.4, TOL).unwrap();
        assert!(spec.state_distance(&direct, &split) < 10.0 * TOL);
        let back = flow(&spec, &direct, -2.5, TOL).unwrap();
        assert!(spec.state_distance(&back, &m) < 1e-8);
    }
}

#[test]
fn steady_rotation_about_principal_axis() {
    let spec = body();
    let q0 = tilted();
    let omega = Vector3::new(0.0, 0.0, 1.3);
    let m = PhasePoint::rigid_body(q0, omega.into());
    let spatial = q0.rotate(&omega);
    for t in [0.5, 3.0, 10.0] {
        let PhasePoint::RigidBody { attitude, omega: w } = flow(&spec, &m, t, TOL).unwrap() else {
            panic!()
        };
        let expected = exp_so3(&(spatial * t)).unwrap() * q0;
        assert!(attitude.angle_to(&expected) < 1e-9, "t = {t}");
        assert!((w - omega).norm() < 1e-12);
    }
}

#[test]
fn small_oscillation_period_near_stable_axis() {
    let spec = body();
    let (i1, i2, i3): (f64, f64, f64) = (1.0, 2.0, 3.0);
    let w = 1.0;
    let linear = 2.0 * PI / (w * ((i2 - i1) * (i3 - i1) / (i2 * i3)).sqrt());
    let m = PhasePoint::rigid_body(Rotation::identity(), [w, 1e-3, 0.0]);
    let p = find_reduced_period(&spec, &m).unwrap();
    assert!((p.tau - linear).abs() < 0.01 * linear, "{} vs {linear}", p.tau);
    assert!(p.closure_residual < 1e-7);
}

#[test]
fn reduced_equilibrium_is_rejected() {
    let m = PhasePoint::rigid_body(tilted(), [0.0, 2.0, 0.0]);
    assert!(find_reduced_period(&body(), &m).is_err());
    let spec = bowl();
    let v = spec.ball().unwrap().circular_speed(1.0, 0.3).unwrap();
    let circ = PhasePoint::ball([1.0, 0.0], [0.0, v], tilted(), 0.3);
    assert!(matches!(find_reduced_period(&spec, &circ), Err(Error::Domain(_))));
}

#[test]
fn ball_loop_period_is_self_consistent() {
    let spec = bowl();
    let m = ball_point(0.02);
    let coarse = find_reduced_period(&spec, &m).unwrap();
    let mut fine_tols = spec.tolerances.clone();
    fine_tols.tol = 1e-12;
    let fine = find_reduced_period(&spec.clone().with_tolerances(fine_tols), &m).unwrap();
    assert!((coarse.tau - fine.tau).abs() < 1e-8 * fine.tau);
    // after many loops the reduced state comes back
    let end = flow(&spec, &m, 10.0 * coarse.tau, 1e-12).unwrap();
    let r0 = spec.reduce(&m).unwrap().to_vec();
    let r1 = spec.reduce(&end).unwrap().to_vec();
    let d: f64 = r0.iter().zip(&r1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(d < 1e-7, "{d}");
}

#[test]
fn period_is_constant_along_orbits_and_group_orbits() {
    for (spec, m) in [
        (body(), PhasePoint::rigid_body(tilted(), [0.8, 0.5, 0.3])),
        (bowl(), ball_point(0.1)),
    ] {
        let tau = find_reduced_period(&spec, &m).unwrap().tau;
        let later = flow(&spec, &m, 0.3 * tau, TOL).unwrap();
        let tau2 = find_reduced_period(&spec, &later).unwrap().tau;
        assert!((tau - tau2).abs() < 1e-8 * tau, "{tau} vs {tau2}");
        let g = GroupElement::new(spec.group(), 1.1, tilted().inverse());
        let tau3 = find_reduced_period(&spec, &spec.act(&g, &m).unwrap()).unwrap().tau;
        assert!((tau - tau3).abs() < 1e-8 * tau);
    }
}

#[test]
fn invariants_drift_over_one_period() {
    for (spec, m) in [
        (body(), PhasePoint::rigid_body(tilted(), [0.8, 0.5, 0.3])),
        (bowl(), ball_point(0.1)),
    ] {
        let tau = find_reduced_period(&spec, &m).unwrap().tau;
        let traj = integrate(&spec, &m, tau, TOL).unwrap();
        let e0 = spec.energy(&m).unwrap();
        for s in traj.states().unwrap() {
            assert!((spec.energy(&s).unwrap() - e0).abs() <= 1e-9 * e0.abs());
            assert!(spec.constraint_residual(&s).unwrap() < 1e-12);
        }
        if spec.rigid_body().is_some() {
            let l0 = spec.spatial_momentum(&m).unwrap();
            let l1 = spec.spatial_momentum(traj.states().unwrap().last().unwrap()).unwrap();
            assert!((l1 - l0).norm() < 1e-9 * l0.norm());
        }
    }
}

#[test]
fn dense_output_contract() {
    let spec = bowl();
    let m = ball_point(0.1);
    let traj = integrate(&spec, &m, 6.0, TOL).unwrap();
    let times = traj.times();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    for (t, y) in times.iter().zip(traj.state_vectors()) {
        let d = traj.dense_state(*t).unwrap();
        for (a, b) in d.iter().zip(y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    // midpoint against a sharper re-integration
    for w in times.windows(2).step_by(7) {
        let t = 0.5 * (w[0] + w[1]);
        let dense = traj.dense_eval(t).unwrap();
        let sharp = flow(&spec, &m, t, TOL / 100.0).unwrap();
        assert!(spec.state_distance(&dense, &sharp) < 10.0 * TOL, "t = {t}");
    }
    assert!(traj.dense_eval(6.5).is_err());
    assert!(traj.dense_eval(-0.1).is_err());
}

#[test]
fn backward_trajectory_is_sorted() {
    let spec = body();
    let m = PhasePoint::rigid_body(tilted(), [0.8, 0.5, 0.3]);
    let traj = integrate(&spec, &m, -3.0, TOL).unwrap();
    assert_eq!(traj.span(), (-3.0, 0.0));
    assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
    let start = traj.dense_eval(0.0).unwrap();
    assert!(spec.state_distance(&start, &m) < 1e-15);
    let mid = traj.dense_eval(-1.7).unwrap();
    assert!(spec.state_distance(&mid, &flow(&spec, &m, -1.7, TOL).unwrap()) < 1e-8);
}

#[test]
fn leaving_the_annulus_reports_last_state() {
    let spec = make_ball_system(SurfaceProfile::paraboloid(0.5), (0.9, 1.1)).unwrap();
    let m = PhasePoint::ball([1.0, 0.0], [1.0, 0.0], Rotation::identity(), 0.0);
    match flow(&spec, &m, 5.0, TOL) {
        Err(Error::Integration { t, last_state, .. }) => {
            assert!(t > 0.0 && t < 5.0);
            assert_eq!(last_state.len(), 9);
            let r = (last_state[0].powi(2) + last_state[1].powi(2)).sqrt();
            assert!(r <= 1.1 + 1e-9);
        }
        other => panic!("expected integration error, got {other:?}"),
    }
}

#[test]
fn csv_export() {
    let spec = body();
    let m = PhasePoint::rigid_body(tilted(), [0.8, 0.5, 0.3]);
    let traj = integrate(&spec, &m, 1.0, TOL).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 10);
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(first[1], 0.8);
    assert_eq!(first[0], 0.0);
    assert_eq!(lines.count() + 2, traj.times().len() + 1);
}

