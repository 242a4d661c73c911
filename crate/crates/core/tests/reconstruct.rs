use nalgebra::Vector3;
use phasemap::dynsys::{make_ball_system, make_rigid_body, PhasePoint, SurfaceProfile, SystemSpec};
use phasemap::integrate::flow;
use phasemap::liegroup::{conj, projective_distance, xi, GroupElement, GroupTag, Rotation, TorusElement};
use phasemap::reconstruct::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn bowl() -> SystemSpec {
    make_ball_system(SurfaceProfile::paraboloid(0.5), (0.2, 3.0)).unwrap()
}

fn body() -> SystemSpec {
    make_rigid_body([1.0, 2.0, 3.0]).unwrap()
}

fn tilted() -> Rotation {
    Rotation::from_axis_angle(&Vector3::new(0.3, -0.2, 0.9), 0.8).unwrap()
}

fn ball_point() -> PhasePoint {
    let v = bowl().ball().unwrap().circular_speed(1.0, 0.3).unwrap();
    PhasePoint::ball([1.0, 0.0], [0.1, 1.1 * v], tilted(), 0.3)
}

fn body_point() -> PhasePoint {
    PhasePoint::rigid_body(tilted(), [0.8, 0.5, 0.3])
}

fn cases() -> Vec<(SystemSpec, PhasePoint)> {
    vec![(bowl(), ball_point()), (body(), body_point())]
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    Rotation::from_quaternion(v[0], v[1], v[2], v[3]).unwrap()
}

#[test]
fn defining_property_and_regularity() {
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        assert!(p.regular, "{:?}", p.gamma);
        let lhs = spec.act(&p.gamma, &m).unwrap();
        let rhs = flow(&spec, &m, p.tau, spec.tolerances.tol).unwrap();
        assert!(spec.state_distance(&lhs, &rhs) < spec.tolerances.tol_phase);
        let h = p.conjugator.unwrap();
        let t = conj(&h, &p.gamma).unwrap();
        assert!(phasemap::liegroup::torus_distance(&t) < 1e-8);
        let f = p.frequencies.clone().unwrap();
        assert_eq!(f[0], 1.0 / p.tau);
        for (fi, ei) in f[1..].iter().zip(&p.eta.as_ref().unwrap().beta) {
            assert_eq!(*fi, ei / p.tau);
        }
    }
}

#[test]
fn steady_rotation_phase() {
    let spec = body();
    let omega = Vector3::new(1.5, 0.0, 0.0);
    let m = PhasePoint::rigid_body(tilted(), omega.into());
    let p = phase_or_linearized(&spec, &m).unwrap();
    assert_eq!(p.period_source, PeriodSource::Linearized);
    let linear = TAU / (1.5 * (1.0f64 * 2.0 / 6.0).sqrt());
    assert!((p.tau - linear).abs() < 1e-6 * linear);
    let u = tilted().rotate(&Vector3::x());
    let expected = Rotation::from_axis_angle(&u, (1.5 * p.tau) % TAU).unwrap();
    assert!(p.gamma.rotation.angle_to(&expected) < 1e-9);
    // any supplied period works the same way
    let q = phase_with_period(&spec, &m, 1.0).unwrap();
    assert!(q.gamma.rotation.angle_to(&Rotation::from_axis_angle(&u, 1.5).unwrap()) < 1e-9);
}

#[test]
fn unstable_axis_has_no_linearized_period() {
    let m = PhasePoint::rigid_body(tilted(), [0.0, 1.0, 0.0]);
    assert!(linearized_period(&body(), &m).is_err());
}

#[test]
fn ball_circular_motion_linearized_period() {
    // the small loops around circular motion shrink onto the linearized period
    let spec = bowl();
    let v = spec.ball().unwrap().circular_speed(1.0, 0.3).unwrap();
    let circ = PhasePoint::ball([1.0, 0.0], [0.0, v], tilted(), 0.3);
    let lin = linearized_period(&spec, &circ).unwrap();
    let near = PhasePoint::ball([1.0, 0.0], [1e-4, v], tilted(), 0.3);
    let tau = phasemap::integrate::find_reduced_period(&spec, &near).unwrap().tau;
    assert!((tau - lin).abs() < 1e-3 * lin, "{tau} vs {lin}");
}

#[test]
fn phase_is_equivariant_and_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let tol = 5.0 * spec.tolerances.tol_phase;
        for _ in 0..5 {
            let g = GroupElement::new(spec.group(), rng.gen_range(0.0..TAU), random_rotation(&mut rng));
            let q = phase(&spec, &spec.act(&g, &m).unwrap()).unwrap();
            assert!(q.gamma.distance(&conj(&g, &p.gamma).unwrap()) < tol);
        }
        for s in [0.37, 1.3] {
            let later = flow(&spec, &m, s * p.tau, spec.tolerances.tol).unwrap();
            let q = phase(&spec, &later).unwrap();
            assert!(q.gamma.distance(&p.gamma) < tol);
        }
    }
}

#[test]
fn torus_embedding() {
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let rank = spec.group().rank();
        let zero = TorusElement::new(vec![0.0; rank]);
        let at0 = torus_embed(&spec, &p, &m, 0.0, &zero).unwrap();
        assert!(spec.state_distance(&at0, &m) < 1e-14);

        // injectivity on a 4×4 grid
        let mut pts = Vec::new();
        for a in [0.0, 0.25, 0.5, 0.75] {
            for b in [0.1, 0.35, 0.6, 0.85] {
                let beta = TorusElement::new(vec![b; rank]);
                pts.push(torus_embed(&spec, &p, &m, a, &beta).unwrap());
            }
        }
        for i in 0..pts.len() {
            for j in 0..i {
                assert!(spec.state_distance(&pts[i], &pts[j]) > 1e-6);
            }
        }

        // linear flow in (α, β)
        let eta = p.eta.clone().unwrap();
        let t = 0.3 * p.tau;
        for a in [0.1, 0.4, 0.7] {
            for b in [0.2, 0.5, 0.9] {
                let beta = TorusElement::new((0..rank).map(|j| b + 0.1 * j as f64).collect());
                let x = torus_embed(&spec, &p, &m, a, &beta).unwrap();
                let lhs = flow(&spec, &x, t, spec.tolerances.tol).unwrap();
                let beta2 = beta.add(&eta.scaled(t / p.tau));
                let rhs = torus_embed(&spec, &p, &m, a + t / p.tau, &beta2).unwrap();
                assert!(spec.state_distance(&lhs, &rhs) < 1e-6);
            }
        }
        // α is periodic with period 1
        let beta = TorusElement::new(vec![0.3; rank]);
        let x = torus_embed(&spec, &p, &m, 0.2, &beta).unwrap();
        let lhs = flow(&spec, &x, p.tau, spec.tolerances.tol).unwrap();
        let rhs = torus_embed(&spec, &p, &m, 0.2, &beta.add(&eta)).unwrap();
        assert!(spec.state_distance(&lhs, &rhs) < 1e-6);
    }
}

#[test]
fn frequencies_are_constant_on_the_torus() {
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let rank = spec.group().rank();
        let x = torus_embed(&spec, &p, &m, 0.35, &TorusElement::new(vec![0.6; rank])).unwrap();
        let q = phase(&spec, &x).unwrap();
        let (f, g) = (p.frequencies.unwrap(), q.frequencies.unwrap());
        for (a, b) in f.iter().zip(&g) {
            // the branch lattice is (1/τ)ℤ in the torus slots
            let d = (a - b) * p.tau;
            assert!((d - d.round()).abs() / p.tau < 1e-7, "{f:?} vs {g:?}");
        }
    }
}

#[test]
fn flower_frame_and_petals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let e = GroupElement::identity(spec.group());
        assert!(spec.state_distance(&flower_frame(&spec, &p, &m, 0.0, &e).unwrap(), &m) < 1e-14);

        let orbit = ReducedOrbit::new(&spec, &m, p.tau).unwrap();
        let tols = PetalTolerances::default();
        let h = p.conjugator.unwrap();
        for _ in 0..4 {
            let alpha = rng.gen_range(0.0..1.0);
            let g = GroupElement::new(spec.group(), rng.gen_range(0.0..TAU), random_rotation(&mut rng));
            let x = flower_frame(&spec, &p, &m, alpha, &g).unwrap();
            assert!(orbit.distance(&x).unwrap().0 < 1e-6);

            let beta = TorusElement::new((0..spec.group().rank()).map(|_| rng.gen_range(0.0..1.0)).collect());
            let t_m = conj(&h.inverse(), &xi(&beta).unwrap()).unwrap();
            let y = flower_frame(&spec, &p, &m, alpha, &(g * t_m)).unwrap();
            let px = phase(&spec, &x).unwrap();
            let py = phase(&spec, &y).unwrap();
            assert!(projective_distance(&px.delta_rep.unwrap(), &py.delta_rep.unwrap()) < 1e-7);
            assert!(px.gamma.distance(&py.gamma) < 1e-6);
        }
        // points of the petal itself pass all three stages
        let beta = TorusElement::new(vec![0.4; spec.group().rank()]);
        let x = torus_embed(&spec, &p, &m, 0.6, &beta).unwrap();
        let v = petal_membership(&spec, &p, &orbit, &x, &tols).unwrap();
        assert!(v.on_petal, "{v:?}");
    }
}

#[test]
fn delta_examples_and_conservation() {
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let d0 = p.delta_rep.unwrap();
        let axis = p.gamma.rotation.axis().unwrap();
        assert!(projective_distance(&d0, &delta_axis_formula(&axis).unwrap()) < 1e-12);
        for s in [0.2, 0.7, 3.1] {
            let later = flow(&spec, &m, s * p.tau, spec.tolerances.tol).unwrap();
            let d = delta(&spec, &later).unwrap();
            assert!(projective_distance(&d, &d0) < 1e-7);
        }
    }
    // phase axis e₃ gives [e₃]
    let g = GroupElement::new(GroupTag::CircleRotation, 0.5, Rotation::about_z(1.0));
    let p = PhaseResult::from_gamma(1.0, g, 1e-6).unwrap();
    assert_eq!(p.delta_rep.unwrap(), Vector3::z());
}

#[test]
fn weyl_partner_petal() {
    // act(n', m) with n' a half turn about an axis normal to the phase axis:
    // same δ, same flower, different petal
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let k = p.conjugator.unwrap().inverse();
        let n = GroupElement::new(spec.group(), 0.0, Rotation::from_axis_angle(&Vector3::x(), PI).unwrap());
        let partner = spec.act(&conj(&k, &n).unwrap(), &m).unwrap();
        let q = phase(&spec, &partner).unwrap();
        assert!(projective_distance(&q.delta_rep.unwrap(), &p.delta_rep.unwrap()) < 1e-7);
        assert!(q.gamma.distance(&p.gamma) > 1e-3);
        let orbit = ReducedOrbit::new(&spec, &m, p.tau).unwrap();
        let v = petal_membership(&spec, &p, &orbit, &partner, &PetalTolerances::default()).unwrap();
        assert!(v.on_flower && !v.on_petal, "{v:?}");
        assert!(v.delta_distance < 1e-6);
    }
}

#[test]
fn points_off_the_flower_are_rejected() {
    for (spec, m) in cases() {
        let p = phase(&spec, &m).unwrap();
        let orbit = ReducedOrbit::new(&spec, &m, p.tau).unwrap();
        let other = match m {
            PhasePoint::Ball { a, a_dot, attitude, w } => PhasePoint::Ball { a, a_dot, attitude, w: w + 0.05 },
            PhasePoint::RigidBody { attitude, omega } => PhasePoint::RigidBody { attitude, omega: omega * 1.05 },
        };
        let v = petal_membership(&spec, &p, &orbit, &other, &PetalTolerances::default()).unwrap();
        assert!(!v.on_flower && !v.on_petal);
    }
}

#[test]
fn orbit_distance_wraps_around_the_period() {
    for (spec, m) in cases() {
        let tau = phase(&spec, &m).unwrap().tau;
        let orbit = ReducedOrbit::new(&spec, &m, tau).unwrap();
        for s in [1e-5, 0.3, 1.0 - 1e-5, 1.0 - 3e-4] {
            let x = flow(&spec, &m, s * tau, 1e-12).unwrap();
            let (d, t) = orbit.distance(&x).unwrap();
            assert!(d < 1e-8, "s={s}: {d}");
            assert!((0.0..tau).contains(&t));
        }
    }
}
