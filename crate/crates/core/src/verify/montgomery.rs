//! Closed-form rigid-body reference values: the period of the Euler top from
//! the complete elliptic integral, and the rotation about the momentum axis
//! after one period, `Δθ = 2Eτ/‖L‖ − Λ`, with `Λ` the solid angle enclosed by
//! the body-momentum loop.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::dynsys::{make_rigid_body, PhasePoint};
use crate::error::{Error, Result};
use crate::integrate::{DenseSolution, ShapeOde};
use crate::liegroup::wrap_angle;

/// Relative distance of `L²/2E` from the middle moment below which the loop is
/// treated as a separatrix.
pub const SEPARATRIX_MARGIN: f64 = 1e-3;

const QUADRATURE_TOL: f64 = 1e-9;
const LOOP_TOL: f64 = 1e-13;

/// `K(k) = π / (2·AGM(1, √(1−k²)))`.
pub fn elliptic_k(k2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k2) {
        return Err(Error::InvalidArgument(format!("elliptic modulus k² = {k2} outside [0, 1)")));
    }
    let (mut a, mut b) = (1.0, (1.0 - k2).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = (0.5 * (a + b), (a * b).sqrt());
        a = next.0;
        b = next.1;
    }
    Ok(PI / (a + b))
}

fn sorted_check(inertia: [f64; 3]) -> Result<()> {
    if !(inertia[0] < inertia[1] && inertia[1] < inertia[2] && inertia[0] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle needs distinct increasing moments, got {inertia:?}"
        )));
    }
    Ok(())
}

/// Period of the body angular momentum `m` under the Euler equations.
pub fn euler_top_period(inertia: [f64; 3], m: &Vector3<f64>) -> Result<f64> {
    sorted_check(inertia)?;
    let [i1, i2, i3] = inertia;
    let l2 = m.norm_squared();
    // twice the energy
    let e2 = m.x * m.x / i1 + m.y * m.y / i2 + m.z * m.z / i3;
    let d = l2 / e2;
    if (d - i2).abs() < SEPARATRIX_MARGIN * i2 || l2 == 0.0 {
        return Err(Error::OracleUnavailable(format!(
            "L²/2E = {d} too close to the middle moment {i2}"
        )));
    }
    // loops around the largest axis; swap the outer moments for the smallest
    let (ia, ic) = if d > i2 { (i1, i3) } else { (i3, i1) };
    let num = (i2 - ia) * (e2 * ic - l2);
    let den = (ic - i2) * (l2 - e2 * ia);
    let k2 = (num / den).max(0.0);
    Ok(4.0 * elliptic_k(k2)? * (i1 * i2 * i3 / den).sqrt())
}

/// Principal axis inside the momentum loop through `m`.
fn enclosed_pole(inertia: [f64; 3], m: &Vector3<f64>) -> Vector3<f64> {
    let e2 = m.x * m.x / inertia[0] + m.y * m.y / inertia[1] + m.z * m.z / inertia[2];
    if m.norm_squared() / e2 > inertia[1] {
        Vector3::z() * m.z.signum()
    } else {
        Vector3::x() * m.x.signum()
    }
}

/// `∮ (1 − cos ϑ) dφ` of the unit body-momentum loop about the enclosed
/// principal axis, traversed forward (`direction > 0`) or backward.
///
/// A loop that is a single point at the pole encloses 0 (the hemisphere
/// containing the pole is the inside).
pub fn enclosed_solid_angle(inertia: [f64; 3], m: &Vector3<f64>, direction: f64) -> Result<f64> {
    let tau = euler_top_period(inertia, m)?;
    let spec = make_rigid_body(inertia)?;
    let body = spec.rigid_body().unwrap().clone();
    let omega0 = body.omega_from_momentum(m);
    let t_end = tau * direction.signum();
    let sol = DenseSolution::solve(&ShapeOde(&spec), omega0.as_slice(), t_end, LOOP_TOL)?;
    let pole = enclosed_pole(inertia, m);
    let ea = if pole.x != 0.0 { Vector3::y() } else { Vector3::x() };
    let eb = pole.cross(&ea);

    let integrand = |t: f64| -> Result<f64> {
        let w = Vector3::from_column_slice(&sol.eval(t)?);
        let mm = body.momentum(&w);
        let mdot = body.momentum_dot(&mm);
        let n = mm.norm();
        let (u, udot) = (mm / n, mdot / n);
        let (x, y) = (u.dot(&ea), u.dot(&eb));
        let (xd, yd) = (udot.dot(&ea), udot.dot(&eb));
        Ok((x * yd - y * xd) / (1.0 + u.dot(&pole)))
    };
    // periodic integrand: the trapezoid rule converges geometrically
    let mut n = 64usize;
    let mut prev = trapezoid(&integrand, t_end, n)?;
    loop {
        n *= 2;
        let next = trapezoid(&integrand, t_end, n)?;
        if (next - prev).abs() < QUADRATURE_TOL {
            return Ok(next);
        }
        if n > 1 << 20 {
            return Err(Error::OracleUnavailable("solid-angle quadrature did not settle".into()));
        }
        prev = next;
    }
}

fn trapezoid(f: &impl Fn(f64) -> Result<f64>, t_end: f64, n: usize) -> Result<f64> {
    let h = t_end / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(h * i as f64)?;
    }
    Ok(acc * h)
}

/// Rotation angle about the spatial momentum after one reduced period,
/// wrapped to `(−π, π]`.
pub fn montgomery_oracle(inertia: [f64; 3], m: &PhasePoint) -> Result<f64> {
    let PhasePoint::RigidBody { omega, .. } = m else {
        return Err(Error::InvalidArgument("the oracle needs a rigid-body state".into()));
    };
    let body = make_rigid_body(inertia)?;
    let body = body.rigid_body().unwrap();
    let mm = body.momentum(omega);
    let tau = euler_top_period(inertia, &mm)?;
    let energy = body.energy(omega);
    let lambda = enclosed_solid_angle(inertia, &mm, 1.0)?;
    Ok(wrap_signed(2.0 * energy * tau / mm.norm() - lambda))
}

/// Signed rotation angle of a unit quaternion about `axis`, in `(−π, π]`.
pub fn signed_angle_about(q: [f64; 4], axis: &Vector3<f64>) -> f64 {
    let v = Vector3::new(q[1], q[2], q[3]);
    wrap_signed(2.0 * v.dot(&axis.normalize()).atan2(q[0]))
}

fn wrap_signed(x: f64) -> f64 {
    let w = wrap_angle(x);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
