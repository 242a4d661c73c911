//! Numerics for the compact groups SO(3) and S¹×SO(3).
//!
//! Rotations are stored as unit quaternions in a canonical sign: scalar part
//! non-negative, and when the scalar part vanishes the first nonzero vector
//! component is positive. With that choice two rotations are equal exactly when
//! their stored quaternions are equal, and the principal logarithm has angle in
//! `[0, π]`.
//!
//! The maximal torus is fixed once and for all to `T = S¹ × S¹_z` (rotations
//! about `e₃`), with lattice basis `ξ₁ = 2π` on the circle factor and
//! `ξ₂ = 2π e₃` on the rotation factor. For `G = SO(3)` only `ξ₂` is present.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance of a regular rotation angle from `{0, π}`.
pub const REGULARITY_TOL: f64 = 1e-6;

/// Maximum distance from `T` accepted by [`torus_coords`].
pub const TORUS_TOL: f64 = 1e-10;

const SIGN_EPS: f64 = 8.0 * f64::EPSILON;

const SERIES_THRESHOLD: f64 = 1e-8;
const AXIS_ALIGNED: f64 = 1e-12;

/// Which compact group a [`GroupElement`] lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTag {
    /// `S¹ × SO(3)`, rank 2.
    #[serde(rename = "S1xSO3")]
    CircleRotation,
    /// `SO(3)`, rank 1.
    #[serde(rename = "SO3")]
    Rotation,
}

impl GroupTag {
    /// Dimension of the maximal torus.
    pub fn rank(self) -> usize {
        match self {
            GroupTag::CircleRotation => 2,
            GroupTag::Rotation => 1,
        }
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::CircleRotation => f.write_str("S1xSO3"),
            GroupTag::Rotation => f.write_str("SO3"),
        }
    }
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wrap into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let t = x.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// Shortest arc length between two angles.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// An element of SO(3).
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct Rotation {
    q: UnitQuaternion<f64>,
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [w, x, y, z] = self.quaternion();
        write!(f, "Rotation[w: {w:.6}, x: {x:.6}, y: {y:.6}, z: {z:.6}]")
    }
}

impl From<Rotation> for [f64; 4] {
    fn from(r: Rotation) -> Self {
        r.quaternion()
    }
}

impl TryFrom<[f64; 4]> for Rotation {
    type Error = Error;

    fn try_from(q: [f64; 4]) -> Result<Self> {
        Rotation::from_quaternion(q[0], q[1], q[2], q[3])
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            q: UnitQuaternion::identity(),
        }
    }

    /// Build from an arbitrary nonzero quaternion `(w, x, y, z)`; it is normalized
    /// and sign-canonicalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let raw = Quaternion::new(w, x, y, z);
        let n = raw.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::InvalidArgument(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(Self::canonical(raw / n))
    }

    fn canonical(q: Quaternion<f64>) -> Self {
        let q = q / q.norm();
        // components below a few ulps count as zero, so that a half turn built
        // from a float angle near π canonicalizes like the exact one
        let flip = if q.w.abs() > SIGN_EPS {
            q.w < 0.0
        } else {
            let v = [q.i, q.j, q.k];
            v.iter()
                .find(|c| c.abs() > SIGN_EPS)
                .is_some_and(|c| *c < 0.0)
        };
        let q = if flip { -q } else { q };
        Rotation {
            q: UnitQuaternion::new_unchecked(q),
        }
    }

    /// Rotation by `angle` about `axis` (right-hand rule). The axis need not be unit.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || n == 0.0 || !angle.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis:?} / angle {angle} do not define a rotation"
            )));
        }
        exp_so3(&(axis * (angle / n)))
    }

    /// Rotation by `angle` about `e₃`.
    pub fn about_z(angle: f64) -> Self {
        let h = 0.5 * angle;
        Self::canonical(Quaternion::new(h.cos(), 0.0, 0.0, h.sin()))
    }

    /// Canonical quaternion `(w, x, y, z)`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = self.q.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn unit_quaternion(&self) -> UnitQuaternion<f64> {
        self.q
    }

    pub fn inverse(&self) -> Self {
        Self::canonical(self.q.inverse().into_inner())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.q.to_rotation_matrix().into_inner()
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let q = self.q.quaternion();
        2.0 * q.vector().norm().atan2(q.w)
    }

    /// Unit axis of the principal logarithm, `None` for the identity.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let v = self.q.quaternion().vector().into_owned();
        let n = v.norm();
        (n > 0.0).then(|| v / n)
    }

    /// Angle of `self · other⁻¹`; a bi-invariant metric on SO(3).
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        // chord form; 2·acos(|⟨p, q⟩|) loses precision near zero
        let p = self.q.quaternion();
        let q = other.q.quaternion();
        let chord = (p - q).norm().min((p + q).norm());
        4.0 * (0.5 * chord).min(1.0).asin()
    }

    pub fn log(&self) -> Vector3<f64> {
        log_so3(self)
    }

    pub fn exp(omega: &Vector3<f64>) -> Result<Self> {
        exp_so3(omega)
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation::canonical((self.q * rhs.q).into_inner())
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        *self * *rhs
    }
}

/// Exponential map `𝔰𝔬(3) → SO(3)` in axis·angle coordinates.
pub fn exp_so3(omega: &Vector3<f64>) -> Result<Rotation> {
    if !omega.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite rotation vector {omega:?}"
        )));
    }
    let theta = omega.norm();
    let (w, s) = if theta < SERIES_THRESHOLD {
        let t2 = theta * theta;
        (1.0 - t2 / 8.0, 0.5 * (1.0 - t2 / 24.0))
    } else {
        let h = 0.5 * theta;
        (h.cos(), h.sin() / theta)
    };
    Ok(Rotation::canonical(Quaternion::new(
        w,
        s * omega.x,
        s * omega.y,
        s * omega.z,
    )))
}

/// Principal logarithm with angle in `[0, π]`.
///
/// At angle exactly `π` the axis sign is the one fixed by the canonical
/// quaternion (first nonzero component positive).
pub fn log_so3(r: &Rotation) -> Vector3<f64> {
    let q = r.q.quaternion();
    let v = q.vector().into_owned();
    let n = v.norm();
    if n < SERIES_THRESHOLD {
        // atan2(n, w)/n ≈ 1/w for small n
        v * (2.0 / q.w)
    } else {
        v * (2.0 * n.atan2(q.w) / n)
    }
}

/// Element of `S¹ × SO(3)` or of `SO(3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    /// Circle component in `[0, 2π)`; always 0 for [`GroupTag::Rotation`].
    pub theta: f64,
    pub rotation: Rotation,
    pub group: GroupTag,
}

impl GroupElement {
    pub fn new(group: GroupTag, theta: f64, rotation: Rotation) -> Self {
        let theta = match group {
            GroupTag::CircleRotation => wrap_angle(theta),
            GroupTag::Rotation => 0.0,
        };
        GroupElement {
            theta,
            rotation,
            group,
        }
    }

    pub fn identity(group: GroupTag) -> Self {
        Self::new(group, 0.0, Rotation::identity())
    }

    pub fn rotation_only(rotation: Rotation) -> Self {
        Self::new(GroupTag::Rotation, 0.0, rotation)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.group, -self.theta, self.rotation.inverse())
    }

    pub fn compose(&self, other: &GroupElement) -> Result<Self> {
        same_group(self, other)?;
        Ok(Self::new(
            self.group,
            self.theta + other.theta,
            self.rotation * other.rotation,
        ))
    }

    /// `max(circle distance, rotation angle of R₁R₂⁻¹)`.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        circle_distance(self.theta, other.theta).max(self.rotation.angle_to(&other.rotation))
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    /// Panics on mismatched groups; use [`GroupElement::compose`] for a fallible product.
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.compose(&rhs)
            .expect("group elements from different groups")
    }
}

fn same_group(a: &GroupElement, b: &GroupElement) -> Result<()> {
    if a.group != b.group {
        return Err(Error::InvalidArgument(format!(
            "group mismatch: {} vs {}",
            a.group, b.group
        )));
    }
    Ok(())
}

/// Element of the Lie algebra `𝔰¹ ⊕ 𝔰𝔬(3)` (or `𝔰𝔬(3)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub theta_dot: f64,
    pub omega: Vector3<f64>,
}

impl AlgebraElement {
    pub fn exp(&self, group: GroupTag) -> Result<GroupElement> {
        if !self.theta_dot.is_finite() {
            return Err(Error::InvalidArgument("non-finite circle component".into()));
        }
        Ok(GroupElement::new(
            group,
            self.theta_dot,
            exp_so3(&self.omega)?,
        ))
    }

    /// Principal logarithm: circle part in `(−π, π]`, rotation angle in `[0, π]`.
    pub fn log(g: &GroupElement) -> Self {
        let t = g.theta;
        AlgebraElement {
            theta_dot: if t > PI { t - TAU } else { t },
            omega: log_so3(&g.rotation),
        }
    }
}

/// `g h g⁻¹`. The circle factor is central, so `h.theta` passes through.
pub fn conj(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    same_group(g, h)?;
    Ok(GroupElement::new(
        h.group,
        h.theta,
        g.rotation * h.rotation * g.rotation.inverse(),
    ))
}

/// A rotation is regular when its angle stays `tol` away from `0` and `π`.
/// The circle factor is central and never affects regularity.
pub fn is_regular(g: &GroupElement, tol: f64) -> bool {
    let phi = g.rotation.angle();
    tol < phi && phi < PI - tol
}

/// A conjugator `h` with `h g h⁻¹ ∈ T`, using the default regularity tolerance.
pub fn conjugator_to_torus(g: &GroupElement) -> Result<GroupElement> {
    conjugator_to_torus_with_tol(g, REGULARITY_TOL)
}

/// `h = (0, R^{arccos(v·e₃)}_{v×e₃})` where `v` is the rotation axis of `g`.
///
/// Axis already along `e₃` gives the identity; axis along `−e₃` gives the
/// half-turn about `e₁`.
pub fn conjugator_to_torus_with_tol(g: &GroupElement, tol: f64) -> Result<GroupElement> {
    if !is_regular(g, tol) {
        return Err(Error::Domain(format!(
            "rotation angle {} is not regular (tol {tol})",
            g.rotation.angle()
        )));
    }
    let v = g.rotation.axis().expect("regular rotation has an axis");
    let c = v.z.clamp(-1.0, 1.0);
    let rot = if c > 1.0 - AXIS_ALIGNED {
        Rotation::identity()
    } else if c < -1.0 + AXIS_ALIGNED {
        Rotation::about_axis_unchecked(&Vector3::x(), PI)
    } else {
        let axis = v.cross(&Vector3::z());
        Rotation::from_axis_angle(&axis, c.acos())?
    };
    Ok(GroupElement::new(g.group, 0.0, rot))
}

impl Rotation {
    fn about_axis_unchecked(unit_axis: &Vector3<f64>, angle: f64) -> Self {
        let h = 0.5 * angle;
        let s = h.sin();
        Self::canonical(Quaternion::new(
            h.cos(),
            s * unit_axis.x,
            s * unit_axis.y,
            s * unit_axis.z,
        ))
    }
}

/// Lattice coordinates of an element of the fixed maximal torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusElement {
    pub beta: Vec<f64>,
}

impl TorusElement {
    /// Coordinates are reduced into `[0, 1)`.
    pub fn new(beta: Vec<f64>) -> Self {
        TorusElement {
            beta: beta.into_iter().map(wrap_unit).collect(),
        }
    }

    /// Coordinates kept as given, without reduction mod 1.
    pub fn unreduced(beta: Vec<f64>) -> Self {
        TorusElement { beta }
    }

    pub fn rank(&self) -> usize {
        self.beta.len()
    }

    pub fn group(&self) -> Result<GroupTag> {
        match self.beta.len() {
            2 => Ok(GroupTag::CircleRotation),
            1 => Ok(GroupTag::Rotation),
            n => Err(Error::InvalidArgument(format!(
                "torus rank {n} unsupported"
            ))),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        TorusElement::unreduced(self.beta.iter().map(|b| b * s).collect())
    }

    pub fn add(&self, other: &TorusElement) -> Self {
        TorusElement::unreduced(
            self.beta
                .iter()
                .zip(&other.beta)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Rotation-angle distance from `g`'s rotation part to `S¹_z`.
pub fn torus_distance(g: &GroupElement) -> f64 {
    let [_, x, y, _] = g.rotation.quaternion();
    2.0 * x.hypot(y).min(1.0).asin()
}

/// Lattice coordinates `β` with `Ξ(β) = t`, each in `[0, 1)`.
pub fn torus_coords(t: &GroupElement) -> Result<TorusElement> {
    let d = torus_distance(t);
    if d > TORUS_TOL {
        return Err(Error::Domain(format!(
            "element is {d:e} away from the maximal torus"
        )));
    }
    let [w, _, _, z] = t.rotation.quaternion();
    let phi_z = 2.0 * z.atan2(w);
    let rot_coord = phi_z / TAU;
    Ok(match t.group {
        GroupTag::CircleRotation => TorusElement::new(vec![t.theta / TAU, rot_coord]),
        GroupTag::Rotation => TorusElement::new(vec![rot_coord]),
    })
}

/// `Ξ(β) = exp(Σ βⱼ ξⱼ)`.
pub fn xi(beta: &TorusElement) -> Result<GroupElement> {
    let group = beta.group()?;
    Ok(match group {
        GroupTag::CircleRotation => GroupElement::new(
            group,
            TAU * beta.beta[0],
            Rotation::about_z(TAU * beta.beta[1]),
        ),
        GroupTag::Rotation => GroupElement::new(group, 0.0, Rotation::about_z(TAU * beta.beta[0])),
    })
}

/// Fold a nonzero vector to the unit representative of its line whose last
/// nonzero coordinate is positive.
pub fn fold_projective(u: &Vector3<f64>) -> Vector3<f64> {
    let u = u.normalize();
    let last = [u.z, u.y, u.x]
        .into_iter()
        .find(|c| c.abs() > SIGN_EPS)
        .unwrap_or(1.0);
    if last < 0.0 {
        -u
    } else {
        u
    }
}

/// Distance between two lines through the origin: `min(|u − v|, |u + v|)` on unit representatives.
pub fn projective_distance(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    let u = u.normalize();
    let v = v.normalize();
    (u - v).norm().min((u + v).norm())
}

/// Representative of `[h] ∈ G/N(T) ≅ ℝP²`: the folded line through `R_h e₃`.
pub fn weyl_representative(h: &GroupElement) -> Vector3<f64> {
    fold_projective(&h.rotation.rotate(&Vector3::z()))
}
