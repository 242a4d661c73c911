//! Symmetric dynamical systems: group action, invariant vector field,
//! reduction map and conserved quantities.
//!
//! Two systems are provided. The rolling ball has phase space
//! `(ℝ⁴∖{0}) × SO(3) × ℝ ∋ (a, ȧ, Q, w)` with `G = S¹ × SO(3)`; the free rigid
//! body has phase space `SO(3) × ℝ³ ∋ (Q, Ω)` with `G = SO(3)`.
//!
//! For the ball, `Q` maps space to body (`Q̇ = −Q·hat(ω)`), `SO(3)` relabels the
//! body from the left and `S¹` turns the whole picture about the vertical:
//! `(ϑ, R)·(a, ȧ, Q, w) = (S_ϑ a, S_ϑ ȧ, R Q S_ϑ⁻¹, w)`. The right factor
//! `S_ϑ⁻¹` is what makes the vector field invariant: a vertical turn also
//! turns the spatial angular velocity.
//!
//! Integration works on flat state vectors:
//!
//! | system     | layout                                  |
//! |------------|-----------------------------------------|
//! | ball       | `[a₁, a₂, ȧ₁, ȧ₂, w, q_w, q_x, q_y, q_z]` |
//! | rigid body | `[Ω₁, Ω₂, Ω₃, q_w, q_x, q_y, q_z]`        |
//!
//! The leading "shape" block evolves on its own and determines the reduced
//! point; the quaternion block follows it.

pub mod ball;
pub mod rigid_body;

use nalgebra::{Quaternion, Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liegroup::{GroupElement, GroupTag, Rotation};

pub use ball::{Ball, BallRates, SurfaceProfile};
pub use rigid_body::RigidBody;

/// Which model a point or specification belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Ball,
    RigidBody,
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemKind::Ball => "ball",
            SystemKind::RigidBody => "rigid_body",
        })
    }
}

/// A full state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhasePoint {
    Ball {
        a: Vector2<f64>,
        a_dot: Vector2<f64>,
        /// Space → body.
        attitude: Rotation,
        /// Normal component of the angular velocity.
        w: f64,
    },
    RigidBody {
        /// Body → space.
        attitude: Rotation,
        /// Body angular velocity.
        omega: Vector3<f64>,
    },
}

impl PhasePoint {
    pub fn ball(a: [f64; 2], a_dot: [f64; 2], attitude: Rotation, w: f64) -> Self {
        PhasePoint::Ball {
            a: Vector2::from(a),
            a_dot: Vector2::from(a_dot),
            attitude,
            w,
        }
    }

    pub fn rigid_body(attitude: Rotation, omega: [f64; 3]) -> Self {
        PhasePoint::RigidBody {
            attitude,
            omega: Vector3::from(omega),
        }
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            PhasePoint::Ball { .. } => SystemKind::Ball,
            PhasePoint::RigidBody { .. } => SystemKind::RigidBody,
        }
    }

    pub fn attitude(&self) -> Rotation {
        match self {
            PhasePoint::Ball { attitude, .. } | PhasePoint::RigidBody { attitude, .. } => *attitude,
        }
    }
}

/// A point of the reduced space `M/G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum ReducedPoint {
    /// Hopf image `b(a, ȧ)` and the normal spin.
    Ball { b: Vector3<f64>, w: f64 },
    /// Body angular momentum `IΩ`.
    RigidBody { momentum: Vector3<f64> },
}

impl ReducedPoint {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            ReducedPoint::Ball { b, w } => vec![b.x, b.y, b.z, *w],
            ReducedPoint::RigidBody { momentum } => momentum.iter().copied().collect(),
        }
    }
}

/// A tangent vector at a phase point. The attitude rate is left-trivialized,
/// `Q⁻¹Q̇ = hat(attitude_rate)`, which makes it independent of the quaternion sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tangent {
    Ball {
        a_dot: Vector2<f64>,
        a_ddot: Vector2<f64>,
        attitude_rate: Vector3<f64>,
        w_dot: f64,
    },
    RigidBody {
        attitude_rate: Vector3<f64>,
        omega_dot: Vector3<f64>,
    },
}

impl Tangent {
    /// 8 components for the ball, 6 for the rigid body.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Tangent::Ball {
                a_dot,
                a_ddot,
                attitude_rate,
                w_dot,
            } => {
                let mut v = vec![a_dot.x, a_dot.y, a_ddot.x, a_ddot.y];
                v.extend(attitude_rate.iter());
                v.push(*w_dot);
                v
            }
            Tangent::RigidBody {
                attitude_rate,
                omega_dot,
            } => attitude_rate
                .iter()
                .chain(omega_dot.iter())
                .copied()
                .collect(),
        }
    }
}

/// Integration and classification tolerances carried with a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Local error tolerance of the integrator (absolute and relative).
    pub tol: f64,
    /// Give up the period search after this much time.
    pub t_max: f64,
    /// Closure tolerance of the reduced orbit, in units of `max(1, ‖y₀‖)`.
    pub tol_closure: f64,
    /// Returns to the section earlier than this are ignored.
    pub min_period_floor: f64,
    /// Minimum reduced speed, in units of `max(1, ‖y₀‖)`.
    pub v_min: f64,
    /// Largest accepted residual when solving for the phase.
    pub tol_phase: f64,
    /// Distance of a regular rotation angle from `{0, π}`.
    pub regularity_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: 1e-10,
            t_max: 1e3,
            tol_closure: 1e-7,
            min_period_floor: 1e-3,
            v_min: 1e-6,
            tol_phase: 1e-7,
            regularity_tol: crate::liegroup::REGULARITY_TOL,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tol", self.tol),
            ("t_max", self.t_max),
            ("tol_closure", self.tol_closure),
            ("min_period_floor", self.min_period_floor),
            ("v_min", self.v_min),
            ("tol_phase", self.tol_phase),
            ("regularity_tol", self.regularity_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ball(Ball),
    RigidBody(RigidBody),
}

/// A fully wired system: model, symmetry group and integration defaults.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub model: Model,
    pub tolerances: Tolerances,
}

/// Ball rolling inside `z = f(r²)`; `annulus` bounds `‖a‖` during integration.
pub fn make_ball_system(profile: SurfaceProfile, annulus: (f64, f64)) -> Result<SystemSpec> {
    Ok(SystemSpec {
        model: Model::Ball(Ball::new(profile, annulus)?),
        tolerances: Tolerances::default(),
    })
}

pub fn make_rigid_body(inertia: [f64; 3]) -> Result<SystemSpec> {
    Ok(SystemSpec {
        model: Model::RigidBody(RigidBody::new(inertia)?),
        tolerances: Tolerances::default(),
    })
}

/// `q ⊗ (0, v)`.
fn quat_times_pure(q: &[f64], v: &Vector3<f64>) -> [f64; 4] {
    let (w, x) = (q[0], Vector3::new(q[1], q[2], q[3]));
    let s = -x.dot(v);
    let u = v * w + x.cross(v);
    [s, u.x, u.y, u.z]
}

fn planar(theta: f64, v: &Vector2<f64>) -> Vector2<f64> {
    Rotation2::new(theta) * v
}

impl SystemSpec {
    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn kind(&self) -> SystemKind {
        match self.model {
            Model::Ball(_) => SystemKind::Ball,
            Model::RigidBody(_) => SystemKind::RigidBody,
        }
    }

    pub fn group(&self) -> GroupTag {
        match self.model {
            Model::Ball(_) => GroupTag::CircleRotation,
            Model::RigidBody(_) => GroupTag::Rotation,
        }
    }

    /// Dimension of the phase space (8 or 6).
    pub fn dimension(&self) -> usize {
        match self.model {
            Model::Ball(_) => 8,
            Model::RigidBody(_) => 6,
        }
    }

    pub fn ball(&self) -> Option<&Ball> {
        match &self.model {
            Model::Ball(b) => Some(b),
            Model::RigidBody(_) => None,
        }
    }

    pub fn rigid_body(&self) -> Option<&RigidBody> {
        match &self.model {
            Model::RigidBody(b) => Some(b),
            Model::Ball(_) => None,
        }
    }

    fn check_point(&self, m: &PhasePoint) -> Result<()> {
        if m.kind() != self.kind() {
            return Err(Error::InvalidArgument(format!(
                "{} state given to a {} system",
                m.kind(),
                self.kind()
            )));
        }
        Ok(())
    }

    fn check_group(&self, g: &GroupElement) -> Result<()> {
        if g.group != self.group() {
            return Err(Error::InvalidArgument(format!(
                "{} element acting on a {} system",
                g.group,
                self.kind()
            )));
        }
        Ok(())
    }

    /// `Ψ_g(m)`.
    pub fn act(&self, g: &GroupElement, m: &PhasePoint) -> Result<PhasePoint> {
        self.check_point(m)?;
        self.check_group(g)?;
        Ok(match *m {
            PhasePoint::Ball {
                a,
                a_dot,
                attitude,
                w,
            } => PhasePoint::Ball {
                a: planar(g.theta, &a),
                a_dot: planar(g.theta, &a_dot),
                attitude: g.rotation * attitude * Rotation::about_z(-g.theta),
                w,
            },
            PhasePoint::RigidBody { attitude, omega } => PhasePoint::RigidBody {
                attitude: g.rotation * attitude,
                omega,
            },
        })
    }

    /// `d(Ψ_g)` applied to a tangent vector at `m`.
    pub fn push_forward(&self, g: &GroupElement, v: &Tangent) -> Result<Tangent> {
        self.check_group(g)?;
        Ok(match *v {
            Tangent::Ball {
                a_dot,
                a_ddot,
                attitude_rate,
                w_dot,
            } => Tangent::Ball {
                a_dot: planar(g.theta, &a_dot),
                a_ddot: planar(g.theta, &a_ddot),
                attitude_rate: Rotation::about_z(g.theta).rotate(&attitude_rate),
                w_dot,
            },
            t @ Tangent::RigidBody { .. } => t,
        })
    }

    pub fn vector_field(&self, m: &PhasePoint) -> Result<Tangent> {
        self.check_point(m)?;
        Ok(match (&self.model, *m) {
            (Model::Ball(ball), PhasePoint::Ball { a, a_dot, w, .. }) => {
                let r = ball.rates(&a, &a_dot, w)?;
                Tangent::Ball {
                    a_dot,
                    a_ddot: r.a_ddot,
                    attitude_rate: -r.omega,
                    w_dot: r.w_dot,
                }
            }
            (Model::RigidBody(body), PhasePoint::RigidBody { omega, .. }) => Tangent::RigidBody {
                attitude_rate: omega,
                omega_dot: body.omega_dot(&omega),
            },
            _ => unreachable!("kind checked above"),
        })
    }

    pub fn reduce(&self, m: &PhasePoint) -> Result<ReducedPoint> {
        self.check_point(m)?;
        let y = self.shape_of(m);
        Ok(self.reduced_point_of_shape(&y))
    }

    /// `d(reduce)·X(m)`.
    pub fn reduced_velocity(&self, m: &PhasePoint) -> Result<Vec<f64>> {
        self.check_point(m)?;
        self.reduced_velocity_of_shape(&self.shape_of(m))
    }

    pub fn energy(&self, m: &PhasePoint) -> Result<f64> {
        self.check_point(m)?;
        match (&self.model, *m) {
            (Model::Ball(ball), PhasePoint::Ball { a, a_dot, w, .. }) => ball.energy(&a, &a_dot, w),
            (Model::RigidBody(body), PhasePoint::RigidBody { omega, .. }) => {
                Ok(body.energy(&omega))
            }
            _ => unreachable!("kind checked above"),
        }
    }

    /// Norm of the contact-point velocity (ball) or 0 (rigid body).
    pub fn constraint_residual(&self, m: &PhasePoint) -> Result<f64> {
        self.check_point(m)?;
        match (&self.model, *m) {
            (Model::Ball(ball), PhasePoint::Ball { a, a_dot, w, .. }) => {
                Ok(ball.contact_velocity(&a, &a_dot, w)?.norm())
            }
            _ => Ok(0.0),
        }
    }

    /// Spatial angular momentum `Q IΩ` of the rigid body.
    pub fn spatial_momentum(&self, m: &PhasePoint) -> Result<Vector3<f64>> {
        match (&self.model, *m) {
            (Model::RigidBody(body), PhasePoint::RigidBody { attitude, omega }) => {
                Ok(attitude.rotate(&body.momentum(&omega)))
            }
            _ => Err(Error::InvalidArgument(
                "spatial momentum needs a rigid body".into(),
            )),
        }
    }

    /// `max(‖Δa‖, ‖Δȧ‖, |Δw|, ∠(Q₁Q₂⁻¹))` or `max(‖ΔΩ‖, ∠(Q₁Q₂⁻¹))`.
    pub fn state_distance(&self, m1: &PhasePoint, m2: &PhasePoint) -> f64 {
        match (m1, m2) {
            (
                PhasePoint::Ball {
                    a: a1,
                    a_dot: d1,
                    attitude: q1,
                    w: w1,
                },
                PhasePoint::Ball {
                    a: a2,
                    a_dot: d2,
                    attitude: q2,
                    w: w2,
                },
            ) => (a1 - a2)
                .norm()
                .max((d1 - d2).norm())
                .max((w1 - w2).abs())
                .max(q1.angle_to(q2)),
            (
                PhasePoint::RigidBody {
                    attitude: q1,
                    omega: o1,
                },
                PhasePoint::RigidBody {
                    attitude: q2,
                    omega: o2,
                },
            ) => (o1 - o2).norm().max(q1.angle_to(q2)),
            _ => f64::INFINITY,
        }
    }

    // ---- flat state vectors -------------------------------------------------

    pub fn state_dim(&self) -> usize {
        self.shape_dim() + 4
    }

    pub fn shape_dim(&self) -> usize {
        match self.model {
            Model::Ball(_) => 5,
            Model::RigidBody(_) => 3,
        }
    }

    pub fn shape_of(&self, m: &PhasePoint) -> Vec<f64> {
        match *m {
            PhasePoint::Ball { a, a_dot, w, .. } => vec![a.x, a.y, a_dot.x, a_dot.y, w],
            PhasePoint::RigidBody { omega, .. } => vec![omega.x, omega.y, omega.z],
        }
    }

    pub fn to_state(&self, m: &PhasePoint) -> Result<Vec<f64>> {
        self.check_point(m)?;
        let mut y = self.shape_of(m);
        y.extend(m.attitude().quaternion());
        Ok(y)
    }

    pub fn from_state(&self, y: &[f64]) -> Result<PhasePoint> {
        if y.len() != self.state_dim() {
            return Err(Error::InvalidArgument(format!(
                "state vector of length {} (expected {})",
                y.len(),
                self.state_dim()
            )));
        }
        let k = self.shape_dim();
        let attitude = Rotation::from_quaternion(y[k], y[k + 1], y[k + 2], y[k + 3])?;
        Ok(match self.model {
            Model::Ball(_) => PhasePoint::Ball {
                a: Vector2::new(y[0], y[1]),
                a_dot: Vector2::new(y[2], y[3]),
                attitude,
                w: y[4],
            },
            Model::RigidBody(_) => PhasePoint::RigidBody {
                attitude,
                omega: Vector3::new(y[0], y[1], y[2]),
            },
        })
    }

    /// Angular velocity driving the attitude: `q̇ = ½ q ⊗ (0, v)`.
    fn attitude_drive(&self, y: &[f64]) -> Result<Vector3<f64>> {
        match &self.model {
            Model::Ball(ball) => {
                let r = ball.rates(&Vector2::new(y[0], y[1]), &Vector2::new(y[2], y[3]), y[4])?;
                Ok(-r.omega)
            }
            Model::RigidBody(_) => Ok(Vector3::new(y[0], y[1], y[2])),
        }
    }

    /// Right-hand side on the shape block only.
    pub fn shape_rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        match &self.model {
            Model::Ball(ball) => {
                let a = Vector2::new(y[0], y[1]);
                let a_dot = Vector2::new(y[2], y[3]);
                if a.norm_squared() + a_dot.norm_squared() < 1e-16 {
                    return Err(Error::Domain("trajectory reached (a, ȧ) = 0".into()));
                }
                let r = ball.rates(&a, &a_dot, y[4])?;
                dy[0] = y[2];
                dy[1] = y[3];
                dy[2] = r.a_ddot.x;
                dy[3] = r.a_ddot.y;
                dy[4] = r.w_dot;
            }
            Model::RigidBody(body) => {
                let wd = body.omega_dot(&Vector3::new(y[0], y[1], y[2]));
                dy[..3].copy_from_slice(wd.as_slice());
            }
        }
        Ok(())
    }

    /// Right-hand side on the full state vector.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let k = self.shape_dim();
        self.shape_rhs(&y[..k], &mut dy[..k])?;
        let v = self.attitude_drive(y)?;
        let qd = quat_times_pure(&y[k..k + 4], &v);
        for (d, q) in dy[k..k + 4].iter_mut().zip(qd) {
            *d = 0.5 * q;
        }
        Ok(())
    }

    /// Restore `‖q‖ = 1` on a full state vector.
    pub fn normalize_state(&self, y: &mut [f64]) {
        let k = self.shape_dim();
        if y.len() < k + 4 {
            return;
        }
        let q = Quaternion::new(y[k], y[k + 1], y[k + 2], y[k + 3]);
        let n = q.norm();
        if n > 0.0 {
            for c in &mut y[k..k + 4] {
                *c /= n;
            }
        }
    }

    pub fn reduced_point_of_shape(&self, y: &[f64]) -> ReducedPoint {
        match &self.model {
            Model::Ball(_) => {
                let a = Vector2::new(y[0], y[1]);
                let d = Vector2::new(y[2], y[3]);
                ReducedPoint::Ball {
                    b: hopf(&a, &d),
                    w: y[4],
                }
            }
            Model::RigidBody(body) => ReducedPoint::RigidBody {
                momentum: body.momentum(&Vector3::new(y[0], y[1], y[2])),
            },
        }
    }

    pub fn reduce_shape(&self, y: &[f64]) -> Vec<f64> {
        self.reduced_point_of_shape(y).to_vec()
    }

    pub fn reduced_velocity_of_shape(&self, y: &[f64]) -> Result<Vec<f64>> {
        match &self.model {
            Model::Ball(ball) => {
                let a = Vector2::new(y[0], y[1]);
                let d = Vector2::new(y[2], y[3]);
                let r = ball.rates(&a, &d, y[4])?;
                let dd = r.a_ddot;
                Ok(vec![
                    a.dot(&d) - d.dot(&dd),
                    d.norm_squared() + a.dot(&dd),
                    a.x * dd.y - a.y * dd.x,
                    r.w_dot,
                ])
            }
            Model::RigidBody(body) => {
                let m = body.momentum(&Vector3::new(y[0], y[1], y[2]));
                Ok(body.momentum_dot(&m).iter().copied().collect())
            }
        }
    }
}

/// Hopf map with `z₁ = a₁ + i a₂`, `z₂ = ȧ₁ + i ȧ₂`:
/// `b = (½(|z₁|² − |z₂|²), Re z̄₁z₂, Im z̄₁z₂)`.
pub fn hopf(a: &Vector2<f64>, a_dot: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (a.norm_squared() - a_dot.norm_squared()),
        a.dot(a_dot),
        a.x * a_dot.y - a.y * a_dot.x,
    )
}
