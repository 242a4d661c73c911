//! Homogeneous sphere rolling without sliding inside an upward-facing convex
//! surface of revolution.
//!
//! The surface is described by the locus of the ball's CENTER, `z = f(‖a‖²)`,
//! not by the contact surface. Both share their normals, so the contact point
//! sits one radius below the center along the upward unit normal `ν`. Units are
//! nondimensional: unit ball radius.
//!
//! With `x = (a, f(‖a‖²))` the center and `ω` the spatial angular velocity,
//! rolling means `ẋ = ω × ν`, which leaves `ω = ν × ẋ + w ν`. Newton–Euler with
//! the contact force `F` gives `m(ẍ + g e₃) = F` and `I ω̇ = −ν × F`; eliminating
//! `F` yields
//!
//! ```text
//! P ẍ = (−κ g P e₃ + P(ω × ν̇)) / (1 + κ),   ẍ·ν = −ẋ·ν̇,   ẇ = (ν × ẋ)·ν̇,
//! ```
//!
//! where `P` projects onto the tangent plane and `κ = m/I = 1/k`.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used to certify convexity on the annulus.
const CONVEXITY_GRID: usize = 2001;

/// `z = f(r²)` with `f(s) = Σ cᵢ sⁱ`, plus the physical constants of the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceProfile {
    /// Polynomial coefficients of `f`, lowest degree first.
    pub coeffs: Vec<f64>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// `I = k·m` with unit radius; 2/5 for a homogeneous ball.
    #[serde(default = "default_inertia_ratio")]
    pub inertia_ratio: f64,
}

fn default_gravity() -> f64 {
    1.0
}

fn default_mass() -> f64 {
    1.0
}

fn default_inertia_ratio() -> f64 {
    0.4
}

impl SurfaceProfile {
    /// `z = c·r²`.
    pub fn paraboloid(c: f64) -> Self {
        SurfaceProfile {
            coeffs: vec![0.0, c],
            gravity: default_gravity(),
            mass: default_mass(),
            inertia_ratio: default_inertia_ratio(),
        }
    }

    /// `(f(s), f'(s), f''(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let (mut f, mut fp, mut fpp) = (0.0, 0.0, 0.0);
        let mut pow = [0.0, 0.0, 1.0]; // s^(i-2), s^(i-1), s^i
        for (i, c) in self.coeffs.iter().enumerate() {
            let n = i as f64;
            f += c * pow[2];
            fp += c * n * pow[1];
            fpp += c * n * (n - 1.0) * pow[0];
            pow = [pow[1], pow[2], pow[2] * s];
        }
        (f, fp, fpp)
    }

    pub fn height(&self, r: f64) -> f64 {
        self.eval(r * r).0
    }

    /// `d²z/dr² = 2f'(r²) + 4r² f''(r²)`.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        let s = r * r;
        let (_, fp, fpp) = self.eval(s);
        2.0 * fp + 4.0 * s * fpp
    }

    pub fn validate(&self, annulus: (f64, f64)) -> Result<()> {
        let (r_min, r_max) = annulus;
        if self.coeffs.is_empty() || self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "profile coefficients must be finite and non-empty".into(),
            ));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::Config(format!(
                "gravity must be positive, got {}",
                self.gravity
            )));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Config(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.inertia_ratio > 0.0 && self.inertia_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "inertia ratio must lie in (0, 1], got {}",
                self.inertia_ratio
            )));
        }
        if !(0.0 <= r_min && r_min < r_max && r_max.is_finite()) {
            return Err(Error::Config(format!("invalid annulus [{r_min}, {r_max}]")));
        }
        // the inner axis must also be convex so trajectories that dip inward stay valid
        for i in 0..CONVEXITY_GRID {
            let r = r_max * i as f64 / (CONVEXITY_GRID - 1) as f64;
            let k = self.radial_curvature(r);
            if !(k > 0.0) {
                return Err(Error::Config(format!(
                    "profile is not convex: d²z/dr² = {k} at r = {r}"
                )));
            }
        }
        Ok(())
    }
}

/// Instantaneous kinematics and accelerations of the rolling ball.
#[derive(Debug, Clone, Copy)]
pub struct BallRates {
    /// Center velocity in space.
    pub x_dot: Vector3<f64>,
    /// Spatial angular velocity.
    pub omega: Vector3<f64>,
    /// Upward unit normal at the center.
    pub normal: Vector3<f64>,
    pub a_ddot: Vector2<f64>,
    pub w_dot: f64,
    /// Full center acceleration, including the vertical component.
    pub x_ddot: Vector3<f64>,
}

/// The ball system on a validated profile and working annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub profile: SurfaceProfile,
    pub annulus: (f64, f64),
}

impl Ball {
    pub fn new(profile: SurfaceProfile, annulus: (f64, f64)) -> Result<Self> {
        profile.validate(annulus)?;
        Ok(Ball { profile, annulus })
    }

    fn check_domain(&self, a: &Vector2<f64>, a_dot: &Vector2<f64>) -> Result<()> {
        let r = a.norm();
        if !(r.is_finite() && a_dot.iter().all(|c| c.is_finite())) {
            return Err(Error::Domain("non-finite ball state".into()));
        }
        if a.norm_squared() + a_dot.norm_squared() < 1e-16 {
            return Err(Error::Domain("(a, ȧ) too close to 0".into()));
        }
        let (r_min, r_max) = self.annulus;
        if r < r_min || r > r_max {
            return Err(Error::Domain(format!(
                "‖a‖ = {r} outside annulus [{r_min}, {r_max}]"
            )));
        }
        Ok(())
    }

    /// Gradient and Hessian of `F(a) = f(‖a‖²)`.
    fn surface_derivatives(&self, a: &Vector2<f64>) -> (f64, Vector2<f64>, Matrix2<f64>) {
        let s = a.norm_squared();
        let (f, fp, fpp) = self.profile.eval(s);
        let grad = a * (2.0 * fp);
        let hess = Matrix2::identity() * (2.0 * fp) + a * a.transpose() * (4.0 * fpp);
        (f, grad, hess)
    }

    pub fn center_velocity(&self, a: &Vector2<f64>, a_dot: &Vector2<f64>) -> Vector3<f64> {
        let (_, grad, _) = self.surface_derivatives(a);
        Vector3::new(a_dot.x, a_dot.y, grad.dot(a_dot))
    }

    pub fn normal(&self, a: &Vector2<f64>) -> Vector3<f64> {
        let (_, grad, _) = self.surface_derivatives(a);
        Vector3::new(-grad.x, -grad.y, 1.0).normalize()
    }

    pub fn rates(&self, a: &Vector2<f64>, a_dot: &Vector2<f64>, w: f64) -> Result<BallRates> {
        self.check_domain(a, a_dot)?;
        let (_, grad, hess) = self.surface_derivatives(a);
        let big_n = Vector3::new(-grad.x, -grad.y, 1.0);
        let n_norm = big_n.norm();
        let nu = big_n / n_norm;
        let x_dot = Vector3::new(a_dot.x, a_dot.y, grad.dot(a_dot));
        let h_adot = hess * a_dot;
        let big_n_dot = Vector3::new(-h_adot.x, -h_adot.y, 0.0);
        let nu_dot = (big_n_dot - nu * nu.dot(&big_n_dot)) / n_norm;

        let tangential = nu.cross(&x_dot);
        let omega = tangential + nu * w;
        let kappa = 1.0 / self.profile.inertia_ratio;
        let project = |u: Vector3<f64>| u - nu * nu.dot(&u);
        let v = (project(Vector3::z()) * (-kappa * self.profile.gravity)
            + project(omega.cross(&nu_dot)))
            / (1.0 + kappa);
        let x_ddot = v - nu * x_dot.dot(&nu_dot);
        Ok(BallRates {
            x_dot,
            omega,
            normal: nu,
            a_ddot: Vector2::new(x_ddot.x, x_ddot.y),
            w_dot: tangential.dot(&nu_dot),
            x_ddot,
        })
    }

    /// `½m‖ẋ‖² + ½I‖ω‖² + m g z`.
    pub fn energy(&self, a: &Vector2<f64>, a_dot: &Vector2<f64>, w: f64) -> Result<f64> {
        self.check_domain(a, a_dot)?;
        let p = &self.profile;
        let x_dot = self.center_velocity(a, a_dot);
        let v2 = x_dot.norm_squared();
        Ok(0.5 * p.mass * v2
            + 0.5 * p.inertia_ratio * p.mass * (v2 + w * w)
            + p.mass * p.gravity * p.height(a.norm()))
    }

    /// Velocity of the material contact point, `ẋ − ω × ν`.
    pub fn contact_velocity(
        &self,
        a: &Vector2<f64>,
        a_dot: &Vector2<f64>,
        w: f64,
    ) -> Result<Vector3<f64>> {
        let r = self.rates(a, a_dot, w)?;
        Ok(r.x_dot - r.omega.cross(&r.normal))
    }

    /// Speed of steady circular motion at radius `r` with normal spin `w`:
    /// the positive `v` for which `a = (r, 0)`, `ȧ = (0, v)` has `ä = −(v²/r) a/r`.
    pub fn circular_speed(&self, r: f64, w: f64) -> Result<f64> {
        let a = Vector2::new(r, 0.0);
        let residual = |v: f64| -> Result<f64> {
            let rates = self.rates(&a, &Vector2::new(0.0, v), w)?;
            Ok(rates.a_ddot.x + v * v / r)
        };
        let mut lo = 1e-9;
        let mut f_lo = residual(lo)?;
        let steps = 400;
        let v_max = 20.0;
        for i in 1..=steps {
            let hi = v_max * i as f64 / steps as f64;
            let f_hi = residual(hi)?;
            if f_lo.signum() != f_hi.signum() {
                let (mut a_, mut b_, mut fa) = (lo, hi, f_lo);
                for _ in 0..200 {
                    let mid = 0.5 * (a_ + b_);
                    let fm = residual(mid)?;
                    if fm.signum() == fa.signum() {
                        a_ = mid;
                        fa = fm;
                    } else {
                        b_ = mid;
                    }
                    if b_ - a_ < 1e-15 * b_ {
                        break;
                    }
                }
                return Ok(0.5 * (a_ + b_));
            }
            lo = hi;
            f_lo = f_hi;
        }
        Err(Error::Domain(format!(
            "no steady circular motion at r = {r}, w = {w}"
        )))
    }
}
