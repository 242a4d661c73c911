//! Free rigid body: attitude `Q` (body → space) and body angular velocity `Ω`.
//!
//! `Q̇ = Q·hat(Ω)`, `I Ω̇ = (IΩ) × Ω`. `SO(3)` acts by `Q ↦ RQ`; the reduced
//! state is the body angular momentum `M = IΩ`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    /// Principal moments of inertia.
    pub inertia: [f64; 3],
}

impl RigidBody {
    pub fn new(inertia: [f64; 3]) -> Result<Self> {
        if inertia.iter().any(|i| !(i.is_finite() && *i > 0.0)) {
            return Err(Error::Config(format!(
                "principal moments must be positive, got {inertia:?}"
            )));
        }
        Ok(RigidBody { inertia })
    }

    pub fn momentum(&self, omega: &Vector3<f64>) -> Vector3<f64> {
        omega.component_mul(&Vector3::from(self.inertia))
    }

    pub fn omega_from_momentum(&self, m: &Vector3<f64>) -> Vector3<f64> {
        m.component_div(&Vector3::from(self.inertia))
    }

    /// Euler equations.
    pub fn omega_dot(&self, omega: &Vector3<f64>) -> Vector3<f64> {
        self.momentum(omega)
            .cross(omega)
            .component_div(&Vector3::from(self.inertia))
    }

    /// `Ṁ = M × Ω`.
    pub fn momentum_dot(&self, m: &Vector3<f64>) -> Vector3<f64> {
        m.cross(&self.omega_from_momentum(m))
    }

    pub fn energy(&self, omega: &Vector3<f64>) -> f64 {
        0.5 * omega.dot(&self.momentum(omega))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_axes_are_fixed_points() {
        let body = RigidBody::new([1.0, 2.0, 3.0]).unwrap();
        for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
            assert_eq!(body.omega_dot(&(axis * 1.7)), Vector3::zeros());
        }
    }

    #[test]
    fn euler_equations_conserve_both_invariants() {
        let body = RigidBody::new([1.0, 2.0, 3.0]).unwrap();
        let w = Vector3::new(0.3, -1.1, 0.8);
        let wd = body.omega_dot(&w);
        // d/dt ½Ω·IΩ = Ω·IΩ̇, d/dt ½‖IΩ‖² = IΩ·IΩ̇
        assert!(body.momentum(&wd).dot(&w).abs() < 1e-15);
        assert!(body.momentum(&wd).dot(&body.momentum(&w)).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_inertia() {
        assert!(matches!(
            RigidBody::new([1.0, 0.0, 3.0]),
            Err(Error::Config(_))
        ));
        assert!(RigidBody::new([1.0, f64::NAN, 3.0]).is_err());
    }
}
