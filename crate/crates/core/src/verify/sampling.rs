//! Seeded initial conditions away from singular phases and reduced equilibria.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{PhasePoint, SystemKind, SystemSpec, Tolerances};
use crate::error::{Error, Result};
use crate::liegroup::Rotation;
use crate::reconstruct::phase;

/// Where samples are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingRegion {
    /// Ball: radii of the starting point (kept inside the annulus).
    pub radius: (f64, f64),
    /// Ball: normal spin range.
    pub spin: (f64, f64),
    /// Ball: relative perturbation of the circular velocity.
    pub perturbation: f64,
    /// Rigid body: body angular momentum norm.
    pub momentum: f64,
    /// Rigid body: excluded band `|L²/2E − I₂| < separatrix_margin · I₂`.
    pub separatrix_margin: f64,
    /// Phases whose rotation angle is within this of 0 or π are rejected.
    pub regular_margin: f64,
}

impl Default for SamplingRegion {
    fn default() -> Self {
        SamplingRegion {
            radius: (0.6, 1.4),
            spin: (-0.5, 0.5),
            perturbation: 0.15,
            momentum: 1.0,
            separatrix_margin: 0.1,
            regular_margin: 0.05,
        }
    }
}

impl SamplingRegion {
    pub fn validate(&self) -> Result<()> {
        let ok = self.radius.0 > 0.0
            && self.radius.1 >= self.radius.0
            && self.spin.1 >= self.spin.0
            && self.perturbation >= 0.0
            && self.momentum > 0.0
            && self.separatrix_margin >= 0.0
            && (0.0..PI / 2.0).contains(&self.regular_margin);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sampling region {self:?}")))
        }
    }
}

/// A batch of initial conditions and how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub points: Vec<PhasePoint>,
    pub seed: u64,
    pub description: String,
}

impl Samples {
    pub fn new(points: Vec<PhasePoint>, seed: u64, description: impl Into<String>) -> Self {
        Samples {
            points,
            seed,
            description: description.into(),
        }
    }

    pub fn take(&self, n: usize) -> Samples {
        Samples {
            points: self.points.iter().take(n).copied().collect(),
            seed: self.seed,
            description: self.description.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|c| c * c).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return Rotation::from_quaternion(q[0], q[1], q[2], q[3]).unwrap();
        }
    }
}

fn candidate(spec: &SystemSpec, region: &SamplingRegion, rng: &mut ChaCha8Rng) -> Option<PhasePoint> {
    let attitude = random_rotation(rng);
    match spec.kind() {
        SystemKind::Ball => {
            let ball = spec.ball()?;
            let r = rng.gen_range(region.radius.0..=region.radius.1);
            let phi = rng.gen_range(0.0..TAU);
            let w = rng.gen_range(region.spin.0..=region.spin.1);
            let v = ball.circular_speed(r, w).ok()?;
            let sense = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let p = region.perturbation;
            let (e1, e2) = (rng.gen_range(-p..=p), rng.gen_range(-p..=p));
            let (c, s) = (phi.cos(), phi.sin());
            // radial and tangential parts of the velocity
            let vr = v * e1;
            let vt = sense * v * (1.0 + e2);
            Some(PhasePoint::ball(
                [r * c, r * s],
                [vr * c - vt * s, vr * s + vt * c],
                attitude,
                w,
            ))
        }
        SystemKind::RigidBody => {
            let body = spec.rigid_body()?;
            let [i1, i2, i3] = body.inertia;
            let mut m = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if m.norm() < 1e-3 {
                return None;
            }
            m *= region.momentum / m.norm();
            let e2 = m.x * m.x / i1 + m.y * m.y / i2 + m.z * m.z / i3;
            if (m.norm_squared() / e2 - i2).abs() < region.separatrix_margin * i2 {
                return None;
            }
            let omega = body.omega_from_momentum(&m);
            Some(PhasePoint::rigid_body(attitude, omega.into()))
        }
    }
}

fn acceptable(spec: &SystemSpec, region: &SamplingRegion, m: &PhasePoint) -> bool {
    match phase(spec, m) {
        Ok(p) => {
            let a = p.gamma.rotation.angle();
            p.regular && a > region.regular_margin && a < PI - region.regular_margin
        }
        Err(_) => false,
    }
}

/// Up to `count` accepted samples; candidates are drawn from one seeded stream
/// and screened in parallel, so the result depends only on the seed.
///
/// Screening integrates at no looser than the default tolerance, so a run with
/// degraded integration still sees the same points.
pub fn sample_points(spec: &SystemSpec, region: &SamplingRegion, count: usize, seed: u64) -> Result<Samples> {
    region.validate()?;
    let mut screen = spec.clone();
    screen.tolerances.tol = screen.tolerances.tol.min(Tolerances::default().tol);
    let spec = &screen;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let max_candidates = 20 * count + 50;
    let mut drawn = 0;
    while points.len() < count && drawn < max_candidates {
        let batch: Vec<Option<PhasePoint>> = (0..(2 * (count - points.len())).max(8))
            .map(|_| candidate(spec, region, &mut rng))
            .collect();
        drawn += batch.len();
        let screened: Vec<Option<PhasePoint>> = batch
            .into_par_iter()
            .map(|c| c.filter(|m| acceptable(spec, region, m)))
            .collect();
        points.extend(screened.into_iter().flatten().take(count - points.len()));
    }
    let description = match spec.kind() {
        SystemKind::Ball => format!(
            "ball: |a| in [{}, {}], spin in [{}, {}], velocity perturbation {}, regular margin {}",
            region.radius.0, region.radius.1, region.spin.0, region.spin.1, region.perturbation, region.regular_margin
        ),
        SystemKind::RigidBody => format!(
            "rigid body: |IΩ| = {}, separatrix band {}, regular margin {}",
            region.momentum, region.separatrix_margin, region.regular_margin
        ),
    };
    Ok(Samples::new(points, seed, description))
}

/// A one-parameter family, monotone in energy, in order.
///
/// Ball: circular motion at `|a| = 1` with a growing radial kick. Rigid body:
/// `IΩ` tilted from the smallest axis towards the largest at fixed `|IΩ|`.
pub fn energy_family(spec: &SystemSpec, count: usize) -> Result<Vec<(f64, PhasePoint)>> {
    energy_family_over(spec, count, default_family_range(spec.kind()))
}

/// Parameter range of [`energy_family`]: radial kick for the ball, tilt angle
/// in radians for the rigid body.
pub fn default_family_range(kind: SystemKind) -> (f64, f64) {
    match kind {
        SystemKind::Ball => (0.02, 0.27),
        SystemKind::RigidBody => (0.1, 0.7),
    }
}

/// [`energy_family`] over an explicit parameter range, endpoints included.
pub fn energy_family_over(spec: &SystemSpec, count: usize, range: (f64, f64)) -> Result<Vec<(f64, PhasePoint)>> {
    if !(range.0.is_finite() && range.1.is_finite()) {
        return Err(Error::Config(format!("family range must be finite, got {range:?}")));
    }
    let attitude = Rotation::identity();
    let count = count.max(2);
    (0..count)
        .map(|i| {
            let s = range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64;
            match spec.kind() {
                SystemKind::Ball => {
                    let ball = spec.ball().unwrap();
                    let v = ball.circular_speed(1.0, 0.3)?;
                    Ok((s, PhasePoint::ball([1.0, 0.0], [s * v, v], attitude, 0.3)))
                }
                SystemKind::RigidBody => {
                    let body = spec.rigid_body().unwrap();
                    let m = nalgebra::Vector3::new(s.cos(), 0.05, s.sin());
                    Ok((s, PhasePoint::rigid_body(attitude, body.omega_from_momentum(&m).into())))
                }
            }
        })
        .collect()
}
