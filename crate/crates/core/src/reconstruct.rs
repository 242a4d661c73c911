//! Phase map `γ`, torus coordinates, frequencies, the torus embedding and
//! flower frame, and the Weyl-class integral `δ`.
//!
//! Internally everything lives in the fixed torus `T = S¹ × S¹_z`. The
//! conjugator `h` stored in a [`PhaseResult`] satisfies `h γ h⁻¹ ∈ T`, so the
//! centralizer of `γ` is `T_m = h⁻¹ T h`; torus elements reach `T_m` through
//! conjugation by `h⁻¹`.

use nalgebra::{DMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynsys::{PhasePoint, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::integrate::{find_reduced_period, flow, integrate, Trajectory};
use crate::liegroup::{
    conj, conjugator_to_torus_with_tol, fold_projective, is_regular, projective_distance,
    torus_coords, torus_distance, weyl_representative, wrap_unit, xi, GroupElement, Rotation,
    TorusElement,
};

/// How the period in a [`PhaseResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodSource {
    /// First return to the Poincaré section of the reduced orbit.
    Section,
    /// `2π/ω` from the linearized reduced flow at a reduced equilibrium.
    Linearized,
    /// Supplied by the caller.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseResiduals {
    /// Reduced-space closure at `τ`.
    pub closure: f64,
    /// Mismatch of the closed-form solve of `Ψ_g(m) = Φ_τ(m)`.
    pub fit: f64,
    /// `state_distance(Ψ_γ(m), Φ_τ(m))`.
    pub defining: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub tau: f64,
    pub gamma: GroupElement,
    pub regular: bool,
    /// `h` with `h γ h⁻¹ ∈ T`; present when regular.
    pub conjugator: Option<GroupElement>,
    /// Lattice coordinates of `h γ h⁻¹`, each in `[0, 1)`. Defined modulo `ℤʳ`.
    pub eta: Option<TorusElement>,
    /// `(1/τ, η₁/τ, …)`; the last entries are defined modulo `1/τ`.
    pub frequencies: Option<Vec<f64>>,
    pub delta_rep: Option<Vector3<f64>>,
    pub residuals: PhaseResiduals,
    pub period_source: PeriodSource,
}

impl PhaseResult {
    /// Fill the derived fields from `τ` and `γ` alone (residuals zero).
    pub fn from_gamma(tau: f64, gamma: GroupElement, regularity_tol: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {tau}")));
        }
        let regular = is_regular(&gamma, regularity_tol);
        let (conjugator, eta, frequencies, delta_rep) = if regular {
            let h = conjugator_to_torus_with_tol(&gamma, regularity_tol)?;
            let eta = torus_coords(&conj(&h, &gamma)?)?;
            let f = frequency_vector(tau, &eta);
            (Some(h), Some(eta), Some(f), Some(weyl_representative(&h)))
        } else {
            (None, None, None, None)
        };
        Ok(PhaseResult {
            tau,
            gamma,
            regular,
            conjugator,
            eta,
            frequencies,
            delta_rep,
            residuals: PhaseResiduals::default(),
            period_source: PeriodSource::Given,
        })
    }

    fn torus_data(&self) -> Result<(GroupElement, &TorusElement)> {
        match (&self.conjugator, &self.eta) {
            (Some(h), Some(eta)) => Ok((*h, eta)),
            _ => Err(Error::Domain(format!(
                "phase rotation angle {} is singular",
                self.gamma.rotation.angle()
            ))),
        }
    }
}

/// `(1/τ, η/τ)`.
pub fn frequency_vector(tau: f64, eta: &TorusElement) -> Vec<f64> {
    std::iter::once(1.0 / tau)
        .chain(eta.beta.iter().map(|e| e / tau))
        .collect()
}

/// Solve `Ψ_g(from) = to` in closed form. Returns `g` and the mismatch left
/// after applying it (in [`SystemSpec::state_distance`] units).
pub fn solve_action(spec: &SystemSpec, from: &PhasePoint, to: &PhasePoint) -> Result<(GroupElement, f64)> {
    let g = match (from, to) {
        (
            PhasePoint::Ball {
                a: a0,
                a_dot: d0,
                attitude: q0,
                ..
            },
            PhasePoint::Ball {
                a: a1,
                a_dot: d1,
                attitude: q1,
                ..
            },
        ) => {
            // best planar rotation taking (a₀, ȧ₀) to (a₁, ȧ₁)
            let cross = |p: &Vector2<f64>, q: &Vector2<f64>| p.x * q.y - p.y * q.x;
            let s = cross(a0, a1) + cross(d0, d1);
            let c = a0.dot(a1) + d0.dot(d1);
            if s.hypot(c) < 1e-300 {
                return Err(Error::Domain("planar data too small to fix the circle angle".into()));
            }
            let theta = s.atan2(c);
            let r = *q1 * Rotation::about_z(theta) * q0.inverse();
            GroupElement::new(spec.group(), theta, r)
        }
        (PhasePoint::RigidBody { attitude: q0, .. }, PhasePoint::RigidBody { attitude: q1, .. }) => {
            GroupElement::rotation_only(*q1 * q0.inverse())
        }
        _ => {
            return Err(Error::InvalidArgument("points from different systems".into()));
        }
    };
    let residual = spec.state_distance(&spec.act(&g, from)?, to);
    Ok((g, residual))
}

/// Phase of `m` using the section-detected reduced period.
pub fn phase(spec: &SystemSpec, m: &PhasePoint) -> Result<PhaseResult> {
    let p = find_reduced_period(spec, m)?;
    compute(spec, m, p.tau, PeriodSource::Section, p.closure_residual, true)
}

/// Phase of `m` with the period given by the caller.
pub fn phase_with_period(spec: &SystemSpec, m: &PhasePoint, tau: f64) -> Result<PhaseResult> {
    compute(spec, m, tau, PeriodSource::Given, f64::NAN, true)
}

/// Like [`phase`], but a large fit residual is recorded instead of raised.
pub fn phase_lenient(spec: &SystemSpec, m: &PhasePoint) -> Result<PhaseResult> {
    let p = find_reduced_period(spec, m)?;
    compute(spec, m, p.tau, PeriodSource::Section, p.closure_residual, false)
}

/// [`phase`], falling back to the linearized period at reduced equilibria.
pub fn phase_or_linearized(spec: &SystemSpec, m: &PhasePoint) -> Result<PhaseResult> {
    match find_reduced_period(spec, m) {
        Ok(p) => compute(spec, m, p.tau, PeriodSource::Section, p.closure_residual, true),
        Err(Error::Domain(_)) => {
            let tau = linearized_period(spec, m)?;
            compute(spec, m, tau, PeriodSource::Linearized, 0.0, true)
        }
        Err(e) => Err(e),
    }
}

fn compute(
    spec: &SystemSpec,
    m: &PhasePoint,
    tau: f64,
    source: PeriodSource,
    closure: f64,
    strict: bool,
) -> Result<PhaseResult> {
    let tols = &spec.tolerances;
    let end = flow(spec, m, tau, tols.tol)?;
    let (gamma, fit) = solve_action(spec, m, &end)?;
    if strict && !(fit <= tols.tol_phase) {
        return Err(Error::PhaseInconsistency {
            residual: fit,
            tol: tols.tol_phase,
        });
    }
    let defining = spec.state_distance(&spec.act(&gamma, m)?, &end);
    let mut p = PhaseResult::from_gamma(tau, gamma, tols.regularity_tol)?;
    p.residuals = PhaseResiduals {
        closure,
        fit,
        defining,
    };
    p.period_source = source;
    Ok(p)
}

/// Reduced coordinates → a shape vector in a fixed gauge.
fn lift_reduced(spec: &SystemSpec, r: &[f64]) -> Result<Vec<f64>> {
    match spec.kind() {
        SystemKind::Ball => {
            let b = Vector3::new(r[0], r[1], r[2]);
            let rad2 = b.norm() + b.x;
            if rad2 <= 0.0 {
                return Err(Error::Domain("reduced point with a = 0".into()));
            }
            let rad = rad2.sqrt();
            Ok(vec![rad, 0.0, b.y / rad, b.z / rad, r[3]])
        }
        SystemKind::RigidBody => {
            let body = spec.rigid_body().unwrap();
            Ok(body
                .omega_from_momentum(&Vector3::new(r[0], r[1], r[2]))
                .iter()
                .copied()
                .collect())
        }
    }
}

/// Period of the small oscillations of the reduced flow around the reduced
/// point of `m`, from the eigenvalues of its Jacobian. Only meaningful at an
/// elliptic reduced equilibrium.
pub fn linearized_period(spec: &SystemSpec, m: &PhasePoint) -> Result<f64> {
    let r0 = spec.reduce(m)?.to_vec();
    let n = r0.len();
    let field = |r: &[f64]| -> Result<Vec<f64>> { spec.reduced_velocity_of_shape(&lift_reduced(spec, r)?) };
    let scale = r0.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
    let h = 1e-6 * scale;
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut p = r0.clone();
        let mut q = r0.clone();
        p[j] += h;
        q[j] -= h;
        let (fp, fq) = (field(&p)?, field(&q)?);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fq[i]) / (2.0 * h);
        }
    }
    let eig = jac.complex_eigenvalues();
    let omega = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let growth = eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if omega < 1e-9 || growth > 1e-4 * omega {
        return Err(Error::Domain(format!(
            "reduced equilibrium is not elliptic (max |Re λ| = {growth:e}, max |Im λ| = {omega:e})"
        )));
    }
    Ok(std::f64::consts::TAU / omega)
}

/// Lattice coordinates of `h γ h⁻¹`.
pub fn eta_from_phase(p: &PhaseResult) -> Result<TorusElement> {
    Ok(p.torus_data()?.1.clone())
}

pub fn frequencies(p: &PhaseResult) -> Result<Vec<f64>> {
    let (_, eta) = p.torus_data()?;
    Ok(frequency_vector(p.tau, eta))
}

/// `J_m(α, g) = Ψ_g ∘ Φ_{ατ} ∘ Ψ⁻¹_{exp(α η_m)}(m)`, with `α` taken mod 1.
pub fn flower_frame(
    spec: &SystemSpec,
    p: &PhaseResult,
    m: &PhasePoint,
    alpha: f64,
    g: &GroupElement,
) -> Result<PhasePoint> {
    let (h, eta) = p.torus_data()?;
    let alpha = wrap_unit(alpha);
    let shift = conj(&h.inverse(), &xi(&eta.scaled(alpha))?)?;
    let start = spec.act(&shift.inverse(), m)?;
    let moved = flow(spec, &start, alpha * p.tau, spec.tolerances.tol)?;
    spec.act(g, &moved)
}

/// `i_m(α, β) = J_m(α, h⁻¹ Ξ(β) h)`.
pub fn torus_embed(
    spec: &SystemSpec,
    p: &PhaseResult,
    m: &PhasePoint,
    alpha: f64,
    beta: &TorusElement,
) -> Result<PhasePoint> {
    let (h, _) = p.torus_data()?;
    if beta.group()? != spec.group() {
        return Err(Error::InvalidArgument(format!(
            "torus coordinates of rank {} for a {} system",
            beta.rank(),
            spec.kind()
        )));
    }
    let g = conj(&h.inverse(), &xi(beta)?)?;
    flower_frame(spec, p, m, alpha, &g)
}

/// The integral `δ(m)`: folded representative of the conjugator's Weyl class.
pub fn delta(spec: &SystemSpec, m: &PhasePoint) -> Result<Vector3<f64>> {
    delta_of(&phase(spec, m)?)
}

pub fn delta_of(p: &PhaseResult) -> Result<Vector3<f64>> {
    p.delta_rep.ok_or_else(|| {
        Error::Domain(format!(
            "phase rotation angle {} is singular",
            p.gamma.rotation.angle()
        ))
    })
}

/// `δ` straight from the phase axis `v`: `[R^{arccos(v·e₃)}_{v×e₃} e₃]`.
pub fn delta_axis_formula(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("axis {v:?} is not a direction")));
    }
    let v = v / n;
    let axis = v.cross(&Vector3::z());
    if axis.norm() < 1e-12 {
        return Ok(Vector3::z());
    }
    let r = Rotation::from_axis_angle(&axis, v.z.clamp(-1.0, 1.0).acos())?;
    Ok(fold_projective(&r.rotate(&Vector3::z())))
}

/// The reduced orbit through `m`, sampled over one period together with the
/// full trajectory above it.
pub struct ReducedOrbit {
    traj: Trajectory,
    tau: f64,
    samples: Vec<(f64, Vec<f64>)>,
}

const ORBIT_SAMPLES: usize = 1024;

impl ReducedOrbit {
    pub fn new(spec: &SystemSpec, m: &PhasePoint, tau: f64) -> Result<Self> {
        let traj = integrate(spec, m, tau, spec.tolerances.tol)?;
        let k = spec.shape_dim();
        let mut samples = Vec::with_capacity(ORBIT_SAMPLES + 1);
        for i in 0..=ORBIT_SAMPLES {
            let t = tau * i as f64 / ORBIT_SAMPLES as f64;
            let y = traj.dense_state(t)?;
            samples.push((t, spec.reduce_shape(&y[..k])));
        }
        Ok(ReducedOrbit { traj, tau, samples })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `Φ_t(m)` for `t ∈ [0, τ]`.
    pub fn state_at(&self, t: f64) -> Result<PhasePoint> {
        self.traj.dense_eval(t)
    }

    fn reduced_at(&self, t: f64) -> Result<Vec<f64>> {
        let spec = self.traj.spec();
        let y = self.traj.dense_state(t)?;
        Ok(spec.reduce_shape(&y[..spec.shape_dim()]))
    }

    /// Distance from `reduce(x)` to the orbit and the time of the closest point.
    pub fn distance(&self, x: &PhasePoint) -> Result<(f64, f64)> {
        let r = self.traj.spec().reduce(x)?.to_vec();
        let d2 = |s: &[f64]| s.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let (best, _) = self.samples[..ORBIT_SAMPLES]
            .iter()
            .enumerate()
            .map(|(i, (_, s))| (i, d2(s)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        // the orbit is closed: bracket across t = 0 ≡ τ when needed
        let step = self.tau / ORBIT_SAMPLES as f64;
        let at = |t: f64| self.reduced_at(t.rem_euclid(self.tau));
        // golden-section search on the bracketing sub-interval
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (self.samples[best].0 - step, self.samples[best].0 + step);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = d2(&at(c)?);
        let mut fd = d2(&at(d)?);
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = d2(&at(c)?);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = d2(&at(d)?);
            }
        }
        let t = (0.5 * (a + b)).rem_euclid(self.tau);
        let dist = d2(&self.reduced_at(t)?).min(d2(&self.samples[best].1)).sqrt();
        Ok((dist, t))
    }
}

/// Thresholds of the three-stage petal test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetalTolerances {
    pub orbit: f64,
    pub delta: f64,
    pub torus: f64,
}

impl Default for PetalTolerances {
    fn default() -> Self {
        PetalTolerances {
            orbit: 1e-6,
            delta: 1e-6,
            torus: 1e-6,
        }
    }
}

/// Outcome of the petal test. Stages that were not reached are `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetalVerdict {
    pub orbit_distance: f64,
    pub delta_distance: f64,
    pub torus_distance: f64,
    pub on_flower: bool,
    pub on_petal: bool,
}

/// Is `x` on the petal of the point `m` whose phase is `p` and whose reduced
/// orbit is `orbit`?
///
/// 1. `reduce(x)` lies on the reduced orbit (same flower);
/// 2. `δ(x) = δ(m)`;
/// 3. `x = Ψ_k Φ_t(m)` with `k ∈ T_m`.
pub fn petal_membership(
    spec: &SystemSpec,
    p: &PhaseResult,
    orbit: &ReducedOrbit,
    x: &PhasePoint,
    tols: &PetalTolerances,
) -> Result<PetalVerdict> {
    let (h, _) = p.torus_data()?;
    let mut v = PetalVerdict {
        orbit_distance: f64::INFINITY,
        delta_distance: f64::INFINITY,
        torus_distance: f64::INFINITY,
        on_flower: false,
        on_petal: false,
    };
    let (dist, t_star) = orbit.distance(x)?;
    v.orbit_distance = dist;
    if dist > tols.orbit {
        return Ok(v);
    }
    v.on_flower = true;
    // same flower, same period
    let px = compute(spec, x, orbit.tau, PeriodSource::Given, f64::NAN, false)?;
    let (Some(dx), Some(dm)) = (px.delta_rep, p.delta_rep) else {
        return Ok(v);
    };
    v.delta_distance = projective_distance(&dx, &dm);
    if v.delta_distance > tols.delta {
        return Ok(v);
    }
    let base = orbit.state_at(t_star)?;
    let (k, fit) = solve_action(spec, &base, x)?;
    v.torus_distance = if fit <= tols.orbit {
        torus_distance(&conj(&h, &k)?)
    } else {
        f64::INFINITY
    };
    v.on_petal = v.torus_distance <= tols.torus;
    Ok(v)
}
