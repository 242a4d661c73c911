use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::montgomery::{montgomery_oracle, signed_angle_about};
use super::sampling::random_rotation;
use super::{finish, report, CheckName, CheckReport, Samples};
use crate::dynsys::{PhasePoint, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::integrate::{find_reduced_period, flow, integrate};
use crate::liegroup::{conj, projective_distance, xi, GroupElement, Rotation, TorusElement};
use crate::reconstruct::{
    delta_axis_formula, flower_frame, frequencies, petal_membership, phase_lenient, phase_with_period,
    torus_embed, PetalTolerances, PhaseResult, ReducedOrbit,
};

/// Independent stream per sample so results do not depend on scheduling.
fn sample_rng(samples: &Samples, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(samples.seed);
    rng.set_stream(i as u64 + 1);
    rng
}

fn random_element(spec: &SystemSpec, rng: &mut ChaCha8Rng) -> GroupElement {
    GroupElement::new(spec.group(), rng.gen_range(0.0..TAU), random_rotation(rng))
}

fn random_torus(spec: &SystemSpec, rng: &mut ChaCha8Rng) -> TorusElement {
    TorusElement::new((0..spec.group().rank()).map(|_| rng.gen_range(0.0..1.0)).collect())
}

/// Integration tolerance of the reference flow in [`check_phase_defining`].
pub const REFERENCE_TOL: f64 = 1e-12;

/// Checks measure residuals instead of stopping at the closure gate, so a
/// loose integration shows up as a large residual rather than an error.
fn measuring(spec: &SystemSpec) -> SystemSpec {
    let mut s = spec.clone();
    let t = &mut s.tolerances;
    t.tol_closure = t.tol_closure.max((100.0 * t.tol).min(1e-2));
    s
}

fn regular_phase(spec: &SystemSpec, m: &PhasePoint) -> Result<PhaseResult> {
    let p = phase_lenient(spec, m)?;
    if !p.regular {
        return Err(Error::Domain(format!(
            "singular phase (angle {})",
            p.gamma.rotation.angle()
        )));
    }
    Ok(p)
}

/// `Ψ_γ(m) = Φ_τ(m)`, with the right side re-integrated at [`REFERENCE_TOL`].
pub fn check_phase_defining(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::PhaseDefining, spec, samples, &samples.points, tol, |_, m| {
        let p = phase_lenient(spec, m)?;
        let reference = flow(spec, m, p.tau, REFERENCE_TOL.min(spec.tolerances.tol))?;
        let residual = spec.state_distance(&spec.act(&p.gamma, m)?, &reference);
        Ok(residual.max(p.residuals.defining))
    })
}

/// `γ ∘ Φ_t = γ` at `t ∈ {0.2, 0.7, 1.5, 3.1}·τ`.
pub fn check_phase_conserved(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::PhaseConserved, spec, samples, &samples.points, tol, |_, m| {
        let p = phase_lenient(spec, m)?;
        let mut worst: f64 = 0.0;
        for s in [0.2, 0.7, 1.5, 3.1] {
            let x = flow(spec, m, s * p.tau, spec.tolerances.tol)?;
            worst = worst.max(phase_lenient(spec, &x)?.gamma.distance(&p.gamma));
        }
        Ok(worst)
    })
}

/// `γ(g·m) = g γ(m) g⁻¹` for 20 random `g` per sample.
pub fn check_equivariance(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::Equivariance, spec, samples, &samples.points, tol, |i, m| {
        let mut rng = sample_rng(samples, i);
        let p = phase_lenient(spec, m)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let g = random_element(spec, &mut rng);
            let q = phase_lenient(spec, &spec.act(&g, m)?)?;
            worst = worst.max(q.gamma.distance(&conj(&g, &p.gamma)?));
        }
        Ok(worst)
    })
}

/// `Φ_t ∘ i_m(α, β) = i_m(α + t/τ, β + (t/τ)η)` on a 3×3×3 grid.
pub fn check_linearization(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::Linearization, spec, samples, &samples.points, tol, |_, m| {
        let p = regular_phase(spec, m)?;
        let eta = p.eta.clone().unwrap();
        let rank = spec.group().rank();
        let mut worst: f64 = 0.0;
        for alpha in [0.1, 0.4, 0.7] {
            for b in [0.15, 0.5, 0.85] {
                let beta = TorusElement::new((0..rank).map(|j| b + 0.13 * j as f64).collect());
                let x = torus_embed(spec, &p, m, alpha, &beta)?;
                for s in [0.3, 0.8, 1.7] {
                    let lhs = flow(spec, &x, s * p.tau, spec.tolerances.tol)?;
                    let rhs = torus_embed(spec, &p, m, alpha + s, &beta.add(&eta.scaled(s)))?;
                    worst = worst.max(spec.state_distance(&lhs, &rhs));
                }
            }
        }
        Ok(worst)
    })
}

/// Every `J_m(α, g)` and every `g·m` lies over the reduced orbit of `m`
/// (30 random draws of each).
pub fn check_flower_invariants(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::FlowerInvariants, spec, samples, &samples.points, tol, |i, m| {
        let mut rng = sample_rng(samples, i);
        let p = regular_phase(spec, m)?;
        let orbit = ReducedOrbit::new(spec, m, p.tau)?;
        let mut worst: f64 = 0.0;
        for _ in 0..30 {
            let alpha = rng.gen_range(0.0..1.0);
            let g = random_element(spec, &mut rng);
            let x = flower_frame(spec, &p, m, alpha, &g)?;
            worst = worst.max(orbit.distance(&x)?.0);
            worst = worst.max(orbit.distance(&spec.act(&g, m)?)?.0);
        }
        Ok(worst)
    })
}

/// Distance between frequency vectors, with the torus slots compared modulo `1/τ`.
pub fn frequency_distance(f: &[f64], g: &[f64], tau: f64) -> f64 {
    let mut worst = (f[0] - g[0]).abs();
    for (a, b) in f[1..].iter().zip(&g[1..]) {
        let d = (a - b) * tau;
        worst = worst.max((d - d.round()).abs() / tau);
    }
    worst
}

/// Frequencies agree at 5 random points `J_m(α, g)` of the flower.
pub fn check_frequency_flower_constancy(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::FrequencyConstancy, spec, samples, &samples.points, tol, |i, m| {
        let mut rng = sample_rng(samples, i);
        let p = regular_phase(spec, m)?;
        let f = frequencies(&p)?;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let alpha = rng.gen_range(0.0..1.0);
            let g = random_element(spec, &mut rng);
            let x = flower_frame(spec, &p, m, alpha, &g)?;
            let q = regular_phase(spec, &x)?;
            worst = worst.max(frequency_distance(&f, &frequencies(&q)?, p.tau));
        }
        Ok(worst)
    })
}

/// Two petals per `δ`-level inside a flower.
///
/// The partner petal through `Ψ_{k n k⁻¹}(m)` (with `n` a half turn about `e₁`
/// and `k = h⁻¹`) must have the same `δ` but not be the petal of `m`; then 50
/// random points `J_m(α, k t nᵋ k⁻¹)` of the `δ`-level set must each fall on
/// one of the two.
pub fn check_delta_integral(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::DeltaIntegral, spec, samples, &samples.points, tol, |i, m| {
        let mut rng = sample_rng(samples, i);
        let p = regular_phase(spec, m)?;
        let k = p.conjugator.unwrap().inverse();
        let half = GroupElement::new(spec.group(), 0.0, Rotation::from_axis_angle(&nalgebra::Vector3::x(), std::f64::consts::PI)?);
        let weyl = conj(&k, &half)?;
        let partner = spec.act(&weyl, m)?;
        let q = phase_with_period(spec, &partner, p.tau).or_else(|_| {
            let mut lenient = spec.clone();
            lenient.tolerances.tol_phase = f64::INFINITY;
            phase_with_period(&lenient, &partner, p.tau)
        })?;
        let dm = p.delta_rep.unwrap();
        let dq = q.delta_rep.ok_or_else(|| Error::Domain("partner phase is singular".into()))?;
        let mut worst = projective_distance(&dm, &dq);

        let tols = PetalTolerances {
            orbit: tol,
            delta: tol,
            torus: tol,
        };
        let orbit_m = ReducedOrbit::new(spec, m, p.tau)?;
        let orbit_q = ReducedOrbit::new(spec, &partner, p.tau)?;
        let v = petal_membership(spec, &p, &orbit_m, &partner, &tols)?;
        if v.on_petal {
            return Err(Error::Domain("the Weyl partner lies on the same petal".into()));
        }
        for _ in 0..50 {
            let alpha = rng.gen_range(0.0..1.0);
            let t = xi(&random_torus(spec, &mut rng))?;
            let mut g = conj(&k, &t)?;
            if rng.gen_bool(0.5) {
                g = g * weyl;
            }
            let x = flower_frame(spec, &p, m, alpha, &g)?;
            let a = petal_membership(spec, &p, &orbit_m, &x, &tols)?;
            let b = petal_membership(spec, &q, &orbit_q, &x, &tols)?;
            worst = worst.max(a.torus_distance.min(b.torus_distance));
            worst = worst.max(a.delta_distance);
        }
        Ok(worst)
    })
}

/// The axis formula for `δ` against the conjugator class.
pub fn check_delta_axis_formula(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::DeltaAxisFormula, spec, samples, &samples.points, tol, |_, m| {
        let p = regular_phase(spec, m)?;
        let axis = p.gamma.rotation.axis().ok_or_else(|| Error::Domain("phase has no axis".into()))?;
        Ok(projective_distance(&delta_axis_formula(&axis)?, &p.delta_rep.unwrap()))
    })
}

/// `X(g·m) = dΨ_g X(m)` for 5 random `g` per sample.
pub fn check_vf_invariance(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    report(CheckName::VfInvariance, spec, samples, &samples.points, tol, |i, m| {
        let mut rng = sample_rng(samples, i);
        let x = spec.vector_field(m)?;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let g = random_element(spec, &mut rng);
            let lhs = spec.vector_field(&spec.act(&g, m)?)?.to_vec();
            let rhs = spec.push_forward(&g, &x)?.to_vec();
            for (a, b) in lhs.iter().zip(&rhs) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    })
}

/// Largest ratio between a step of `τ` along the family and the median of the
/// neighbouring steps; a smooth period function keeps this near 1.
pub fn check_period_continuity(
    spec: &SystemSpec,
    family: &[(f64, PhasePoint)],
    seed: u64,
    factor: f64,
) -> CheckReport {
    let start = Instant::now();
    let samples = Samples::new(
        family.iter().map(|(_, m)| *m).collect(),
        seed,
        format!("energy family of {} points", family.len()),
    );
    let taus: Vec<Result<f64>> = family
        .par_iter()
        .map(|(_, m)| find_reduced_period(spec, m).map(|p| p.tau))
        .collect();
    if let Some(Err(e)) = taus.iter().find(|t| t.is_err()) {
        let e = e.clone();
        return finish(CheckName::PeriodContinuity, spec, &samples, family.len(), factor, vec![Err(e)], start);
    }
    let taus: Vec<f64> = taus.into_iter().map(|t| t.unwrap()).collect();
    let diffs: Vec<f64> = taus.windows(2).map(|w| w[1] - w[0]).collect();
    let mut results = Vec::new();
    for (i, d) in diffs.iter().enumerate() {
        // median of the surrounding steps, so one outlier cannot hide itself
        let lo = i.saturating_sub(3);
        let hi = (i + 4).min(diffs.len());
        let mut near: Vec<f64> = (lo..hi).filter(|&j| j != i).map(|j| diffs[j].abs()).collect();
        near.sort_by(f64::total_cmp);
        let trend = near.get(near.len() / 2).copied().unwrap_or(0.0).max(1e-9 * taus[i]);
        results.push(Ok(d.abs() / trend));
    }
    finish(CheckName::PeriodContinuity, spec, &samples, family.len(), factor, results, start)
}

/// Relative energy drift, constraint residual and momentum drift over one period.
pub fn check_conservation(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let spec = &measuring(spec);
    report(CheckName::Conservation, spec, samples, &samples.points, tol, |_, m| {
        let tau = find_reduced_period(spec, m)?.tau;
        let traj = integrate(spec, m, tau, spec.tolerances.tol)?;
        let e0 = spec.energy(m)?;
        let mut worst: f64 = 0.0;
        let states = traj.states()?;
        for s in &states {
            worst = worst.max((spec.energy(s)? - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
            worst = worst.max(spec.constraint_residual(s)?);
        }
        if spec.kind() == SystemKind::RigidBody {
            let l0 = spec.spatial_momentum(m)?;
            let norm0 = l0.norm();
            for s in &states {
                let l = spec.spatial_momentum(s)?;
                worst = worst.max((l.norm() - norm0).abs() / norm0);
                worst = worst.max((l - l0).norm() / norm0);
            }
        }
        Ok(worst)
    })
}

/// Rotation about the spatial momentum after one period against the
/// solid-angle formula. Rigid body only.
pub fn check_montgomery(spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    let Some(body) = spec.rigid_body() else {
        let mut r = finish(CheckName::Montgomery, spec, samples, 0, tol, Vec::new(), Instant::now());
        r.note = Some("applies to the rigid body only".into());
        return r;
    };
    let inertia = body.inertia;
    let spec = &measuring(spec);
    report(CheckName::Montgomery, spec, samples, &samples.points, tol, |_, m| {
        let oracle = montgomery_oracle(inertia, m)?;
        let p = phase_lenient(spec, m)?;
        let axis = spec.spatial_momentum(m)?;
        let angle = signed_angle_about(p.gamma.rotation.quaternion(), &axis);
        let d = (oracle - angle).rem_euclid(TAU);
        Ok(d.min(TAU - d))
    })
}
