use serde::{Deserialize, Serialize};

use super::{ShapeOde, Stepper};
use crate::dynsys::{PhasePoint, SystemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub tau: f64,
    /// `‖ȳ(τ) − ȳ(0)‖` in the reduced space.
    pub closure_residual: f64,
    pub crossing_refinement_iterations: usize,
}

/// Sub-intervals per accepted step on which the section sign is sampled.
const SIGN_SAMPLES: usize = 8;

/// A crossing counts as a failed return (rather than a crossing of some other
/// part of the loop) when it lands this close to the start, relative to the
/// largest excursion seen so far.
const NEAR_RETURN: f64 = 0.05;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// First return of the reduced trajectory through `reduce(m)`.
///
/// The section is the hyperplane through the reduced start point normal to the
/// reduced velocity; crossings in the positive direction are refined on the
/// dense output and accepted once they close up to `tol_closure`.
pub fn find_reduced_period(spec: &SystemSpec, m: &PhasePoint) -> Result<PeriodResult> {
    let tols = &spec.tolerances;
    spec.to_state(m)?;
    let y0 = spec.shape_of(m);
    let r0 = spec.reduce_shape(&y0);
    let v0 = spec.reduced_velocity_of_shape(&y0)?;
    let scale = norm(&r0).max(1.0);
    let speed = norm(&v0);
    if speed < tols.v_min * scale {
        return Err(Error::Domain(format!(
            "reduced speed {speed:e} below v_min; the reduced point is (nearly) an equilibrium"
        )));
    }
    let normal: Vec<f64> = v0.iter().map(|c| c / speed).collect();
    let section = |y: &[f64]| -> f64 {
        let r = spec.reduce_shape(y);
        r.iter().zip(&r0).zip(&normal).map(|((a, b), n)| (a - b) * n).sum()
    };

    let ode = ShapeOde(spec);
    let mut stepper = Stepper::new(&ode, 0.0, &y0, 1.0, tols.t_max, tols.tol)?;
    let mut max_excursion = 0.0_f64;
    let mut buf = vec![0.0; y0.len()];

    while stepper.t() < tols.t_max {
        let seg = stepper.step(tols.t_max)?;
        let (t_lo, t_hi) = (seg.t_start, seg.t_end());
        if t_hi <= tols.min_period_floor {
            seg.eval_into(t_hi, &mut buf);
            max_excursion = max_excursion.max(dist(&spec.reduce_shape(&buf), &r0));
            continue;
        }
        let start = t_lo.max(tols.min_period_floor);
        seg.eval_into(start, &mut buf);
        let mut ta = start;
        let mut sa = section(&buf);
        for j in 1..=SIGN_SAMPLES {
            let tb = start + (t_hi - start) * j as f64 / SIGN_SAMPLES as f64;
            seg.eval_into(tb, &mut buf);
            let sb = section(&buf);
            max_excursion = max_excursion.max(dist(&spec.reduce_shape(&buf), &r0));
            if sa < 0.0 && sb >= 0.0 {
                let eval = |t: f64| {
                    let y = seg.eval(t);
                    section(&y)
                };
                let (tau, iterations) = refine(eval, ta, sa, tb, sb, 1e-12 * scale);
                let residual = dist(&spec.reduce_shape(&seg.eval(tau)), &r0);
                if residual < tols.tol_closure * scale {
                    return Ok(PeriodResult {
                        tau,
                        closure_residual: residual,
                        crossing_refinement_iterations: iterations,
                    });
                }
                if residual < NEAR_RETURN * max_excursion {
                    return Err(Error::NotPeriodic { t: tau, residual });
                }
            }
            ta = tb;
            sa = sb;
        }
    }
    Err(Error::PeriodNotFound { t_max: tols.t_max })
}

/// Illinois-modified regula falsi on a bracket with `fa < 0 ≤ fb`.
fn refine(f: impl Fn(f64) -> f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, eps: f64) -> (f64, usize) {
    if fb.abs() < eps {
        return (b, 0);
    }
    let mut side = 0i8;
    let mut c = b;
    for it in 1..=200 {
        c = if fb != fa { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.abs() < eps || (b - a) <= 4.0 * f64::EPSILON * b.abs() {
            return (c, it);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    (c, 200)
}
