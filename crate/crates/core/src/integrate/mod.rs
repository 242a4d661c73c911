//! Adaptive integration with dense output, and detection of the reduced period.

pub mod dop853;
mod period;

use std::io::Write;

use crate::dynsys::{PhasePoint, SystemKind, SystemSpec};
use crate::error::{Error, Result};

pub use dop853::{DenseSolution, Ode, Segment, Stepper};
pub use period::{find_reduced_period, PeriodResult};

/// The full equations of motion on the flat state vector.
pub struct FullOde<'a>(pub &'a SystemSpec);

impl Ode for FullOde<'_> {
    fn dim(&self) -> usize {
        self.0.state_dim()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.rhs(y, dy)
    }

    fn project(&self, y: &mut [f64]) {
        self.0.normalize_state(y)
    }
}

/// The closed subsystem on the shape block (everything except the attitude).
pub struct ShapeOde<'a>(pub &'a SystemSpec);

impl Ode for ShapeOde<'_> {
    fn dim(&self) -> usize {
        self.0.shape_dim()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.shape_rhs(y, dy)
    }
}

/// A solved trajectory with its continuous extension.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: SystemSpec,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<Segment>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Node times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state_vectors(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn states(&self) -> Result<Vec<PhasePoint>> {
        self.states.iter().map(|y| self.spec.from_state(y)).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn dense_state(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside the trajectory span [{lo}, {hi}]"
            )));
        }
        if self.segments.is_empty() {
            return Ok(self.states[0].clone());
        }
        // first segment whose upper end reaches t
        let i = self.segments.partition_point(|s| s.span().1 < t);
        let seg = &self.segments[i.min(self.segments.len() - 1)];
        Ok(seg.eval(t))
    }

    pub fn dense_eval(&self, t: f64) -> Result<PhasePoint> {
        self.spec.from_state(&self.dense_state(t)?)
    }

    /// CSV with a header row: time, state components, then the conserved
    /// quantities (energy; plus `|IΩ|` for the rigid body or the contact-point
    /// speed for the ball). Floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header: Vec<&str> = vec!["t"];
        header.extend(state_columns(self.spec.kind()));
        header.extend(match self.spec.kind() {
            SystemKind::Ball => ["energy", "contact_speed"],
            SystemKind::RigidBody => ["energy", "momentum_norm"],
        });
        writeln!(w, "{}", header.join(","))?;
        for (t, y) in self.times.iter().zip(&self.states) {
            let m = self
                .spec
                .from_state(y)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
            let energy = self.spec.energy(&m).unwrap_or(f64::NAN);
            let extra = match self.spec.kind() {
                SystemKind::Ball => self.spec.constraint_residual(&m).unwrap_or(f64::NAN),
                SystemKind::RigidBody => self
                    .spec
                    .reduce(&m)
                    .map(|r| r.to_vec().iter().map(|c| c * c).sum::<f64>().sqrt())
                    .unwrap_or(f64::NAN),
            };
            let row: Vec<String> = std::iter::once(*t)
                .chain(y.iter().copied())
                .chain([energy, extra])
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// CSV column names of the packed state vector.
pub fn state_columns(kind: SystemKind) -> &'static [&'static str] {
    match kind {
        SystemKind::Ball => &["a1", "a2", "a1_dot", "a2_dot", "w", "q_w", "q_x", "q_y", "q_z"],
        SystemKind::RigidBody => &["omega1", "omega2", "omega3", "q_w", "q_x", "q_y", "q_z"],
    }
}

/// Integrate from `m` at time 0 to `t_end` (either sign), keeping the
/// continuous extension.
pub fn integrate(spec: &SystemSpec, m: &PhasePoint, t_end: f64, tol: f64) -> Result<Trajectory> {
    let y0 = spec.to_state(m)?;
    integrate_state(spec, &y0, t_end, tol)
}

pub fn integrate_state(spec: &SystemSpec, y0: &[f64], t_end: f64, tol: f64) -> Result<Trajectory> {
    if !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite end time {t_end}")));
    }
    let ode = FullOde(spec);
    let mut y = y0.to_vec();
    ode.project(&mut y);
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut segments = Vec::new();
    let (mut accepted, mut rejected) = (0, 0);
    if t_end != 0.0 {
        let mut stepper = Stepper::new(&ode, 0.0, &y, t_end, t_end.abs(), tol)?;
        while stepper.t() != t_end {
            let seg = stepper.step(t_end)?;
            times.push(stepper.t());
            states.push(stepper.y().to_vec());
            segments.push(seg);
        }
        accepted = stepper.accepted;
        rejected = stepper.rejected;
    }
    if t_end < 0.0 {
        times.reverse();
        states.reverse();
        segments.reverse();
    }
    Ok(Trajectory {
        spec: spec.clone(),
        times,
        states,
        segments,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// `Φ_t(m)`.
pub fn flow(spec: &SystemSpec, m: &PhasePoint, t: f64, tol: f64) -> Result<PhasePoint> {
    if t == 0.0 {
        spec.to_state(m)?;
        return Ok(*m);
    }
    let y = flow_state(spec, &spec.to_state(m)?, t, tol)?;
    spec.from_state(&y)
}

/// `Φ_t` on a flat state vector, without storing the path.
pub fn flow_state(spec: &SystemSpec, y0: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite time {t}")));
    }
    let ode = FullOde(spec);
    if t == 0.0 {
        let mut y = y0.to_vec();
        ode.project(&mut y);
        return Ok(y);
    }
    let mut stepper = Stepper::new(&ode, 0.0, y0, t, t.abs(), tol)?;
    while stepper.t() != t {
        stepper.step(t)?;
    }
    Ok(stepper.y().to_vec())
}
