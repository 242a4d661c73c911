//! Named, seeded property checks with machine-readable verdicts.

mod checks;
pub mod montgomery;
pub mod sampling;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{SystemKind, SystemSpec};
use crate::error::{Error, Result};

pub use checks::*;
pub use montgomery::{elliptic_k, enclosed_solid_angle, euler_top_period, montgomery_oracle, signed_angle_about};
pub use sampling::{default_family_range, energy_family, energy_family_over, random_rotation, sample_points, Samples, SamplingRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No usable samples; distinct from a failure.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckName,
    pub system: SystemKind,
    pub samples: String,
    pub sample_count: usize,
    pub seed: u64,
    /// Largest residual over all samples; `∞` when a sample could not be evaluated.
    #[serde(with = "nonfinite")]
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Not serialized, so that reports are byte-identical across runs.
    #[serde(skip_serializing, default)]
    pub wall_time_s: f64,
    /// First evaluation error, if any.
    pub note: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        write!(
            f,
            "{v} {} [{}] n={} max_residual={:.3e} tol={:.1e}",
            self.check, self.system, self.sample_count, self.max_residual, self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

/// JSON has no infinities: non-finite residuals are written as strings.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Num(v) => v,
            Repr::Text(t) => match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
        })
    }
}

macro_rules! check_names {
    ($($variant:ident => $name:literal, $tol:expr;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum CheckName {
            $($variant,)*
        }

        impl CheckName {
            pub const ALL: &'static [CheckName] = &[$(CheckName::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CheckName::$variant => $name,)*
                }
            }

            /// Tolerance used when none is configured.
            pub fn default_tolerance(self) -> f64 {
                match self {
                    $(CheckName::$variant => $tol,)*
                }
            }
        }

        impl FromStr for CheckName {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(CheckName::$variant),)*
                    _ => Err(Error::Config(format!("unknown check {s:?}"))),
                }
            }
        }
    };
}

check_names! {
    PhaseDefining => "phase_defining", 1e-6;
    PhaseConserved => "phase_conserved", 5e-7;
    Equivariance => "equivariance", 5e-7;
    Linearization => "linearization", 1e-6;
    FlowerInvariants => "flower_invariants", 1e-6;
    FrequencyConstancy => "frequency_constancy", 1e-7;
    DeltaIntegral => "delta_integral", 1e-6;
    DeltaAxisFormula => "delta_axis_formula", 1e-8;
    VfInvariance => "vf_invariance", 1e-10;
    PeriodContinuity => "period_continuity", 10.0;
    Conservation => "conservation", 1e-9;
    Montgomery => "montgomery", 1e-6;
}

impl CheckName {
    /// Whether the check has anything to measure on `kind`.
    pub fn applies_to(self, kind: SystemKind) -> bool {
        !(self == CheckName::Montgomery && kind == SystemKind::Ball)
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluate `residual` on every sample in parallel and fold into a report.
pub(crate) fn report<T: Sync>(
    check: CheckName,
    spec: &SystemSpec,
    samples: &Samples,
    items: &[T],
    tol: f64,
    residual: impl Fn(usize, &T) -> Result<f64> + Sync + Send,
) -> CheckReport {
    let start = Instant::now();
    let results: Vec<Result<f64>> = items.par_iter().enumerate().map(|(i, x)| residual(i, x)).collect();
    finish(check, spec, samples, items.len(), tol, results, start)
}

pub(crate) fn finish(
    check: CheckName,
    spec: &SystemSpec,
    samples: &Samples,
    count: usize,
    tol: f64,
    results: Vec<Result<f64>>,
    start: Instant,
) -> CheckReport {
    let mut max_residual: f64 = 0.0;
    let mut note = None;
    for r in results {
        match r {
            Ok(v) if v.is_nan() => max_residual = f64::INFINITY,
            Ok(v) => max_residual = max_residual.max(v),
            Err(e) => {
                max_residual = f64::INFINITY;
                note.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let verdict = if count == 0 {
        max_residual = f64::NAN;
        note.get_or_insert_with(|| "no usable samples".to_string());
        Verdict::Inconclusive
    } else if max_residual < tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CheckReport {
        check,
        system: spec.kind(),
        samples: samples.description.clone(),
        sample_count: count,
        seed: samples.seed,
        max_residual,
        tolerance: tol,
        verdict,
        wall_time_s: start.elapsed().as_secs_f64(),
        note,
    }
}

/// Run one named check. The continuity check ignores `samples` apart from the
/// seed and walks the default 50-point [`energy_family`].
pub fn run_check(check: CheckName, spec: &SystemSpec, samples: &Samples, tol: f64) -> CheckReport {
    match check {
        CheckName::PhaseDefining => check_phase_defining(spec, samples, tol),
        CheckName::PhaseConserved => check_phase_conserved(spec, samples, tol),
        CheckName::Equivariance => check_equivariance(spec, samples, tol),
        CheckName::Linearization => check_linearization(spec, samples, tol),
        CheckName::FlowerInvariants => check_flower_invariants(spec, samples, tol),
        CheckName::FrequencyConstancy => check_frequency_flower_constancy(spec, samples, tol),
        CheckName::DeltaIntegral => check_delta_integral(spec, samples, tol),
        CheckName::DeltaAxisFormula => check_delta_axis_formula(spec, samples, tol),
        CheckName::VfInvariance => check_vf_invariance(spec, samples, tol),
        CheckName::PeriodContinuity => {
            let family = energy_family(spec, 50).unwrap_or_default();
            check_period_continuity(spec, &family, samples.seed, tol)
        }
        CheckName::Conservation => check_conservation(spec, samples, tol),
        CheckName::Montgomery => check_montgomery(spec, samples, tol),
    }
}
