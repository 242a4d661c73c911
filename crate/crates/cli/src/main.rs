use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use phasemap::config::{RunConfig, SCHEMA_VERSION};
use phasemap::dynsys::{PhasePoint, SystemSpec};
use phasemap::integrate::{integrate, state_columns};
use phasemap::liegroup::TorusElement;
use phasemap::reconstruct::{frequencies, phase, phase_or_linearized, phase_with_period, torus_embed, PhaseResult};
use phasemap::verify::{
    check_period_continuity, energy_family_over, run_check, sample_points, CheckName, CheckReport, Verdict,
};
use phasemap::Error;

#[derive(Parser)]
#[command(name = "phasemap", version, about = "Phase maps, invariant tori and verification suites for symmetric systems")]
struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true, env = "PHASEMAP_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Count inconclusive checks as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the initial condition and write trajectory.csv.
    Simulate {
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Reconstruction phase of the initial condition, written to phase.json.
    Phase,
    /// Grid over the invariant torus through the initial condition, written to torus.csv.
    Torus {
        #[arg(long)]
        alpha_steps: Option<usize>,
        #[arg(long)]
        beta_steps: Option<usize>,
    },
    /// Run named checks and write verdicts.json.
    Verify {
        /// Comma-separated check names; every applicable check when omitted,
        /// none when empty.
        #[arg(long)]
        checks: Option<String>,
        /// Overrides `sampling.count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Period, frequencies and δ along the energy family, written to sweep.csv.
    Sweep {
        #[arg(long)]
        count: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

struct Outcome {
    summary: String,
    checks_failed: bool,
}

/// Provenance block carried by every output file.
#[derive(Serialize)]
struct Header<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            println!("{}", o.summary);
            if o.checks_failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.sampling.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let mut selected = None;
    match &cli.command {
        Command::Simulate { t_end } => {
            if let Some(t) = t_end {
                cfg.simulate.t_end = *t;
            }
        }
        Command::Torus {
            alpha_steps,
            beta_steps,
        } => {
            if let Some(n) = alpha_steps {
                cfg.torus.alpha_steps = *n;
            }
            if let Some(n) = beta_steps {
                cfg.torus.beta_steps = *n;
            }
        }
        Command::Verify { checks, count } => {
            if let Some(n) = count {
                cfg.sampling.count = *n;
            }
            if let Some(list) = checks {
                selected = Some(parse_checks(list)?);
            }
        }
        Command::Sweep { count } => {
            if let Some(n) = count {
                cfg.sweep.count = *n;
            }
        }
        Command::Phase => {}
    }
    cfg.validate()?;
    let spec = cfg.system_spec()?;
    // fill defaults so outputs carry the values actually used
    cfg.initial_condition = Some(cfg.initial_condition(&spec)?);
    let (lo, hi) = cfg.sweep_range();
    cfg.sweep.range = Some([lo, hi]);
    std::fs::create_dir_all(&cfg.output.dir)?;
    match cli.command {
        Command::Simulate { .. } => simulate(&cfg, &spec),
        Command::Phase => cmd_phase(&cfg, &spec),
        Command::Torus { .. } => torus(&cfg, &spec),
        Command::Verify { .. } => verify(&cfg, &spec, selected, cli.strict),
        Command::Sweep { .. } => sweep(&cfg, &spec),
    }
}

fn parse_checks(list: &str) -> Result<Vec<CheckName>, Failure> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<CheckName>().map_err(Failure::from))
        .collect()
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| Failure::from(e.error))?;
    Ok(path)
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV files start with one `# ` line holding the JSON header.
fn csv_preamble(cfg: &RunConfig, command: &str) -> Result<Vec<u8>, Failure> {
    let header = Header {
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg,
    };
    let json = serde_json::to_string(&header).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(format!("# {json}\n").into_bytes())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn simulate(cfg: &RunConfig, spec: &SystemSpec) -> Result<Outcome, Failure> {
    let m = cfg.initial_condition(spec)?;
    let traj = integrate(spec, &m, cfg.simulate.t_end, spec.tolerances.tol)?;
    let mut bytes = csv_preamble(cfg, "simulate")?;
    traj.write_csv(&mut bytes)?;
    let path = write_atomic(&cfg.output.dir, "trajectory.csv", &bytes)?;
    let e0 = spec.energy(&m)?;
    let drift = traj
        .states()?
        .iter()
        .map(|s| spec.energy(s).map(|e| (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
    Ok(Outcome {
        summary: format!(
            "simulate: {} steps to t={} energy_drift={drift:.3e} -> {}",
            traj.times().len() - 1,
            cfg.simulate.t_end,
            path.display()
        ),
        checks_failed: false,
    })
}

#[derive(Serialize)]
struct PhaseOutput<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    initial_condition: PhasePoint,
    energy: f64,
    rotation_angle: f64,
    rotation_axis: Option<[f64; 3]>,
    phase: PhaseResult,
}

fn cmd_phase(cfg: &RunConfig, spec: &SystemSpec) -> Result<Outcome, Failure> {
    let m = cfg.initial_condition(spec)?;
    let p = phase_or_linearized(spec, &m)?;
    let angle = p.gamma.rotation.angle();
    let out = PhaseOutput {
        header: Header {
            schema_version: SCHEMA_VERSION,
            command: "phase",
            config: cfg,
        },
        initial_condition: m,
        energy: spec.energy(&m)?,
        rotation_angle: angle,
        rotation_axis: p.gamma.rotation.axis().map(|a| a.into()),
        phase: p.clone(),
    };
    let path = write_atomic(&cfg.output.dir, "phase.json", &json_bytes(&out)?)?;
    Ok(Outcome {
        summary: format!(
            "phase: tau={} angle={angle} regular={} period_source={:?} -> {}",
            p.tau,
            p.regular,
            p.period_source,
            path.display()
        ),
        checks_failed: false,
    })
}

fn torus(cfg: &RunConfig, spec: &SystemSpec) -> Result<Outcome, Failure> {
    let m = cfg.initial_condition(spec)?;
    let p = phase(spec, &m)?;
    if !p.regular {
        return Err(Failure::Runtime("phase is singular; the torus is not defined".into()));
    }
    let rank = spec.group().rank();
    let (na, nb) = (cfg.torus.alpha_steps, cfg.torus.beta_steps);
    let mut grid = Vec::new();
    for i in 0..na {
        for j in 0..nb.pow(rank as u32) {
            let mut beta = Vec::with_capacity(rank);
            let mut rest = j;
            for _ in 0..rank {
                beta.push((rest % nb) as f64 / nb as f64);
                rest /= nb;
            }
            grid.push((i as f64 / na as f64, beta));
        }
    }
    let rows: Vec<Result<(PhasePoint, f64), Error>> = grid
        .par_iter()
        .map(|(alpha, beta)| {
            let x = torus_embed(spec, &p, &m, *alpha, &TorusElement::new(beta.clone()))?;
            // the torus is abelian and contains γ, so every grid point has phase γ
            let q = phase_with_period(spec, &x, p.tau)?;
            Ok((x, q.gamma.distance(&p.gamma)))
        })
        .collect();
    let mut bytes = csv_preamble(cfg, "torus")?;
    let mut header = vec!["alpha".to_string()];
    header.extend((1..=rank).map(|k| format!("beta_{k}")));
    header.extend(state_columns(spec.kind()).iter().map(|s| s.to_string()));
    header.push("conjugacy_residual".into());
    writeln!(bytes, "{}", header.join(","))?;
    let mut worst: f64 = 0.0;
    for ((alpha, beta), row) in grid.iter().zip(rows) {
        let (x, residual) = row?;
        worst = worst.max(residual);
        let cells: Vec<String> = std::iter::once(*alpha)
            .chain(beta.iter().copied())
            .chain(spec.to_state(&x)?)
            .chain([residual])
            .map(fmt)
            .collect();
        writeln!(bytes, "{}", cells.join(","))?;
    }
    let path = write_atomic(&cfg.output.dir, "torus.csv", &bytes)?;
    Ok(Outcome {
        summary: format!(
            "torus: {} points tau={} max_conjugacy_residual={worst:.3e} -> {}",
            grid.len(),
            p.tau,
            path.display()
        ),
        checks_failed: false,
    })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    verdicts: &'a [CheckReport],
}

fn verify(cfg: &RunConfig, spec: &SystemSpec, selected: Option<Vec<CheckName>>, strict: bool) -> Result<Outcome, Failure> {
    let checks = selected.or_else(|| cfg.verify.checks.clone()).unwrap_or_else(|| {
        CheckName::ALL
            .iter()
            .copied()
            .filter(|c| c.applies_to(spec.kind()))
            .collect()
    });
    let mut reports = Vec::with_capacity(checks.len());
    if !checks.is_empty() {
        let samples = sample_points(spec, &cfg.sampling.region, cfg.sampling.count, cfg.sampling.seed)?;
        for check in &checks {
            let tol = cfg.check_tolerance(*check);
            let report = if *check == CheckName::PeriodContinuity {
                let family = energy_family_over(spec, cfg.sweep.count, cfg.sweep_range())?;
                check_period_continuity(spec, &family, cfg.sampling.seed, tol)
            } else {
                run_check(*check, spec, &samples, tol)
            };
            eprintln!("{report} {:.2}s", report.wall_time_s);
            reports.push(report);
        }
    }
    let out = VerifyOutput {
        header: Header {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            config: cfg,
        },
        verdicts: &reports,
    };
    let path = write_atomic(&cfg.output.dir, "verdicts.json", &json_bytes(&out)?)?;
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let (pass, fail, inconclusive) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Inconclusive));
    Ok(Outcome {
        summary: format!(
            "verify: {pass} passed, {fail} failed, {inconclusive} inconclusive -> {}",
            path.display()
        ),
        checks_failed: fail > 0 || (strict && inconclusive > 0),
    })
}

fn sweep(cfg: &RunConfig, spec: &SystemSpec) -> Result<Outcome, Failure> {
    let family = energy_family_over(spec, cfg.sweep.count, cfg.sweep_range())?;
    let results: Vec<Result<(PhaseResult, f64), Error>> = family
        .par_iter()
        .map(|(_, m)| Ok((phase(spec, m)?, spec.energy(m)?)))
        .collect();
    let rank = spec.group().rank();
    let mut bytes = csv_preamble(cfg, "sweep")?;
    let mut header = vec!["parameter".to_string(), "energy".into(), "tau".into()];
    header.extend((0..=rank).map(|k| format!("frequency_{k}")));
    header.extend(["delta_x", "delta_y", "delta_z", "regular"].map(String::from));
    header.extend(["closure_residual", "fit_residual"].map(String::from));
    writeln!(bytes, "{}", header.join(","))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((param, _), r) in family.iter().zip(results) {
        let (p, energy) = r.map_err(|e| Failure::from(e).context(&format!("sweep parameter {param}")))?;
        lo = lo.min(p.tau);
        hi = hi.max(p.tau);
        let mut cells = vec![fmt(*param), fmt(energy), fmt(p.tau)];
        match frequencies(&p) {
            Ok(f) => cells.extend(f.into_iter().map(fmt)),
            Err(_) => cells.extend((0..=rank).map(|_| "nan".to_string())),
        }
        match p.delta_rep {
            Some(d) => cells.extend(d.iter().copied().map(fmt)),
            None => cells.extend((0..3).map(|_| "nan".to_string())),
        }
        cells.push(p.regular.to_string());
        cells.push(fmt(p.residuals.closure));
        cells.push(fmt(p.residuals.fit));
        writeln!(bytes, "{}", cells.join(","))?;
    }
    let path = write_atomic(&cfg.output.dir, "sweep.csv", &bytes)?;
    Ok(Outcome {
        summary: format!(
            "sweep: {} points tau in [{lo}, {hi}] -> {}",
            family.len(),
            path.display()
        ),
        checks_failed: false,
    })
}

impl Failure {
    fn context(self, what: &str) -> Failure {
        match self {
            Failure::Config(m) => Failure::Config(format!("{what}: {m}")),
            Failure::Runtime(m) => Failure::Runtime(format!("{what}: {m}")),
        }
    }
}
