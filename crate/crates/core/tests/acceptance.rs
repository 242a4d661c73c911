//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use phasemap::dynsys::*;
use phasemap::verify::*;

const SEED: u64 = 20240601;

fn bowl() -> SystemSpec {
    make_ball_system(SurfaceProfile::paraboloid(0.5), (0.2, 3.0)).unwrap()
}

fn body() -> SystemSpec {
    make_rigid_body([1.0, 2.0, 3.0]).unwrap()
}

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn summarize(reports: &[CheckReport]) -> String {
    reports
        .iter()
        .map(|r| format!("{}[{}] n={} max={:.3e}/{:.0e}", r.check, r.system, r.sample_count, r.max_residual, r.tolerance))
        .collect::<Vec<_>>()
        .join("; ")
}

fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.passed())
}

fn main() -> ExitCode {
    let region = SamplingRegion::default();
    let systems = [bowl(), body()];
    let samples: Vec<Samples> = systems
        .iter()
        .map(|s| sample_points(s, &region, 50, SEED).unwrap())
        .collect();
    let mut lines = Vec::new();

    // 1
    let start = Instant::now();
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_phase_defining(s, x, 1e-6))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let enough = reports.iter().all(|r| r.sample_count >= 50);
    lines.push(Line {
        id: 1,
        title: "phase defining property",
        passed: all_pass(&reports) && enough && secs < 120.0,
        detail: format!("{} in {secs:.1}s", summarize(&reports)),
    });

    // 2
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_phase_conserved(s, &x.take(20), 5e-7))
        .collect();
    lines.push(Line {
        id: 2,
        title: "phase conserved along the flow",
        passed: all_pass(&reports),
        detail: summarize(&reports),
    });

    // 3
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_equivariance(s, &x.take(10), 5e-7))
        .collect();
    lines.push(Line {
        id: 3,
        title: "conjugacy equivariance (20 g x 10 samples)",
        passed: all_pass(&reports),
        detail: summarize(&reports),
    });

    // 4
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_linearization(s, &x.take(8), 1e-6))
        .collect();
    let enough = reports.iter().all(|r| r.sample_count >= 5);
    lines.push(Line {
        id: 4,
        title: "linearization on a 3x3x3 grid",
        passed: all_pass(&reports) && enough,
        detail: summarize(&reports),
    });

    // 5
    let mut reports = Vec::new();
    for (s, x) in systems.iter().zip(&samples) {
        reports.push(check_flower_invariants(s, &x.take(10), 1e-6));
        reports.push(check_frequency_flower_constancy(s, &x.take(10), 1e-7));
    }
    lines.push(Line {
        id: 5,
        title: "flower invariants and frequency constancy",
        passed: all_pass(&reports),
        detail: summarize(&reports),
    });

    // 6
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_delta_integral(s, &x.take(10), 1e-6))
        .collect();
    lines.push(Line {
        id: 6,
        title: "two petals per delta level (50 flower samples each)",
        passed: all_pass(&reports),
        detail: summarize(&reports),
    });

    // 7
    let r = check_delta_axis_formula(&systems[0], &samples[0], 1e-8);
    lines.push(Line {
        id: 7,
        title: "axis formula vs conjugator delta (ball)",
        passed: r.passed() && r.sample_count >= 50,
        detail: summarize(&[r]),
    });

    // 8
    let start = Instant::now();
    let spec = &systems[1];
    let inertia = spec.rigid_body().unwrap().inertia;
    let pool = sample_points(spec, &region, 40, SEED + 1).unwrap();
    // loops around the minor axis have 2E|I2| above |M|^2
    let around_minor = |m: &PhasePoint| {
        let l = spec.reduce(m).unwrap().to_vec();
        let two_e: f64 = (0..3).map(|i| l[i] * l[i] / inertia[i]).sum();
        let m2: f64 = l.iter().map(|c| c * c).sum();
        two_e * inertia[1] > m2
    };
    let minor: Vec<_> = pool.points.iter().filter(|m| around_minor(m)).take(6).copied().collect();
    let major: Vec<_> = pool.points.iter().filter(|m| !around_minor(m)).take(6).copied().collect();
    let (n_minor, n_major) = (minor.len(), major.len());
    let orbits = Samples::new([minor, major].concat(), pool.seed, "loops around both stable axes");
    let r = check_montgomery(spec, &orbits, 1e-6);
    let secs = start.elapsed().as_secs_f64();
    lines.push(Line {
        id: 8,
        title: "rigid body phase vs solid-angle oracle",
        passed: r.passed() && r.sample_count >= 10 && n_minor >= 5 && n_major >= 5 && secs < 60.0,
        detail: format!("{} ({n_minor} minor-axis, {n_major} major-axis loops) in {secs:.1}s", summarize(&[r])),
    });

    // 9
    let reports: Vec<_> = systems
        .iter()
        .zip(&samples)
        .map(|(s, x)| check_conservation(s, &x.take(20), 1e-9))
        .collect();
    lines.push(Line {
        id: 9,
        title: "energy, rolling constraint and momentum conservation",
        passed: all_pass(&reports),
        detail: summarize(&reports),
    });

    // 10
    let reports: Vec<_> = systems
        .iter()
        .map(|s| check_period_continuity(s, &energy_family(s, 50).unwrap(), SEED, 10.0))
        .collect();
    lines.push(Line {
        id: 10,
        title: "period continuity along a 50-point energy sweep",
        passed: all_pass(&reports) && reports.iter().all(|r| r.sample_count == 50),
        detail: summarize(&reports),
    });

    // 11
    let mut reports = Vec::new();
    for (s, x) in systems.iter().zip(&samples) {
        let loose = s.clone().with_tolerances(Tolerances {
            tol: 1e-2,
            ..Tolerances::default()
        });
        reports.push(check_phase_defining(&loose, &x.take(10), 1e-6));
        reports.push(check_linearization(&loose, &x.take(5), 1e-6));
    }
    lines.push(Line {
        id: 11,
        title: "negative control: tol 1e-2 fails criteria 1 and 4",
        passed: reports.iter().all(|r| r.verdict == Verdict::Fail),
        detail: summarize(&reports),
    });

    let mut failed = 0;
    for l in &lines {
        let v = if l.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {v}  {}: {}", l.id, l.title, l.detail);
        failed += usize::from(!l.passed);
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
