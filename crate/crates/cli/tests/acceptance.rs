//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status on
//! any failure. Run with `cargo test --test acceptance`.

use std::f64::consts::{LN_2, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use poisson_mixing::catalog::{count_drift, IntegrandSpec};
use poisson_mixing::experiments::{run_invariance_check, run_mecke_check, run_mixing, run_moment_check, run_zero_type};
use poisson_mixing::partitions::{deterministic_moment, enumerate_partitions};
use poisson_mixing::transforms::{check_vanishing, composed_hull_example, make_dilation_rotation};
use poisson_mixing::{
    AngleRule, IntensityMeasure, MixingSchedule, MonteCarlo, Point, Quadrature, Region,
    TestFunction, Transformation,
};
use rand::Rng;

const REPLICATES: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn hull_map() -> Transformation {
    composed_hull_example(2.0, 0.7, AngleRule::Hashed(7)).unwrap()
}

fn unit_square(rate: f64) -> IntensityMeasure {
    IntensityMeasure::homogeneous(Region::unit_box(2), rate).unwrap()
}

fn boxed(lo: [f64; 2], hi: [f64; 2]) -> Region {
    Region::rect(lo, hi)
}

fn bell_numbers() -> Outcome {
    let expected = [1usize, 2, 5, 15, 52, 203, 877, 4140];
    let counts: Vec<usize> = (1..=8).map(|n| enumerate_partitions(n).unwrap().len()).collect();
    Outcome::new(counts == expected, format!("counts {counts:?}"))
}

fn poisson_moments() -> Outcome {
    let one = TestFunction::constant(1.0, Region::unit_box(2)).unwrap();
    let mut worst = 0.0f64;
    let mut fourth = f64::NAN;
    for lambda in [0.5, 1.0, 2.0] {
        let sigma = unit_square(lambda);
        for n in 1..=6usize {
            let exact = deterministic_moment(std::slice::from_ref(&one), &[n], &sigma, &Quadrature::fixed(2)).unwrap();
            let mut pmf = (-lambda).exp();
            let mut oracle = 0.0;
            for k in 0..400u32 {
                if k > 0 {
                    pmf *= lambda / k as f64;
                }
                oracle += (k as f64).powi(n as i32) * pmf;
            }
            worst = worst.max((exact - oracle).abs() / oracle);
            if lambda == 1.0 && n == 4 {
                fourth = exact;
            }
        }
    }
    let pass = worst <= 1e-9 && (fourth - 15.0).abs() <= 1e-9 * 15.0;
    Outcome::new(pass, format!("max relative error {worst:.2e}, E[N^4] at rate 1 = {fourth}"))
}

fn z_summary(zs: &[f64]) -> String {
    let worst = zs.iter().map(|z| z.abs()).fold(0.0, f64::max);
    format!("{} checks, max |z| {worst:.3}", zs.len())
}

fn mecke() -> Outcome {
    let whole = Region::unit_box(2);
    let specs = [
        IntegrandSpec::Indicator { region: boxed([0.0, 0.0], [0.5, 1.0]) },
        IntegrandSpec::Tent { region: whole.clone() },
        IntegrandSpec::CappedCount { region: whole.clone(), cap: 10 },
        IntegrandSpec::NeighbourCount { region: whole.clone(), radius: 0.3, cap: 20 },
        IntegrandSpec::NnDecay { region: whole.clone(), scale: 0.2 },
        IntegrandSpec::HullVertex { region: whole },
    ];
    let sigma = unit_square(5.0);
    let mc = MonteCarlo::new(REPLICATES, 1);
    let mut zs = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let r = run_mecke_check(&spec.build().unwrap(), &sigma, &mc).unwrap();
        pass &= r.passes();
        zs.push(r.z_score);
    }
    Outcome::new(pass, z_summary(&zs))
}

fn joint_moments() -> Outcome {
    let sigma = unit_square(2.0);
    let cases: Vec<(Vec<IntegrandSpec>, Vec<usize>)> = vec![
        (
            vec![IntegrandSpec::CappedCount { region: boxed([0.0, 0.0], [0.5, 0.5]), cap: 10 }],
            vec![2],
        ),
        (
            vec![IntegrandSpec::NnDecay { region: boxed([0.0, 0.0], [1.0, 0.6]), scale: 0.3 }],
            vec![3],
        ),
        (
            vec![
                IntegrandSpec::NnDecay { region: boxed([0.0, 0.0], [0.6, 1.0]), scale: 0.3 },
                IntegrandSpec::HullVertex { region: boxed([0.4, 0.0], [1.0, 1.0]) },
            ],
            vec![1, 1],
        ),
        (
            vec![
                IntegrandSpec::NeighbourCount { region: boxed([0.0, 0.0], [0.5, 0.5]), radius: 0.25, cap: 20 },
                IntegrandSpec::CappedCount { region: boxed([0.25, 0.25], [1.0, 1.0]), cap: 5 },
            ],
            vec![2, 1],
        ),
    ];
    let mc = MonteCarlo::new(REPLICATES, 2);
    let mut zs = Vec::new();
    let mut pass = true;
    for (specs, powers) in &cases {
        let us: Vec<_> = specs.iter().map(|s| s.build().unwrap()).collect();
        assert!(us.iter().all(|u| !u.is_deterministic()));
        let r = run_moment_check(&us, powers, &sigma, &mc, &Quadrature::default()).unwrap();
        pass &= r.passes();
        zs.push(r.z_score);
    }
    Outcome::new(pass, z_summary(&zs))
}

fn covariance_at_zero() -> Outcome {
    let (inner, outer, sweep) = (1.0, 2.0, 1.0);
    let sigma = IntensityMeasure::log_radial(1.0 / 64.0, 4.0, 1.0).unwrap();
    let h = TestFunction::indicator(Region::sector(inner, outer, 0.0, sweep)).unwrap();
    // For an indicator, ∫h²dσ = ∫h dσ = sweep·ln(outer/inner).
    let mass = sweep * (outer / inner).ln();
    let exact = mass + mass * mass;
    let rows = run_mixing(
        &[h.clone(), h],
        &[1, 1],
        &MixingSchedule::linear(2),
        &hull_map(),
        &sigma,
        &[0],
        &MonteCarlo::new(REPLICATES, 5),
        &Quadrature::default(),
    )
    .unwrap();
    let row = &rows[0];
    let z = (row.joint_estimate - exact) / row.std_error;
    Outcome::new(
        z.abs() <= 4.0,
        format!("estimate {:.5} exact {exact:.5} z {z:.3}", row.joint_estimate),
    )
}

/// Index of the first draw violating the vanishing condition.
fn first_vanishing_failure(tau: &Transformation, draws: usize, seed: u64) -> Option<usize> {
    let sigma = IntensityMeasure::log_radial(1.0 / 64.0, 4.0, 1.0).unwrap();
    let points = sigma.restricted(&Region::sector(1.0 / 64.0, 0.999, 0.0, TAU)).unwrap();
    let witnesses = MonteCarlo::new(draws, seed)
        .run(|_, rng| {
            let omega = sigma.sample_poisson(rng);
            let m = rng.random_range(1..=3usize);
            let xs: Vec<Point> = (0..m).map(|_| points.sample_point(rng)).collect();
            let ks: Vec<usize> = (0..m).map(|_| rng.random_range(1..=3usize)).collect();
            Ok(check_vanishing(tau, &omega, &xs, &ks, 1e-12)?.passed())
        })
        .unwrap();
    witnesses.iter().position(|ok| !ok)
}

fn vanishing() -> Outcome {
    let hull = first_vanishing_failure(&hull_map(), 1000, 6);
    let drift = first_vanishing_failure(&count_drift(0.01), 100, 6);
    Outcome::new(
        hull.is_none() && drift.is_some(),
        format!("hull example first failure {hull:?}, drift control first failure {drift:?}"),
    )
}

fn invariance() -> Outcome {
    let sigma = IntensityMeasure::log_radial(1.0 / 64.0, 4.0, 1.0).unwrap();
    let regions = [
        Region::sector(0.125, 0.25, 0.0, TAU),
        Region::sector(0.25, 0.5, 0.0, TAU),
        Region::sector(0.5, 1.0, 0.0, 1.5),
        Region::sector(0.5, 1.0, 3.0, 2.0),
        Region::sector(0.8, 1.2, 0.0, TAU),
        Region::sector(1.0, 2.0, 2.0, 2.0),
        Region::sector(1.5, 4.0, 4.0, 1.0),
        boxed([0.2, 0.2], [0.9, 0.7]),
    ];
    let safe = Region::sector(1.0 / 16.0, 4.0, 0.0, TAU);
    let reports = run_invariance_check(
        &hull_map(),
        &sigma,
        &regions,
        Some(&safe),
        &MonteCarlo::new(REPLICATES, 3),
    )
    .unwrap();
    let zs: Vec<f64> = reports.iter().map(|r| r.z_score).collect();
    let hull_ok = reports.len() == 24 && reports.iter().all(|r| r.passes());

    let shift = Transformation::shift(Point::xy(0.5, 0.0));
    let control = run_invariance_check(
        &shift,
        &unit_square(20.0),
        &[boxed([0.0, 0.0], [0.25, 1.0]), boxed([0.6, 0.0], [0.9, 1.0])],
        None,
        &MonteCarlo::new(10_000, 4),
    )
    .unwrap();
    let control_z = control.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    Outcome::new(
        hull_ok && control_z > 4.0,
        format!("{}; shift control max |z| {control_z:.1}", z_summary(&zs)),
    )
}

fn zero_type() -> Outcome {
    let annulus = TestFunction::indicator(Region::sector(1.0, 2.0, 0.0, TAU)).unwrap();
    let n_max = 6;
    let sigma = IntensityMeasure::log_radial(2f64.powi(-(n_max as i32)), 4.0, 1.0).unwrap();
    let dilation = make_dilation_rotation(2.0, 0.3).unwrap();
    let curve = run_zero_type(&annulus, &annulus, &dilation, &sigma, n_max, &MonteCarlo::new(20, 7), 64).unwrap();
    let first = curve.rows[0].mean;
    let dilation_ok = (first - TAU * LN_2).abs() <= 1e-6
        && curve.rows[1..].iter().all(|r| r.mean.abs() <= 1e-9 && r.q95 <= 1e-9);

    // Radial supports [a, b] separate after ⌈log_r(b/a)⌉ + 1 steps.
    let (a, b, r) = (1.0f64, 2.0f64, 2.0f64);
    let n_star = ((b / a).ln() / r.ln()).ceil() as usize + 1;
    let hull = run_zero_type(&annulus, &annulus, &hull_map(), &sigma, n_max, &MonteCarlo::new(1000, 8), 64).unwrap();
    let reached = hull.first_below(1e-9);
    let hull_ok = reached.is_some_and(|n| n <= n_star);
    Outcome::new(
        dilation_ok && hull_ok,
        format!(
            "dilation n=0 {first:.9} (2π ln 2 = {:.9}); hull q95 ≤ 1e-9 from n = {reached:?}, bound {n_star}",
            TAU * LN_2
        ),
    )
}

fn mixing() -> Outcome {
    let sigma = IntensityMeasure::log_radial(2f64.powi(-12), 4.0, 1.0).unwrap();
    let hs = [
        TestFunction::indicator(Region::sector(1.0, 2.0, 0.0, 1.0)).unwrap(),
        TestFunction::indicator(Region::sector(1.0, 2.0, 2.0, 1.5)).unwrap(),
    ];
    let grid: Vec<usize> = (0..=6).collect();
    let maps = [("deterministic", make_dilation_rotation(2.0, 0.7).unwrap()), ("hull", hull_map())];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, tau) in &maps {
        for powers in [[1, 1], [2, 1]] {
            let rows = run_mixing(
                &hs,
                &powers,
                &MixingSchedule::linear(2),
                tau,
                &sigma,
                &grid,
                &MonteCarlo::new(REPLICATES, 9),
                &Quadrature::default(),
            )
            .unwrap();
            let last = rows.last().unwrap();
            pass &= last.passes();
            parts.push(format!("{name} l={powers:?} z(6)={:.3}", last.z));
        }
    }
    Outcome::new(pass, parts.join(", "))
}

fn pmix(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_pmix"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("pmix runs");
    out.stdout
}

fn reproducibility() -> Outcome {
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let runs = [
        ("sample", "sample.cfg"),
        ("check-mecke", "mecke.cfg"),
        ("check-moments", "moments.cfg"),
        ("check-invariance", "invariance_hull.cfg"),
        ("check-vanishing", "vanishing_hull.cfg"),
        ("zero-type", "zero_type_hull.cfg"),
        ("mixing", "mixing_hull.cfg"),
    ];
    let dir = std::env::temp_dir().join(format!("pmix-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut mismatches = Vec::new();
    for (cmd, cfg) in runs {
        let cfg = examples.join(cfg);
        let cfg = cfg.to_str().unwrap();
        let outputs: Vec<Vec<u8>> = [("1", "a"), ("1", "b"), ("8", "c")]
            .iter()
            .map(|(workers, tag)| {
                let path = dir.join(format!("{cmd}-{tag}.out"));
                pmix(&[cmd, "--config", cfg, "--workers", workers, "--out", path.to_str().unwrap()]);
                std::fs::read(&path).unwrap_or_default()
            })
            .collect();
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            mismatches.push(cmd);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Outcome::new(
        mismatches.is_empty(),
        format!("{} commands compared, mismatches {mismatches:?}", runs.len()),
    )
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("AC1 partition counts are Bell numbers", Duration::from_secs(1), bell_numbers),
        ("AC2 Poisson moments match pmf sums", Duration::from_secs(1), poisson_moments),
        ("AC3 first-moment identity", Duration::from_secs(120), mecke),
        ("AC4 joint moment identity", Duration::from_secs(600), joint_moments),
        ("AC5 covariance at n = 0", Duration::MAX, covariance_at_zero),
        ("AC6 vanishing condition", Duration::from_secs(300), vanishing),
        ("AC7 invariance of the Poisson law", Duration::from_secs(600), invariance),
        ("AC8 zero-type decay", Duration::from_secs(300), zero_type),
        ("AC9 mixing of order 2", Duration::from_secs(1200), mixing),
        ("AC10 byte-identical CLI output", Duration::MAX, reproducibility),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        if !pass {
            failures += 1;
        }
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s over budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64())
        };
        println!(
            "{} {name}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    if failures > 0 {
        println!("{failures} of 10 criteria failed");
        std::process::exit(1);
    }
}
