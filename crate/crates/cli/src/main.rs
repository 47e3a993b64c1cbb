//! `pmix`: reproducible Poisson point process experiments driven by a TOML
//! configuration file.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poisson_mixing::experiments::{
    check_window, required_inner_radius, run_invariance_check, run_mecke_check, run_mixing,
    run_moment_check, run_zero_type,
};
use poisson_mixing::transforms::{check_vanishing, MixingSchedule, Transformation, VanishingWitness};
use poisson_mixing::{Error, IntensityMeasure, MonteCarlo, Quadrature, Region, StatReport};
use rand::Rng;
use sha2::{Digest, Sha256};

use config::RunConfig;
use output::{CheckRow, Report};

#[derive(Parser)]
#[command(name = "pmix", version, about = "Poisson point process transformation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one Poisson configuration and write its points as CSV.
    Sample(Common),
    /// Paired check of the first-moment identity for each configured integrand.
    CheckMecke(Common),
    /// Paired checks of joint moments against their partition expansion.
    CheckMoments(Common),
    /// Count statistics of the pushforward against the Poisson law.
    CheckInvariance(Common),
    /// Vanishing of iterated differences of the transformation's iterates.
    CheckVanishing(Common),
    /// Decay curve of the correlation between a function and its iterate.
    ZeroType(Common),
    /// Joint moments along iterates against the product of stationary moments.
    Mixing(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    /// Unreadable or invalid configuration: exit 2.
    Config(String),
    /// Error while running: exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

/// Everything a subcommand needs, resolved from the file and flags.
struct Run {
    config: RunConfig,
    hash: String,
    seed: u64,
    mc: MonteCarlo,
    sigma: IntensityMeasure,
    out: Option<PathBuf>,
    quiet: bool,
}

impl Run {
    fn load(args: &Common) -> Result<Self, Failure> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| config_err(format!("{}: {e}", args.config.display())))?;
        let config: RunConfig = toml::from_str(&text).map_err(config_err)?;
        let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
        let seed = args.seed.unwrap_or(config.seed);
        let mut mc = MonteCarlo::new(config.replicates, seed);
        if let Some(w) = args.workers {
            mc = mc.with_workers(w);
        }
        let sigma = config.measure.build().map_err(config_err)?;
        let out = args.out.clone().or_else(|| config.out.clone());
        Ok(Self {
            config,
            hash,
            seed,
            mc,
            sigma,
            out,
            quiet: args.quiet,
        })
    }

    fn transform(&self) -> Result<Transformation, Failure> {
        self.config
            .transform
            .as_ref()
            .ok_or_else(|| config_err("missing [transform] section"))?
            .build()
            .map_err(config_err)
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
        s.as_ref().ok_or_else(|| config_err(format!("missing [{name}] section")))
    }

    fn report(&self, command: &str) -> Report {
        Report::new(command, &self.hash, self.seed, self.config.replicates, &self.config)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn emit(&self, body: &str) -> Result<(), Failure> {
        output::write(self.out.as_deref(), body).map_err(|e| Failure::Runtime(e.to_string()))
    }

    fn finish(&self, report: Report) -> Result<bool, Failure> {
        for c in &report.checks {
            self.note(format!(
                "{} {}: estimate {} reference {} z {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.label,
                c.estimate,
                c.reference,
                c.z_score.map_or("inf".into(), |z| format!("{z:.3}"))
            ));
        }
        let pass = report.pass;
        self.emit(&report.to_json())?;
        Ok(pass)
    }
}

fn cmd_sample(run: &Run) -> Result<bool, Failure> {
    let mut rng = run.mc.replicate_rng(0);
    let omega = run.sigma.sample_poisson(&mut rng);
    run.note(format!("{} points", omega.len()));
    let dim = run.sigma.dim();
    let rows = omega.iter().map(|p| p.coords().to_vec());
    run.emit(&output::csv(&run.hash, run.seed, &output::coord_header(dim), rows))?;
    Ok(true)
}

fn cmd_mecke(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.mecke, "mecke")?;
    let mut report = run.report("check-mecke");
    for spec in &section.integrands {
        let u = spec.build().map_err(config_err)?;
        report.push(&run_mecke_check(&u, &run.sigma, &run.mc)?);
    }
    run.finish(report)
}

fn cmd_moments(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.moments, "moments")?;
    let mut report = run.report("check-moments");
    for case in &section.checks {
        let us = case
            .integrands
            .iter()
            .map(|s| s.build())
            .collect::<Result<Vec<_>, _>>()
            .map_err(config_err)?;
        let r = run_moment_check(&us, &case.powers, &run.sigma, &run.mc, &Quadrature::default())?;
        report.push(&r);
    }
    run.finish(report)
}

fn cmd_invariance(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.invariance, "invariance")?;
    let tau = run.transform()?;
    let reports = run_invariance_check(
        &tau,
        &run.sigma,
        &section.regions,
        section.safe_zone.as_ref(),
        &run.mc,
    )?;
    let mut report = run.report("check-invariance");
    for r in &reports {
        report.push(r);
    }
    run.finish(report)
}

fn cmd_vanishing(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.vanishing, "vanishing")?;
    if !(1..=3).contains(&section.max_points) || section.max_iterate == 0 {
        return Err(config_err("vanishing needs 1 ≤ max_points ≤ 3 and max_iterate ≥ 1"));
    }
    let tau = run.transform()?;
    let points_region = section.points.clone().unwrap_or_else(|| run.sigma.window().clone());
    let proposal = run.sigma.restricted(&points_region).map_err(config_err)?;
    let draws = MonteCarlo {
        replicates: section.draws,
        ..run.mc
    };
    let outcomes = draws.run(|_, rng| {
        let omega = run.sigma.sample_poisson(rng);
        let m = rng.random_range(1..=section.max_points);
        let xs: Vec<_> = (0..m).map(|_| proposal.sample_point(rng)).collect();
        let ks: Vec<usize> = (0..m).map(|_| rng.random_range(1..=section.max_iterate)).collect();
        Ok(check_vanishing(&tau, &omega, &xs, &ks, section.tol)?.witness)
    })?;
    let failures: Vec<(usize, &VanishingWitness)> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, w)| w.as_ref().map(|w| (i, w)))
        .collect();
    let mut report = run.report("check-vanishing");
    let count = failures.len() as f64;
    report.push_row(CheckRow {
        label: format!("vanishing[{}] failing draws", tau.label()),
        estimate: count,
        reference: 0.0,
        reference_kind: "exact",
        std_error: 0.0,
        z_score: (count == 0.0).then_some(0.0),
        n_replicates: section.draws,
        pass: failures.is_empty(),
    });
    if let Some((i, w)) = failures.first() {
        report.set_witness(*i, w);
        run.note(format!("first failing draw {i}: subsets {:?}, factors {:?}", w.subsets, w.factors));
    }
    run.finish(report)
}

/// Prints the window the truncation protocol needs and refuses to run with
/// a smaller one.
fn guard_window(
    run: &Run,
    tau: &Transformation,
    supports: &[&Region],
    k_max: usize,
) -> Result<(), Failure> {
    if let Some(r) = tau.dilation_factor() {
        let inner = supports
            .iter()
            .map(|s| required_inner_radius(s.inner_radius(), r, k_max))
            .fold(f64::INFINITY, f64::min);
        let outer = supports.iter().map(|s| s.outer_radius()).fold(0.0, f64::max);
        run.note(format!(
            "required window for {k_max} iterates: inner radius ≤ {inner}, outer radius ≥ {outer}"
        ));
    }
    check_window(&run.sigma, supports, tau, k_max).map_err(|e| match e {
        Error::WindowTooSmall { required, actual, n_max } => Failure::Runtime(format!(
            "window too small: inner radius {actual} exceeds the minimum window radius {required} needed for {n_max} iterates"
        )),
        other => Failure::Runtime(other.to_string()),
    })
}

fn cmd_zero_type(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.zero_type, "zero_type")?;
    let tau = run.transform()?;
    let g = section.g.build().map_err(config_err)?;
    let h = section.h.build().map_err(config_err)?;
    guard_window(run, &tau, &[g.support(), h.support()], section.n_max)?;
    let curve = run_zero_type(&g, &h, &tau, &run.sigma, section.n_max, &run.mc, section.resolution)?;
    let rows = curve
        .rows
        .iter()
        .map(|r| vec![r.n as f64, r.mean, r.std_error, r.q05, r.q95]);
    run.emit(&output::csv(&run.hash, run.seed, "n,mean,std_error,q05,q95", rows))?;
    for r in &curve.rows {
        run.note(format!("n={} mean={} q95={}", r.n, r.mean, r.q95));
    }
    Ok(true)
}

fn cmd_mixing(run: &Run) -> Result<bool, Failure> {
    let section = run.section(&run.config.mixing, "mixing")?;
    let tau = run.transform()?;
    let hs = section
        .functions
        .iter()
        .map(|f| f.build())
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err)?;
    let schedule = section
        .schedule
        .clone()
        .unwrap_or_else(|| MixingSchedule::linear(hs.len()));
    schedule.validate().map_err(config_err)?;
    let n_last = *section.n_grid.last().ok_or_else(|| config_err("empty n_grid"))?;
    if schedule.order() < hs.len() {
        return Err(config_err("schedule order is smaller than the number of functions"));
    }
    let k_max = schedule.iterates(hs.len(), n_last);
    let supports: Vec<&Region> = hs.iter().map(|h| h.support()).collect();
    guard_window(run, &tau, &supports, k_max)?;
    let rows = run_mixing(
        &hs,
        &section.powers,
        &schedule,
        &tau,
        &run.sigma,
        &section.n_grid,
        &run.mc,
        &Quadrature::default(),
    )?;
    let csv_rows = rows
        .iter()
        .map(|r| vec![r.n as f64, r.joint_estimate, r.product_reference, r.std_error, r.z]);
    run.emit(&output::csv(
        &run.hash,
        run.seed,
        "n,joint_estimate,product_reference,std_error,z",
        csv_rows,
    ))?;
    for r in &rows {
        run.note(format!(
            "n={} joint={} product={} z={:.3}",
            r.n, r.joint_estimate, r.product_reference, r.z
        ));
    }
    Ok(rows.last().is_some_and(|r| r.passes()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, cmd): (&Common, fn(&Run) -> Result<bool, Failure>) = match &cli.command {
        Command::Sample(a) => (a, cmd_sample),
        Command::CheckMecke(a) => (a, cmd_mecke),
        Command::CheckMoments(a) => (a, cmd_moments),
        Command::CheckInvariance(a) => (a, cmd_invariance),
        Command::CheckVanishing(a) => (a, cmd_vanishing),
        Command::ZeroType(a) => (a, cmd_zero_type),
        Command::Mixing(a) => (a, cmd_mixing),
    };
    match Run::load(args).and_then(|run| cmd(&run)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("pmix: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("pmix: {msg}");
            ExitCode::from(1)
        }
    }
}

impl CheckRow {
    fn from_report(r: &StatReport) -> Self {
        use poisson_mixing::experiments::Reference;
        let (reference, reference_kind) = match r.reference {
            Reference::Exact(v) => (v, "exact"),
            Reference::Paired(v) => (v, "paired"),
        };
        Self {
            label: r.label.clone(),
            estimate: r.estimate,
            reference,
            reference_kind,
            std_error: r.std_error,
            z_score: r.z_score.is_finite().then_some(r.z_score),
            n_replicates: r.n_replicates,
            pass: r.passes(),
        }
    }
}
