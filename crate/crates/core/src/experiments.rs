//! Replicated experiments: paired identity checks, invariance of the Poisson
//! law under a pushforward, zero-type decay curves and mixing tables.
//!
//! Every experiment takes a [`MonteCarlo`] plan, so a `(seed, replicates)`
//! pair fixes the output bit for bit regardless of the worker count.

use serde::Serialize;

use crate::config_space::{Configuration, RandomIntegrand};
use crate::error::{Error, Result};
use crate::intensity::{quadrature_nodes, IntensityMeasure, Quadrature, Region, TestFunction};
use crate::partitions::{deterministic_integrand_moment, deterministic_moment, MomentIdentity};
use crate::stats::{quantile, z_score, Estimate, MonteCarlo, VarianceEstimate};
use crate::transforms::{MixingSchedule, Orbit, Transformation};

/// Two-sided acceptance bound on `|z|`.
pub const Z_THRESHOLD: f64 = 4.0;

/// Largest total power for deterministic moment checks.
pub const MAX_DETERMINISTIC_ORDER: usize = 6;

/// What an estimate is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Reference {
    /// A value computed without sampling.
    Exact(f64),
    /// A second estimate from the same replicates.
    Paired(f64),
}

impl Reference {
    pub fn value(&self) -> f64 {
        match self {
            Reference::Exact(v) | Reference::Paired(v) => *v,
        }
    }
}

/// One estimate, its reference and the resulting z-score.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatReport {
    pub label: String,
    pub estimate: f64,
    pub reference: Reference,
    pub std_error: f64,
    pub z_score: f64,
    pub n_replicates: usize,
    pub seed: u64,
}

impl StatReport {
    pub fn passes(&self) -> bool {
        self.z_score.abs() <= Z_THRESHOLD
    }

    /// Sample mean of `samples` against an exact value.
    pub fn against_exact(label: impl Into<String>, samples: &[f64], exact: f64, seed: u64) -> Self {
        let est = Estimate::from_samples(samples);
        Self {
            label: label.into(),
            estimate: est.mean,
            reference: Reference::Exact(exact),
            std_error: est.std_error,
            z_score: z_score(est.mean, exact, est.std_error),
            n_replicates: samples.len(),
            seed,
        }
    }

    /// Mean of `lhs` against mean of `rhs`, with the standard error of the
    /// per-replicate differences.
    pub fn paired(label: impl Into<String>, lhs: &[f64], rhs: &[f64], seed: u64) -> Self {
        let diffs: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let d = Estimate::from_samples(&diffs);
        let l = Estimate::from_samples(lhs);
        let r = Estimate::from_samples(rhs);
        Self {
            label: label.into(),
            estimate: l.mean,
            reference: Reference::Paired(r.mean),
            std_error: d.std_error,
            z_score: z_score(d.mean, 0.0, d.std_error),
            n_replicates: lhs.len(),
            seed,
        }
    }
}

/// `E[∫ u dω]` against `E[∫ ε⁺_x u(x, ω) σ(dx)]` on shared configurations.
pub fn run_mecke_check(
    u: &RandomIntegrand,
    sigma: &IntensityMeasure,
    mc: &MonteCarlo,
) -> Result<StatReport> {
    let identity = MomentIdentity::new(std::slice::from_ref(u), &[1], sigma)?;
    let pairs = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        Ok((identity.lhs(&omega), identity.rhs_sample(&omega, rng)))
    })?;
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(StatReport::paired(
        format!("mecke[{}]", u.label()),
        &lhs,
        &rhs,
        mc.seed,
    ))
}

fn moment_label(us: &[RandomIntegrand], powers: &[usize]) -> String {
    let factors: Vec<String> = us
        .iter()
        .zip(powers)
        .map(|(u, n)| format!("(∫{})^{n}", u.label()))
        .collect();
    format!("E[{}]", factors.join("·"))
}

/// `E[Π_i (∫ u_i dω)^{n_i}]` against the partition expansion: exact when
/// every integrand ignores the configuration, otherwise a paired Monte Carlo
/// estimate of the right side.
pub fn run_moment_check(
    us: &[RandomIntegrand],
    powers: &[usize],
    sigma: &IntensityMeasure,
    mc: &MonteCarlo,
    quad: &Quadrature,
) -> Result<StatReport> {
    if us.len() != powers.len() {
        return Err(Error::SizeMismatch(format!(
            "{} integrands but {} powers",
            us.len(),
            powers.len()
        )));
    }
    let label = moment_label(us, powers);
    if us.iter().all(RandomIntegrand::is_deterministic) {
        let n: usize = powers.iter().sum();
        if n > MAX_DETERMINISTIC_ORDER {
            return Err(Error::PartitionSizeOutOfRange(n));
        }
        let exact = deterministic_integrand_moment(us, powers, sigma, quad)?;
        let lhs = mc.run(|_, rng| Ok(moment_lhs(us, powers, &sigma.sample_poisson(rng))))?;
        return Ok(StatReport::against_exact(label, &lhs, exact, mc.seed));
    }
    let identity = MomentIdentity::new(us, powers, sigma)?;
    let pairs = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        Ok((identity.lhs(&omega), identity.rhs_sample(&omega, rng)))
    })?;
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(StatReport::paired(label, &lhs, &rhs, mc.seed))
}

fn moment_lhs(us: &[RandomIntegrand], powers: &[usize], omega: &Configuration) -> f64 {
    us.iter()
        .zip(powers)
        .map(|(u, &n)| {
            let s: f64 = omega.iter().map(|x| u.eval(x, omega)).sum();
            s.powi(n as i32)
        })
        .product()
}

/// Count statistics of `τ_*ω` in each region against the Poisson values
/// `E N = Var N = σ(R)` and `E[N(N−1)] = σ(R)²`, three reports per region.
///
/// With a `safe_zone`, any point outside it whose image lands in a region is
/// a hard error: its preimage reaches the edge of the sampled window.
pub fn run_invariance_check(
    tau: &Transformation,
    sigma: &IntensityMeasure,
    regions: &[Region],
    safe_zone: Option<&Region>,
    mc: &MonteCarlo,
) -> Result<Vec<StatReport>> {
    let masses = regions
        .iter()
        .map(|r| sigma.mass(r))
        .collect::<Result<Vec<_>>>()?;
    let counts = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        let map = tau.bind(&omega);
        let mut counts = vec![0usize; regions.len()];
        for x in &omega {
            let y = map(x);
            for (c, region) in counts.iter_mut().zip(regions) {
                if region.contains(&y) {
                    if safe_zone.is_some_and(|z| !z.contains(x)) {
                        return Err(Error::PreimageEscape(format!(
                            "{region}: {x} maps to {y} from outside the safe zone"
                        )));
                    }
                    *c += 1;
                }
            }
        }
        Ok(counts)
    })?;
    let mut reports = Vec::with_capacity(3 * regions.len());
    for (j, (region, &mass)) in regions.iter().zip(&masses).enumerate() {
        let n: Vec<f64> = counts.iter().map(|c| c[j] as f64).collect();
        reports.push(StatReport::against_exact(
            format!("mean N({region})"),
            &n,
            mass,
            mc.seed,
        ));
        let v = VarianceEstimate::from_samples(&n);
        reports.push(StatReport {
            label: format!("var N({region})"),
            estimate: v.variance,
            reference: Reference::Exact(mass),
            std_error: v.variance_std_error,
            z_score: z_score(v.variance, mass, v.variance_std_error),
            n_replicates: n.len(),
            seed: mc.seed,
        });
        let factorial: Vec<f64> = n.iter().map(|&k| if k < 1.0 { 0.0 } else { k * (k - 1.0) }).collect();
        reports.push(StatReport::against_exact(
            format!("E[N(N-1)]({region})"),
            &factorial,
            mass * mass,
            mc.seed,
        ));
    }
    Ok(reports)
}

/// One row of a zero-type decay curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Summary of `I_n(ω) = ∫ g(x) h(τ⁽ⁿ⁾(x, ω)) σ(dx)` across replicates,
/// for `n = 0, 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub rows: Vec<DecayRow>,
    pub n_replicates: usize,
    pub seed: u64,
}

impl DecayCurve {
    /// First `n` with `q95 ≤ tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.q95 <= tol).map(|r| r.n)
    }
}

/// Smallest window inner radius for which the preimages of a support with
/// inner radius `support_inner` under up to `k_max` iterates of a map with
/// dilation factor `r` stay inside the window.
pub fn required_inner_radius(support_inner: f64, r: f64, k_max: usize) -> f64 {
    support_inner / r.powi(k_max as i32)
}

/// Checks that every support lies in the window and, for dilating maps on
/// annular windows, that the window reaches far enough towards the origin
/// for `k_max` iterates.
pub fn check_window(
    sigma: &IntensityMeasure,
    supports: &[&Region],
    tau: &Transformation,
    k_max: usize,
) -> Result<()> {
    for s in supports {
        if !s.is_within(sigma.window()) {
            return Err(Error::RegionOutsideWindow {
                region: s.to_string(),
                window: sigma.window().to_string(),
            });
        }
    }
    let (Some(r), Region::Sector { inner, .. }) = (tau.dilation_factor(), sigma.window()) else {
        return Ok(());
    };
    let needed = supports
        .iter()
        .map(|s| required_inner_radius(s.inner_radius(), r, k_max))
        .fold(f64::INFINITY, f64::min);
    if *inner > needed * (1.0 + 1e-12) {
        return Err(Error::WindowTooSmall {
            required: needed,
            actual: *inner,
            n_max: k_max,
        });
    }
    Ok(())
}

/// Decay of `⟨g, h∘τ⁽ⁿ⁾⟩` for `n = 0..=n_max`, with `g` integrated by a
/// fixed midpoint grid of `resolution` nodes per axis.
pub fn run_zero_type(
    g: &TestFunction,
    h: &TestFunction,
    tau: &Transformation,
    sigma: &IntensityMeasure,
    n_max: usize,
    mc: &MonteCarlo,
    resolution: usize,
) -> Result<DecayCurve> {
    check_window(sigma, &[g.support(), h.support()], tau, n_max)?;
    let nodes = quadrature_nodes(sigma, g.support(), resolution, |x| g.eval(x))?;
    let samples = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        let orbit = Orbit::new(tau, &omega, n_max)?;
        let mut acc = vec![0.0; n_max + 1];
        for (x, w) in &nodes {
            orbit.trajectory(x, |k, y| acc[k] += w * h.eval(y));
        }
        Ok(acc)
    })?;
    let rows = (0..=n_max)
        .map(|n| {
            let xs: Vec<f64> = samples.iter().map(|s| s[n]).collect();
            let est = Estimate::from_samples(&xs);
            DecayRow {
                n,
                mean: est.mean,
                std_error: est.std_error,
                q05: quantile(&xs, 0.05),
                q95: quantile(&xs, 0.95),
            }
        })
        .collect();
    Ok(DecayCurve {
        rows,
        n_replicates: mc.replicates,
        seed: mc.seed,
    })
}

/// Joint moment along the iterate schedule against the product of the
/// stationary moments, for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRow {
    pub n: usize,
    pub joint_estimate: f64,
    pub product_reference: f64,
    pub std_error: f64,
    pub z: f64,
    pub n_replicates: usize,
    pub seed: u64,
}

impl MixingRow {
    pub fn passes(&self) -> bool {
        self.z.abs() <= Z_THRESHOLD
    }
}

fn validate_mixing(
    hs: &[TestFunction],
    powers: &[usize],
    schedule: &MixingSchedule,
    n_grid: &[usize],
) -> Result<()> {
    schedule.validate()?;
    let m = hs.len();
    if !(1..=3).contains(&m) {
        return Err(Error::InvalidParameter(format!("mixing order {m} must lie in 1..=3")));
    }
    if powers.len() != m || schedule.order() < m {
        return Err(Error::SizeMismatch(format!(
            "{m} functions, {} powers, schedule of order {}",
            powers.len(),
            schedule.order()
        )));
    }
    let total: usize = powers.iter().sum();
    if total > 4 {
        return Err(Error::PartitionSizeOutOfRange(total));
    }
    if let Some(h) = hs.iter().find(|h| h.sup_norm() > 1.0) {
        return Err(Error::InvalidParameter(format!("{} is not bounded by 1", h.label())));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be nonempty and strictly increasing".into()));
    }
    Ok(())
}

/// For each `n` in `n_grid`, estimates `E[Π_i (∫ h_i d(τ_*^{k_{i,n}} ω))^{l_i}]`
/// and compares it with `Π_i E[(∫ h_i dω)^{l_i}]`, computed exactly.
#[allow(clippy::too_many_arguments)]
pub fn run_mixing(
    hs: &[TestFunction],
    powers: &[usize],
    schedule: &MixingSchedule,
    tau: &Transformation,
    sigma: &IntensityMeasure,
    n_grid: &[usize],
    mc: &MonteCarlo,
    quad: &Quadrature,
) -> Result<Vec<MixingRow>> {
    validate_mixing(hs, powers, schedule, n_grid)?;
    let m = hs.len();
    let n_last = *n_grid.last().expect("validated nonempty");
    let depth = schedule.iterates(m, n_last);
    check_window(
        sigma,
        &hs.iter().map(TestFunction::support).collect::<Vec<_>>(),
        tau,
        depth,
    )?;
    let product = hs
        .iter()
        .zip(powers)
        .map(|(h, &l)| deterministic_moment(std::slice::from_ref(h), &[l], sigma, quad))
        .product::<Result<f64>>()?;
    let samples = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        let orbit = Orbit::new(tau, &omega, depth)?;
        Ok(n_grid
            .iter()
            .map(|&n| {
                hs.iter()
                    .zip(powers)
                    .enumerate()
                    .map(|(i, (h, &l))| {
                        let k = schedule.iterates(i + 1, n);
                        let s: f64 = orbit.positions(k).iter().map(|y| h.eval(y)).sum();
                        s.powi(l as i32)
                    })
                    .product::<f64>()
            })
            .collect::<Vec<f64>>())
    })?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let xs: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let est = Estimate::from_samples(&xs);
            MixingRow {
                n,
                joint_estimate: est.mean,
                product_reference: product,
                std_error: est.std_error,
                z: z_score(est.mean, product, est.std_error),
                n_replicates: xs.len(),
                seed: mc.seed,
            }
        })
        .collect())
}
