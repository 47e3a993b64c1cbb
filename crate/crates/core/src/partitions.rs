//! Set partitions and the joint moment identity for Poisson integrals.
//!
//! For integrands `u₁, …, u_p` and powers `n₁, …, n_p` with `n = Σ nᵢ`,
//!
//! ```text
//! E[Π_i (∫ u_i dω)^{n_i}] = Σ_P E[∫_{X^k} ε⁺_{x₁…x_k} Π_j Π_i u_i(x_j, ω)^{l_{i,j}} σ(dx₁)…σ(dx_k)]
//! ```
//!
//! where `P = {P₁, …, P_k}` runs over the partitions of `{1, …, n}` and
//! `l_{i,j}` counts the elements of block `P_j` that fall in the `i`-th group
//! of consecutive indices. With `p = n = 1` this is the Mecke identity.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;

use crate::config_space::{Configuration, Point, RandomIntegrand};
use crate::error::{Error, Result};
use crate::intensity::{
    integrate_sigma, IntensityMeasure, Quadrature, Region, RestrictedMeasure, TestFunction,
};
use crate::stats::{Estimate, MonteCarlo};

/// Largest ground set for which partitions are enumerated.
pub const MAX_PARTITION_SIZE: usize = 8;
/// Largest total power accepted for random integrands.
pub const MAX_RANDOM_ORDER: usize = 4;

/// A partition of `{0, …, n−1}` in canonical form: every block sorted, blocks
/// ordered by their smallest element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl SetPartition {
    /// Validates and canonicalises `blocks` as a partition of `{0, …, n−1}`.
    pub fn from_blocks(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidParameter("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e >= n || std::mem::replace(&mut seen[e], true) {
                    return Err(Error::InvalidParameter(format!(
                        "element {e} is out of range or repeated"
                    )));
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::InvalidParameter("blocks do not cover the ground set".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks, n })
    }

    fn from_growth_string(labels: &[usize]) -> Self {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (e, &b) in labels.iter().enumerate() {
            blocks[b].push(e);
        }
        Self {
            blocks,
            n: labels.len(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// One-based block notation, e.g. `{1,3}{2}`.
impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            let items: Vec<String> = block.iter().map(|e| (e + 1).to_string()).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

/// All partitions of an `n`-element set, `1 ≤ n ≤ 8`, in lexicographic
/// order of their restricted growth strings.
pub fn enumerate_partitions(n: usize) -> Result<Vec<SetPartition>> {
    if !(1..=MAX_PARTITION_SIZE).contains(&n) {
        return Err(Error::PartitionSizeOutOfRange(n));
    }
    let mut out = Vec::new();
    // labels[i] ≤ 1 + max(labels[..i]); prefix_max[i] = max(labels[..=i]).
    let mut labels = vec![0usize; n];
    let mut prefix_max = vec![0usize; n];
    loop {
        out.push(SetPartition::from_growth_string(&labels));
        let Some(i) = (1..n).rev().find(|&i| labels[i] <= prefix_max[i - 1]) else {
            break;
        };
        labels[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(labels[i]);
        for j in i + 1..n {
            labels[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
    Ok(out)
}

/// Block-by-group exponent counts of a partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentMatrix {
    /// `counts[j][i]`: elements of block `j` lying in group `i`.
    counts: Vec<Vec<usize>>,
    group_sizes: Vec<usize>,
}

impl ExponentMatrix {
    /// `l_{i,j}` for group `i` and block `j`, both zero-based.
    pub fn get(&self, group: usize, block: usize) -> usize {
        self.counts[block][group]
    }

    /// The exponents `(l_{1,j}, …, l_{p,j})` of block `j`.
    pub fn block(&self, block: usize) -> &[usize] {
        &self.counts[block]
    }

    pub fn blocks(&self) -> usize {
        self.counts.len()
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Splits `{0, …, n−1}` into consecutive groups of the given sizes and counts
/// how many elements of each block land in each group.
pub fn exponent_matrix(partition: &SetPartition, group_sizes: &[usize]) -> Result<ExponentMatrix> {
    let total: usize = group_sizes.iter().sum();
    if total != partition.n() {
        return Err(Error::SizeMismatch(format!(
            "group sizes sum to {total}, partition has {} elements",
            partition.n()
        )));
    }
    let mut group_of = Vec::with_capacity(total);
    for (i, &size) in group_sizes.iter().enumerate() {
        group_of.extend(std::iter::repeat(i).take(size));
    }
    let counts = partition
        .blocks()
        .iter()
        .map(|block| {
            let mut row = vec![0; group_sizes.len()];
            for &e in block {
                row[group_of[e]] += 1;
            }
            row
        })
        .collect();
    Ok(ExponentMatrix {
        counts,
        group_sizes: group_sizes.to_vec(),
    })
}

fn exponent_matrices(powers: &[usize], cap: usize) -> Result<Vec<ExponentMatrix>> {
    let n: usize = powers.iter().sum();
    if n > cap {
        return Err(Error::PartitionSizeOutOfRange(n));
    }
    enumerate_partitions(n)?
        .iter()
        .map(|p| exponent_matrix(p, powers))
        .collect()
}

/// Exact `E[Π_i (∫ h_i dω)^{n_i}]` for deterministic `h_i`, as a sum over
/// partitions of products of `∫ Π_i h_i^{l_{i,j}} dσ`.
pub fn deterministic_moment(
    hs: &[TestFunction],
    powers: &[usize],
    sigma: &IntensityMeasure,
    quad: &Quadrature,
) -> Result<f64> {
    if hs.len() != powers.len() {
        return Err(Error::SizeMismatch(format!(
            "{} functions but {} powers",
            hs.len(),
            powers.len()
        )));
    }
    let supports: Vec<&Region> = hs.iter().map(TestFunction::support).collect();
    moment_from_blocks(powers, |exps| {
        let Some(first) = exps.iter().position(|&e| e > 0) else {
            return Ok(1.0);
        };
        let h = |x: &Point| {
            hs.iter()
                .zip(exps)
                .map(|(h, &e)| h.eval(x).powi(e as i32))
                .product()
        };
        integrate_sigma(&h, sigma, supports[first], quad)
    })
}

/// As [`deterministic_moment`], for integrands that ignore the configuration.
pub(crate) fn deterministic_integrand_moment(
    us: &[RandomIntegrand],
    powers: &[usize],
    sigma: &IntensityMeasure,
    quad: &Quadrature,
) -> Result<f64> {
    let empty = Configuration::empty();
    moment_from_blocks(powers, |exps| {
        let Some(first) = exps.iter().position(|&e| e > 0) else {
            return Ok(1.0);
        };
        let support = us[first]
            .support()
            .ok_or_else(|| Error::MissingSupport(us[first].label().to_string()))?;
        let h = |x: &Point| {
            us.iter()
                .zip(exps)
                .map(|(u, &e)| u.eval(x, &empty).powi(e as i32))
                .product()
        };
        integrate_sigma(&h, sigma, support, quad)
    })
}

/// `Σ_P Π_j block_integral(l_{·,j})`, caching block integrals by exponent
/// vector.
fn moment_from_blocks(
    powers: &[usize],
    mut block_integral: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<f64> {
    if powers.iter().sum::<usize>() == 0 {
        return Ok(1.0);
    }
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut total = 0.0;
    for matrix in exponent_matrices(powers, MAX_PARTITION_SIZE)? {
        let mut term = 1.0;
        for j in 0..matrix.blocks() {
            let exps = matrix.block(j);
            let v = match cache.get(exps) {
                Some(v) => *v,
                None => {
                    let v = block_integral(exps)?;
                    cache.insert(exps.to_vec(), v);
                    v
                }
            };
            term *= v;
        }
        total += term;
    }
    Ok(total)
}

/// Both sides of the joint moment identity for a fixed family of random
/// integrands, sampled one configuration at a time so that callers can pair
/// them on a shared `ω`.
#[derive(Clone, Debug)]
pub struct MomentIdentity {
    integrands: Vec<RandomIntegrand>,
    powers: Vec<usize>,
    terms: Vec<ExponentMatrix>,
    proposal: RestrictedMeasure,
}

impl MomentIdentity {
    /// Every integrand must declare a support. Points for the right side
    /// are drawn from `σ` restricted to a region enclosing all supports.
    pub fn new(us: &[RandomIntegrand], powers: &[usize], sigma: &IntensityMeasure) -> Result<Self> {
        if us.len() != powers.len() || us.is_empty() {
            return Err(Error::SizeMismatch(format!(
                "{} integrands but {} powers",
                us.len(),
                powers.len()
            )));
        }
        let supports = us
            .iter()
            .map(|u| u.support().ok_or_else(|| Error::MissingSupport(u.label().to_string())))
            .collect::<Result<Vec<_>>>()?;
        let window = sigma.window();
        let region = Region::enclosing(&supports)
            .and_then(|r| r.intersect(window))
            .filter(|r| r.validate().is_ok() && r.is_within(window))
            .unwrap_or_else(|| window.clone());
        Ok(Self {
            integrands: us.to_vec(),
            powers: powers.to_vec(),
            terms: exponent_matrices(powers, MAX_RANDOM_ORDER)?,
            proposal: sigma.restricted(&region)?,
        })
    }

    pub fn order(&self) -> usize {
        self.powers.iter().sum()
    }

    /// Region the right-side points are drawn from.
    pub fn proposal_region(&self) -> &Region {
        self.proposal.region()
    }

    /// `Π_i (∫ u_i dω)^{n_i}`.
    pub fn lhs(&self, omega: &Configuration) -> f64 {
        self.integrands
            .iter()
            .zip(&self.powers)
            .map(|(u, &n)| {
                let s: f64 = omega.iter().map(|x| u.eval(x, omega)).sum();
                s.powi(n as i32)
            })
            .product()
    }

    /// One unbiased draw of the right side given `ω`: for each partition,
    /// `k` fresh points from the proposal and the importance weight
    /// `mass^k`.
    pub fn rhs_sample<R: Rng + ?Sized>(&self, omega: &Configuration, rng: &mut R) -> f64 {
        let mass = self.proposal.mass();
        if mass <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut xs = Vec::with_capacity(self.order());
        for matrix in &self.terms {
            let k = matrix.blocks();
            xs.clear();
            xs.extend((0..k).map(|_| self.proposal.sample_point(rng)));
            let eta = omega.add_points(&xs);
            let mut term = mass.powi(k as i32);
            for (j, x) in xs.iter().enumerate() {
                for (u, &l) in self.integrands.iter().zip(matrix.block(j)) {
                    if l > 0 {
                        term *= u.eval(x, &eta).powi(l as i32);
                    }
                }
                if term == 0.0 {
                    break;
                }
            }
            total += term;
        }
        total
    }
}

/// Monte Carlo estimate of the right side of the joint moment identity.
pub fn joint_moment_rhs(
    us: &[RandomIntegrand],
    powers: &[usize],
    sigma: &IntensityMeasure,
    mc: &MonteCarlo,
) -> Result<Estimate> {
    let identity = MomentIdentity::new(us, powers, sigma)?;
    let samples = mc.run(|_, rng| {
        let omega = sigma.sample_poisson(rng);
        Ok(identity.rhs_sample(&omega, rng))
    })?;
    Ok(Estimate::from_samples(&samples))
}

/// Monte Carlo estimate of `E[∫ ε⁺_x u(x, ω) σ(dx)]`.
pub fn mecke_rhs(u: &RandomIntegrand, sigma: &IntensityMeasure, mc: &MonteCarlo) -> Result<Estimate> {
    joint_moment_rhs(std::slice::from_ref(u), &[1], sigma, mc)
}
