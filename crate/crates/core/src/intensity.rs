//! Intensity measures on bounded windows.
//!
//! Two kinds are supported: a homogeneous (Lebesgue) intensity on an
//! axis-aligned box in one or two dimensions, and the log-radial intensity
//! `rate·‖x‖⁻²dx` on a planar annulus `a ≤ ‖x‖ ≤ b`. Masses are analytic
//! wherever a closed form exists; everything else goes through tensor-grid
//! quadrature.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config_space::{Configuration, Point};
use crate::error::{Error, Result};
use crate::experiments::{Reference, StatReport};
use crate::stats::z_score;

/// Relative slack used by containment tests between regions.
const CONTAINMENT_TOL: f64 = 1e-12;

fn full_turn() -> f64 {
    TAU
}

/// A bounded region of the line or the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Axis-aligned box `lo ≤ x ≤ hi` (an interval in one dimension).
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Planar polar sector `inner ≤ ‖x‖ ≤ outer`, angle in
    /// `[start, start + sweep]`. A sweep of `2π` is a full annulus.
    Sector {
        inner: f64,
        outer: f64,
        #[serde(default)]
        start: f64,
        #[serde(default = "full_turn")]
        sweep: f64,
    },
}

impl Region {
    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Region::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn unit_box(dim: usize) -> Self {
        Region::Box {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Region::Sector {
            inner,
            outer,
            start: 0.0,
            sweep: TAU,
        }
    }

    pub fn sector(inner: f64, outer: f64, start: f64, sweep: f64) -> Self {
        Region::Sector {
            inner,
            outer,
            start,
            sweep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.len(),
                        found: hi.len(),
                    });
                }
                if !(1..=2).contains(&lo.len()) {
                    return Err(Error::UnsupportedDimension(lo.len()));
                }
                if lo.iter().chain(hi).any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite(format!("box corner in {self}")));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidParameter(format!("empty box {self}")));
                }
            }
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                if ![inner, outer, start, sweep].iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite(format!("sector parameter in {self}")));
                }
                if *inner < 0.0 || inner > outer {
                    return Err(Error::InvalidParameter(format!(
                        "sector radii must satisfy 0 ≤ inner ≤ outer, got {self}"
                    )));
                }
                if *sweep <= 0.0 || *sweep > TAU * (1.0 + CONTAINMENT_TOL) {
                    return Err(Error::InvalidParameter(format!(
                        "sector sweep must lie in (0, 2π], got {sweep}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Sector { .. } => 2,
        }
    }

    fn is_full_turn(sweep: f64) -> bool {
        sweep >= TAU * (1.0 - CONTAINMENT_TOL)
    }

    /// Closed membership test.
    pub fn contains(&self, x: &Point) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            Region::Box { lo, hi } => x
                .coords()
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (l, h))| l <= c && c <= h),
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                let r2 = x.norm_sq();
                r2 >= inner * inner
                    && r2 <= outer * outer
                    && (Self::is_full_turn(*sweep) || angle_offset(x, *start) <= *sweep)
            }
        }
    }

    /// Membership with a relative safety margin away from the boundary.
    pub fn contains_strict(&self, x: &Point, margin: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            Region::Box { lo, hi } => x.coords().iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| {
                let m = margin * (h - l).abs().max(1e-300);
                l + m < *c && *c < h - m
            }),
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                let r = x.norm();
                let m = margin * (outer - inner).max(1e-300);
                let angular = Self::is_full_turn(*sweep) || {
                    let off = angle_offset(x, *start);
                    off > margin * sweep && off < sweep * (1.0 - margin)
                };
                r > inner + m && r < outer - m && angular
            }
        }
    }

    /// Lebesgue measure of the region.
    pub fn volume(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Region::Sector {
                inner,
                outer,
                sweep,
                ..
            } => 0.5 * sweep * (outer * outer - inner * inner),
        }
    }

    /// Largest distance from the origin to a point of the region.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Region::Sector { outer, .. } => *outer,
        }
    }

    /// Smallest distance from the origin to a point of the region.
    pub fn inner_radius(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| {
                    if *l > 0.0 {
                        l * l
                    } else if *h < 0.0 {
                        h * h
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                .sqrt(),
            Region::Sector { inner, .. } => *inner,
        }
    }

    /// Tight axis-aligned bounding box `(lo, hi)` of a planar or linear region.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                if Self::is_full_turn(*sweep) {
                    return (vec![-outer, -outer], vec![*outer, *outer]);
                }
                let mut angles = vec![*start, start + sweep];
                let first = (start / std::f64::consts::FRAC_PI_2).ceil() as i64;
                let mut k = first;
                while (k as f64) * std::f64::consts::FRAC_PI_2 <= start + sweep {
                    angles.push(k as f64 * std::f64::consts::FRAC_PI_2);
                    k += 1;
                }
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for a in angles {
                    for r in [*inner, *outer] {
                        let p = [r * a.cos(), r * a.sin()];
                        for i in 0..2 {
                            lo[i] = lo[i].min(p[i]);
                            hi[i] = hi[i].max(p[i]);
                        }
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Whether `self ⊆ other`, up to a small relative tolerance. Boxes inside
    /// partial sectors are conservatively reported as not contained.
    pub fn is_within(&self, other: &Region) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let tol = CONTAINMENT_TOL * other.outer_radius().max(1.0);
        match (self, other) {
            (Region::Box { lo, hi }, Region::Box { lo: wl, hi: wh }) => lo
                .iter()
                .zip(hi)
                .zip(wl.iter().zip(wh))
                .all(|((l, h), (a, b))| *l >= a - tol && *h <= b + tol),
            (
                Region::Sector {
                    inner,
                    outer,
                    start,
                    sweep,
                },
                Region::Sector {
                    inner: wi,
                    outer: wo,
                    start: ws,
                    sweep: wsw,
                },
            ) => {
                let radial = *inner >= wi - tol && *outer <= wo + tol;
                let angular = Self::is_full_turn(*wsw) || {
                    let off = (start - ws).rem_euclid(TAU);
                    off + sweep <= wsw + CONTAINMENT_TOL
                };
                radial && angular
            }
            (Region::Sector { .. }, Region::Box { .. }) => {
                let (lo, hi) = self.bounding_box();
                Region::Box { lo, hi }.is_within(other)
            }
            (
                Region::Box { .. },
                Region::Sector {
                    inner: wi,
                    outer: wo,
                    sweep: wsw,
                    ..
                },
            ) => {
                Self::is_full_turn(*wsw)
                    && self.outer_radius() <= wo + tol
                    && self.inner_radius() >= wi - tol
            }
        }
    }

    /// Smallest region of the same family enclosing all of `regions`:
    /// a bounding box for boxes, a covering annulus (or the common sector)
    /// for sectors. `None` for an empty or mixed list.
    pub fn enclosing(regions: &[&Region]) -> Option<Region> {
        let first = *regions.first()?;
        match first {
            Region::Box { lo, hi } => {
                let mut lo = lo.clone();
                let mut hi = hi.clone();
                for r in &regions[1..] {
                    let Region::Box { lo: l, hi: h } = r else {
                        return None;
                    };
                    if l.len() != lo.len() {
                        return None;
                    }
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                Some(Region::Box { lo, hi })
            }
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                let (mut a, mut b) = (*inner, *outer);
                let mut same_angles = true;
                for r in &regions[1..] {
                    let Region::Sector {
                        inner: i,
                        outer: o,
                        start: s,
                        sweep: w,
                    } = r
                    else {
                        return None;
                    };
                    a = a.min(*i);
                    b = b.max(*o);
                    same_angles &= s == start && w == sweep;
                }
                Some(if same_angles {
                    Region::sector(a, b, *start, *sweep)
                } else {
                    Region::annulus(a, b)
                })
            }
        }
    }

    /// Intersection with a window, when it is again a region of this family.
    pub fn intersect(&self, window: &Region) -> Option<Region> {
        match (self, window) {
            (Region::Box { lo, hi }, Region::Box { lo: wl, hi: wh }) if lo.len() == wl.len() => {
                let lo: Vec<f64> = lo.iter().zip(wl).map(|(a, b)| a.max(*b)).collect();
                let hi: Vec<f64> = hi.iter().zip(wh).map(|(a, b)| a.min(*b)).collect();
                let hi = hi.iter().zip(&lo).map(|(h, l)| h.max(*l)).collect();
                Some(Region::Box { lo, hi })
            }
            (
                Region::Sector {
                    inner,
                    outer,
                    start,
                    sweep,
                },
                Region::Sector {
                    inner: wi,
                    outer: wo,
                    sweep: wsw,
                    ..
                },
            ) if Self::is_full_turn(*wsw) => {
                let a = inner.max(*wi);
                let b = outer.min(*wo).max(a);
                Some(Region::sector(a, b, *start, *sweep))
            }
            _ => None,
        }
    }

    /// Points spread along the boundary, for preimage-escape probing.
    fn boundary_probe(&self, per_edge: usize) -> Vec<Point> {
        match self {
            Region::Box { lo, hi } if lo.len() == 1 => vec![Point::x(lo[0]), Point::x(hi[0])],
            Region::Box { lo, hi } => {
                let mut out = Vec::with_capacity(4 * per_edge);
                for i in 0..per_edge {
                    let t = (i as f64 + 0.5) / per_edge as f64;
                    let x = lo[0] + t * (hi[0] - lo[0]);
                    let y = lo[1] + t * (hi[1] - lo[1]);
                    out.extend([
                        Point::xy(x, lo[1]),
                        Point::xy(x, hi[1]),
                        Point::xy(lo[0], y),
                        Point::xy(hi[0], y),
                    ]);
                }
                out
            }
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => {
                let mut out = Vec::new();
                for i in 0..4 * per_edge {
                    let a = start + sweep * (i as f64 + 0.5) / (4 * per_edge) as f64;
                    for r in [*inner, *outer] {
                        if r > 0.0 {
                            out.push(Point::xy(r * a.cos(), r * a.sin()));
                        }
                    }
                }
                if !Self::is_full_turn(*sweep) {
                    for i in 0..per_edge {
                        let r = inner + (outer - inner) * (i as f64 + 0.5) / per_edge as f64;
                        for a in [*start, start + sweep] {
                            out.push(Point::xy(r * a.cos(), r * a.sin()));
                        }
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Box { lo, hi } => write!(f, "box{lo:?}..{hi:?}"),
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } if Self::is_full_turn(*sweep) => {
                let _ = start;
                write!(f, "annulus[{inner}, {outer}]")
            }
            Region::Sector {
                inner,
                outer,
                start,
                sweep,
            } => write!(f, "sector[{inner}, {outer}]×[{start}, {}]", start + sweep),
        }
    }
}

/// Angle of `x` measured counterclockwise from `start`, in `[0, 2π)`.
fn angle_offset(x: &Point, start: f64) -> f64 {
    (x.coord(1).atan2(x.coord(0)) - start).rem_euclid(TAU)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// `rate · dx` on a box.
    Homogeneous,
    /// `rate · ‖x‖⁻² dx` on a planar annulus.
    LogRadial,
}

/// A finite intensity measure `σ` supported on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMeasure {
    kind: MeasureKind,
    window: Region,
    rate: f64,
}

impl IntensityMeasure {
    pub fn homogeneous(window: Region, rate: f64) -> Result<Self> {
        window.validate()?;
        if !matches!(window, Region::Box { .. }) {
            return Err(Error::InvalidParameter(
                "a homogeneous measure needs a box window".into(),
            ));
        }
        Self::check_rate(rate)?;
        Ok(Self {
            kind: MeasureKind::Homogeneous,
            window,
            rate,
        })
    }

    /// `rate · ‖x‖⁻² dx` on the annulus `inner ≤ ‖x‖ ≤ outer`, `0 < inner < outer`.
    pub fn log_radial(inner: f64, outer: f64, rate: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-radial annulus needs 0 < inner < outer, got [{inner}, {outer}]"
            )));
        }
        Self::check_rate(rate)?;
        Ok(Self {
            kind: MeasureKind::LogRadial,
            window: Region::annulus(inner, outer),
            rate,
        })
    }

    fn check_rate(rate: f64) -> Result<()> {
        if rate > 0.0 && rate.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")))
        }
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn window(&self) -> &Region {
        &self.window
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Density with respect to Lebesgue measure; zero outside the window.
    pub fn density(&self, x: &Point) -> f64 {
        if !self.window.contains(x) {
            return 0.0;
        }
        match self.kind {
            MeasureKind::Homogeneous => self.rate,
            MeasureKind::LogRadial => self.rate / x.norm_sq(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.analytic_mass(&self.window)
            .expect("window masses are analytic")
    }

    fn analytic_mass(&self, region: &Region) -> Option<f64> {
        match (self.kind, region) {
            (MeasureKind::Homogeneous, r) => Some(self.rate * r.volume()),
            (
                MeasureKind::LogRadial,
                Region::Sector {
                    inner,
                    outer,
                    sweep,
                    ..
                },
            ) => Some(if outer > inner {
                self.rate * sweep * (outer / inner).ln()
            } else {
                0.0
            }),
            (MeasureKind::LogRadial, Region::Box { .. }) => None,
        }
    }

    pub(crate) fn require_within(&self, region: &Region) -> Result<()> {
        region.validate()?;
        if region.is_within(&self.window) {
            Ok(())
        } else {
            Err(Error::RegionOutsideWindow {
                region: region.to_string(),
                window: self.window.to_string(),
            })
        }
    }

    /// `σ(region)` for a region inside the window.
    pub fn mass(&self, region: &Region) -> Result<f64> {
        self.require_within(region)?;
        if let Some(m) = self.analytic_mass(region) {
            return Ok(m);
        }
        let Region::Box { lo, hi } = region else {
            unreachable!("only log-radial boxes lack a closed form")
        };
        let rate = self.rate;
        Ok(rate * gauss_legendre_box(|x, y| 1.0 / (x * x + y * y), lo, hi, 1e-11))
    }

    /// `σ` restricted to `region`, normalised for sampling.
    pub fn restricted(&self, region: &Region) -> Result<RestrictedMeasure> {
        let mass = self.mass(region)?;
        Ok(RestrictedMeasure {
            kind: self.kind,
            region: region.clone(),
            mass,
        })
    }

    /// A Poisson configuration with intensity `σ`.
    pub fn sample_poisson<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        RestrictedMeasure {
            kind: self.kind,
            region: self.window.clone(),
            mass: self.total_mass(),
        }
        .sample_poisson(rng)
    }
}

/// `σ` restricted to a sub-region of its window.
#[derive(Clone, Debug)]
pub struct RestrictedMeasure {
    kind: MeasureKind,
    region: Region,
    mass: f64,
}

impl RestrictedMeasure {
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// One point from the normalised restriction. Must not be called on a
    /// region of zero mass.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        debug_assert!(self.mass > 0.0, "sampling from a null region");
        match (&self.region, self.kind) {
            (Region::Box { lo, hi }, MeasureKind::Homogeneous) => uniform_in_box(lo, hi, rng),
            (Region::Box { lo, hi }, MeasureKind::LogRadial) => {
                let r_min2 = self.region.inner_radius().powi(2);
                loop {
                    let p = uniform_in_box(lo, hi, rng);
                    if rng.random::<f64>() * p.norm_sq() <= r_min2 {
                        return p;
                    }
                }
            }
            (
                Region::Sector {
                    inner,
                    outer,
                    start,
                    sweep,
                },
                kind,
            ) => {
                let u: f64 = rng.random();
                let r = match kind {
                    MeasureKind::Homogeneous => (inner * inner + u * (outer * outer - inner * inner)).sqrt(),
                    MeasureKind::LogRadial => inner * (u * (outer / inner).ln()).exp(),
                };
                let a = start + sweep * rng.random::<f64>();
                Point::xy(r * a.cos(), r * a.sin())
            }
        }
    }

    pub fn sample_poisson<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let n = sample_poisson_count(self.mass, rng);
        let pts: Vec<Point> = (0..n).map(|_| self.sample_point(rng)).collect();
        Configuration::new(pts).expect("sampled points share the window dimension")
    }
}

/// `N ~ Poisson(mean)`; zero for a null mean.
pub fn sample_poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng) as usize
}

fn uniform_in_box<R: Rng + ?Sized>(lo: &[f64], hi: &[f64], rng: &mut R) -> Point {
    match lo.len() {
        1 => Point::x(lo[0] + rng.random::<f64>() * (hi[0] - lo[0])),
        _ => {
            let x = lo[0] + rng.random::<f64>() * (hi[0] - lo[0]);
            let y = lo[1] + rng.random::<f64>() * (hi[1] - lo[1]);
            Point::xy(x, y)
        }
    }
}

/// `sample_poisson`: a Poisson configuration with intensity `σ`.
pub fn sample_poisson<R: Rng + ?Sized>(sigma: &IntensityMeasure, rng: &mut R) -> Configuration {
    sigma.sample_poisson(rng)
}

/// `sigma_mass`: `σ(region)`.
pub fn sigma_mass(sigma: &IntensityMeasure, region: &Region) -> Result<f64> {
    sigma.mass(region)
}

type PointFn = dyn Fn(&Point) -> f64 + Send + Sync;

/// A bounded, compactly supported function on the window.
#[derive(Clone)]
pub struct TestFunction {
    label: String,
    eval: Arc<PointFn>,
    support: Region,
    sup_norm: f64,
}

impl TestFunction {
    /// `f` is only called inside `support` and must be bounded by `sup_norm`
    /// in absolute value there.
    pub fn new(
        label: impl Into<String>,
        support: Region,
        sup_norm: f64,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        support.validate()?;
        if !(sup_norm >= 0.0 && sup_norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad sup norm {sup_norm}")));
        }
        Ok(Self {
            label: label.into(),
            eval: Arc::new(f),
            support,
            sup_norm,
        })
    }

    pub fn indicator(region: Region) -> Result<Self> {
        Self::new(format!("1[{region}]"), region, 1.0, |_| 1.0)
    }

    pub fn constant(value: f64, region: Region) -> Result<Self> {
        Self::new(format!("{value}·1[{region}]"), region, value.abs(), move |_| value)
    }

    /// Continuous tent on the region, peaking at 1 in its middle: a product
    /// of one-dimensional tents for boxes, a radial tent for sectors.
    pub fn tent(region: Region) -> Result<Self> {
        let label = format!("tent[{region}]");
        let shape: Box<dyn Fn(&Point) -> f64 + Send + Sync> = match &region {
            Region::Box { lo, hi } => {
                let (lo, hi) = (lo.clone(), hi.clone());
                Box::new(move |x| {
                    x.coords()
                        .iter()
                        .zip(lo.iter().zip(&hi))
                        .map(|(c, (l, h))| tent01((c - l) / (h - l)))
                        .product()
                })
            }
            Region::Sector { inner, outer, .. } => {
                let (a, b) = (*inner, *outer);
                Box::new(move |x| tent01((x.norm() - a) / (b - a)))
            }
        };
        Self::new(label, region, 1.0, shape)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        if self.support.contains(x) {
            (self.eval)(x)
        } else {
            0.0
        }
    }
}

fn tent01(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        1.0 - (2.0 * t - 1.0).abs()
    } else {
        0.0
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

/// Tensor-grid midpoint quadrature settings.
///
/// Grids are uniform in the coordinates that make `σ` flat: Cartesian for
/// homogeneous boxes, `(ln r, θ)` for log-radial sectors, `(r²/2, θ)` for
/// homogeneous sectors. With `refine`, the resolution doubles until two
/// successive estimates agree to `rel_tol` or `max_resolution` is reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub resolution: usize,
    pub refine: bool,
    pub rel_tol: f64,
    pub max_resolution: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            resolution: 512,
            refine: true,
            rel_tol: 1e-6,
            max_resolution: 2048,
        }
    }
}

impl Quadrature {
    /// A single pass at `resolution`, no refinement.
    pub fn fixed(resolution: usize) -> Self {
        Self {
            resolution,
            refine: false,
            ..Self::default()
        }
    }
}

/// Visits every quadrature node `(x, weight)` of `σ` on `region`.
pub(crate) fn for_each_node(
    sigma: &IntensityMeasure,
    region: &Region,
    resolution: usize,
    mut visit: impl FnMut(&Point, f64),
) {
    let n = resolution.max(1);
    let rate = sigma.rate;
    match region {
        Region::Box { lo, hi } if lo.len() == 1 => {
            let h = (hi[0] - lo[0]) / n as f64;
            if h <= 0.0 {
                return;
            }
            for i in 0..n {
                let x = Point::x(lo[0] + (i as f64 + 0.5) * h);
                visit(&x, sigma.density(&x) * h);
            }
        }
        Region::Box { lo, hi } => {
            let hx = (hi[0] - lo[0]) / n as f64;
            let hy = (hi[1] - lo[1]) / n as f64;
            if hx <= 0.0 || hy <= 0.0 {
                return;
            }
            let cell = hx * hy;
            for i in 0..n {
                let x = lo[0] + (i as f64 + 0.5) * hx;
                for j in 0..n {
                    let p = Point::xy(x, lo[1] + (j as f64 + 0.5) * hy);
                    let w = match sigma.kind {
                        MeasureKind::Homogeneous => rate * cell,
                        MeasureKind::LogRadial => rate * cell / p.norm_sq(),
                    };
                    visit(&p, w);
                }
            }
        }
        Region::Sector {
            inner,
            outer,
            start,
            sweep,
        } => {
            if outer <= inner {
                return;
            }
            let (t0, t1, radius): (f64, f64, fn(f64) -> f64) = match sigma.kind {
                MeasureKind::LogRadial => (inner.ln(), outer.ln(), f64::exp),
                MeasureKind::Homogeneous => (
                    0.5 * inner * inner,
                    0.5 * outer * outer,
                    |s: f64| (2.0 * s).sqrt(),
                ),
            };
            let ht = (t1 - t0) / n as f64;
            let ha = sweep / n as f64;
            let w = rate * ht * ha;
            let dirs: Vec<(f64, f64)> = (0..n)
                .map(|j| {
                    let a = start + (j as f64 + 0.5) * ha;
                    (a.cos(), a.sin())
                })
                .collect();
            for i in 0..n {
                let r = radius(t0 + (i as f64 + 0.5) * ht);
                for (c, s) in &dirs {
                    visit(&Point::xy(r * c, r * s), w);
                }
            }
        }
    }
}

/// Precomputed quadrature nodes `(x, weight)`, dropping zero weights.
pub(crate) fn quadrature_nodes(
    sigma: &IntensityMeasure,
    region: &Region,
    resolution: usize,
    mut weight: impl FnMut(&Point) -> f64,
) -> Result<Vec<(Point, f64)>> {
    sigma.require_within(region)?;
    let mut out = Vec::new();
    let mut bad = None;
    for_each_node(sigma, region, resolution, |x, w| {
        let v = weight(x);
        if !v.is_finite() {
            bad.get_or_insert(*x);
        } else if v != 0.0 {
            out.push((*x, v * w));
        }
    });
    match bad {
        Some(x) => Err(Error::NonFinite(format!("integrand at {x}"))),
        None => Ok(out),
    }
}

fn integrate_once(
    h: &dyn Fn(&Point) -> f64,
    sigma: &IntensityMeasure,
    support: &Region,
    resolution: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut bad = None;
    for_each_node(sigma, support, resolution, |x, w| {
        let v = h(x);
        if v.is_finite() {
            acc += v * w;
        } else {
            bad.get_or_insert(*x);
        }
    });
    match bad {
        Some(x) => Err(Error::NonFinite(format!("integrand at {x}"))),
        None => Ok(acc),
    }
}

/// `∫ h dσ` over `support`, which must lie inside the window.
pub fn integrate_sigma(
    h: &dyn Fn(&Point) -> f64,
    sigma: &IntensityMeasure,
    support: &Region,
    quad: &Quadrature,
) -> Result<f64> {
    sigma.require_within(support)?;
    let mut res = quad.resolution.max(1);
    let mut prev = integrate_once(h, sigma, support, res)?;
    if !quad.refine {
        return Ok(prev);
    }
    while res < quad.max_resolution {
        res *= 2;
        let next = integrate_once(h, sigma, support, res)?;
        let scale = prev.abs().max(next.abs());
        let done = (next - prev).abs() <= quad.rel_tol * scale || (next - prev).abs() < 1e-300;
        prev = next;
        if done {
            break;
        }
    }
    Ok(prev)
}

/// `⟨g, h∘φ⟩_{L²_σ} = ∫ g(x) h(φ(x)) σ(dx)`, integrated over the support of `g`.
pub fn l2_inner(
    g: &TestFunction,
    h: &TestFunction,
    phi: &dyn Fn(&Point) -> Point,
    sigma: &IntensityMeasure,
    quad: &Quadrature,
) -> Result<f64> {
    integrate_sigma(&|x| g.eval(x) * h.eval(&phi(x)), sigma, g.support(), quad)
}

/// Compares `σ(φ⁻¹(R))`, estimated by hit counting on `n_mc` points drawn
/// from the normalised `σ`, with the exact `σ(R)` for each region.
///
/// The window boundary is probed first: if `φ` maps a boundary point strictly
/// into some `R`, that region's preimage crosses the window edge and the
/// comparison would be meaningless.
pub fn check_map_invariance<R: Rng + ?Sized>(
    phi: &dyn Fn(&Point) -> Point,
    sigma: &IntensityMeasure,
    regions: &[Region],
    n_mc: usize,
    seed: u64,
    rng: &mut R,
) -> Result<Vec<StatReport>> {
    let exact = regions
        .iter()
        .map(|r| sigma.mass(r))
        .collect::<Result<Vec<_>>>()?;
    let probe = sigma.window.boundary_probe(1024);
    for region in regions {
        if probe.iter().any(|b| region.contains_strict(&phi(b), 1e-9)) {
            return Err(Error::PreimageEscape(region.to_string()));
        }
    }
    let total = sigma.total_mass();
    let mut hits = vec![0usize; regions.len()];
    let whole = sigma.restricted(&sigma.window)?;
    for _ in 0..n_mc {
        let y = phi(&whole.sample_point(rng));
        for (h, r) in hits.iter_mut().zip(regions) {
            if r.contains(&y) {
                *h += 1;
            }
        }
    }
    Ok(regions
        .iter()
        .zip(hits.iter().zip(&exact))
        .map(|(region, (&h, &reference))| {
            let p = h as f64 / n_mc as f64;
            let estimate = total * p;
            let std_error = total * (p * (1.0 - p) / n_mc as f64).sqrt();
            StatReport {
                label: format!("σ(φ⁻¹({region}))"),
                estimate,
                reference: Reference::Exact(reference),
                std_error,
                z_score: z_score(estimate, reference, std_error),
                n_replicates: n_mc,
                seed,
            }
        })
        .collect())
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss–Legendre on a rectangle, doubling the panel count
/// until successive estimates agree to `rel_tol`.
fn gauss_legendre_box(f: impl Fn(f64, f64) -> f64, lo: &[f64], hi: &[f64], rel_tol: f64) -> f64 {
    let pass = |panels: usize| {
        let hx = (hi[0] - lo[0]) / panels as f64;
        let hy = (hi[1] - lo[1]) / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            let cx = lo[0] + (i as f64 + 0.5) * hx;
            for j in 0..panels {
                let cy = lo[1] + (j as f64 + 0.5) * hy;
                for (nx, wx) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
                    for (ny, wy) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
                        acc += wx * wy * f(cx + 0.5 * hx * nx, cy + 0.5 * hy * ny);
                    }
                }
            }
        }
        acc * 0.25 * hx * hy
    };
    let mut panels = 4;
    let mut prev = pass(panels);
    while panels < 1024 {
        panels *= 2;
        let next = pass(panels);
        if (next - prev).abs() <= rel_tol * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn sigma_mass_examples() {
        let lr = IntensityMeasure::log_radial(0.5, 4.0, 1.0).unwrap();
        assert!(rel_err(lr.mass(&Region::annulus(1.0, E)).unwrap(), TAU) < 1e-15);
        assert_eq!(lr.mass(&Region::annulus(2.0, 2.0)).unwrap(), 0.0);
        let h = IntensityMeasure::homogeneous(Region::unit_box(2), 1.0).unwrap();
        assert_eq!(h.mass(&Region::unit_box(2)).unwrap(), 1.0);
    }

    #[test]
    fn sigma_mass_rejects_outside_regions() {
        let h = IntensityMeasure::homogeneous(Region::unit_box(2), 1.0).unwrap();
        assert!(matches!(
            h.mass(&Region::rect([0.5, 0.5], [1.5, 1.0])),
            Err(Error::RegionOutsideWindow { .. })
        ));
        let lr = IntensityMeasure::log_radial(1.0, 2.0, 1.0).unwrap();
        assert!(lr.mass(&Region::annulus(0.5, 2.0)).is_err());
    }

    #[test]
    fn log_radial_box_mass_matches_polar_quadrature() {
        let lr = IntensityMeasure::log_radial(0.5, 4.0, 1.0).unwrap();
        let b = Region::rect([1.0, 0.0], [2.0, 1.0]);
        // ∫_1^2 ∫_0^1 dy dx / (x² + y²) = ∫_1^2 atan(1/x)/x dx, by Simpson.
        let n = 20_000;
        let h = 1.0 / n as f64;
        let g = |x: f64| (1.0 / x).atan() / x;
        let simpson: f64 = (0..n)
            .map(|i| {
                let a = 1.0 + i as f64 * h;
                h / 6.0 * (g(a) + 4.0 * g(a + 0.5 * h) + g(a + h))
            })
            .sum();
        assert!(rel_err(lr.mass(&b).unwrap(), simpson) < 1e-9);
    }

    #[test]
    fn region_containment() {
        let w = Region::annulus(0.5, 4.0);
        assert!(Region::sector(1.0, 2.0, 0.3, 1.0).is_within(&w));
        assert!(Region::rect([1.0, 0.0], [2.0, 1.0]).is_within(&w));
        assert!(!Region::rect([0.0, 0.0], [1.0, 1.0]).is_within(&w));
        let b = Region::rect([-1.0, -1.0], [1.0, 1.0]);
        assert!(Region::sector(0.5, 1.0, 0.0, PI / 2.0).is_within(&b));
        assert!(!Region::annulus(0.5, 1.5).is_within(&b));
        let s = Region::sector(0.0, 1.0, 0.0, PI);
        assert!(s.contains(&Point::xy(0.0, 0.5)));
        assert!(!s.contains(&Point::xy(0.0, -0.5)));
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let lr = IntensityMeasure::log_radial(0.1, 2.0, 3.0).unwrap();
        let a = lr.sample_poisson(&mut ChaCha8Rng::seed_from_u64(5));
        let b = lr.sample_poisson(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| lr.window().contains(p)));
    }

    #[test]
    fn tiny_rate_gives_empty_configuration() {
        let h = IntensityMeasure::homogeneous(Region::unit_box(2), 1e-300).unwrap();
        let w = h.sample_poisson(&mut ChaCha8Rng::seed_from_u64(1));
        assert!(w.is_empty());
    }

    #[test]
    fn integrate_sigma_examples() {
        let lr = IntensityMeasure::log_radial(0.5, 4.0, 1.0).unwrap();
        let q = Quadrature::default();
        let one = integrate_sigma(&|_| 1.0, &lr, &Region::annulus(1.0, E), &q).unwrap();
        assert!(rel_err(one, TAU) < 1e-9);
        let zero = integrate_sigma(&|_| 0.0, &lr, &Region::annulus(1.0, E), &q).unwrap();
        assert_eq!(zero, 0.0);
        let r2 = integrate_sigma(&|x| x.norm_sq(), &lr, &Region::annulus(1.0, 2.0), &q).unwrap();
        assert!(rel_err(r2, 3.0 * PI) < 1e-6, "{r2}");
    }

    #[test]
    fn integrate_sigma_matches_mass_on_analytic_cases() {
        let q = Quadrature::default();
        let h = IntensityMeasure::homogeneous(Region::rect([-1.0, -1.0], [2.0, 1.0]), 2.5).unwrap();
        for r in [
            Region::rect([0.0, 0.0], [1.0, 0.5]),
            Region::annulus(0.2, 0.9),
            Region::sector(0.1, 1.0, 0.5, 2.0),
        ] {
            let v = integrate_sigma(&|_| 1.0, &h, &r, &q).unwrap();
            assert!(rel_err(v, h.mass(&r).unwrap()) < 1e-6, "{r}");
        }
        let lr = IntensityMeasure::log_radial(0.25, 3.0, 0.7).unwrap();
        for r in [Region::annulus(0.5, 2.0), Region::rect([0.5, 0.5], [1.5, 1.0])] {
            let v = integrate_sigma(&|_| 1.0, &lr, &r, &q).unwrap();
            assert!(rel_err(v, lr.mass(&r).unwrap()) < 1e-6, "{r}");
        }
        let line = IntensityMeasure::homogeneous(Region::interval(0.0, 3.0), 2.0).unwrap();
        let v = integrate_sigma(&|x| x.coord(0), &line, &Region::interval(0.0, 3.0), &q).unwrap();
        assert!(rel_err(v, 9.0) < 1e-6);
    }

    #[test]
    fn integrate_sigma_rejects_non_finite() {
        let h = IntensityMeasure::homogeneous(Region::unit_box(2), 1.0).unwrap();
        let r = integrate_sigma(&|_| f64::NAN, &h, &Region::unit_box(2), &Quadrature::default());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn l2_inner_examples() {
        let lr = IntensityMeasure::log_radial(0.25, 4.0, 1.0).unwrap();
        let q = Quadrature::default();
        let ind = TestFunction::indicator(Region::annulus(1.0, E)).unwrap();
        let id = |x: &Point| *x;
        assert!(rel_err(l2_inner(&ind, &ind, &id, &lr, &q).unwrap(), TAU) < 1e-9);
        let other = TestFunction::indicator(Region::annulus(3.0, 4.0)).unwrap();
        assert_eq!(l2_inner(&ind, &other, &id, &lr, &q).unwrap(), 0.0);
        let g = TestFunction::indicator(Region::annulus(1.0, 2.0)).unwrap();
        let double = |x: &Point| x.scale(2.0);
        assert_eq!(l2_inner(&g, &g, &double, &lr, &q).unwrap(), 0.0);
    }

    #[test]
    fn tent_is_continuous_and_bounded() {
        let t = TestFunction::tent(Region::annulus(1.0, 2.0)).unwrap();
        assert_eq!(t.eval(&Point::xy(1.5, 0.0)), 1.0);
        assert_eq!(t.eval(&Point::xy(1.0, 0.0)), 0.0);
        assert_eq!(t.eval(&Point::xy(3.0, 0.0)), 0.0);
        let b = TestFunction::tent(Region::unit_box(2)).unwrap();
        assert_eq!(b.eval(&Point::xy(0.5, 0.5)), 1.0);
        assert!((b.eval(&Point::xy(0.25, 0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn map_invariance_identity_and_negative_control() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = IntensityMeasure::homogeneous(Region::rect([0.0, 0.0], [2.0, 2.0]), 1.0).unwrap();
        let id = |x: &Point| *x;
        let reports = check_map_invariance(&id, &h, &[Region::unit_box(2)], 100_000, 3, &mut rng).unwrap();
        assert!(reports[0].z_score.abs() <= 4.0);
        let double = |x: &Point| x.scale(2.0);
        let reports =
            check_map_invariance(&double, &h, &[Region::unit_box(2)], 100_000, 3, &mut rng).unwrap();
        // σ(φ⁻¹R) = 1/4 against σ(R) = 1.
        assert!((reports[0].estimate - 0.25).abs() < 0.02);
        assert!(reports[0].z_score < -100.0);
    }

    #[test]
    fn map_invariance_detects_preimage_escape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lr = IntensityMeasure::log_radial(0.5, 4.0, 1.0).unwrap();
        let double = |x: &Point| x.scale(2.0);
        // The inner circle r = 0.5 lands at r = 1, strictly inside [0.75, 2].
        let r = check_map_invariance(&double, &lr, &[Region::annulus(0.75, 2.0)], 10, 0, &mut rng);
        assert!(matches!(r, Err(Error::PreimageEscape(_))));
    }
}
