//! Finite configurations and the difference calculus on configuration space.
//!
//! A [`Configuration`] is a finite simple point set, kept in canonical
//! lexicographic order so that equality of configurations is decidable and
//! iteration order is reproducible. Functionals and random integrands are
//! plain closures wrapped in cheaply clonable handles.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::Region;
use crate::transforms::Transformation;

/// Largest difference set accepted by [`iterated_diff`]; inclusion-exclusion
/// costs `2^|Θ|` evaluations.
pub const MAX_DIFF_ORDER: usize = 6;

/// A point of the line or the plane.
///
/// Coordinates are finite and `-0.0` is normalised to `0.0`, so the derived
/// equality, ordering and hashing all agree with exact coordinate comparison.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        match coords.len() {
            1 | 2 => {}
            d => return Err(Error::UnsupportedDimension(d)),
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {c}")));
        }
        let mut out = [0.0; 2];
        for (o, c) in out.iter_mut().zip(coords) {
            *o = *c + 0.0;
        }
        Ok(Self {
            coords: out,
            dim: coords.len() as u8,
        })
    }

    /// Planar point. Coordinates must be finite.
    #[inline]
    pub fn xy(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite point ({x}, {y})");
        Self {
            coords: [x + 0.0, y + 0.0],
            dim: 2,
        }
    }

    /// Point on the line. The coordinate must be finite.
    #[inline]
    pub fn x(x: f64) -> Self {
        debug_assert!(x.is_finite(), "non-finite point {x}");
        Self {
            coords: [x + 0.0, 0.0],
            dim: 1,
        }
    }

    #[inline]
    pub fn origin(dim: usize) -> Self {
        Self {
            coords: [0.0; 2],
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.coords()[i]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    /// `self * s` coordinatewise. The caller keeps the result finite.
    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        self.map_coords(|c| c * s)
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i] + other.coords[i] + 0.0;
        }
        out
    }

    #[inline]
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i] - other.coords[i] + 0.0;
        }
        out
    }

    #[inline]
    fn map_coords(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = f(self.coords[i]) + 0.0;
        }
        out
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| {
            self.coords()
                .iter()
                .zip(other.coords())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        for c in self.coords() {
            c.to_bits().hash(state);
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "({})", self.coords[0]),
            _ => write!(f, "({}, {})", self.coords[0], self.coords[1]),
        }
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(&v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords().to_vec()
    }
}

/// A finite simple point set in canonical (lexicographic) order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Configuration {
    points: Vec<Point>,
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a configuration, dropping exact duplicates. All points must
    /// share one dimension.
    pub fn new(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut points: Vec<Point> = points.into_iter().collect();
        if let Some(first) = points.first() {
            let d = first.dim();
            if let Some(bad) = points.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.dim(),
                });
            }
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { points })
    }

    /// Builds a configuration from raw coordinate tuples, rejecting
    /// non-finite coordinates.
    pub fn from_coords<I, C>(coords: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[f64]>,
    {
        let points = coords
            .into_iter()
            .map(|c| Point::new(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// Like [`Configuration::new`] but treats duplicates as an error, as
    /// required for images of a pushforward.
    pub(crate) fn from_images(mut points: Vec<Point>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("image point {bad}")));
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Collision(w[0].to_string()));
        }
        Ok(Self { points })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Dimension of the points, `None` for the empty configuration.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.points.binary_search(x).is_ok()
    }

    /// The addition operator: `ω ∪ {x₁, …, x_k}`. Points already present are
    /// left alone.
    ///
    /// # Panics
    ///
    /// If the added points do not share the configuration's dimension.
    pub fn add_points(&self, xs: &[Point]) -> Configuration {
        if xs.is_empty() {
            return self.clone();
        }
        let d = self.dim().unwrap_or_else(|| xs[0].dim());
        assert!(
            xs.iter().all(|x| x.dim() == d),
            "added points must have dimension {d}"
        );
        let mut points = Vec::with_capacity(self.len() + xs.len());
        points.extend_from_slice(&self.points);
        points.extend_from_slice(xs);
        points.sort_unstable();
        points.dedup();
        Configuration { points }
    }

    /// Number of points inside `region` (closed).
    pub fn count_in(&self, region: &Region) -> usize {
        self.points.iter().filter(|p| region.contains(p)).count()
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.points).finish()
    }
}

impl<'a> IntoIterator for &'a Configuration {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// `make_configuration`: validated construction from points.
pub fn make_configuration(points: impl IntoIterator<Item = Point>) -> Result<Configuration> {
    Configuration::new(points)
}

/// `ε⁺_{x₁…x_k} ω = ω ∪ {x₁, …, x_k}`.
pub fn add_points(omega: &Configuration, xs: &[Point]) -> Configuration {
    omega.add_points(xs)
}

type FunctionalFn = dyn Fn(&Configuration) -> Result<f64> + Send + Sync;

/// A real functional `F : Ω → ℝ`.
#[derive(Clone)]
pub struct Functional {
    label: String,
    eval: Arc<FunctionalFn>,
}

impl Functional {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&Configuration) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(move |w| Ok(f(w))),
        }
    }

    /// A functional whose evaluation may fail.
    pub fn fallible(
        label: impl Into<String>,
        f: impl Fn(&Configuration) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, omega: &Configuration) -> Result<f64> {
        (self.eval)(omega)
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional").field("label", &self.label).finish()
    }
}

type IntegrandFn = dyn Fn(&Point, &Configuration) -> f64 + Send + Sync;

/// A random integrand `u : X × Ω → ℝ`, optionally with a declared spatial
/// support outside of which it vanishes.
#[derive(Clone)]
pub struct RandomIntegrand {
    label: String,
    eval: Arc<IntegrandFn>,
    support: Option<Region>,
    deterministic: bool,
}

impl RandomIntegrand {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&Point, &Configuration) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            support: None,
            deterministic: false,
        }
    }

    /// Integrand that ignores the configuration.
    pub fn deterministic(
        label: impl Into<String>,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(move |x, _| f(x)),
            support: None,
            deterministic: true,
        }
    }

    /// Declares the support. Evaluation outside it returns zero without
    /// calling the closure.
    pub fn with_support(mut self, support: Region) -> Self {
        self.support = Some(support);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Option<&Region> {
        self.support.as_ref()
    }

    /// Outer radius of the declared support.
    pub fn support_radius(&self) -> Option<f64> {
        self.support.as_ref().map(Region::outer_radius)
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    #[inline]
    pub fn eval(&self, x: &Point, omega: &Configuration) -> f64 {
        match &self.support {
            Some(s) if !s.contains(x) => 0.0,
            _ => (self.eval)(x, omega),
        }
    }
}

impl fmt::Debug for RandomIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RandomIntegrand")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("deterministic", &self.deterministic)
            .finish()
    }
}

/// `D_x F(ω) = F(ω ∪ {x}) − F(ω)`.
pub fn finite_diff(f: &Functional, x: &Point, omega: &Configuration) -> Result<f64> {
    Ok(f.eval(&omega.add_points(std::slice::from_ref(x)))? - f.eval(omega)?)
}

fn check_difference_set(theta: &[Point]) -> Result<()> {
    if theta.len() > MAX_DIFF_ORDER {
        return Err(Error::DifferenceOrderTooLarge {
            size: theta.len(),
            cap: MAX_DIFF_ORDER,
        });
    }
    for (i, a) in theta.iter().enumerate() {
        if theta[i + 1..].contains(a) {
            return Err(Error::DuplicatePoints);
        }
    }
    Ok(())
}

/// Visits `(ω ∪ η, (−1)^{|Θ|−|η|})` for every subset `η ⊆ Θ`.
fn for_each_signed_subset(
    theta: &[Point],
    omega: &Configuration,
    mut visit: impl FnMut(&Configuration, f64) -> Result<()>,
) -> Result<()> {
    check_difference_set(theta)?;
    let k = theta.len();
    let mut eta = Vec::with_capacity(k);
    for mask in 0u32..(1 << k) {
        eta.clear();
        eta.extend((0..k).filter(|i| mask & (1 << i) != 0).map(|i| theta[i]));
        let sign = if (k - eta.len()) % 2 == 0 { 1.0 } else { -1.0 };
        visit(&omega.add_points(&eta), sign)?;
    }
    Ok(())
}

/// `D_Θ F(ω) = Σ_{η ⊆ Θ} (−1)^{|Θ|−|η|} F(ω ∪ η)`.
pub fn iterated_diff(f: &Functional, theta: &[Point], omega: &Configuration) -> Result<f64> {
    let mut acc = 0.0;
    for_each_signed_subset(theta, omega, |w, sign| {
        acc += sign * f.eval(w)?;
        Ok(())
    })?;
    Ok(acc)
}

/// Coordinatewise `D_Θ` of a point-valued map `g(x, ·)`.
pub fn vector_iterated_diff<G>(
    g: G,
    x: &Point,
    theta: &[Point],
    omega: &Configuration,
) -> Result<Point>
where
    G: Fn(&Point, &Configuration) -> Result<Point>,
{
    let mut acc: Option<Point> = None;
    for_each_signed_subset(theta, omega, |w, sign| {
        let v = g(x, w)?.scale(sign);
        acc = Some(match acc {
            None => v,
            Some(a) if a.dim() == v.dim() => a.add(&v),
            Some(a) => {
                return Err(Error::DimensionMismatch {
                    expected: a.dim(),
                    found: v.dim(),
                })
            }
        });
        Ok(())
    })?;
    Ok(acc.expect("the empty subset is always visited"))
}

/// `∫ u(x, ω) ω(dx) = Σ_{x ∈ ω} u(x, ω)`.
pub fn poisson_integral(u: &RandomIntegrand, omega: &Configuration) -> f64 {
    omega.iter().map(|x| u.eval(x, omega)).sum()
}

/// `τ_* ω = {τ(x, ω) : x ∈ ω}`, every point moved against the original `ω`.
pub fn pushforward(tau: &Transformation, omega: &Configuration) -> Result<Configuration> {
    let map = tau.bind(omega);
    Configuration::from_images(omega.iter().map(|x| map(x)).collect())
}
