//! Interacting transformations `τ(x, ω)` and their iterates.
//!
//! A transformation is evaluated in two stages: [`Transformation::bind`]
//! specialises it to one configuration (computing hulls, counts and the like
//! once), and the returned map moves individual points. Pushforwards and
//! iterates are built on top of that split.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config_space::{pushforward, vector_iterated_diff, Configuration, Point};
use crate::error::{Error, Result};
use crate::geometry::{extremal_vertices, inscribed_disk, HullData};

/// A transformation specialised to one configuration.
pub type BoundMap = Box<dyn Fn(&Point) -> Point + Send + Sync>;

/// The configuration-dependent part of a transformation.
pub trait Kernel: Send + Sync {
    fn bind(&self, omega: &Configuration) -> BoundMap;
}

struct FnKernel<F>(Arc<F>);

impl<F> Kernel for FnKernel<F>
where
    F: Fn(&Point) -> Point + Send + Sync + 'static,
{
    fn bind(&self, _omega: &Configuration) -> BoundMap {
        let f = Arc::clone(&self.0);
        Box::new(move |x| f(x))
    }
}

struct InteractingKernel<F>(Arc<F>);

impl<F> Kernel for InteractingKernel<F>
where
    F: Fn(&Point, &Configuration) -> Point + Send + Sync + 'static,
{
    fn bind(&self, omega: &Configuration) -> BoundMap {
        let f = Arc::clone(&self.0);
        let omega = omega.clone();
        Box::new(move |x| f(x, &omega))
    }
}

/// Rotation angle of the hull-conditioned map, as a function of the hull.
#[derive(Clone)]
pub enum AngleRule {
    Fixed(f64),
    /// Angle in `[0, 2π)` obtained by hashing the seed with the hull vertices.
    Hashed(u64),
    Custom(Arc<dyn Fn(&HullData) -> f64 + Send + Sync>),
}

impl AngleRule {
    pub fn angle(&self, hull: &HullData) -> f64 {
        match self {
            AngleRule::Fixed(a) => *a,
            AngleRule::Hashed(seed) => {
                let mut h = Sha256::new();
                h.update(seed.to_le_bytes());
                for v in &hull.vertices {
                    for c in v.coords() {
                        h.update(c.to_bits().to_le_bytes());
                    }
                }
                let digest = h.finalize();
                let bits = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
                (bits >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
            }
            AngleRule::Custom(f) => f(hull),
        }
    }
}

impl fmt::Debug for AngleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleRule::Fixed(a) => write!(f, "Fixed({a})"),
            AngleRule::Hashed(s) => write!(f, "Hashed({s})"),
            AngleRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

struct HullRotationKernel {
    rule: AngleRule,
    ball_radius: f64,
}

impl Kernel for HullRotationKernel {
    fn bind(&self, omega: &Configuration) -> BoundMap {
        let hull = extremal_vertices(omega, self.ball_radius);
        let (_, radius) = inscribed_disk(&hull);
        if radius <= 0.0 {
            return Box::new(|x| *x);
        }
        let (sin, cos) = self.rule.angle(&hull).sin_cos();
        let r2 = radius * radius;
        Box::new(move |x| {
            if x.norm_sq() < r2 {
                rotate(x, cos, sin)
            } else {
                *x
            }
        })
    }
}

struct ComposedKernel {
    outer: Transformation,
    inner: Transformation,
}

impl Kernel for ComposedKernel {
    fn bind(&self, omega: &Configuration) -> BoundMap {
        let inner = self.inner.bind(omega);
        let outer = self.outer.bind(omega);
        Box::new(move |x| outer(&inner(x)))
    }
}

#[inline]
fn rotate(x: &Point, cos: f64, sin: f64) -> Point {
    let (a, b) = (x.coord(0), x.coord(1));
    Point::xy(cos * a - sin * b, sin * a + cos * b)
}

/// An interacting transformation `τ : X × Ω → X`.
#[derive(Clone)]
pub struct Transformation {
    kernel: Arc<dyn Kernel>,
    label: String,
    deterministic: bool,
    norm_preserving: bool,
    dilation_factor: Option<f64>,
}

impl Transformation {
    pub fn from_kernel(
        label: impl Into<String>,
        kernel: impl Kernel + 'static,
        deterministic: bool,
    ) -> Self {
        Self {
            kernel: Arc::new(kernel),
            label: label.into(),
            deterministic,
            norm_preserving: false,
            dilation_factor: None,
        }
    }

    pub fn identity() -> Self {
        let mut t = Self::deterministic("identity", |x| *x);
        t.norm_preserving = true;
        t
    }

    /// A map that ignores the configuration.
    pub fn deterministic(
        label: impl Into<String>,
        f: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self::from_kernel(label, FnKernel(Arc::new(f)), true)
    }

    /// A map that reads the configuration on every call.
    pub fn interacting(
        label: impl Into<String>,
        f: impl Fn(&Point, &Configuration) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self::from_kernel(label, InteractingKernel(Arc::new(f)), false)
    }

    /// `x ↦ r·x` in any dimension.
    pub fn scaling(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {r}")));
        }
        let mut t = Self::deterministic(format!("{r}·x"), move |x| x.scale(r));
        t.dilation_factor = (r > 1.0).then_some(r);
        t.norm_preserving = r == 1.0;
        Ok(t)
    }

    /// `x ↦ x + v`.
    pub fn shift(v: Point) -> Self {
        Self::deterministic(format!("x+{v}"), move |x| x.add(&v))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// Some `r > 1` with `‖τ(x, ω)‖ ≥ r‖x‖` for all `x, ω`, when known.
    pub fn dilation_factor(&self) -> Option<f64> {
        self.dilation_factor
    }

    pub fn is_norm_preserving(&self) -> bool {
        self.norm_preserving
    }

    pub fn bind(&self, omega: &Configuration) -> BoundMap {
        self.kernel.bind(omega)
    }

    pub fn apply(&self, x: &Point, omega: &Configuration) -> Point {
        self.bind(omega)(x)
    }
}

impl fmt::Debug for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformation")
            .field("label", &self.label)
            .field("deterministic", &self.deterministic)
            .field("dilation_factor", &self.dilation_factor)
            .finish()
    }
}

/// `f(x) = r·U_angle·x` in the plane, `r > 1`.
pub fn make_dilation_rotation(r: f64, angle: f64) -> Result<Transformation> {
    if !(r > 1.0 && r.is_finite()) || !angle.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dilation-rotation needs r > 1, got r = {r}, angle = {angle}"
        )));
    }
    let (sin, cos) = angle.sin_cos();
    let (sr, cr) = (r * sin, r * cos);
    let mut t = Transformation::deterministic(format!("{r}·rot({angle})"), move |x| {
        rotate(x, cr, sr)
    });
    t.dilation_factor = Some(r);
    Ok(t)
}

/// The hull-conditioned rotation `τ̂`: points strictly inside the largest
/// origin-centred disk contained in the hull of `ω ∩ B(0, 1)` are rotated
/// about the origin by `rule(hull)`; every other point is fixed.
pub fn make_hull_rotation(rule: AngleRule) -> Transformation {
    let mut t = Transformation::from_kernel(
        format!("hull-rotation({rule:?})"),
        HullRotationKernel {
            rule,
            ball_radius: 1.0,
        },
        false,
    );
    t.norm_preserving = true;
    t
}

/// `τ(x, ω) = f(τ̂(x, ω))` for a deterministic `f`.
pub fn compose(f: &Transformation, inner: &Transformation) -> Result<Transformation> {
    if !f.deterministic {
        return Err(Error::NotDeterministic(f.label.clone()));
    }
    let mut t = Transformation::from_kernel(
        format!("{}∘{}", f.label, inner.label),
        ComposedKernel {
            outer: f.clone(),
            inner: inner.clone(),
        },
        inner.deterministic,
    );
    t.norm_preserving = f.norm_preserving && inner.norm_preserving;
    t.dilation_factor = if inner.norm_preserving {
        f.dilation_factor
    } else {
        None
    };
    Ok(t)
}

/// The hull example `f∘τ̂` with `f = r·U_angle`.
pub fn composed_hull_example(r: f64, angle: f64, rule: AngleRule) -> Result<Transformation> {
    compose(&make_dilation_rotation(r, angle)?, &make_hull_rotation(rule))
}

/// `τ⁽ⁿ⁾(x, ω) = τ⁽ⁿ⁻¹⁾(τ(x, ω), τ_*ω)`, `τ⁽⁰⁾(x, ω) = x`, evaluated by
/// plain recursion.
pub fn iterate(tau: &Transformation, n: usize, x: &Point, omega: &Configuration) -> Result<Point> {
    if n == 0 {
        return Ok(*x);
    }
    let y = tau.apply(x, omega);
    let next = pushforward(tau, omega)?;
    iterate(tau, n - 1, &y, &next)
}

/// `τ_*ⁿ ω`.
pub fn iterate_pushforward(
    tau: &Transformation,
    n: usize,
    omega: &Configuration,
) -> Result<Configuration> {
    let mut w = omega.clone();
    for _ in 0..n {
        w = pushforward(tau, &w)?;
    }
    Ok(w)
}

/// The pushforward chain `ω, τ_*ω, …, τ_*ⁿω` with each level's bound map,
/// so that many iterates against the same `ω` share the work.
pub struct Orbit {
    levels: Vec<Configuration>,
    maps: Vec<BoundMap>,
    positions: Vec<Vec<Point>>,
}

impl Orbit {
    pub fn new(tau: &Transformation, omega: &Configuration, depth: usize) -> Result<Self> {
        let mut levels = vec![omega.clone()];
        let mut positions = vec![omega.points().to_vec()];
        let mut maps = Vec::with_capacity(depth);
        for k in 0..depth {
            let map = tau.bind(&levels[k]);
            let next: Vec<Point> = positions[k].iter().map(|x| map(x)).collect();
            levels.push(Configuration::from_images(next.clone())?);
            positions.push(next);
            maps.push(map);
        }
        Ok(Self {
            levels,
            maps,
            positions,
        })
    }

    pub fn depth(&self) -> usize {
        self.maps.len()
    }

    /// `τ_*ᵏ ω`.
    pub fn configuration(&self, k: usize) -> &Configuration {
        &self.levels[k]
    }

    /// `τ⁽ᵏ⁾(x, ω)` for every `x ∈ ω`, in the order of `ω.points()`.
    pub fn positions(&self, k: usize) -> &[Point] {
        &self.positions[k]
    }

    /// `τ⁽ᵏ⁾(x, ω)` for an arbitrary point `x`.
    ///
    /// # Panics
    ///
    /// If `k` exceeds the orbit depth.
    pub fn iterate(&self, x: &Point, k: usize) -> Point {
        self.maps[..k].iter().fold(*x, |y, map| map(&y))
    }

    /// Calls `visit(k, τ⁽ᵏ⁾(x, ω))` for `k = 0..=depth`.
    pub fn trajectory(&self, x: &Point, mut visit: impl FnMut(usize, &Point)) {
        let mut y = *x;
        visit(0, &y);
        for (k, map) in self.maps.iter().enumerate() {
            y = map(&y);
            visit(k + 1, &y);
        }
    }
}

/// Increment sequence `p_{i,n} = slope·n + offset`, strictly increasing for
/// `slope ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Increment {
    pub slope: usize,
    #[serde(default)]
    pub offset: usize,
}

/// Iterate counts `k_{i,n} = p_{1,n} + ⋯ + p_{i,n}` for mixing of order `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingSchedule {
    pub increments: Vec<Increment>,
}

impl MixingSchedule {
    /// `p_{i,n} = n`, hence `k_{i,n} = i·n`.
    pub fn linear(order: usize) -> Self {
        Self {
            increments: vec![Increment { slope: 1, offset: 0 }; order],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.increments.is_empty() {
            return Err(Error::InvalidParameter("empty mixing schedule".into()));
        }
        if self.increments.iter().any(|p| p.slope == 0) {
            return Err(Error::InvalidParameter(
                "schedule increments must be strictly increasing (slope ≥ 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.increments.len()
    }

    /// `k_{i,n}` with `i` counted from 1.
    pub fn iterates(&self, i: usize, n: usize) -> usize {
        self.increments[..i]
            .iter()
            .map(|p| p.slope * n + p.offset)
            .sum()
    }
}

/// Result of [`check_vanishing`].
#[derive(Clone, Debug, PartialEq)]
pub struct VanishingOutcome {
    pub families: usize,
    pub witness: Option<VanishingWitness>,
}

impl VanishingOutcome {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// A covering family none of whose factors vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct VanishingWitness {
    pub subsets: Vec<Vec<Point>>,
    pub factors: Vec<Point>,
}

/// Checks that for every family `(Θ₁, …, Θ_m)` of nonempty subsets of
/// `{x₁, …, x_m}` covering it, at least one `D_{Θᵢ} τ^{(kᵢ)}(xᵢ, ω)` is the
/// zero vector (every coordinate at most `tol` in absolute value).
pub fn check_vanishing(
    tau: &Transformation,
    omega: &Configuration,
    xs: &[Point],
    ks: &[usize],
    tol: f64,
) -> Result<VanishingOutcome> {
    let m = xs.len();
    if !(1..=3).contains(&m) {
        return Err(Error::InvalidParameter(format!("m = {m} must lie in 1..=3")));
    }
    if ks.len() != m {
        return Err(Error::SizeMismatch(format!("{m} points but {} iterate counts", ks.len())));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidParameter("iterate counts must be ≥ 1".into()));
    }
    for (i, x) in xs.iter().enumerate() {
        if xs[i + 1..].contains(x) {
            return Err(Error::DuplicatePoints);
        }
    }
    let depth = *ks.iter().max().expect("m ≥ 1");
    let orbits: RefCell<HashMap<Configuration, Orbit>> = RefCell::new(HashMap::new());
    let iterate_on = |x: &Point, k: usize, w: &Configuration| -> Result<Point> {
        if let Some(o) = orbits.borrow().get(w) {
            return Ok(o.iterate(x, k));
        }
        let o = Orbit::new(tau, w, depth)?;
        let y = o.iterate(x, k);
        orbits.borrow_mut().insert(w.clone(), o);
        Ok(y)
    };

    let full = (1usize << m) - 1;
    let subset = |mask: usize| -> Vec<Point> {
        (0..m).filter(|j| mask & (1 << j) != 0).map(|j| xs[j]).collect()
    };
    // diffs[i][mask] = D_Θ τ^{(kᵢ)}(xᵢ, ω) for Θ given by mask.
    let mut diffs: Vec<Vec<Option<Point>>> = vec![vec![None; full + 1]; m];
    for (i, row) in diffs.iter_mut().enumerate() {
        for (mask, slot) in row.iter_mut().enumerate().skip(1) {
            let g = |x: &Point, w: &Configuration| iterate_on(x, ks[i], w);
            *slot = Some(vector_iterated_diff(g, &xs[i], &subset(mask), omega)?);
        }
    }
    let vanishes = |p: &Point| p.max_abs() <= tol;

    let mut families = 0;
    let mut choice = vec![1usize; m];
    loop {
        if choice.iter().fold(0, |acc, c| acc | c) == full {
            families += 1;
            let factors: Vec<Point> = (0..m)
                .map(|i| diffs[i][choice[i]].expect("computed above"))
                .collect();
            if !factors.iter().any(vanishes) {
                return Ok(VanishingOutcome {
                    families,
                    witness: Some(VanishingWitness {
                        subsets: choice.iter().map(|&c| subset(c)).collect(),
                        factors,
                    }),
                });
            }
        }
        // Next tuple of nonempty masks.
        let mut i = 0;
        while i < m && choice[i] == full {
            choice[i] = 1;
            i += 1;
        }
        if i == m {
            break;
        }
        choice[i] += 1;
    }
    Ok(VanishingOutcome {
        families,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn square_config() -> Configuration {
        Configuration::from_coords([[0.9, 0.0], [0.0, 0.9], [-0.9, 0.0], [0.0, -0.9]]).unwrap()
    }

    #[test]
    fn dilation_rotation_examples() {
        let w = Configuration::empty();
        let f = make_dilation_rotation(2.0, 0.0).unwrap();
        assert_eq!(f.apply(&Point::xy(1.0, 0.0), &w), Point::xy(2.0, 0.0));
        let f = make_dilation_rotation(2.0, FRAC_PI_2).unwrap();
        let y = f.apply(&Point::xy(1.0, 0.0), &w);
        assert!(y.sub(&Point::xy(0.0, 2.0)).max_abs() < 1e-12);
        let x = Point::xy(0.3, -0.7);
        assert!((f.apply(&x, &w).norm() - 2.0 * x.norm()).abs() < 1e-15);
        assert!(make_dilation_rotation(1.0, 0.0).is_err());
        assert!(make_dilation_rotation(0.5, 0.0).is_err());
    }

    #[test]
    fn hull_rotation_examples() {
        let tau = make_hull_rotation(AngleRule::Fixed(FRAC_PI_2));
        let w = square_config();
        // Inscribed radius 0.9/√2 ≈ 0.636 > 0.1.
        let y = tau.apply(&Point::xy(0.1, 0.0), &w);
        assert!(y.sub(&Point::xy(0.0, 0.1)).max_abs() < 1e-15);
        assert_eq!(tau.apply(&Point::xy(1.5, 0.0), &w), Point::xy(1.5, 0.0));
        // Between the disk and the hull boundary: fixed.
        assert_eq!(tau.apply(&Point::xy(0.7, 0.0), &w), Point::xy(0.7, 0.0));
        let degenerate = Configuration::from_coords([[0.1, 0.1], [0.2, 0.2]]).unwrap();
        assert_eq!(tau.apply(&Point::xy(0.0, 0.0), &degenerate), Point::xy(0.0, 0.0));
        assert_eq!(tau.apply(&Point::xy(0.15, 0.1), &degenerate), Point::xy(0.15, 0.1));
    }

    #[test]
    fn hull_rotation_ignores_interior_additions() {
        let tau = make_hull_rotation(AngleRule::Hashed(11));
        let w = square_config();
        let w2 = w.add_points(&[Point::xy(0.1, 0.2), Point::xy(-0.3, 0.1)]);
        let x = Point::xy(0.2, 0.05);
        assert_eq!(tau.apply(&x, &w), tau.apply(&x, &w2));
        assert_ne!(tau.apply(&x, &w), x);
    }

    #[test]
    fn hashed_angle_depends_on_vertices() {
        let a = extremal_vertices(&square_config(), 1.0);
        let b = extremal_vertices(&square_config().add_points(&[Point::xy(0.6, 0.6)]), 1.0);
        let rule = AngleRule::Hashed(1);
        assert_ne!(rule.angle(&a), rule.angle(&b));
        assert_eq!(rule.angle(&a), AngleRule::Hashed(1).angle(&a));
        assert!((0.0..std::f64::consts::TAU).contains(&rule.angle(&a)));
    }

    #[test]
    fn compose_examples() {
        let hat = make_hull_rotation(AngleRule::Fixed(1.0));
        let w = square_config();
        let x = Point::xy(0.1, 0.2);
        let t = compose(&Transformation::identity(), &hat).unwrap();
        assert_eq!(t.apply(&x, &w), hat.apply(&x, &w));
        let f = make_dilation_rotation(2.0, 0.5).unwrap();
        let t = compose(&f, &Transformation::identity()).unwrap();
        assert!(t.is_deterministic());
        assert_eq!(t.dilation_factor(), Some(2.0));
        let t = compose(&f, &hat).unwrap();
        assert_eq!(t.dilation_factor(), Some(2.0));
        let outside = Point::xy(1.2, -0.4);
        assert_eq!(t.apply(&outside, &w), f.apply(&outside, &w));
        assert!(matches!(compose(&hat, &f), Err(Error::NotDeterministic(_))));
    }

    #[test]
    fn deterministic_maps_ignore_configuration() {
        let f = make_dilation_rotation(3.0, 0.2).unwrap();
        let x = Point::xy(0.4, 0.1);
        assert_eq!(f.apply(&x, &Configuration::empty()), f.apply(&x, &square_config()));
    }

    #[test]
    fn iterate_examples() {
        let f = make_dilation_rotation(2.0, 0.3).unwrap();
        let w = square_config();
        let x = Point::xy(0.1, 0.1);
        assert_eq!(iterate(&f, 0, &x, &w).unwrap(), x);
        let direct = (0..4).fold(x, |y, _| f.apply(&y, &w));
        assert_eq!(iterate(&f, 4, &x, &w).unwrap(), direct);
        let tau = composed_hull_example(2.0, 0.3, AngleRule::Hashed(3)).unwrap();
        let outside = Point::xy(1.1, 0.2);
        let expected = (0..3).fold(outside, |y, _| f.apply(&y, &w));
        assert_eq!(iterate(&tau, 3, &outside, &w).unwrap(), expected);
    }

    #[test]
    fn orbit_agrees_with_recursion() {
        let tau = composed_hull_example(2.0, 0.3, AngleRule::Hashed(3)).unwrap();
        let w = square_config().add_points(&[Point::xy(0.05, 0.1), Point::xy(-0.2, 0.01)]);
        let orbit = Orbit::new(&tau, &w, 3).unwrap();
        for k in 0..=3 {
            assert_eq!(orbit.configuration(k), &iterate_pushforward(&tau, k, &w).unwrap());
            for (x, y) in w.iter().zip(orbit.positions(k)) {
                assert_eq!(*y, iterate(&tau, k, x, &w).unwrap());
            }
        }
        let x = Point::xy(0.3, 0.3);
        let mut seen = Vec::new();
        orbit.trajectory(&x, |k, y| seen.push((k, *y)));
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[2].1, iterate(&tau, 2, &x, &w).unwrap());
        assert_eq!(orbit.iterate(&x, 2), seen[2].1);
    }

    #[test]
    fn iterate_pushforward_examples() {
        let f = Transformation::scaling(2.0).unwrap();
        let w = Configuration::from_coords([[1.0]]).unwrap();
        assert_eq!(
            iterate_pushforward(&f, 3, &w).unwrap(),
            Configuration::from_coords([[8.0]]).unwrap()
        );
        assert_eq!(
            iterate_pushforward(&f, 1, &w).unwrap(),
            pushforward(&f, &w).unwrap()
        );
    }

    #[test]
    fn mixing_schedule() {
        let s = MixingSchedule::linear(3);
        s.validate().unwrap();
        assert_eq!(s.iterates(1, 4), 4);
        assert_eq!(s.iterates(3, 4), 12);
        let bad = MixingSchedule {
            increments: vec![Increment { slope: 0, offset: 1 }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn vanishing_deterministic_passes() {
        let f = make_dilation_rotation(2.0, 0.1).unwrap();
        let xs = [Point::xy(0.1, 0.2), Point::xy(0.3, -0.1), Point::xy(-0.2, 0.0)];
        let out = check_vanishing(&f, &square_config(), &xs, &[1, 2, 3], 1e-12).unwrap();
        assert!(out.passed());
        assert_eq!(out.families, 265);
    }

    #[test]
    fn vanishing_counts_families() {
        let f = Transformation::identity();
        let xs = [Point::xy(0.1, 0.2), Point::xy(0.3, -0.1)];
        let out = check_vanishing(&f, &square_config(), &xs, &[1, 1], 1e-12).unwrap();
        assert_eq!(out.families, 7);
        let out = check_vanishing(&f, &square_config(), &xs[..1], &[2], 1e-12).unwrap();
        assert_eq!(out.families, 1);
    }

    #[test]
    fn vanishing_negative_control_fails() {
        let drift = Transformation::interacting("x+0.01|ω|e₁", |x, w| {
            x.add(&Point::xy(0.01 * w.len() as f64, 0.0))
        });
        let out = check_vanishing(&drift, &square_config(), &[Point::xy(0.1, 0.1)], &[1], 1e-12).unwrap();
        let witness = out.witness.expect("adding x moves x");
        assert!((witness.factors[0].coord(0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn vanishing_rejects_bad_input() {
        let f = Transformation::identity();
        let x = Point::xy(0.1, 0.1);
        let w = Configuration::empty();
        assert_eq!(check_vanishing(&f, &w, &[x, x], &[1, 1], 1e-12), Err(Error::DuplicatePoints));
        assert!(check_vanishing(&f, &w, &[x], &[0], 1e-12).is_err());
        assert!(check_vanishing(&f, &w, &[], &[], 1e-12).is_err());
    }

    #[test]
    fn hull_example_first_iterate_is_adapted() {
        let tau = composed_hull_example(2.0, 0.4, AngleRule::Hashed(5)).unwrap();
        let w = square_config().add_points(&[Point::xy(0.2, 0.1)]);
        for x in [Point::xy(0.1, 0.0), Point::xy(0.95, 0.0), Point::xy(0.0, 1.3)] {
            let out = check_vanishing(&tau, &w, &[x], &[1], 1e-12).unwrap();
            assert!(out.passed(), "{x}");
        }
    }
}
