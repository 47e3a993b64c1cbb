//! Named, serialisable descriptions of the measures, test functions,
//! integrands and transformations that configuration files can refer to.

use serde::{Deserialize, Serialize};

use crate::config_space::{Configuration, Point, RandomIntegrand};
use crate::error::{Error, Result};
use crate::geometry::convex_hull;
use crate::intensity::{IntensityMeasure, Region, TestFunction};
use crate::transforms::{
    composed_hull_example, make_dilation_rotation, make_hull_rotation, AngleRule, Transformation,
};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `rate · Lebesgue` on a box.
    Homogeneous {
        window: Region,
        #[serde(default = "one")]
        rate: f64,
    },
    /// `rate · ‖x‖⁻² dx` on the annulus `inner ≤ ‖x‖ ≤ outer`.
    LogRadial {
        inner: f64,
        outer: f64,
        #[serde(default = "one")]
        rate: f64,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<IntensityMeasure> {
        match self {
            MeasureSpec::Homogeneous { window, rate } => {
                IntensityMeasure::homogeneous(window.clone(), *rate)
            }
            MeasureSpec::LogRadial { inner, outer, rate } => {
                IntensityMeasure::log_radial(*inner, *outer, *rate)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Indicator { region: Region },
    Tent { region: Region },
    Constant { value: f64, region: Region },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<TestFunction> {
        match self {
            FunctionSpec::Indicator { region } => TestFunction::indicator(region.clone()),
            FunctionSpec::Tent { region } => TestFunction::tent(region.clone()),
            FunctionSpec::Constant { value, region } => TestFunction::constant(*value, region.clone()),
        }
    }
}

/// Integrands `u(x, ω)`, each supported on `region`. Interacting ones read
/// `ω ∖ {x}`, so the same formula applies whether or not `x ∈ ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    /// `𝟙_R(x)`.
    Indicator { region: Region },
    /// Tent function on `R`.
    Tent { region: Region },
    /// `𝟙_R(x) · min(|ω ∩ R|, cap)`.
    CappedCount { region: Region, cap: usize },
    /// `𝟙_R(x) · #{y ∈ ω : 0 < ‖y − x‖ ≤ radius}`, capped at `cap`.
    NeighbourCount {
        region: Region,
        radius: f64,
        #[serde(default = "default_neighbour_cap")]
        cap: usize,
    },
    /// `𝟙_R(x)` when `x` is a vertex of the convex hull of `(ω ∪ {x}) ∩ R`.
    HullVertex { region: Region },
    /// `𝟙_R(x) · exp(−d/scale)` with `d` the distance from `x` to the
    /// nearest other point of `ω`, and zero if there is none.
    NnDecay { region: Region, scale: f64 },
}

fn default_neighbour_cap() -> usize {
    20
}

impl IntegrandSpec {
    pub fn region(&self) -> &Region {
        match self {
            IntegrandSpec::Indicator { region }
            | IntegrandSpec::Tent { region }
            | IntegrandSpec::CappedCount { region, .. }
            | IntegrandSpec::NeighbourCount { region, .. }
            | IntegrandSpec::HullVertex { region }
            | IntegrandSpec::NnDecay { region, .. } => region,
        }
    }

    pub fn build(&self) -> Result<RandomIntegrand> {
        let region = self.region().clone();
        region.validate()?;
        let r = region.clone();
        let u = match self {
            IntegrandSpec::Indicator { .. } => {
                RandomIntegrand::deterministic(format!("1[{r}]"), |_| 1.0)
            }
            IntegrandSpec::Tent { .. } => {
                let tent = TestFunction::tent(region.clone())?;
                RandomIntegrand::deterministic(tent.label().to_string(), move |x| tent.eval(x))
            }
            IntegrandSpec::CappedCount { cap, .. } => {
                let cap = *cap;
                RandomIntegrand::new(format!("min(|ω∩{r}|,{cap})"), move |_, w| {
                    w.count_in(&r).min(cap) as f64
                })
            }
            IntegrandSpec::NeighbourCount { radius, cap, .. } => {
                let (radius, cap) = (*radius, *cap);
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!("neighbour radius {radius}")));
                }
                let r2 = radius * radius;
                RandomIntegrand::new(format!("nbrs({radius})[{r}]"), move |x, w| {
                    w.iter()
                        .filter(|y| {
                            let d = y.sub(x).norm_sq();
                            d > 0.0 && d <= r2
                        })
                        .take(cap)
                        .count() as f64
                })
            }
            IntegrandSpec::HullVertex { .. } => {
                RandomIntegrand::new(format!("hull-vertex[{r}]"), move |x, w| {
                    hull_vertex_indicator(x, w, &r)
                })
            }
            IntegrandSpec::NnDecay { scale, .. } => {
                let scale = *scale;
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!("decay scale {scale}")));
                }
                RandomIntegrand::new(format!("nn-decay({scale})[{r}]"), move |x, w| {
                    let d2 = w
                        .iter()
                        .map(|y| y.sub(x).norm_sq())
                        .filter(|&d| d > 0.0)
                        .fold(f64::INFINITY, f64::min);
                    if d2.is_finite() {
                        (-d2.sqrt() / scale).exp()
                    } else {
                        0.0
                    }
                })
            }
        };
        Ok(u.with_support(region))
    }
}

fn hull_vertex_indicator(x: &Point, w: &Configuration, region: &Region) -> f64 {
    let mut pts: Vec<Point> = w.iter().filter(|p| region.contains(p)).copied().collect();
    if !w.contains(x) {
        pts.push(*x);
    }
    if convex_hull(&pts).vertices.contains(x) {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleRuleSpec {
    Fixed { angle: f64 },
    Hashed { seed: u64 },
}

impl AngleRuleSpec {
    pub fn build(&self) -> AngleRule {
        match self {
            AngleRuleSpec::Fixed { angle } => AngleRule::Fixed(*angle),
            AngleRuleSpec::Hashed { seed } => AngleRule::Hashed(*seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    Identity,
    /// `x ↦ r·U_angle·x`.
    DilationRotation { r: f64, angle: f64 },
    /// Rotation inside the inscribed disk of the hull of `ω ∩ B(0, 1)`.
    HullRotation { angle_rule: AngleRuleSpec },
    /// Dilation-rotation applied after the hull rotation.
    ComposedHull {
        r: f64,
        angle: f64,
        angle_rule: AngleRuleSpec,
    },
    /// `x ↦ x + by`.
    Shift { by: Vec<f64> },
    /// `x ↦ x + step·|ω|·e₁`, which moves `x` when `x` is added to `ω`.
    CountDrift { step: f64 },
}

impl TransformSpec {
    pub fn build(&self) -> Result<Transformation> {
        match self {
            TransformSpec::Identity => Ok(Transformation::identity()),
            TransformSpec::DilationRotation { r, angle } => make_dilation_rotation(*r, *angle),
            TransformSpec::HullRotation { angle_rule } => Ok(make_hull_rotation(angle_rule.build())),
            TransformSpec::ComposedHull {
                r,
                angle,
                angle_rule,
            } => composed_hull_example(*r, *angle, angle_rule.build()),
            TransformSpec::Shift { by } => Ok(Transformation::shift(Point::new(by)?)),
            TransformSpec::CountDrift { step } => Ok(count_drift(*step)),
        }
    }
}

/// `τ(x, ω) = x + step·|ω|·e₁`.
pub fn count_drift(step: f64) -> Transformation {
    Transformation::interacting(format!("x+{step}|ω|e₁"), move |x, w| {
        let mut e = [0.0; 2];
        e[0] = step * w.len() as f64;
        x.add(&Point::new(&e[..x.dim()]).expect("finite drift"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrands_vanish_outside_region() {
        let region = Region::rect([0.0, 0.0], [0.5, 0.5]);
        let w = Configuration::from_coords([[0.1, 0.1], [0.2, 0.2], [0.9, 0.9]]).unwrap();
        let outside = Point::xy(0.8, 0.8);
        for spec in [
            IntegrandSpec::Indicator { region: region.clone() },
            IntegrandSpec::CappedCount { region: region.clone(), cap: 3 },
            IntegrandSpec::NeighbourCount { region: region.clone(), radius: 0.5, cap: 20 },
            IntegrandSpec::HullVertex { region: region.clone() },
            IntegrandSpec::NnDecay { region: region.clone(), scale: 0.1 },
        ] {
            assert_eq!(spec.build().unwrap().eval(&outside, &w), 0.0, "{spec:?}");
        }
    }

    #[test]
    fn integrand_values() {
        let region = Region::unit_box(2);
        let w = Configuration::from_coords([[0.1, 0.1], [0.2, 0.1], [0.9, 0.9], [0.1, 0.9], [0.3, 0.5]]).unwrap();
        let x = Point::xy(0.1, 0.1);
        let cc = IntegrandSpec::CappedCount { region: region.clone(), cap: 2 }.build().unwrap();
        assert_eq!(cc.eval(&x, &w), 2.0);
        let nb = IntegrandSpec::NeighbourCount { region: region.clone(), radius: 0.15, cap: 20 }
            .build()
            .unwrap();
        assert_eq!(nb.eval(&x, &w), 1.0);
        let hv = IntegrandSpec::HullVertex { region: region.clone() }.build().unwrap();
        assert_eq!(hv.eval(&x, &w), 1.0);
        assert_eq!(hv.eval(&Point::xy(0.3, 0.5), &w), 0.0);
        let nn = IntegrandSpec::NnDecay { region, scale: 0.1 }.build().unwrap();
        assert!((nn.eval(&x, &w) - (-1.0f64).exp()).abs() < 1e-12);
        assert!(!nn.is_deterministic());
    }

    #[test]
    fn specs_round_trip_through_toml_style_json() {
        let spec: TransformSpec = serde_json::from_str(
            r#"{"kind":"composed_hull","r":2.0,"angle":0.5,"angle_rule":{"kind":"hashed","seed":3}}"#,
        )
        .unwrap();
        let tau = spec.build().unwrap();
        assert_eq!(tau.dilation_factor(), Some(2.0));
        let m: MeasureSpec = serde_json::from_str(r#"{"kind":"log_radial","inner":0.25,"outer":4}"#).unwrap();
        assert!((m.build().unwrap().total_mass() - std::f64::consts::TAU * 16f64.ln()).abs() < 1e-12);
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"kind":"log_radial","inner":1,"outer":2,"x":1}"#).is_err());
    }

    #[test]
    fn count_drift_moves_with_cardinality() {
        let t = count_drift(0.01);
        let w = Configuration::from_coords([[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(t.apply(&Point::xy(0.5, 0.5), &w), Point::xy(0.52, 0.5));
        assert!(!t.is_deterministic());
    }
}
