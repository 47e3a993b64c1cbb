//! Convex hull machinery for hull-conditioned transformations.
//!
//! Orientation tests use a fixed absolute epsilon; at the scales used here
//! (coordinates of order one) this is ample and keeps the predicates cheap.

use crate::config_space::{Configuration, Point};

/// Orientation values at or below this are treated as collinear.
pub const ORIENTATION_EPS: f64 = 1e-12;

/// Extremal vertices of a convex hull.
#[derive(Clone, Debug, PartialEq)]
pub struct HullData {
    /// Counterclockwise, starting from the lexicographically smallest vertex.
    /// In one dimension: the minimum and maximum.
    pub vertices: Vec<Point>,
    /// Fewer than `d + 1` affinely independent points.
    pub degenerate: bool,
    pub dim: usize,
}

impl HullData {
    pub fn empty(dim: usize) -> Self {
        Self {
            vertices: Vec::new(),
            degenerate: true,
            dim,
        }
    }
}

#[inline]
fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.coord(0) - o.coord(0)) * (b.coord(1) - o.coord(1))
        - (a.coord(1) - o.coord(1)) * (b.coord(0) - o.coord(0))
}

/// Monotone-chain convex hull; collinear boundary points are not vertices.
pub fn convex_hull(points: &[Point]) -> HullData {
    let dim = points.first().map_or(2, Point::dim);
    if dim == 1 {
        return interval_hull(points);
    }
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return HullData {
            vertices: pts,
            degenerate: true,
            dim,
        };
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    let push = |hull: &mut Vec<Point>, p: &Point, floor: usize| {
        while hull.len() >= floor + 2
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= ORIENTATION_EPS
        {
            hull.pop();
        }
        hull.push(*p);
    };
    for p in &pts {
        push(&mut hull, p, 0);
    }
    let lower = hull.len() - 1;
    for p in pts.iter().rev().skip(1) {
        push(&mut hull, p, lower);
    }
    hull.pop();
    let degenerate = hull.len() < 3;
    HullData {
        vertices: hull,
        degenerate,
        dim,
    }
}

fn interval_hull(points: &[Point]) -> HullData {
    let min = points.iter().min();
    let max = points.iter().max();
    match (min, max) {
        (Some(a), Some(b)) if a != b => HullData {
            vertices: vec![*a, *b],
            degenerate: false,
            dim: 1,
        },
        (Some(a), _) => HullData {
            vertices: vec![*a],
            degenerate: true,
            dim: 1,
        },
        _ => HullData::empty(1),
    }
}

/// Hull of the points of `omega` strictly inside the ball `‖x‖ < ball_radius`.
pub fn extremal_vertices(omega: &Configuration, ball_radius: f64) -> HullData {
    let r2 = ball_radius * ball_radius;
    let inside: Vec<Point> = omega.iter().filter(|p| p.norm_sq() < r2).copied().collect();
    if inside.is_empty() {
        return HullData::empty(omega.dim().unwrap_or(2));
    }
    convex_hull(&inside)
}

/// Strict interior membership; boundary points and degenerate hulls give
/// `false`.
pub fn contains_interior(hull: &HullData, x: &Point) -> bool {
    if hull.degenerate {
        return false;
    }
    if hull.dim == 1 {
        let c = x.coord(0);
        return hull.vertices[0].coord(0) < c && c < hull.vertices[1].coord(0);
    }
    let v = &hull.vertices;
    (0..v.len()).all(|i| cross(&v[i], &v[(i + 1) % v.len()], x) > ORIENTATION_EPS)
}

/// Radius of the largest open disk centred at the origin inside the hull's
/// interior; zero when the origin is not interior.
pub fn inscribed_disk(hull: &HullData) -> (Point, f64) {
    let origin = Point::origin(hull.dim);
    if !contains_interior(hull, &origin) {
        return (origin, 0.0);
    }
    if hull.dim == 1 {
        let r = (-hull.vertices[0].coord(0)).min(hull.vertices[1].coord(0));
        return (origin, r);
    }
    let v = &hull.vertices;
    let radius = (0..v.len())
        .map(|i| {
            let a = &v[i];
            let b = &v[(i + 1) % v.len()];
            cross(a, b, &origin) / b.sub(a).norm()
        })
        .fold(f64::INFINITY, f64::min);
    (origin, radius)
}
