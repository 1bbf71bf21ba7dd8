//! Convex hulls, minimum-area enclosing rectangles and axis-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Convex polygon with counter-clockwise vertices and no collinear runs.
///
/// Fewer than three distinct or all-collinear inputs produce a degenerate
/// polygon holding only the extreme points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
    pub degenerate: bool,
}

impl Polygon {
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            * 0.5
    }

    /// Inside-or-on test for a CCW convex polygon.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) >= -tol)
    }
}

/// `(b - a) x (c - a)`; positive when `a, b, c` turn counter-clockwise.
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Graham scan around the lowest (then leftmost) point.
pub fn convex_hull(points: &[Point]) -> Polygon {
    if points.is_empty() {
        return Polygon {
            vertices: Vec::new(),
            degenerate: true,
        };
    }
    let pivot = *points
        .iter()
        .min_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])))
        .unwrap();
    let mut rest: Vec<Point> = points.iter().copied().filter(|&p| p != pivot).collect();
    rest.sort_by(|&a, &b| {
        let c = cross(pivot, a, b);
        if c > 0.0 {
            std::cmp::Ordering::Less
        } else if c < 0.0 {
            std::cmp::Ordering::Greater
        } else {
            dist2(pivot, a).total_cmp(&dist2(pivot, b))
        }
    });

    let mut stack: Vec<Point> = vec![pivot];
    for p in rest {
        while stack.len() >= 2 && cross(stack[stack.len() - 2], stack[stack.len() - 1], p) <= 0.0 {
            stack.pop();
        }
        if stack.last() != Some(&p) {
            stack.push(p);
        }
    }
    let degenerate = stack.len() < 3;
    Polygon {
        vertices: stack,
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    /// Counter-clockwise.
    pub corners: [Point; 4],
    /// Direction of the first edge, radians from the x axis.
    pub angle: f64,
}

impl OrientedRect {
    pub fn area(&self) -> f64 {
        dist2(self.corners[0], self.corners[1]).sqrt() * dist2(self.corners[1], self.corners[2]).sqrt()
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        (0..4).all(|i| {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 4];
            cross(a, b, p) / dist2(a, b).sqrt().max(f64::MIN_POSITIVE) >= -tol
        })
    }
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn rect_for_edge(vertices: &[Point], i: usize, lo_e: f64, hi_e: f64, hi_n: f64) -> OrientedRect {
    let n = vertices.len();
    let origin = vertices[i];
    let e = edge_dir(vertices[i], vertices[(i + 1) % n]);
    let nrm = [-e[1], e[0]];
    let at = |s: f64, t: f64| [origin[0] + s * e[0] + t * nrm[0], origin[1] + s * e[1] + t * nrm[1]];
    OrientedRect {
        corners: [at(lo_e, 0.0), at(hi_e, 0.0), at(hi_e, hi_n), at(lo_e, hi_n)],
        angle: e[1].atan2(e[0]),
    }
}

fn edge_dir(a: Point, b: Point) -> Point {
    let len = dist2(a, b).sqrt();
    [(b[0] - a[0]) / len, (b[1] - a[1]) / len]
}

/// Rotating calipers: the minimum-area rectangle has a side on some hull
/// edge, and the three supporting vertices only move forward as the edge
/// advances.
pub fn min_area_rect(hull: &Polygon) -> Result<OrientedRect> {
    if hull.degenerate || hull.vertices.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    let v = &hull.vertices;
    let n = v.len();
    let proj = |k: usize, origin: Point, axis: Point| dot([v[k][0] - origin[0], v[k][1] - origin[1]], axis);

    let e0 = edge_dir(v[0], v[1]);
    let n0 = [-e0[1], e0[0]];
    let argbest = |axis: Point, sign: f64| {
        (0..n)
            .max_by(|&a, &b| (sign * proj(a, v[0], axis)).total_cmp(&(sign * proj(b, v[0], axis))))
            .unwrap()
    };
    let mut hi_e = argbest(e0, 1.0);
    let mut lo_e = argbest(e0, -1.0);
    let mut hi_n = argbest(n0, 1.0);

    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..n {
        let origin = v[i];
        let e = edge_dir(v[i], v[(i + 1) % n]);
        let nrm = [-e[1], e[0]];
        for (ptr, axis, sign) in [(&mut hi_e, e, 1.0), (&mut lo_e, e, -1.0), (&mut hi_n, nrm, 1.0)] {
            for _ in 0..n {
                let next = (*ptr + 1) % n;
                if sign * proj(next, origin, axis) > sign * proj(*ptr, origin, axis) {
                    *ptr = next;
                } else {
                    break;
                }
            }
        }
        let a = proj(hi_e, origin, e);
        let b = proj(lo_e, origin, e);
        let h = proj(hi_n, origin, nrm);
        let area = (a - b) * h;
        if best.as_ref().is_none_or(|(ba, _)| area < *ba) {
            best = Some((area, rect_for_edge(v, i, b, a, h)));
        }
    }
    Ok(best.unwrap().1)
}

/// Axis-aligned box; coordinates are inclusive pixel indices once clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Aabb {
    pub fn from_points(points: &[Point]) -> Option<Aabb> {
        let first = points.first()?;
        let mut b = Aabb {
            x_min: first[0],
            y_min: first[1],
            x_max: first[0],
            y_max: first[1],
        };
        for p in &points[1..] {
            b.x_min = b.x_min.min(p[0]);
            b.y_min = b.y_min.min(p[1]);
            b.x_max = b.x_max.max(p[0]);
            b.y_max = b.y_max.max(p[1]);
        }
        Some(b)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.x_min..=self.x_max).contains(&p[0]) && (self.y_min..=self.y_max).contains(&p[1])
    }
}

/// Coordinate extrema of the four corners.
pub fn axis_align(rect: &OrientedRect) -> Aabb {
    Aabb::from_points(&rect.corners).expect("four corners")
}

/// Grows every side by `pad_frac` times the box diagonal, rounds outward to
/// whole pixels and clips to `[0, width) x [0, height)`.
pub fn pad_and_clip(b: &Aabb, pad_frac: f64, width: usize, height: usize) -> Result<Aabb> {
    let pad = pad_frac * (b.x_max - b.x_min).hypot(b.y_max - b.y_min);
    let (wmax, hmax) = (width as f64 - 1.0, height as f64 - 1.0);
    let x_min = (b.x_min - pad).floor();
    let y_min = (b.y_min - pad).floor();
    let x_max = (b.x_max + pad).ceil();
    let y_max = (b.y_max + pad).ceil();
    if x_max < 0.0 || y_max < 0.0 || x_min > wmax || y_min > hmax {
        return Err(Error::EmptyAfterClip);
    }
    Ok(Aabb {
        x_min: x_min.max(0.0),
        y_min: y_min.max(0.0),
        x_max: x_max.min(wmax),
        y_max: y_max.min(hmax),
    })
}
