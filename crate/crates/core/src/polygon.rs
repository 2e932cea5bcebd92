//! Simple polygon helpers: area, centroid, containment, hulls, clipping.
//!
//! Rings are open vertex lists (the closing vertex is implied); a repeated
//! closing vertex is tolerated everywhere.

use crate::geometry::Point2;

fn closed_edges(ring: &[Point2]) -> impl Iterator<Item = (Point2, Point2)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

/// Drops a trailing vertex equal to the first one.
pub fn open_ring(mut ring: Vec<Point2>) -> Vec<Point2> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

/// Signed shoelace area, positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    0.5 * closed_edges(ring).map(|(a, b)| (a - o).cross(b - o)).sum::<f64>()
}

pub fn area(ring: &[Point2]) -> f64 {
    signed_area(ring).abs()
}

/// Area-weighted centroid. Falls back to the vertex mean for rings with
/// no area.
pub fn centroid(ring: &[Point2]) -> Option<Point2> {
    if ring.is_empty() {
        return None;
    }
    let o = ring[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (p, q) in closed_edges(ring) {
        let (p, q) = (p - o, q - o);
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a2.abs() <= f64::EPSILON * bbox_extent(ring).powi(2) {
        let n = ring.len() as f64;
        let sum = ring.iter().fold(Point2::ORIGIN, |s, &p| s + p);
        return Some(sum * (1.0 / n));
    }
    Some(o + Point2::new(cx / (3.0 * a2), cy / (3.0 * a2)))
}

fn bbox_extent(ring: &[Point2]) -> f64 {
    BoundingBox::of(ring).map(|b| b.width().max(b.height())).unwrap_or(0.0)
}

/// Even–odd point-in-polygon test. Points on the boundary may fall either way.
pub fn contains(ring: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    for (a, b) in closed_edges(ring) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// Smallest distance from `p` to the ring's boundary.
pub fn boundary_distance(ring: &[Point2], p: Point2) -> f64 {
    closed_edges(ring)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, without
/// collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point2, a: Point2, b: Point2| (a - o).cross(b - o);
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// True when the two segments share at least one point other than by
/// collinear overlap (proper or endpoint-touching crossings).
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True when no two non-adjacent edges cross.
pub fn is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (b1, b2) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn of(points: &[Point2]) -> Option<BoundingBox> {
        let first = *points.first()?;
        Some(points.iter().fold(
            BoundingBox { min: first, max: first },
            |b, p| b.including(*p),
        ))
    }

    pub fn including(self, p: Point2) -> BoundingBox {
        BoundingBox {
            min: Point2::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            max: Point2::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        }
    }

    pub fn union(self, other: BoundingBox) -> BoundingBox {
        self.including(other.min).including(other.max)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Clips `ring` to the axis-aligned rectangle `[min, max]`
/// (Sutherland–Hodgman). The area of the result equals the overlap area
/// even for non-convex rings.
pub fn clip_to_rect(ring: &[Point2], min: Point2, max: Point2) -> Vec<Point2> {
    let mut out: Vec<Point2> = ring.to_vec();
    // (axis, bound, keep_greater)
    let planes = [(0, min.x, true), (0, max.x, false), (1, min.y, true), (1, max.y, false)];
    for (axis, bound, keep_greater) in planes {
        if out.is_empty() {
            break;
        }
        let coord = |p: &Point2| if axis == 0 { p.x } else { p.y };
        let inside = |p: &Point2| if keep_greater { coord(p) >= bound } else { coord(p) <= bound };
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (cin, pin) = (inside(&cur), inside(&prev));
            if cin != pin {
                let t = (bound - coord(&prev)) / (coord(&cur) - coord(&prev));
                out.push(prev.lerp(cur, t));
            }
            if cin {
                out.push(cur);
            }
        }
    }
    out
}
