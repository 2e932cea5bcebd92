use std::collections::HashMap;

use crate::geometry::Point2;

/// Uniform bucket grid over points, keyed by integer cell.
#[derive(Debug, Default)]
pub(crate) struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point2>,
}

impl PointIndex {
    pub fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    /// Inserts `p` and returns its id (insertion order).
    pub fn insert(&mut self, p: Point2) -> usize {
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry(self.key(p)).or_default().push(id);
        id
    }

    pub fn nearest(&self, q: Point2) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let (kx, ky) = self.key(q);
        let mut best: Option<(f64, usize)> = None;
        let mut ring = 0i64;
        loop {
            for (dx, dy) in ring_offsets(ring) {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = self.points[id].distance_squared(q);
                        if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                            best = Some((d, id));
                        }
                    }
                }
            }
            // Everything outside ring `r` is at least `r * cell` away.
            if let Some((bd, id)) = best {
                let reach = ring as f64 * self.cell;
                if bd <= reach * reach {
                    return Some(id);
                }
            }
            ring += 1;
            if ring > 1 << 20 {
                return best.map(|(_, id)| id);
            }
        }
    }

    /// Ids within `radius` of `q`, ascending.
    pub fn within(&self, q: Point2, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let span = (radius / self.cell).ceil() as i64;
        let (kx, ky) = self.key(q);
        let mut out = Vec::new();
        for dy in -span..=span {
            for dx in -span..=span {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    out.extend(ids.iter().copied().filter(|&id| self.points[id].distance_squared(q) <= r2));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn ring_offsets(r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(0, 0)];
    }
    let mut v = Vec::with_capacity(8 * r as usize);
    for d in -r..=r {
        v.push((d, -r));
        v.push((d, r));
    }
    for d in (-r + 1)..r {
        v.push((-r, d));
        v.push((r, d));
    }
    v
}
