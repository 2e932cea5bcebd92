use std::collections::HashMap;

use crate::geometry::{segment_union_length, Disk, Point2};
use crate::polygon::point_segment_distance;

/// Equal-radius disks bucketed by center so that a segment only meets the
/// disks that can reach it.
#[derive(Debug, Clone)]
pub struct DiskIndex {
    disks: Vec<Disk>,
    radius: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl DiskIndex {
    pub fn new(centers: &[Point2], radius: f64) -> Self {
        let disks: Vec<Disk> = centers.iter().map(|c| Disk { center: *c, radius }).collect();
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, d) in disks.iter().enumerate() {
            buckets.entry(key(d.center, radius)).or_default().push(i);
        }
        Self { disks, radius, buckets }
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    /// Disks whose closed region meets segment `a -> b`, in index order.
    pub fn candidates(&self, a: Point2, b: Point2) -> Vec<Disk> {
        if self.disks.is_empty() {
            return Vec::new();
        }
        let r = self.radius;
        let (x0, y0) = key(Point2::new(a.x.min(b.x) - r, a.y.min(b.y) - r), r);
        let (x1, y1) = key(Point2::new(a.x.max(b.x) + r, a.y.max(b.y) + r), r);
        let cells = (x1 - x0 + 1).saturating_mul(y1 - y0 + 1);
        let mut ids: Vec<usize> = if cells as usize > self.buckets.len() {
            (0..self.disks.len()).collect()
        } else {
            let mut v = Vec::new();
            for ky in y0..=y1 {
                for kx in x0..=x1 {
                    if let Some(b) = self.buckets.get(&(kx, ky)) {
                        v.extend_from_slice(b);
                    }
                }
            }
            v.sort_unstable();
            v
        };
        ids.retain(|&i| point_segment_distance(self.disks[i].center, a, b) <= r);
        ids.into_iter().map(|i| self.disks[i]).collect()
    }

    /// Fraction of `polyline` inside the union of the indexed disks.
    pub fn coverage(&self, polyline: &[Point2]) -> f64 {
        let mut total = 0.0;
        let mut covered = 0.0;
        for w in polyline.windows(2) {
            total += w[0].distance(w[1]);
            covered += segment_union_length(w[0], w[1], &self.candidates(w[0], w[1]));
        }
        if total > 0.0 { (covered / total).clamp(0.0, 1.0) } else { 0.0 }
    }
}

fn key(p: Point2, cell: f64) -> (i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
}
