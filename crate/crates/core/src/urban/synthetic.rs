//! Procedural street-grid cities for tests and desk-scale experiments.
//!
//! Blocks of square buildings sit between straight streets; vendors are
//! street intersections, so they are never inside an obstacle, and
//! residential land is made only of low blocks.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geo::{BuildingFootprint, CityData, IngestError, IngestReport, LocalProjection, RegionOfInterest};
use crate::geometry::Point2;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCityParams {
    pub blocks_x: usize,
    pub blocks_y: usize,
    /// Side of a square block, meters.
    pub block_m: f64,
    pub street_m: f64,
    /// Buildings per block side; a block holds `n * n` buildings.
    pub buildings_per_side: usize,
    /// Gap between a building and its lot edge.
    pub setback_m: f64,
    /// Probability that a block is made of tall buildings.
    pub tall_fraction: f64,
    pub tall_height_m: (f64, f64),
    pub low_height_m: (f64, f64),
    /// Probability that a low block is residential.
    pub residential_fraction: f64,
    pub vendors: usize,
    /// Reference `(lon, lat)` of the local frame's origin.
    pub reference: (f64, f64),
}

impl Default for SyntheticCityParams {
    fn default() -> Self {
        Self {
            blocks_x: 10,
            blocks_y: 10,
            block_m: 80.0,
            street_m: 20.0,
            buildings_per_side: 2,
            setback_m: 4.0,
            tall_fraction: 0.1,
            tall_height_m: (70.0, 150.0),
            low_height_m: (5.0, 30.0),
            residential_fraction: 0.6,
            vendors: 5,
            reference: (-122.44, 37.76),
        }
    }
}

impl SyntheticCityParams {
    /// A city with roughly the land area of San Francisco (about 11 km
    /// square), a few percent of tall blocks and a sparse vendor set.
    pub fn sf_scale() -> Self {
        Self {
            blocks_x: 100,
            blocks_y: 100,
            block_m: 90.0,
            street_m: 20.0,
            buildings_per_side: 2,
            tall_fraction: 0.03,
            residential_fraction: 0.7,
            vendors: 60,
            ..Self::default()
        }
    }

    pub fn pitch(&self) -> f64 {
        self.block_m + self.street_m
    }

    pub fn extent(&self) -> Point2 {
        Point2::new(self.blocks_x as f64 * self.pitch(), self.blocks_y as f64 * self.pitch())
    }

    /// Lower-left corner of block `(bx, by)`.
    pub fn block_min(&self, bx: usize, by: usize) -> Point2 {
        Point2::new(
            bx as f64 * self.pitch() + self.street_m / 2.0,
            by as f64 * self.pitch() + self.street_m / 2.0,
        )
    }
}

/// Builds a city from `params`; the layout is fixed and the random parts
/// (heights, residential blocks, vendor intersections) come from `stream`.
pub fn generate_city(params: &SyntheticCityParams, stream: RngStream) -> Result<CityData, IngestError> {
    let mut rng = stream.rng();
    let p = params;
    let k = p.buildings_per_side.max(1);
    let lot = p.block_m / k as f64;
    let mut buildings = Vec::with_capacity(p.blocks_x * p.blocks_y * k * k);
    let mut residential = Vec::new();

    for by in 0..p.blocks_y {
        for bx in 0..p.blocks_x {
            let tall = rng.random::<f64>() < p.tall_fraction;
            let (lo, hi) = if tall { p.tall_height_m } else { p.low_height_m };
            let base = p.block_min(bx, by);
            for j in 0..k {
                for i in 0..k {
                    let min = base + Point2::new(i as f64 * lot + p.setback_m, j as f64 * lot + p.setback_m);
                    let max = base + Point2::new((i + 1) as f64 * lot - p.setback_m, (j + 1) as f64 * lot - p.setback_m);
                    let h = lo + rng.random::<f64>() * (hi - lo);
                    buildings.push(BuildingFootprint::rectangle(min, max, h));
                }
            }
            if !tall && rng.random::<f64>() < p.residential_fraction {
                let max = base + Point2::new(p.block_m, p.block_m);
                residential.push(vec![base, Point2::new(max.x, base.y), max, Point2::new(base.x, max.y)]);
            }
        }
    }

    let interior = p.blocks_x.saturating_sub(1) * p.blocks_y.saturating_sub(1);
    let n_vendors = p.vendors.min(interior);
    let mut picks = sample_indices(&mut rng, interior, n_vendors).into_vec();
    picks.sort_unstable();
    let nx = p.blocks_x.saturating_sub(1).max(1);
    let vendors = picks
        .into_iter()
        .map(|i| crate::geo::VendorSite {
            location: Point2::new((i % nx + 1) as f64 * p.pitch(), (i / nx + 1) as f64 * p.pitch()),
        })
        .collect::<Vec<_>>();

    let e = p.extent();
    let boundary = vec![Point2::ORIGIN, Point2::new(e.x, 0.0), e, Point2::new(0.0, e.y)];
    let roi = RegionOfInterest::new(boundary, &[])?;
    let report = IngestReport {
        buildings: buildings.len(),
        vendors: vendors.len(),
        residential_polygons: residential.len(),
        ..IngestReport::default()
    };
    Ok(CityData {
        projection: LocalProjection::new(p.reference.0, p.reference.1),
        buildings,
        vendors,
        residential,
        roi,
        report,
    })
}
