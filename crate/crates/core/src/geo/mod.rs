//! City data ingest: themed GeoJSON, local projection, occupancy grids,
//! customer sampling and candidate receiver sites.

mod geojson;
mod occupancy;
mod projection;

pub use geojson::{parse_theme_geojson, GeoFeature, ParseOptions, ParsedTheme, DEFAULT_BUILDING_HEIGHT_M};
pub use occupancy::{build_occupancy_grid, GridHeader, OccupancyGrid, DEFAULT_CELL_SIZE_M};
pub use projection::{project_to_local, LocalProjection, EARTH_RADIUS_M};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::polygon::{self, BoundingBox};

pub const METERS_PER_FOOT: f64 = 0.3048;

/// Rejection attempts per requested customer before giving up.
const MAX_REJECTIONS_PER_SAMPLE: usize = 10_000;

/// An altitude in feet.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Feet(pub f64);

impl Feet {
    pub fn to_meters(self) -> f64 {
        self.0 * METERS_PER_FOOT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theme {
    Buildings,
    Vendors,
    Residential,
}

impl std::fmt::Display for Theme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Theme::Buildings => "buildings",
            Theme::Vendors => "vendors",
            Theme::Residential => "residential",
        })
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed GeoJSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("input is not a GeoJSON FeatureCollection")]
    NotFeatureCollection,
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error("region of interest is empty")]
    EmptyRegion,
    #[error("region of interest boundary is not a simple polygon")]
    SelfIntersectingBoundary,
    #[error("residential polygons have no area to sample {requested} customers from")]
    NoResidentialArea { requested: usize },
    #[error("could only place {placed} of {requested} customers inside the region of interest")]
    CustomerSamplingExhausted { placed: usize, requested: usize },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Building footprint in projected meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingFootprint {
    pub polygon: Vec<Point2>,
    /// Meters above ground.
    pub height: f64,
    pub centroid: Point2,
}

impl BuildingFootprint {
    pub fn new(polygon: Vec<Point2>, height: f64) -> Self {
        let polygon = polygon::open_ring(polygon);
        let centroid = polygon::centroid(&polygon).unwrap_or_default();
        Self { polygon, height, centroid }
    }

    /// Axis-aligned rectangle footprint.
    pub fn rectangle(min: Point2, max: Point2, height: f64) -> Self {
        Self::new(
            vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)],
            height,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VendorSite {
    pub location: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomerSite {
    pub location: Point2,
}

/// City boundary plus the convex hull that bounds obstacles and receiver
/// sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub boundary: Vec<Point2>,
    pub obstacle_hull: Vec<Point2>,
}

impl RegionOfInterest {
    /// Region whose obstacle hull is the convex hull of the boundary and any
    /// `extra` points (typically building vertices).
    pub fn new(boundary: Vec<Point2>, extra: &[Point2]) -> Result<Self, IngestError> {
        let boundary = polygon::open_ring(boundary);
        if boundary.len() < 3 || polygon::area(&boundary) <= 0.0 {
            return Err(IngestError::EmptyRegion);
        }
        if !polygon::is_simple(&boundary) {
            return Err(IngestError::SelfIntersectingBoundary);
        }
        let mut all = boundary.clone();
        all.extend_from_slice(extra);
        let obstacle_hull = polygon::convex_hull(&all);
        Ok(Self { boundary, obstacle_hull })
    }

    pub fn contains(&self, p: Point2) -> bool {
        polygon::contains(&self.boundary, p)
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::of(&self.obstacle_hull).expect("hull has vertices")
    }
}

/// Uniform samples over the union of `polygons`: a polygon is chosen with
/// probability proportional to its area, then a point is drawn by rejection
/// from its bounding box.
pub fn sample_customers<R: Rng + ?Sized>(
    polygons: &[Vec<Point2>],
    n: usize,
    rng: &mut R,
) -> Result<Vec<CustomerSite>, IngestError> {
    sample_customers_within(polygons, n, rng, |_| true)
}

/// As [`sample_customers`], keeping only points accepted by `keep`.
pub fn sample_customers_within<R, F>(
    polygons: &[Vec<Point2>],
    n: usize,
    rng: &mut R,
    keep: F,
) -> Result<Vec<CustomerSite>, IngestError>
where
    R: Rng + ?Sized,
    F: Fn(Point2) -> bool,
{
    if n == 0 {
        return Ok(Vec::new());
    }
    let areas: Vec<f64> = polygons.iter().map(|p| polygon::area(p)).collect();
    let chooser = WeightedIndex::new(&areas).map_err(|_| IngestError::NoResidentialArea { requested: n })?;
    let boxes: Vec<Option<BoundingBox>> = polygons.iter().map(|p| BoundingBox::of(p)).collect();
    let mut out = Vec::with_capacity(n);
    let budget = n.saturating_mul(MAX_REJECTIONS_PER_SAMPLE);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= budget {
            return Err(IngestError::CustomerSamplingExhausted { placed: out.len(), requested: n });
        }
        attempts += 1;
        let i = chooser.sample(rng);
        let bb = boxes[i].expect("weighted polygons have vertices");
        let p = Point2::new(
            rng.random_range(bb.min.x..=bb.max.x),
            rng.random_range(bb.min.y..=bb.max.y),
        );
        if polygon::contains(&polygons[i], p) && keep(p) {
            out.push(CustomerSite { location: p });
        }
    }
    Ok(out)
}

/// Centroid of every building footprint.
pub fn candidate_receiver_sites(buildings: &[BuildingFootprint]) -> Vec<Point2> {
    buildings.iter().map(|b| b.centroid).collect()
}

/// Counts gathered while assembling a city.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub buildings: usize,
    pub buildings_missing_height: usize,
    pub vendors: usize,
    pub vendors_outside_roi: usize,
    pub residential_polygons: usize,
    pub skipped_features: usize,
    pub warnings: Vec<String>,
}

/// Projected city: obstacles, vendors, residential areas and the ROI.
#[derive(Debug, Clone)]
pub struct CityData {
    pub projection: LocalProjection,
    pub buildings: Vec<BuildingFootprint>,
    pub vendors: Vec<VendorSite>,
    pub residential: Vec<Vec<Point2>>,
    pub roi: RegionOfInterest,
    pub report: IngestReport,
}

impl CityData {
    /// Projects parsed themes into a local frame about the ROI centroid.
    ///
    /// `boundary_lonlat` is the ROI in `(lon, lat)`; when absent the convex
    /// hull of all vendor and residential coordinates is used. Vendors outside
    /// the boundary are dropped; all buildings are kept.
    pub fn assemble(
        buildings: &ParsedTheme,
        vendors: &ParsedTheme,
        residential: &ParsedTheme,
        boundary_lonlat: Option<Vec<Point2>>,
    ) -> Result<Self, IngestError> {
        let boundary_geo = match boundary_lonlat {
            Some(b) => polygon::open_ring(b),
            None => {
                let mut pts = Vec::new();
                for f in vendors.features.iter().chain(&residential.features) {
                    match f {
                        GeoFeature::VendorPoint(p) => pts.push(*p),
                        GeoFeature::VendorArea(r) | GeoFeature::Residential(r) => pts.extend_from_slice(r),
                        GeoFeature::Building { .. } => {}
                    }
                }
                polygon::convex_hull(&pts)
            }
        };
        let reference = polygon::centroid(&boundary_geo).ok_or(IngestError::EmptyRegion)?;
        let projection = LocalProjection::new(reference.x, reference.y);
        let project_ring = |r: &[Point2]| r.iter().map(|p| projection.project_point(*p)).collect::<Vec<_>>();

        let mut report = IngestReport {
            buildings_missing_height: buildings.missing_height,
            skipped_features: buildings.skipped + vendors.skipped + residential.skipped,
            ..Default::default()
        };
        for t in [buildings, vendors, residential] {
            report.warnings.extend(t.warnings.iter().cloned());
        }

        let footprints: Vec<BuildingFootprint> = buildings
            .features
            .iter()
            .filter_map(|f| match f {
                GeoFeature::Building { ring, height_m } => Some(BuildingFootprint::new(project_ring(ring), *height_m)),
                _ => None,
            })
            .collect();
        let building_vertices: Vec<Point2> = footprints.iter().flat_map(|b| b.polygon.iter().copied()).collect();
        let roi = RegionOfInterest::new(project_ring(&boundary_geo), &building_vertices)?;

        let mut vendor_sites = Vec::new();
        for f in &vendors.features {
            let loc = match f {
                GeoFeature::VendorPoint(p) => projection.project_point(*p),
                GeoFeature::VendorArea(r) => match polygon::centroid(&project_ring(r)) {
                    Some(c) => c,
                    None => continue,
                },
                _ => continue,
            };
            if roi.contains(loc) {
                vendor_sites.push(VendorSite { location: loc });
            } else {
                report.vendors_outside_roi += 1;
            }
        }
        let residential_rings: Vec<Vec<Point2>> = residential
            .features
            .iter()
            .filter_map(|f| match f {
                GeoFeature::Residential(r) => Some(project_ring(r)),
                _ => None,
            })
            .collect();

        report.buildings = footprints.len();
        report.vendors = vendor_sites.len();
        report.residential_polygons = residential_rings.len();
        Ok(Self {
            projection,
            buildings: footprints,
            vendors: vendor_sites,
            residential: residential_rings,
            roi,
            report,
        })
    }

    /// Reads and assembles the three theme files.
    pub fn load(
        buildings: &std::path::Path,
        vendors: &std::path::Path,
        residential: &std::path::Path,
        roi: Option<&std::path::Path>,
        opts: &ParseOptions,
    ) -> Result<Self, IngestError> {
        let read = |p: &std::path::Path| {
            std::fs::read(p).map_err(|source| IngestError::Io { path: p.display().to_string(), source })
        };
        let b = parse_theme_geojson(&read(buildings)?, Theme::Buildings, opts)?;
        let v = parse_theme_geojson(&read(vendors)?, Theme::Vendors, opts)?;
        let r = parse_theme_geojson(&read(residential)?, Theme::Residential, opts)?;
        let boundary = match roi {
            Some(path) => {
                let parsed = parse_theme_geojson(&read(path)?, Theme::Residential, opts)?;
                let ring = parsed.features.into_iter().find_map(|f| match f {
                    GeoFeature::Residential(r) => Some(r),
                    _ => None,
                });
                Some(ring.ok_or(IngestError::EmptyRegion)?)
            }
            None => None,
        };
        Self::assemble(&b, &v, &r, boundary)
    }

    /// Customers uniform over residential land inside the ROI.
    pub fn sample_customers<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<CustomerSite>, IngestError> {
        sample_customers_within(&self.residential, n, rng, |p| self.roi.contains(p))
    }

    pub fn candidate_receiver_sites(&self) -> Vec<Point2> {
        candidate_receiver_sites(&self.buildings)
    }

    pub fn occupancy_grid(&self, altitude: Feet, cell_size: f64) -> Result<OccupancyGrid, IngestError> {
        build_occupancy_grid(&self.buildings, &self.roi, altitude, cell_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn square(x0: f64, y0: f64, side: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + side, y0),
            Point2::new(x0 + side, y0 + side),
            Point2::new(x0, y0 + side),
        ]
    }

    fn roi_square(side: f64) -> RegionOfInterest {
        RegionOfInterest::new(square(0.0, 0.0, side), &[]).unwrap()
    }

    #[test]
    fn feet_conversion() {
        assert!((Feet(200.0).to_meters() - 60.96).abs() < 1e-12);
        assert!((Feet(400.0).to_meters() - 121.92).abs() < 1e-12);
    }

    #[test]
    fn customers_in_unit_square() {
        let polys = vec![square(0.0, 0.0, 1.0)];
        let mut rng = RngStream::new(1, 0).rng();
        let c = sample_customers(&polys, 10_000, &mut rng).unwrap();
        let n = c.len() as f64;
        let mx = c.iter().map(|s| s.location.x).sum::<f64>() / n;
        let my = c.iter().map(|s| s.location.y).sum::<f64>() / n;
        assert!((mx - 0.5).abs() < 0.01 && (my - 0.5).abs() < 0.01);
    }

    #[test]
    fn customers_weighted_by_area() {
        // Areas 1 and 3: expected share 1/4 for the first square.
        let polys = vec![square(0.0, 0.0, 1.0), square(10.0, 0.0, 3f64.sqrt())];
        let n = 20_000;
        let mut rng = RngStream::new(2, 0).rng();
        let c = sample_customers(&polys, n, &mut rng).unwrap();
        let first = c.iter().filter(|s| s.location.x < 5.0).count() as f64;
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((first - n as f64 * p).abs() <= 3.0 * sigma, "{first}");
        for s in &c {
            assert!(polys.iter().any(|poly| polygon::contains(poly, s.location)));
        }
    }

    #[test]
    fn customers_deterministic_and_errors() {
        let polys = vec![square(0.0, 0.0, 1.0)];
        let a = sample_customers(&polys, 50, &mut RngStream::new(3, 0).rng()).unwrap();
        let b = sample_customers(&polys, 50, &mut RngStream::new(3, 0).rng()).unwrap();
        assert_eq!(a, b);
        let flat = vec![vec![Point2::ORIGIN, Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]];
        assert!(matches!(
            sample_customers(&flat, 5, &mut RngStream::new(3, 0).rng()),
            Err(IngestError::NoResidentialArea { .. })
        ));
        assert!(sample_customers(&[], 0, &mut RngStream::new(3, 0).rng()).unwrap().is_empty());
    }

    #[test]
    fn candidate_sites_are_centroids() {
        let b = vec![BuildingFootprint::new(square(0.0, 0.0, 1.0), 5.0)];
        assert_eq!(candidate_receiver_sites(&b), vec![Point2::new(0.5, 0.5)]);
        assert!(candidate_receiver_sites(&[]).is_empty());
    }

    #[test]
    fn empty_city_grid_is_free() {
        let g = build_occupancy_grid(&[], &roi_square(100.0), Feet(200.0), 10.0).unwrap();
        assert_eq!((g.width, g.height), (10, 10));
        assert_eq!(g.occupied_count(), 0);
        assert!(build_occupancy_grid(&[], &roi_square(100.0), Feet(200.0), 0.0).is_err());
    }

    #[test]
    fn single_tall_building_by_altitude() {
        // 10 m x 10 m footprint aligned with one cell, 100 m tall.
        let b = vec![BuildingFootprint::new(square(50.0, 50.0, 10.0), 100.0)];
        let roi = roi_square(100.0);
        let at200 = build_occupancy_grid(&b, &roi, Feet(200.0), 10.0).unwrap();
        assert_eq!(at200.occupied_cells().collect::<Vec<_>>(), vec![(5, 5)]);
        let at400 = build_occupancy_grid(&b, &roi, Feet(400.0), 10.0).unwrap();
        assert_eq!(at400.occupied_count(), 0);
        // Exactly at roof height still counts as an obstacle.
        let at_roof = build_occupancy_grid(&b, &roi, Feet(100.0 / METERS_PER_FOOT), 10.0).unwrap();
        assert_eq!(at_roof.occupied_count(), 1);
    }

    #[test]
    fn occupancy_order_independent_and_monotone() {
        let mut b = vec![
            BuildingFootprint::new(square(3.0, 7.0, 25.0), 40.0),
            BuildingFootprint::new(square(60.0, 20.0, 12.0), 90.0),
            BuildingFootprint::new(
                vec![Point2::new(20.0, 60.0), Point2::new(80.0, 70.0), Point2::new(40.0, 95.0)],
                150.0,
            ),
        ];
        let roi = roi_square(100.0);
        let g1 = build_occupancy_grid(&b, &roi, Feet(0.0), 7.0).unwrap();
        b.reverse();
        let g2 = build_occupancy_grid(&b, &roi, Feet(0.0), 7.0).unwrap();
        assert_eq!(g1, g2);
        let mut prev = g1.occupied_count();
        for ft in [100.0, 200.0, 300.0, 400.0, 600.0] {
            let g = build_occupancy_grid(&b, &roi, Feet(ft), 7.0).unwrap();
            assert!(g.occupied_count() <= prev);
            for (ix, iy) in g.occupied_cells() {
                assert!(g1.is_occupied(ix, iy));
            }
            prev = g.occupied_count();
        }
        assert_eq!(prev, 0);
    }

    #[test]
    fn pgm_dump_layout() {
        let b = vec![BuildingFootprint::new(square(0.0, 0.0, 10.0), 100.0)];
        let g = build_occupancy_grid(&b, &roi_square(20.0), Feet(200.0), 10.0).unwrap();
        let mut buf = Vec::new();
        g.write_pgm(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[2], "2 2");
        // South-west cell is the obstacle; it is printed on the last row.
        assert_eq!(lines[4], "255 255");
        assert_eq!(lines[5], "0 255");
        assert_eq!(g.header().occupied_cells, 1);
    }

    #[test]
    fn roi_rejects_bowtie() {
        let bow = vec![Point2::ORIGIN, Point2::new(2.0, 2.0), Point2::new(2.0, 0.0), Point2::new(0.0, 1.0)];
        assert!(matches!(RegionOfInterest::new(bow, &[]), Err(IngestError::SelfIntersectingBoundary)));
    }
}
