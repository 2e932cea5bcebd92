//! Altitude-sliced occupancy rasters.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{BuildingFootprint, Feet, IngestError, RegionOfInterest};
use crate::geometry::Point2;
use crate::polygon::{area, clip_to_rect, BoundingBox};

/// Default raster resolution in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 10.0;

/// Boolean raster over the obstacle hull; `true` marks an obstacle.
///
/// Cells are stored row-major with row 0 at the southern edge (`origin.y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub origin: Point2,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    pub altitude: Feet,
    cells: Vec<bool>,
}

/// Metadata written next to a PGM dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    pub altitude_ft: f64,
    pub altitude_m: f64,
    pub occupied_cells: usize,
}

impl OccupancyGrid {
    /// All-free grid.
    pub fn empty(origin: Point2, cell_size: f64, width: usize, height: usize, altitude: Feet) -> Self {
        Self {
            origin,
            cell_size,
            width,
            height,
            altitude,
            cells: vec![false; width * height],
        }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.index(ix, iy)]
    }

    pub fn set_occupied(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.index(ix, iy);
        self.cells[i] = occupied;
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        // Points exactly on the far edge belong to the last cell.
        let ix = if ix == self.width && fx == self.width as f64 { ix - 1 } else { ix };
        let iy = if iy == self.height && fy == self.height as f64 { iy - 1 } else { iy };
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    /// Free and inside the grid.
    pub fn is_free(&self, p: Point2) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| !self.is_occupied(ix, iy))
    }

    pub fn cell_min(&self, ix: usize, iy: usize) -> Point2 {
        self.origin + Point2::new(ix as f64 * self.cell_size, iy as f64 * self.cell_size)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        self.cell_min(ix, iy) + Point2::new(0.5 * self.cell_size, 0.5 * self.cell_size)
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox {
            min: self.origin,
            max: self.origin + Point2::new(self.width as f64 * self.cell_size, self.height as f64 * self.cell_size),
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn free_count(&self) -> usize {
        self.cells.len() - self.occupied_count()
    }

    /// Indices of occupied cells in row-major order.
    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            origin: self.origin.into(),
            cell_size: self.cell_size,
            width: self.width,
            height: self.height,
            altitude_ft: self.altitude.0,
            altitude_m: self.altitude.to_meters(),
            occupied_cells: self.occupied_count(),
        }
    }

    /// Plain (ASCII, `P2`) PGM, north row first; 0 = obstacle, 255 = free.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "P2")?;
        writeln!(out, "# altitude {} ft, cell {} m", self.altitude.0, self.cell_size)?;
        writeln!(out, "{} {}", self.width, self.height)?;
        writeln!(out, "255")?;
        for iy in (0..self.height).rev() {
            let row: Vec<&str> = (0..self.width)
                .map(|ix| if self.is_occupied(ix, iy) { "0" } else { "255" })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Rasterizes every building at least as tall as `altitude` onto a grid
/// covering the ROI's obstacle hull. A cell is occupied when its overlap
/// with such a footprint has positive area.
pub fn build_occupancy_grid(
    buildings: &[BuildingFootprint],
    roi: &RegionOfInterest,
    altitude: Feet,
    cell_size: f64,
) -> Result<OccupancyGrid, IngestError> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(IngestError::BadCellSize(cell_size));
    }
    let bounds = BoundingBox::of(&roi.obstacle_hull).ok_or(IngestError::EmptyRegion)?;
    let width = ((bounds.width() / cell_size).ceil() as usize).max(1);
    let height = ((bounds.height() / cell_size).ceil() as usize).max(1);
    let mut grid = OccupancyGrid::empty(bounds.min, cell_size, width, height, altitude);
    let altitude_m = altitude.to_meters();
    let min_overlap = 1e-9 * cell_size * cell_size;

    for b in buildings.iter().filter(|b| b.height >= altitude_m) {
        let Some(bb) = BoundingBox::of(&b.polygon) else { continue };
        let to_ix = |x: f64, n: usize| (((x - bounds.min.x) / cell_size).floor().max(0.0) as usize).min(n - 1);
        let to_iy = |y: f64, n: usize| (((y - bounds.min.y) / cell_size).floor().max(0.0) as usize).min(n - 1);
        let (x0, x1) = (to_ix(bb.min.x, width), to_ix(bb.max.x, width));
        let (y0, y1) = (to_iy(bb.min.y, height), to_iy(bb.max.y, height));
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if grid.is_occupied(ix, iy) {
                    continue;
                }
                let lo = grid.cell_min(ix, iy);
                let hi = lo + Point2::new(cell_size, cell_size);
                if area(&clip_to_rect(&b.polygon, lo, hi)) > min_overlap {
                    grid.set_occupied(ix, iy, true);
                }
            }
        }
    }
    Ok(grid)
}
