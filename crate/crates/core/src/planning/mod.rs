//! Trajectories between origin–destination pairs: obstacle-blind straight
//! lines and RRT* over an occupancy grid.

mod rrt_star;
mod spatial;

pub use rrt_star::{plan_rrt_star, segment_is_free, RrtStarParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Feet;
use crate::geometry::{polyline_length, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Planner {
    #[serde(rename = "slpp", alias = "SLPP")]
    Slpp,
    #[serde(rename = "rrt_star", alias = "RRTStar", alias = "rrt*")]
    RrtStar,
}

impl std::fmt::Display for Planner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Planner::Slpp => "slpp",
            Planner::RrtStar => "rrt_star",
        })
    }
}

impl std::str::FromStr for Planner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slpp" => Ok(Planner::Slpp),
            "rrt_star" | "rrt*" | "rrtstar" => Ok(Planner::RrtStar),
            other => Err(format!("unknown planner `{other}` (expected slpp or rrt_star)")),
        }
    }
}

/// One-way mission from a vendor to a customer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub origin: Point2,
    pub destination: Point2,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("origin and destination coincide at ({}, {})", .0.x, .0.y)]
    CoincidentOd(Point2),
    #[error("{which} ({}, {}) is not in a free cell", .at.x, .at.y)]
    BlockedEndpoint { which: &'static str, at: Point2 },
    #[error("no path from ({}, {}) to ({}, {}) within {iterations} iterations", .od.origin.x, .od.origin.y, .od.destination.x, .od.destination.y)]
    NoPath { od: OdPair, iterations: usize },
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
}

/// A piecewise-linear flight path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Point2>,
    pub planner: Planner,
    /// Cruise altitude; `None` for obstacle-blind straight lines.
    pub altitude: Option<Feet>,
    pub total_length: f64,
}

impl Trajectory {
    fn new(waypoints: Vec<Point2>, planner: Planner, altitude: Option<Feet>) -> Self {
        let total_length = polyline_length(&waypoints);
        Self { waypoints, planner, altitude, total_length }
    }

    pub fn record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            planner: self.planner,
            altitude_ft: self.altitude.map(|a| a.0),
            waypoints: self.waypoints.iter().map(|p| [p.x, p.y]).collect(),
            length_m: self.total_length,
        }
    }
}

/// One line of a trajectory JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub planner: Planner,
    pub altitude_ft: Option<f64>,
    pub waypoints: Vec<[f64; 2]>,
    pub length_m: f64,
}

/// Straight line from origin to destination, ignoring obstacles.
pub fn plan_slpp(od: &OdPair) -> Result<Trajectory, PlanError> {
    if od.origin == od.destination {
        return Err(PlanError::CoincidentOd(od.origin));
    }
    Ok(Trajectory::new(vec![od.origin, od.destination], Planner::Slpp, None))
}
