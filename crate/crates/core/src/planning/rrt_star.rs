use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spatial::PointIndex;
use super::{OdPair, PlanError, Planner, Trajectory};
use crate::geo::OccupancyGrid;
use crate::geometry::Point2;
use crate::rng::RngStream;

/// Draws per sample before an iteration gives up on finding a free cell.
const MAX_SAMPLE_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtStarParams {
    pub max_iterations: usize,
    /// Steering distance in meters.
    pub step_size: f64,
    pub goal_bias: f64,
    pub goal_radius: f64,
    /// Shrinking-ball constant; `None` derives the usual lower bound
    /// `2 (1 + 1/d)^(1/d) (free area / pi)^(1/d)` with `d = 2`.
    pub rewire_radius_gamma: Option<f64>,
    /// Spacing of collision probes along an edge; `None` uses half a cell.
    pub collision_check_resolution: Option<f64>,
    #[serde(skip)]
    pub rng: RngStream,
}

impl Default for RrtStarParams {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            step_size: 50.0,
            goal_bias: 0.05,
            goal_radius: 25.0,
            rewire_radius_gamma: None,
            collision_check_resolution: None,
            rng: RngStream::new(0, 0),
        }
    }
}

impl RrtStarParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidParams(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return bad("goal_bias must lie in [0, 1)");
        }
        if !(self.goal_radius.is_finite() && self.goal_radius > 0.0) {
            return bad("goal_radius must be positive");
        }
        if self.rewire_radius_gamma.is_some_and(|g| !(g.is_finite() && g > 0.0)) {
            return bad("rewire_radius_gamma must be positive");
        }
        if self.collision_check_resolution.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return bad("collision_check_resolution must be positive");
        }
        Ok(())
    }

    pub fn resolution(&self, grid: &OccupancyGrid) -> f64 {
        self.collision_check_resolution.unwrap_or(grid.cell_size / 2.0)
    }

    pub fn gamma(&self, grid: &OccupancyGrid) -> f64 {
        self.rewire_radius_gamma.unwrap_or_else(|| {
            let free_area = grid.free_count() as f64 * grid.cell_size * grid.cell_size;
            2.0 * 1.5f64.sqrt() * (free_area / std::f64::consts::PI).sqrt()
        })
    }
}

/// True when every probe along `a -> b`, spaced at most `resolution`
/// apart and including both ends, lies in a free cell.
pub fn segment_is_free(grid: &OccupancyGrid, a: Point2, b: Point2, resolution: f64) -> bool {
    let n = (a.distance(b) / resolution).ceil().max(1.0) as usize;
    (0..=n).all(|i| grid.is_free(a.lerp(b, i as f64 / n as f64)))
}

struct Node {
    point: Point2,
    parent: Option<usize>,
    cost: f64,
    children: Vec<usize>,
}

struct Tree {
    nodes: Vec<Node>,
    index: PointIndex,
}

impl Tree {
    fn new(root: Point2, bucket: f64) -> Self {
        let mut index = PointIndex::new(bucket);
        index.insert(root);
        Self { nodes: vec![Node { point: root, parent: None, cost: 0.0, children: Vec::new() }], index }
    }

    fn add(&mut self, point: Point2, parent: usize, cost: f64) -> usize {
        let id = self.index.insert(point);
        self.nodes.push(Node { point, parent: Some(parent), cost, children: Vec::new() });
        self.nodes[parent].children.push(id);
        id
    }

    fn reparent(&mut self, id: usize, parent: usize, cost: f64) {
        if let Some(old) = self.nodes[id].parent {
            self.nodes[old].children.retain(|&c| c != id);
        }
        self.nodes[parent].children.push(id);
        let delta = cost - self.nodes[id].cost;
        self.nodes[id].parent = Some(parent);
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            self.nodes[n].cost += delta;
            stack.extend_from_slice(&self.nodes[n].children);
        }
    }

    fn path_to(&self, mut id: usize) -> Vec<Point2> {
        let mut out = vec![self.nodes[id].point];
        while let Some(p) = self.nodes[id].parent {
            out.push(self.nodes[p].point);
            id = p;
        }
        out.reverse();
        out
    }
}

fn sample_free<R: Rng + ?Sized>(grid: &OccupancyGrid, rng: &mut R) -> Option<Point2> {
    let b = grid.bounds();
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let p = Point2::new(
            b.min.x + rng.random::<f64>() * b.width(),
            b.min.y + rng.random::<f64>() * b.height(),
        );
        if grid.is_free(p) {
            return Some(p);
        }
    }
    None
}

/// RRT* from `od.origin` toward `od.destination` over the free cells of
/// `grid`. After `max_iterations` the cheapest tree node within
/// `goal_radius` of the destination that can see it is joined to it.
pub fn plan_rrt_star(od: &OdPair, grid: &OccupancyGrid, params: &RrtStarParams) -> Result<Trajectory, PlanError> {
    params.validate()?;
    if od.origin == od.destination {
        return Err(PlanError::CoincidentOd(od.origin));
    }
    for (which, at) in [("origin", od.origin), ("destination", od.destination)] {
        if !grid.is_free(at) {
            return Err(PlanError::BlockedEndpoint { which, at });
        }
    }

    let step = params.step_size;
    let res = params.resolution(grid);
    let gamma = params.gamma(grid);
    let goal = od.destination;
    let mut rng = params.rng.rng();
    let mut tree = Tree::new(od.origin, step);

    for _ in 0..params.max_iterations {
        // Both draws happen every iteration so the random sequence is a
        // prefix of the one used with a larger budget.
        let biased = rng.random::<f64>() < params.goal_bias;
        let uniform = sample_free(grid, &mut rng);
        let target = if biased { goal } else {
            match uniform {
                Some(p) => p,
                None => continue,
            }
        };

        let nearest = tree.index.nearest(target).expect("tree has a root");
        let from = tree.nodes[nearest].point;
        let d = from.distance(target);
        if d == 0.0 {
            continue;
        }
        let new = if d <= step { target } else { from.lerp(target, step / d) };
        if !segment_is_free(grid, from, new, res) {
            continue;
        }

        let n = tree.nodes.len() as f64 + 1.0;
        let radius = (gamma * (n.ln() / n).sqrt()).max(step);
        let near = tree.index.within(new, radius);

        let mut parent = nearest;
        let mut cost = tree.nodes[nearest].cost + from.distance(new);
        for &q in &near {
            let c = tree.nodes[q].cost + tree.nodes[q].point.distance(new);
            if c < cost && segment_is_free(grid, tree.nodes[q].point, new, res) {
                parent = q;
                cost = c;
            }
        }
        let id = tree.add(new, parent, cost);

        for &q in &near {
            if q == parent {
                continue;
            }
            let c = cost + new.distance(tree.nodes[q].point);
            if c < tree.nodes[q].cost && segment_is_free(grid, new, tree.nodes[q].point, res) {
                tree.reparent(q, id, c);
            }
        }
    }

    let best = tree
        .index
        .within(goal, params.goal_radius)
        .into_iter()
        .filter(|&i| segment_is_free(grid, tree.nodes[i].point, goal, res))
        .map(|i| (tree.nodes[i].cost + tree.nodes[i].point.distance(goal), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let Some((_, end)) = best else {
        return Err(PlanError::NoPath { od: *od, iterations: params.max_iterations });
    };

    let mut waypoints = tree.path_to(end);
    waypoints.push(goal);
    waypoints.dedup();
    Ok(Trajectory::new(waypoints, Planner::RrtStar, Some(grid.altitude)))
}
