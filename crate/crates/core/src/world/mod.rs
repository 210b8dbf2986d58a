//! Environment representation: center lines, routes, right of way and
//! conflict zones.

mod conflict;
mod polyline;
mod route;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

pub use conflict::{
    compute_conflict_zone, ConflictZone, Span, DEFAULT_LANE_HALF_WIDTH, SWEEP_STEP,
};
pub use polyline::{Closest, Polyline};
pub use route::{FrenetPose, Route, DEFAULT_CORRIDOR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("polyline needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline point {0} repeats its predecessor")]
    DuplicatePoint(usize),
    #[error("polyline point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("speed limit {0} is not a positive finite value")]
    InvalidSpeedLimit(f64),
    #[error("position is {distance:.2} m from the center line (corridor {corridor} m)")]
    PositionOutOfCorridor { distance: f64, corridor: f64 },
    #[error("arc length {s} outside [0, {length}]")]
    SOutOfRange { s: f64, length: f64 },
    #[error("unknown route index {0}")]
    UnknownRoute(usize),
    #[error("route {0} cannot have priority over itself")]
    ReflexivePriority(usize),
}

/// Index of a route inside a [`RouteGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RouteId(pub usize);

/// All routes of an intersection with their right-of-way relation and the
/// pairwise conflict zones.
#[derive(Debug, Clone)]
pub struct RouteGraph {
    routes: Vec<Route>,
    priority: Vec<(RouteId, RouteId)>,
    conflicts: BTreeMap<(RouteId, RouteId), ConflictZone>,
    lane_half_width: f64,
}

impl RouteGraph {
    /// `priority` holds `(major, minor)` pairs: `major` has right of way over
    /// `minor`. Conflict zones are computed for every route pair.
    pub fn new(
        routes: Vec<Route>,
        priority: Vec<(RouteId, RouteId)>,
        lane_half_width: f64,
    ) -> Result<Self, WorldError> {
        for &(a, b) in &priority {
            for id in [a, b] {
                if id.0 >= routes.len() {
                    return Err(WorldError::UnknownRoute(id.0));
                }
            }
            if a == b {
                return Err(WorldError::ReflexivePriority(a.0));
            }
        }
        let mut conflicts = BTreeMap::new();
        for i in 0..routes.len() {
            for j in i + 1..routes.len() {
                if let Some(z) = compute_conflict_zone(&routes[i], &routes[j], lane_half_width) {
                    conflicts.insert((RouteId(i), RouteId(j)), z);
                }
            }
        }
        Ok(Self {
            routes,
            priority,
            conflicts,
            lane_half_width,
        })
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route_ids(&self) -> impl Iterator<Item = RouteId> {
        (0..self.routes.len()).map(RouteId)
    }

    pub fn route(&self, id: RouteId) -> &Route {
        &self.routes[id.0]
    }

    pub fn find(&self, name: &str) -> Option<RouteId> {
        self.routes
            .iter()
            .position(|r| r.name() == name)
            .map(RouteId)
    }

    pub fn lane_half_width(&self) -> f64 {
        self.lane_half_width
    }

    /// Conflict zone oriented so that `first` refers to `a`.
    pub fn conflict(&self, a: RouteId, b: RouteId) -> Option<ConflictZone> {
        if a < b {
            self.conflicts.get(&(a, b)).copied()
        } else {
            self.conflicts.get(&(b, a)).map(|z| z.swapped())
        }
    }

    pub fn has_priority(&self, major: RouteId, minor: RouteId) -> bool {
        self.priority.contains(&(major, minor))
    }

    /// rw(r): some conflicting route has right of way over `r`.
    pub fn must_yield(&self, r: RouteId) -> bool {
        self.priority
            .iter()
            .any(|&(major, minor)| minor == r && self.conflict(r, major).is_some())
    }
}
