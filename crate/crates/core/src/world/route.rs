use alloc::string::String;
use alloc::vec::Vec;

use super::{Polyline, WorldError};
use crate::geom::{normalize_angle, Vec2};

/// Default search corridor around a center line, meters.
pub const DEFAULT_CORRIDOR: f64 = 50.0;

/// Position in route coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetPose {
    /// Arc length along the center line, m.
    pub s: f64,
    /// Signed lateral offset, positive left of the travel direction, m.
    pub d: f64,
    /// Vehicle heading minus center-line heading, in (−π, π].
    pub phi: f64,
}

/// A complete path through an intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    name: String,
    centerline: Polyline,
    speed_limit: f64,
    intersection_start: Option<f64>,
    vertex_curvature: Vec<f64>,
}

impl Route {
    pub fn new(
        name: impl Into<String>,
        centerline: Polyline,
        speed_limit: f64,
        intersection_start: Option<f64>,
    ) -> Result<Self, WorldError> {
        if !(speed_limit > 0.0 && speed_limit.is_finite()) {
            return Err(WorldError::InvalidSpeedLimit(speed_limit));
        }
        if let Some(s) = intersection_start {
            if !(0.0..=centerline.length()).contains(&s) {
                return Err(WorldError::SOutOfRange {
                    s,
                    length: centerline.length(),
                });
            }
        }
        let vertex_curvature = vertex_curvatures(centerline.points());
        Ok(Self {
            name: name.into(),
            centerline,
            speed_limit,
            intersection_start,
            vertex_curvature,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn centerline(&self) -> &Polyline {
        &self.centerline
    }

    pub fn speed_limit(&self) -> f64 {
        self.speed_limit
    }

    /// Arc length where the intersection begins (stop line), if any.
    pub fn intersection_start(&self) -> Option<f64> {
        self.intersection_start
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.centerline.heading_at(s)
    }

    /// Projects a pose onto the center line using the default corridor.
    pub fn project(&self, position: Vec2, heading: f64) -> Result<FrenetPose, WorldError> {
        self.project_within(position, heading, DEFAULT_CORRIDOR)
    }

    pub fn project_within(
        &self,
        position: Vec2,
        heading: f64,
        corridor: f64,
    ) -> Result<FrenetPose, WorldError> {
        let c = self.centerline.closest(position);
        if c.distance > corridor {
            return Err(WorldError::PositionOutOfCorridor {
                distance: c.distance,
                corridor,
            });
        }
        let dir = self.centerline.direction(c.segment);
        let side = dir.cross(position - c.foot);
        let d = if side < 0.0 { -c.distance } else { c.distance };
        Ok(FrenetPose {
            s: c.s,
            d,
            phi: normalize_angle(heading - dir.heading()),
        })
    }

    /// Inverse of [`Route::project`]: the point at arc length `s` shifted by
    /// `d` along the left normal of its segment.
    pub fn to_cartesian(&self, s: f64, d: f64) -> Result<Vec2, WorldError> {
        let length = self.length();
        if !(s >= -1e-9 && s <= length + 1e-9) {
            return Err(WorldError::SOutOfRange { s, length });
        }
        let seg = self.centerline.segment_at(s);
        let normal = self.centerline.direction(seg).left_normal();
        Ok(self.centerline.point_at(s) + normal * d)
    }

    /// Signed curvature, 1/m. Circumscribed-circle curvature at each vertex,
    /// linearly interpolated in between.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let arc = self.centerline.arc_lengths();
        let i = self.centerline.segment_at(s);
        let t = ((s - arc[i]) / (arc[i + 1] - arc[i])).clamp(0.0, 1.0);
        self.vertex_curvature[i] * (1.0 - t) + self.vertex_curvature[i + 1] * t
    }
}

fn vertex_curvatures(points: &[Vec2]) -> Vec<f64> {
    let n = points.len();
    let mut k = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        k[i] = menger_curvature(points[i - 1], points[i], points[i + 1]);
    }
    if n > 2 {
        k[0] = k[1];
        k[n - 1] = k[n - 2];
    }
    k
}

/// Signed curvature of the circle through three points (0 if collinear).
pub(crate) fn menger_curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let denom = a.distance(b) * b.distance(c) * c.distance(a);
    if denom <= 0.0 {
        return 0.0;
    }
    let cross = (b - a).cross(c - b);
    if cross.abs() <= 1e-12 * denom {
        return 0.0;
    }
    2.0 * cross / denom
}
