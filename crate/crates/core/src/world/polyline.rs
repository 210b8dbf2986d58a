use alloc::vec::Vec;

use super::WorldError;
use crate::geom::Vec2;

/// Center line stored as a polygon line with cumulative arc lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    arc: Vec<f64>,
}

/// Closest point of a polyline to a query position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closest {
    pub s: f64,
    pub foot: Vec2,
    pub distance: f64,
    pub segment: usize,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Result<Self, WorldError> {
        if points.len() < 2 {
            return Err(WorldError::TooFewPoints(points.len()));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for (i, w) in points.windows(2).enumerate() {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(WorldError::NonFinitePoint(i));
            }
            let len = w[0].distance(w[1]);
            if len <= 1e-9 {
                return Err(WorldError::DuplicatePoint(i + 1));
            }
            arc.push(arc[i] + len);
        }
        Ok(Self { points, arc })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        self.arc[self.arc.len() - 1]
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Index of the segment containing arc length `s` (clamped to the line).
    pub fn segment_at(&self, s: f64) -> usize {
        let idx = self.arc.partition_point(|&a| a <= s);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    pub fn direction(&self, segment: usize) -> Vec2 {
        let d = self.points[segment + 1] - self.points[segment];
        d * (1.0 / d.norm())
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let i = self.segment_at(s);
        let t = ((s - self.arc[i]) / (self.arc[i + 1] - self.arc[i])).clamp(0.0, 1.0);
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.direction(self.segment_at(s)).heading()
    }

    /// Nearest point on the line. Equidistant candidates resolve to the lower
    /// arc length.
    pub fn closest(&self, p: Vec2) -> Closest {
        let mut best = Closest {
            s: 0.0,
            foot: self.points[0],
            distance: f64::INFINITY,
            segment: 0,
        };
        let mut best_sq = f64::INFINITY;
        for i in 0..self.segment_count() {
            let a = self.points[i];
            let ab = self.points[i + 1] - a;
            let len_sq = ab.norm_squared();
            let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
            let foot = a + ab * t;
            let d_sq = (p - foot).norm_squared();
            if d_sq < best_sq {
                best_sq = d_sq;
                best = Closest {
                    s: self.arc[i] + t * (self.arc[i + 1] - self.arc[i]),
                    foot,
                    distance: 0.0,
                    segment: i,
                };
            }
        }
        best.distance = libm::sqrt(best_sq);
        best
    }
}
