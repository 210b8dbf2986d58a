#![allow(dead_code)]

use vlplan_core::context::Context;
use vlplan_core::world::{Polyline, Route, RouteGraph, RouteId, DEFAULT_LANE_HALF_WIDTH};
use vlplan_core::{PlannerParams, Vec2};

pub const STEP: f64 = 0.5;
pub const RAMP_STOP: f64 = 90.0;

pub enum Seg {
    Line(f64),
    /// Radius and signed turn angle, positive to the left.
    Arc(f64, f64),
}

/// Points along a chain of lines and arcs, spaced at most `STEP` apart.
pub fn path(start: Vec2, heading: f64, segs: &[Seg]) -> Vec<Vec2> {
    let mut pts = vec![start];
    let mut p = start;
    let mut h = heading;
    for seg in segs {
        match *seg {
            Seg::Line(len) => {
                let n = (len / STEP).ceil() as usize;
                let d = Vec2::from_heading(h);
                for i in 1..=n {
                    pts.push(p + d * (len * i as f64 / n as f64));
                }
                p += d * len;
            }
            Seg::Arc(r, angle) => {
                let n = (r * angle.abs() / STEP).ceil() as usize;
                let side = angle.signum();
                let center = p + Vec2::from_heading(h).left_normal() * (r * side);
                let a0 = h - side * std::f64::consts::FRAC_PI_2;
                for i in 1..=n {
                    let a = a0 + angle * i as f64 / n as f64;
                    pts.push(center + Vec2::from_heading(a) * r);
                }
                h += angle;
                p = *pts.last().unwrap();
            }
        }
    }
    pts
}

pub fn line(a: Vec2, b: Vec2) -> Vec<Vec2> {
    let len = a.distance(b);
    path(a, (b - a).heading(), &[Seg::Line(len)])
}

pub fn route(name: &str, pts: Vec<Vec2>, limit: f64, stop: Option<f64>) -> Route {
    Route::new(name, Polyline::new(pts).unwrap(), limit, stop).unwrap()
}

pub fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Main road along the x axis from x = -300 and a ramp that joins it
/// tangentially at the origin, 120 m along the ramp. The ramp stops at
/// `RAMP_STOP`, before the lanes start to overlap.
pub fn merge_graph() -> RouteGraph {
    let main = route("main", line(v(-300.0, 0.0), v(400.0, 0.0)), 19.44, None);
    let segs = [Seg::Line(60.0), Seg::Arc(150.0, -0.4), Seg::Line(300.0)];
    // walk backwards from the join to find the ramp start
    let rev = path(
        v(0.0, 0.0),
        std::f64::consts::PI,
        &[Seg::Arc(150.0, 0.4), Seg::Line(60.0)],
    );
    let start = *rev.last().unwrap();
    let heading = 0.4;
    let ramp = route("ramp", path(start, heading, &segs), 19.44, Some(RAMP_STOP));
    RouteGraph::new(
        vec![main, ramp],
        vec![(RouteId(0), RouteId(1))],
        DEFAULT_LANE_HALF_WIDTH,
    )
    .unwrap()
}

/// Two straight roads crossing at right angles at the origin, `east` has
/// right of way; `north` stops 8 m before the crossing.
pub fn crossing_graph() -> RouteGraph {
    let east = route("east", line(v(-150.0, 0.0), v(150.0, 0.0)), 13.89, None);
    let north = route(
        "north",
        line(v(0.0, -150.0), v(0.0, 150.0)),
        13.89,
        Some(142.0),
    );
    RouteGraph::new(
        vec![east, north],
        vec![(RouteId(0), RouteId(1))],
        DEFAULT_LANE_HALF_WIDTH,
    )
    .unwrap()
}

pub fn context(graph: RouteGraph) -> Context {
    Context::new(graph, PlannerParams::default())
}
