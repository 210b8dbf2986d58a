use alloc::vec::Vec;

use super::Route;

/// Sampling step used when sweeping one route against another, m.
pub const SWEEP_STEP: f64 = 0.5;
pub const DEFAULT_LANE_HALF_WIDTH: f64 = 1.75;

/// Arc-length interval on one route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn contains(&self, s: f64) -> bool {
        (self.start..=self.end).contains(&s)
    }
}

/// Region where two routes overlap. `first` refers to the route passed first
/// to [`compute_conflict_zone`] (or to `RouteGraph::conflict`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConflictZone {
    /// Routes cross and diverge again; start/end arc lengths on each route.
    Crossing { first: Span, second: Span },
    /// Routes share a lane from the given arc lengths to their end.
    Merging { first: f64, second: f64 },
}

impl ConflictZone {
    pub fn swapped(self) -> Self {
        match self {
            ConflictZone::Crossing { first, second } => ConflictZone::Crossing {
                first: second,
                second: first,
            },
            ConflictZone::Merging { first, second } => ConflictZone::Merging {
                first: second,
                second: first,
            },
        }
    }

    pub fn is_merging(&self) -> bool {
        matches!(self, ConflictZone::Merging { .. })
    }
}

fn samples(route: &Route) -> Vec<f64> {
    let len = route.length();
    let n = libm::ceil(len / SWEEP_STEP) as usize;
    (0..=n).map(|i| (i as f64 * SWEEP_STEP).min(len)).collect()
}

fn distance_to(route: &Route, other: &Route, s: f64) -> f64 {
    other
        .centerline()
        .closest(route.centerline().point_at(s))
        .distance
}

/// Bisects the boundary between `outside` and `inside` arc lengths.
fn refine(route: &Route, other: &Route, threshold: f64, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..40 {
        let mid = 0.5 * (outside + inside);
        if distance_to(route, other, mid) < threshold {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Runs of consecutive samples closer than `threshold` to `other`, as
/// (first, last) sample indices.
fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, flags.len() - 1));
    }
    out
}

fn run_start(route: &Route, other: &Route, threshold: f64, ss: &[f64], run: (usize, usize)) -> f64 {
    if run.0 == 0 {
        ss[0]
    } else {
        refine(route, other, threshold, ss[run.0 - 1], ss[run.0])
    }
}

fn run_end(route: &Route, other: &Route, threshold: f64, ss: &[f64], run: (usize, usize)) -> f64 {
    if run.1 == ss.len() - 1 {
        ss[run.1]
    } else {
        refine(route, other, threshold, ss[run.1 + 1], ss[run.1])
    }
}

struct Sweep {
    ss: Vec<f64>,
    near: Vec<bool>,
    wide: Vec<bool>,
}

fn sweep(route: &Route, other: &Route, half_width: f64) -> Sweep {
    let ss = samples(route);
    let dist: Vec<f64> = ss.iter().map(|&s| distance_to(route, other, s)).collect();
    Sweep {
        near: dist.iter().map(|&d| d < half_width).collect(),
        wide: dist.iter().map(|&d| d < 2.0 * half_width).collect(),
        ss,
    }
}

/// Start of the shared lane on `route`, given that the routes merge.
fn merge_start(route: &Route, other: &Route, sw: &Sweep, half_width: f64) -> Option<f64> {
    let tol = half_width;
    let rs = runs(&sw.near);
    let last = *rs.last()?;
    if last.1 == sw.ss.len() - 1 {
        return Some(run_start(route, other, tol, &sw.ss, last));
    }
    // `other` ends on this route: take the run containing that end point.
    let end = other.centerline().point_at(other.length());
    let s_end = route.centerline().closest(end).s;
    rs.iter()
        .find(|r| sw.ss[r.0] <= s_end + SWEEP_STEP && s_end - SWEEP_STEP <= sw.ss[r.1])
        .map(|&r| run_start(route, other, tol, &sw.ss, r))
}

/// Conflict zone between two routes, or `None` if they neither cross nor
/// merge.
///
/// Routes merge when the end of one lies within `half_width` of the other;
/// the merge starts where the center lines come within `half_width` of each
/// other for good, i.e. where the lanes start to overlap.
/// Routes cross where their center lines come closer than `2 * half_width`.
/// Overlap that starts at the beginning of both routes (a shared entry
/// lane) is not a conflict.
pub fn compute_conflict_zone(a: &Route, b: &Route, half_width: f64) -> Option<ConflictZone> {
    let sa = sweep(a, b, half_width);
    let sb = sweep(b, a, half_width);

    let a_ends_on_b = *sa.near.last().unwrap();
    let b_ends_on_a = *sb.near.last().unwrap();
    if a_ends_on_b || b_ends_on_a {
        let first = merge_start(a, b, &sa, half_width)?;
        let second = merge_start(b, a, &sb, half_width)?;
        return Some(ConflictZone::Merging { first, second });
    }

    let shared_entry = sa.near[0] && sb.near[0];
    let span = |route: &Route, other: &Route, sw: &Sweep| -> Option<Span> {
        let mut rs = runs(&sw.wide);
        if shared_entry && rs.first().is_some_and(|r| r.0 == 0) {
            rs.remove(0);
        }
        let first = *rs.first()?;
        let last = *rs.last()?;
        let th = 2.0 * half_width;
        Some(Span {
            start: run_start(route, other, th, &sw.ss, first),
            end: run_end(route, other, th, &sw.ss, last),
        })
    };
    let first = span(a, b, &sa)?;
    let second = span(b, a, &sb)?;
    Some(ConflictZone::Crossing { first, second })
}
