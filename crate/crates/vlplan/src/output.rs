//! Trace CSV and run summary.

use std::io::Write;

use serde::Serialize;
use vlplan_core::behavior::BehaviorKind;
use vlplan_core::predictor::VehicleId;
use vlplan_core::simloop::TraceRecord;

pub const TRACE_HEADER: [&str; 10] = [
    "t",
    "ego_s",
    "ego_x",
    "ego_y",
    "ego_v",
    "ego_a_lon",
    "ego_a_lat",
    "ego_a_abs",
    "selected_option",
    "plan_ms",
];

pub fn option_label(kind: &BehaviorKind) -> String {
    match kind {
        BehaviorKind::FollowOrFree => "follow".into(),
        BehaviorKind::Stop => "stop".into(),
        BehaviorKind::MergeBehind { vehicle, .. } => format!("merge_behind:{}", vehicle.0),
    }
}

pub fn trace_header(vehicles: &[VehicleId]) -> Vec<String> {
    let mut h: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    for v in vehicles {
        h.push(format!("veh{}_s", v.0));
        h.push(format!("veh{}_v", v.0));
    }
    h
}

/// Writes one row per record. Vehicle columns follow `vehicles`.
pub fn write_trace<W: Write>(
    out: W,
    trace: &[TraceRecord],
    vehicles: &[VehicleId],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(vehicles))?;
    for r in trace {
        let mut row = vec![
            format!("{:.2}", r.t),
            r.ego_s.to_string(),
            r.ego_position.x.to_string(),
            r.ego_position.y.to_string(),
            r.ego_v.to_string(),
            r.ego_a_lon.to_string(),
            r.ego_a_lat.to_string(),
            r.ego_a_abs.to_string(),
            option_label(&r.selected),
            format!("{:.3}", r.plan_ms),
        ];
        for id in vehicles {
            match r.vehicles.iter().find(|v| v.id == *id) {
                Some(v) => {
                    row.push(v.s.to_string());
                    row.push(v.v.to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionChange {
    pub t: f64,
    pub option: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub mean: f64,
}

impl Percentiles {
    /// Nearest-rank percentiles; all zero for an empty sample.
    pub fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self {
                p50: 0.0,
                p90: 0.0,
                p99: 0.0,
                max: 0.0,
                mean: 0.0,
            };
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = |q: f64| s[((q * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Self {
            p50: rank(0.5),
            p90: rank(0.9),
            p99: rank(0.99),
            max: s[s.len() - 1],
            mean: s.iter().sum::<f64>() / s.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub ticks: usize,
    pub duration: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    pub max_abs_accel: f64,
    pub selection_timeline: Vec<SelectionChange>,
    pub final_option: String,
    pub planning_cycles: usize,
    pub unconverged_cycles: usize,
    pub runtime_ms: Percentiles,
    pub collisions: usize,
}

/// Ticks at which the selected option changes, starting with the first.
pub fn selection_timeline(trace: &[TraceRecord]) -> Vec<SelectionChange> {
    let mut out: Vec<SelectionChange> = Vec::new();
    let mut last: Option<BehaviorKind> = None;
    for r in trace {
        if last.is_none_or(|l| !l.same_as(&r.selected)) {
            out.push(SelectionChange {
                t: r.t,
                option: option_label(&r.selected),
            });
            last = Some(r.selected);
        }
    }
    out
}

pub fn summarize(scenario: &str, seed: u64, trace: &[TraceRecord], collisions: usize) -> Summary {
    let speeds = trace.iter().map(|r| r.ego_v);
    let cycles: Vec<f64> = trace
        .iter()
        .filter(|r| r.replanned)
        .map(|r| r.plan_ms)
        .collect();
    Summary {
        scenario: scenario.into(),
        seed,
        ticks: trace.len(),
        duration: trace.last().map_or(0.0, |r| r.t),
        min_speed: speeds.clone().fold(f64::INFINITY, f64::min),
        max_speed: speeds.fold(f64::NEG_INFINITY, f64::max),
        max_abs_accel: trace.iter().map(|r| r.ego_a_abs).fold(0.0, f64::max),
        selection_timeline: selection_timeline(trace),
        final_option: trace
            .last()
            .map_or_else(String::new, |r| option_label(&r.selected)),
        planning_cycles: cycles.len(),
        unconverged_cycles: trace.iter().filter(|r| r.replanned && !r.converged).count(),
        runtime_ms: Percentiles::of(&cycles),
        collisions,
    }
}
