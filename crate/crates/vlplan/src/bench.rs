//! Planning-cycle runtime benchmark with seeded extra traffic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vlplan_core::predictor::VehicleId;
use vlplan_core::simloop::{run, AgentKind, AgentSpec, SimError};
use vlplan_core::world::RouteId;

use crate::output::Percentiles;
use crate::scenario::LoadedScenario;
use crate::WallClock;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionReport {
    pub cycles: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub min_speed: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub vehicles: usize,
    pub repetitions: usize,
    pub cycles: usize,
    pub avg_ms: f64,
    pub max_ms: f64,
    pub runtime_ms: Percentiles,
    pub runs: Vec<RepetitionReport>,
}

/// Adds `count` double-integrator vehicles at random positions, at least
/// three vehicle lengths from every vehicle on the same route.
pub fn add_vehicles(loaded: &mut LoadedScenario, count: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f7a_ff1c);
    let ctx = &loaded.scenario.ctx;
    let spacing = 3.0 * ctx.params.idm.vehicle_length;
    let routes = ctx.graph.routes().len();
    let mut next_id = loaded
        .scenario
        .agents
        .iter()
        .map(|a| a.id.0)
        .max()
        .unwrap_or(0)
        + 1;
    let ego = loaded.scenario.ego;
    let mut added = 0;
    let mut attempts = 0;
    while added < count && attempts < 10_000 {
        attempts += 1;
        let route = RouteId(rng.gen_range(0..routes));
        let r = ctx.graph.route(route);
        let s = rng.gen_range(0.0..0.8 * r.length());
        let v = rng.gen_range(0.5..1.0) * r.speed_limit();
        let clear = loaded
            .scenario
            .agents
            .iter()
            .filter(|a| a.route == route)
            .all(|a| (a.s - s).abs() > spacing)
            && (ego.route != route || (ego.s - s).abs() > spacing);
        if !clear {
            continue;
        }
        loaded.scenario.agents.push(AgentSpec {
            id: VehicleId(next_id),
            route,
            s,
            v,
            kind: AgentKind::DoubleIntegrator,
        });
        next_id += 1;
        added += 1;
    }
}

/// Runs the closed loop `repetitions` times and collects cycle timings.
pub fn bench(loaded: &LoadedScenario, repetitions: usize) -> Result<BenchReport, SimError> {
    let mut all = Vec::new();
    let mut runs = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let clock = WallClock::new();
        let trace = run(&loaded.scenario, &loaded.config, &clock)?;
        let cycles: Vec<f64> = trace
            .iter()
            .filter(|r| r.replanned)
            .map(|r| r.plan_ms)
            .collect();
        let p = Percentiles::of(&cycles);
        runs.push(RepetitionReport {
            cycles: cycles.len(),
            mean_ms: p.mean,
            max_ms: p.max,
            min_speed: trace.iter().map(|r| r.ego_v).fold(f64::INFINITY, f64::min),
            max_speed: trace
                .iter()
                .map(|r| r.ego_v)
                .fold(f64::NEG_INFINITY, f64::max),
        });
        all.extend(cycles);
    }
    let p = Percentiles::of(&all);
    Ok(BenchReport {
        scenario: loaded.name.clone(),
        vehicles: loaded.scenario.agents.len(),
        repetitions,
        cycles: all.len(),
        avg_ms: p.mean,
        max_ms: p.max,
        runtime_ms: p,
        runs,
    })
}
