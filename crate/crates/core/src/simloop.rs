//! Closed-loop simulation with stochastic double-integrator traffic.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::BehaviorKind;
use crate::context::Context;
use crate::geom::{normalize_angle, Vec2};
use crate::idm::{idm_acceleration, IdmError, Interaction};
use crate::optimizer::{CartesianTrajectory, FIXED};
use crate::planner::{EgoInput, OptionCost, PlanError, Planner};
use crate::predictor::{ObservedVehicle, SceneState, VehicleId};
use crate::world::{ConflictZone, RouteId, WorldError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Idm(#[from] IdmError),
    #[error("replan interval must be a positive multiple of the step")]
    ReplanInterval,
    #[error("optimized trajectory too short for the replan interval")]
    HorizonTooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgentKind {
    /// Uniform random acceleration in [−1, 1] m/s² every step.
    #[default]
    DoubleIntegrator,
    /// IDM along the route, reacting to vehicles ahead including the ego.
    Idm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    pub id: VehicleId,
    pub route: RouteId,
    pub s: f64,
    pub v: f64,
    pub kind: AgentKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoSpec {
    pub route: RouteId,
    pub s: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub ctx: Context,
    pub ego: EgoSpec,
    pub agents: Vec<AgentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub step: f64,
    /// Simulation steps per planning cycle.
    pub replan_every: usize,
    pub duration: f64,
    pub seed: u64,
    /// Bound of the uniform agent acceleration, m/s².
    pub agent_accel: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 0.05,
            replan_every: 4,
            duration: 24.0,
            seed: 0,
            agent_accel: 1.0,
        }
    }
}

impl SimConfig {
    /// Sets the replan interval in seconds.
    pub fn with_replan_interval(mut self, seconds: f64) -> Result<Self, SimError> {
        let k = libm::round(seconds / self.step);
        if k < 1.0 || libm::fabs(k * self.step - seconds) > 1e-9 {
            return Err(SimError::ReplanInterval);
        }
        self.replan_every = k as usize;
        Ok(self)
    }

    pub fn ticks(&self) -> usize {
        libm::round(self.duration / self.step) as usize
    }
}

/// Wall time source for planner timing.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Clock that never advances; timings read zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSnapshot {
    pub id: VehicleId,
    pub route: RouteId,
    pub s: f64,
    pub v: f64,
    pub position: Vec2,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub ego_s: f64,
    pub ego_position: Vec2,
    pub ego_heading: f64,
    pub ego_v: f64,
    pub ego_a_lon: f64,
    pub ego_a_lat: f64,
    pub ego_a_abs: f64,
    pub selected: BehaviorKind,
    /// Option costs of the most recent planning cycle.
    pub options: Vec<OptionCost>,
    pub vehicles: Vec<VehicleSnapshot>,
    /// Planner wall time of this tick, zero between replans.
    pub plan_ms: f64,
    pub replanned: bool,
    /// Whether the optimizer converged in the most recent cycle.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Agent {
    spec: AgentSpec,
    s: f64,
    v: f64,
}

fn snapshot(agent: &Agent, ctx: &Context) -> Result<VehicleSnapshot, WorldError> {
    let route = ctx.graph.route(agent.spec.route);
    let s = agent.s.clamp(0.0, route.length());
    Ok(VehicleSnapshot {
        id: agent.spec.id,
        route: agent.spec.route,
        s: agent.s,
        v: agent.v,
        position: route.to_cartesian(s, 0.0)?,
        heading: route.heading_at(s),
    })
}

/// Runs the closed loop and records every simulation step.
pub fn run(
    scenario: &Scenario,
    config: &SimConfig,
    clock: &dyn Clock,
) -> Result<Vec<TraceRecord>, SimError> {
    let ctx = &scenario.ctx;
    let params = &ctx.params;
    if config.replan_every == 0 || libm::fabs(config.step - params.dt) > 1e-12 {
        return Err(SimError::ReplanInterval);
    }
    if params.optimized_len < FIXED + config.replan_every + 1 {
        return Err(SimError::HorizonTooShort);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ego_route = ctx.graph.route(scenario.ego.route);
    let mut planner = Planner::new(ctx.clone(), scenario.ego.route);
    let mut agents: Vec<Agent> = scenario
        .agents
        .iter()
        .map(|&spec| Agent {
            spec,
            s: spec.s,
            v: spec.v.max(0.0),
        })
        .collect();

    let start = ego_route.to_cartesian(scenario.ego.s, 0.0)?;
    let mut ego_position = start;
    let mut ego_heading = ego_route.heading_at(scenario.ego.s);
    let mut ego_speed = scenario.ego.v.max(0.0);
    let mut plan: Option<CartesianTrajectory> = None;
    let mut index = FIXED - 1;
    let mut selected = BehaviorKind::FollowOrFree;
    let mut options = Vec::new();
    let mut converged = true;

    let ticks = config.ticks();
    let mut trace = Vec::with_capacity(ticks + 1);
    for tick in 0..=ticks {
        let t = tick as f64 * config.step;
        let snaps = agents
            .iter()
            .map(|a| snapshot(a, ctx))
            .collect::<Result<Vec<_>, _>>()?;

        let mut plan_ms = 0.0;
        let replanned = tick % config.replan_every == 0;
        if replanned {
            let scene = SceneState {
                time: t,
                vehicles: agents
                    .iter()
                    .zip(&snaps)
                    .filter(|(a, _)| a.s < ctx.graph.route(a.spec.route).length() - 1.0)
                    .map(|(a, snap)| ObservedVehicle {
                        id: a.spec.id,
                        position: snap.position,
                        heading: snap.heading,
                        speed: a.v,
                    })
                    .collect(),
            };
            let prefix = plan
                .as_ref()
                .map(|p| core::array::from_fn(|k| p.positions[index - (FIXED - 1) + k]));
            let input = EgoInput {
                position: ego_position,
                heading: ego_heading,
                speed: ego_speed,
                prefix,
            };
            let t0 = clock.now_ms();
            let result = planner.plan(&input, &scene)?;
            plan_ms = clock.now_ms() - t0;
            selected = result.selected;
            options = result.options;
            converged = result.converged;
            plan = Some(result.trajectory);
            index = FIXED - 1;
        }

        let p = plan.as_ref().expect("planned on the first tick");
        let vel = p.velocity(index);
        let acc = p.acceleration(index);
        if vel.norm() > 1e-6 {
            ego_heading = vel.heading();
        }
        ego_speed = vel.norm();
        let tangent = Vec2::from_heading(ego_heading);
        let ego_s = ego_route
            .project(ego_position, ego_heading)
            .map_or(f64::NAN, |f| f.s);
        trace.push(TraceRecord {
            t,
            ego_s,
            ego_position,
            ego_heading,
            ego_v: ego_speed,
            ego_a_lon: acc.dot(tangent),
            ego_a_lat: tangent.cross(acc),
            ego_a_abs: acc.norm(),
            selected,
            options: options.clone(),
            vehicles: snaps,
            plan_ms,
            replanned,
            converged,
        });

        // Advance the world by one step.
        let accels: Vec<f64> = agents
            .iter()
            .map(|a| match a.spec.kind {
                AgentKind::DoubleIntegrator => {
                    Ok(rng.gen_range(-config.agent_accel..=config.agent_accel))
                }
                AgentKind::Idm => {
                    idm_agent_accel(a, &agents, ego_position, ego_heading, ego_speed, ctx)
                }
            })
            .collect::<Result<_, IdmError>>()?;
        for (a, acc) in agents.iter_mut().zip(accels) {
            a.s += a.v * config.step;
            a.v = (a.v + acc * config.step).max(0.0);
        }
        index += 1;
        ego_position = p.positions[index];
    }
    Ok(trace)
}

fn idm_agent_accel(
    agent: &Agent,
    agents: &[Agent],
    ego_position: Vec2,
    ego_heading: f64,
    ego_speed: f64,
    ctx: &Context,
) -> Result<f64, IdmError> {
    let idm = &ctx.params.idm;
    let route = ctx.graph.route(agent.spec.route);
    let v0 = ctx.profile(agent.spec.route).speed_at(agent.s).max(1e-3);
    let mut leaders: Vec<(f64, f64)> = agents
        .iter()
        .filter(|o| o.spec.route == agent.spec.route && o.s > agent.s)
        .map(|o| (o.s, o.v))
        .collect();
    if let Ok(f) = route.project(ego_position, ego_heading) {
        if f.d.abs() < ctx.graph.lane_half_width() && f.phi.abs() < 0.6 && f.s > agent.s {
            leaders.push((f.s, ego_speed));
        }
    }
    let mut a = idm_acceleration(agent.v, v0, None, idm)?;
    for (s, v) in leaders {
        let gap = (s - agent.s - idm.vehicle_length).max(crate::idm::MIN_GAP);
        let inter = Interaction {
            gap,
            approach_rate: agent.v - v,
        };
        a = a.min(idm_acceleration(agent.v, v0, Some(inter), idm)?);
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub tick: usize,
    pub t: f64,
    pub vehicle: VehicleId,
}

/// Ticks where the ego shares a lane with another vehicle closer than one
/// vehicle length, or occupies a crossing zone together with it.
pub fn collision_check(trace: &[TraceRecord], ctx: &Context, ego_route: RouteId) -> Vec<Violation> {
    let length = ctx.params.idm.vehicle_length;
    let half = 0.5 * length;
    let hw = ctx.graph.lane_half_width();
    let mut out = Vec::new();
    for (tick, r) in trace.iter().enumerate() {
        for veh in &r.vehicles {
            let route = ctx.graph.route(veh.route);
            let same_lane = route
                .project(r.ego_position, r.ego_heading)
                .ok()
                .filter(|f| f.d.abs() < hw && normalize_angle(f.phi).abs() < 0.6)
                .is_some_and(|f| (f.s - veh.s).abs() < length);
            let crossing = match ctx.graph.conflict(ego_route, veh.route) {
                Some(ConflictZone::Crossing { first, second }) => {
                    let inside = |s: f64, lo: f64, hi: f64| s > lo - half && s < hi + half;
                    inside(r.ego_s, first.start, first.end)
                        && inside(veh.s, second.start, second.end)
                }
                _ => false,
            };
            if same_lane || crossing {
                out.push(Violation {
                    tick,
                    t: r.t,
                    vehicle: veh.id,
                });
            }
        }
    }
    out
}
