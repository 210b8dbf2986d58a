//! JSON scenario format.
//!
//! ```json
//! {
//!   "name": "demo",
//!   "duration": 10.0,
//!   "seed": 3,
//!   "routes": [
//!     { "id": "main", "speed_limit": 13.9, "points": [[0, 0], [200, 0]] },
//!     { "id": "ramp", "speed_limit": 13.9, "intersection_start": 40,
//!       "path": { "start": [0, -30], "heading": 0.5,
//!                 "segments": [{ "line": 30 }, { "arc": { "radius": 60, "angle": -0.5 } }] } }
//!   ],
//!   "right_of_way": [["main", "ramp"]],
//!   "ego": { "route": "ramp", "s": 0, "v": 10 },
//!   "vehicles": [{ "id": 1, "route": "main", "s": 20, "v": 13.9 }],
//!   "parameters": { "w_c": 2 }
//! }
//! ```
//!
//! Arc angles are signed, positive turning left.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vlplan_core::context::Context;
use vlplan_core::params::ParamError;
use vlplan_core::predictor::VehicleId;
use vlplan_core::simloop::{AgentKind, AgentSpec, EgoSpec, Scenario, SimConfig, SimError};
use vlplan_core::world::{
    Polyline, Route, RouteGraph, RouteId, WorldError, DEFAULT_LANE_HALF_WIDTH,
};
use vlplan_core::{PlannerParams, Vec2};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("route `{route}`: {source}")]
    Route { route: String, source: WorldError },
    #[error("route `{0}` needs exactly one of `points` and `path`")]
    Geometry(String),
    #[error("route `{0}`: invalid path")]
    Path(String),
    #[error("duplicate route id `{0}`")]
    DuplicateRoute(String),
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(u32),
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("{who}: s = {s} is outside route `{route}` of length {length:.1}")]
    OffRoute {
        who: String,
        route: String,
        s: f64,
        length: f64,
    },
    #[error("{0}: speed must be finite and non-negative")]
    Speed(String),
    #[error("duration must be positive")]
    Duration,
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replan")]
    pub replan_interval: f64,
    #[serde(default)]
    pub lane_half_width: Option<f64>,
    pub routes: Vec<RouteFile>,
    #[serde(default)]
    pub right_of_way: Vec<[String; 2]>,
    pub ego: EgoFile,
    #[serde(default)]
    pub vehicles: Vec<VehicleFile>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

fn default_duration() -> f64 {
    24.0
}

fn default_replan() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteFile {
    pub id: String,
    pub speed_limit: f64,
    #[serde(default)]
    pub intersection_start: Option<f64>,
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub path: Option<PathFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub start: [f64; 2],
    pub heading: f64,
    /// Sampling distance along the path, m.
    #[serde(default = "default_step")]
    pub step: f64,
    pub segments: Vec<Segment>,
}

fn default_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Line(f64),
    Arc { radius: f64, angle: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoFile {
    pub route: String,
    pub s: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKindFile {
    #[default]
    DoubleIntegrator,
    Idm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub id: u32,
    pub route: String,
    pub s: f64,
    pub v: f64,
    #[serde(default)]
    pub agent: AgentKindFile,
}

/// A validated scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub name: String,
    pub scenario: Scenario,
    pub config: SimConfig,
    pub route_names: Vec<String>,
}

impl LoadedScenario {
    pub fn vehicle_ids(&self) -> Vec<VehicleId> {
        self.scenario.agents.iter().map(|a| a.id).collect()
    }
}

/// Parses `key=value`.
pub fn parse_override(text: &str) -> Result<(String, f64), ScenarioError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| ScenarioError::Override(text.into()))?;
    let value: f64 = v
        .trim()
        .parse()
        .map_err(|_| ScenarioError::Override(text.into()))?;
    Ok((k.trim().to_string(), value))
}

fn sample_path(p: &PathFile) -> Option<Vec<Vec2>> {
    if !(p.step > 0.0) || !p.step.is_finite() {
        return None;
    }
    let mut pos = Vec2::new(p.start[0], p.start[1]);
    let mut heading = p.heading;
    let mut out = vec![pos];
    for seg in &p.segments {
        match *seg {
            Segment::Line(len) => {
                if !(len > 0.0) {
                    return None;
                }
                let n = (len / p.step).ceil().max(1.0) as usize;
                let dir = Vec2::from_heading(heading);
                let base = pos;
                for i in 1..=n {
                    out.push(base + dir * (len * i as f64 / n as f64));
                }
                pos = base + dir * len;
            }
            Segment::Arc { radius, angle } => {
                if !(radius > 0.0) || angle == 0.0 || !angle.is_finite() {
                    return None;
                }
                let sign = angle.signum();
                let center = pos + Vec2::from_heading(heading).left_normal() * (radius * sign);
                let n = (radius * angle.abs() / p.step).ceil().max(1.0) as usize;
                let h0 = heading;
                for i in 1..=n {
                    let h = h0 + angle * i as f64 / n as f64;
                    out.push(center - Vec2::from_heading(h).left_normal() * (radius * sign));
                }
                heading = h0 + angle;
                pos = *out.last().unwrap();
            }
        }
    }
    Some(out)
}

impl ScenarioFile {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validates the file and applies `overrides` after the file's own
    /// parameters. `seed` replaces the file seed when given.
    pub fn load(
        &self,
        overrides: &[(String, f64)],
        seed: Option<u64>,
    ) -> Result<LoadedScenario, ScenarioError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(ScenarioError::Duration);
        }
        let mut params = PlannerParams::default();
        for (k, v) in self
            .parameters
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .chain(overrides.iter().map(|(k, v)| (k.as_str(), *v)))
        {
            params.set(k, v)?;
        }

        let mut names: Vec<String> = Vec::new();
        let mut routes = Vec::new();
        for r in &self.routes {
            if names.contains(&r.id) {
                return Err(ScenarioError::DuplicateRoute(r.id.clone()));
            }
            let pts = match (&r.points, &r.path) {
                (Some(pts), None) => pts.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                (None, Some(path)) => {
                    sample_path(path).ok_or_else(|| ScenarioError::Path(r.id.clone()))?
                }
                _ => return Err(ScenarioError::Geometry(r.id.clone())),
            };
            let wrap = |source| ScenarioError::Route {
                route: r.id.clone(),
                source,
            };
            let line = Polyline::new(pts).map_err(wrap)?;
            routes.push(
                Route::new(r.id.clone(), line, r.speed_limit, r.intersection_start)
                    .map_err(wrap)?,
            );
            names.push(r.id.clone());
        }
        let lookup = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .map(RouteId)
                .ok_or_else(|| ScenarioError::UnknownRoute(name.into()))
        };
        let priority = self
            .right_of_way
            .iter()
            .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        let graph = RouteGraph::new(
            routes,
            priority,
            self.lane_half_width.unwrap_or(DEFAULT_LANE_HALF_WIDTH),
        )?;

        let check = |who: String, route: RouteId, s: f64, v: f64| -> Result<(), ScenarioError> {
            let length = graph.route(route).length();
            if !(0.0..=length).contains(&s) {
                return Err(ScenarioError::OffRoute {
                    who,
                    route: names[route.0].clone(),
                    s,
                    length,
                });
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ScenarioError::Speed(who));
            }
            Ok(())
        };

        let ego_route = lookup(&self.ego.route)?;
        check("ego".into(), ego_route, self.ego.s, self.ego.v)?;
        let mut agents: Vec<AgentSpec> = Vec::new();
        for v in &self.vehicles {
            if agents.iter().any(|a| a.id.0 == v.id) {
                return Err(ScenarioError::DuplicateVehicle(v.id));
            }
            let route = lookup(&v.route)?;
            check(format!("vehicle {}", v.id), route, v.s, v.v)?;
            agents.push(AgentSpec {
                id: VehicleId(v.id),
                route,
                s: v.s,
                v: v.v,
                kind: match v.agent {
                    AgentKindFile::DoubleIntegrator => AgentKind::DoubleIntegrator,
                    AgentKindFile::Idm => AgentKind::Idm,
                },
            });
        }

        let config = SimConfig {
            step: params.dt,
            duration: self.duration,
            seed: seed.unwrap_or(self.seed),
            ..SimConfig::default()
        }
        .with_replan_interval(self.replan_interval)?;

        Ok(LoadedScenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            scenario: Scenario {
                ctx: Context::new(graph, params),
                ego: EgoSpec {
                    route: ego_route,
                    s: self.ego.s,
                    v: self.ego.v,
                },
                agents,
            },
            config,
            route_names: names,
        })
    }
}

/// Reads, parses and validates a scenario file.
pub fn load(
    path: &Path,
    overrides: &[(String, f64)],
    seed: Option<u64>,
) -> Result<LoadedScenario, ScenarioError> {
    ScenarioFile::from_path(path)?.load(overrides, seed)
}
