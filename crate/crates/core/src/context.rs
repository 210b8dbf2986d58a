use alloc::vec::Vec;

use crate::idm::{target_speed_profile, SpeedProfile};
use crate::params::PlannerParams;
use crate::world::{RouteGraph, RouteId};

/// Map, per-route speed profiles and parameters shared by all planning
/// stages.
#[derive(Debug, Clone)]
pub struct Context {
    pub graph: RouteGraph,
    pub params: PlannerParams,
    limit_profiles: Vec<SpeedProfile>,
    curvature_profiles: Vec<SpeedProfile>,
}

impl Context {
    pub fn new(graph: RouteGraph, params: PlannerParams) -> Self {
        let decel = params.idm.comfort_decel;
        let a_lat = params.lateral_accel;
        let limit_profiles = graph
            .routes()
            .iter()
            .map(|r| target_speed_profile(r, r.speed_limit(), a_lat, decel))
            .collect();
        let curvature_profiles = graph
            .routes()
            .iter()
            .map(|r| target_speed_profile(r, f64::INFINITY, a_lat, decel))
            .collect();
        Self {
            graph,
            params,
            limit_profiles,
            curvature_profiles,
        }
    }

    /// Target speeds respecting speed limit and curvature.
    pub fn profile(&self, r: RouteId) -> &SpeedProfile {
        &self.limit_profiles[r.0]
    }

    /// Target speeds respecting curvature only.
    pub fn curvature_profile(&self, r: RouteId) -> &SpeedProfile {
        &self.curvature_profiles[r.0]
    }
}
