//! Prediction of other vehicles: Bayes route classification, rule-based
//! maneuver probabilities and one IDM rollout per (route, maneuver)
//! hypothesis.

use alloc::vec::Vec;

use crate::context::Context;
use crate::geom::Vec2;
use crate::idm::{integrate, IdmError, LeaderTrack, LongState, LongTrajectory};
use crate::world::{ConflictZone, FrenetPose, RouteGraph, RouteId};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error("vehicle {0:?} is not on any route")]
    NoCandidateRoute(VehicleId),
    #[error(transparent)]
    Idm(#[from] IdmError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    /// σ of the heading-difference likelihood, rad.
    pub sigma_heading: f64,
    /// σ of the lateral-offset likelihood, m.
    pub sigma_lateral: f64,
    /// δ_r: minimum route probability for a vehicle to count as leader or
    /// merge target.
    pub relevance_threshold: f64,
    /// Δt_inter, s.
    pub interaction_horizon: f64,
    /// λ1: must yield and a prioritized vehicle is about to occupy the
    /// conflict zone.
    pub lambda_conflict: f64,
    /// λ2: must yield, nothing in the way.
    pub lambda_clear: f64,
    /// λ3: route has right of way.
    pub lambda_priority: f64,
    /// Candidate routes need |d| below this, m.
    pub corridor_lateral: f64,
    /// Candidate routes need |φ| below this, rad.
    pub corridor_heading: f64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            sigma_heading: 0.1,
            sigma_lateral: 0.1,
            relevance_threshold: 0.1,
            interaction_horizon: 3.0,
            lambda_conflict: 0.55,
            lambda_clear: 1.0,
            lambda_priority: 0.75,
            corridor_lateral: 3.0,
            corridor_heading: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedVehicle {
    pub id: VehicleId,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
}

/// Observed configuration of the other vehicles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneState {
    pub time: f64,
    pub vehicles: Vec<ObservedVehicle>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteCandidate {
    pub route: RouteId,
    pub pose: FrenetPose,
    pub probability: f64,
}

/// P(r | X) over the candidate routes of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteBelief {
    pub candidates: Vec<RouteCandidate>,
}

impl RouteBelief {
    pub fn probability(&self, r: RouteId) -> f64 {
        self.candidates
            .iter()
            .find(|c| c.route == r)
            .map_or(0.0, |c| c.probability)
    }

    pub fn get(&self, r: RouteId) -> Option<&RouteCandidate> {
        self.candidates.iter().find(|c| c.route == r)
    }

    pub fn most_likely(&self) -> &RouteCandidate {
        let mut best = &self.candidates[0];
        for c in &self.candidates[1..] {
            if c.probability > best.probability {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Maneuver {
    Stop,
    Drive,
}

/// One predicted future of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub route: RouteId,
    pub maneuver: Maneuver,
    pub trajectory: LongTrajectory,
    /// P(T | X), normalized per vehicle.
    pub probability: f64,
    /// P(r | X) of the hypothesis route.
    pub route_probability: f64,
    /// Leader used for the rollout, in this route's arc length.
    pub leader: Option<LongTrajectory>,
    pub stop_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePrediction {
    pub id: VehicleId,
    pub belief: RouteBelief,
    pub hypotheses: Vec<Hypothesis>,
}

impl VehiclePrediction {
    pub fn most_likely(&self) -> &Hypothesis {
        let mut best = &self.hypotheses[0];
        for h in &self.hypotheses[1..] {
            if h.probability > best.probability {
                best = h;
            }
        }
        best
    }

    /// Most likely hypothesis on route `r`.
    pub fn on_route(&self, r: RouteId) -> Option<&Hypothesis> {
        self.hypotheses.iter().filter(|h| h.route == r).fold(
            None,
            |best: Option<&Hypothesis>, h| match best {
                Some(b) if b.probability >= h.probability => Some(b),
                _ => Some(h),
            },
        )
    }
}

/// Routes whose corridor contains the pose, with the Frenet pose on each.
pub fn candidate_poses(
    position: Vec2,
    heading: f64,
    graph: &RouteGraph,
    p: &PredictorParams,
) -> Vec<(RouteId, FrenetPose)> {
    graph
        .route_ids()
        .filter_map(|id| {
            let route = graph.route(id);
            let pose = route.project(position, heading).ok()?;
            if pose.d.abs() >= p.corridor_lateral || pose.phi.abs() >= p.corridor_heading {
                return None;
            }
            // Reject positions beyond either end of the center line.
            let foot = route.to_cartesian(pose.s, 0.0).ok()?;
            let along = (position - foot).dot(Vec2::from_heading(route.heading_at(pose.s)));
            let overhang =
                (pose.s <= 0.0 && along < -1.0) || (pose.s >= route.length() && along > 1.0);
            (!overhang).then_some((id, pose))
        })
        .collect()
}

/// Normalized Gaussian likelihoods of (φ, d) with equal route priors.
pub fn belief_from_poses(poses: &[(RouteId, FrenetPose)], p: &PredictorParams) -> RouteBelief {
    let log_lik: Vec<f64> = poses
        .iter()
        .map(|(_, pose)| {
            let zp = pose.phi / p.sigma_heading;
            let zd = pose.d / p.sigma_lateral;
            -0.5 * (zp * zp + zd * zd)
        })
        .collect();
    let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_lik.iter().map(|l| libm::exp(l - max)).collect();
    let total: f64 = weights.iter().sum();
    RouteBelief {
        candidates: poses
            .iter()
            .zip(weights)
            .map(|(&(route, pose), w)| RouteCandidate {
                route,
                pose,
                probability: w / total,
            })
            .collect(),
    }
}

pub fn route_belief(
    id: VehicleId,
    position: Vec2,
    heading: f64,
    graph: &RouteGraph,
    p: &PredictorParams,
) -> Result<RouteBelief, PredictError> {
    let poses = candidate_poses(position, heading, graph, p);
    if poses.is_empty() {
        return Err(PredictError::NoCandidateRoute(id));
    }
    Ok(belief_from_poses(&poses, p))
}

/// A prioritized vehicle's most likely trajectory on its most likely route.
#[derive(Debug, Clone, Copy)]
pub struct PriorityTrack<'a> {
    pub route: RouteId,
    pub trajectory: &'a LongTrajectory,
}

/// Entry arc length on `route` and the occupied interval on `other` for the
/// conflict between them.
pub(crate) fn zone_extents(zone: ConflictZone) -> (f64, f64, (f64, f64)) {
    match zone {
        ConflictZone::Crossing { first, second } => {
            (first.start, first.end, (second.start, second.end))
        }
        ConflictZone::Merging { first, second } => (first, first, (second, second)),
    }
}

/// P(drive | r, T_l, X).
pub fn drive_probability(
    route: RouteId,
    drive: &LongTrajectory,
    prioritized: &[PriorityTrack<'_>],
    ctx: &Context,
) -> f64 {
    let p = &ctx.params.predictor;
    let graph = &ctx.graph;
    if !graph.must_yield(route) {
        return p.lambda_priority;
    }
    let half = 0.5 * ctx.params.idm.vehicle_length;
    let dt = drive.dt;
    for track in prioritized {
        if !graph.has_priority(track.route, route) {
            continue;
        }
        let Some(zone) = graph.conflict(route, track.route) else {
            continue;
        };
        let (entry, _, (start_q, end_q)) = zone_extents(zone);
        let Some(k_arrive) = drive.index_reaching(entry - half) else {
            continue;
        };
        let traj = track.trajectory;
        if traj.first().s - half >= end_q {
            continue;
        }
        let Some(k_in) = traj.index_reaching(start_q - half) else {
            continue;
        };
        let k_out = traj.index_reaching(end_q + half).unwrap_or(traj.len());
        let t_arrive = k_arrive as f64 * dt;
        let (t_in, t_out) = (k_in as f64 * dt, k_out as f64 * dt);
        let window = p.interaction_horizon;
        if t_in < t_arrive + window && t_out > t_arrive - window {
            return p.lambda_conflict;
        }
    }
    p.lambda_clear
}

fn shifted(traj: &LongTrajectory, offset: f64) -> LongTrajectory {
    LongTrajectory {
        states: traj
            .states
            .iter()
            .map(|x| LongState {
                s: x.s + offset,
                v: x.v,
            })
            .collect(),
        dt: traj.dt,
        t0: traj.t0,
    }
}

/// Predicts every vehicle of the scene over `ctx.params.reference_len`
/// samples. Hypothesis probabilities of each vehicle sum to one.
pub fn predict(scene: &SceneState, ctx: &Context) -> Result<Vec<VehiclePrediction>, PredictError> {
    let params = &ctx.params;
    let p = &params.predictor;
    let n = params.reference_len;
    let dt = params.dt;
    let t0 = scene.time;
    let half = 0.5 * params.idm.vehicle_length;

    let beliefs = scene
        .vehicles
        .iter()
        .map(|v| route_belief(v.id, v.position, v.heading, &ctx.graph, p))
        .collect::<Result<Vec<_>, _>>()?;

    // Most likely trajectory of every vehicle: free drive on its most likely
    // route. Serves as leader and as prioritized traffic for the others.
    let base = scene
        .vehicles
        .iter()
        .zip(&beliefs)
        .map(|(v, b)| {
            let c = b.most_likely();
            let start = LongState {
                s: c.pose.s,
                v: v.speed,
            };
            integrate(
                start,
                ctx.profile(c.route),
                &[],
                None,
                &params.idm,
                n,
                dt,
                t0,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::with_capacity(scene.vehicles.len());
    for (i, vehicle) in scene.vehicles.iter().enumerate() {
        let prioritized: Vec<PriorityTrack<'_>> = (0..scene.vehicles.len())
            .filter(|&j| j != i)
            .map(|j| PriorityTrack {
                route: beliefs[j].most_likely().route,
                trajectory: &base[j],
            })
            .collect();

        let mut hypotheses = Vec::new();
        for cand in &beliefs[i].candidates {
            let r = cand.route;
            let route = ctx.graph.route(r);
            let start = LongState {
                s: cand.pose.s,
                v: vehicle.speed,
            };

            let leader = (0..scene.vehicles.len())
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let c = beliefs[j].get(r)?;
                    (c.probability > p.relevance_threshold && c.pose.s > start.s)
                        .then_some((j, c.pose.s))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, s)| shifted(&base[j], s - base[j].first().s));
            let tracks: Vec<LeaderTrack<'_>> = leader.iter().map(LeaderTrack::new).collect();

            let profile = ctx.profile(r);
            let drive = integrate(start, profile, &tracks, None, &params.idm, n, dt, t0)?;
            let p_drive = drive_probability(r, &drive, &prioritized, ctx);

            let stop_line = route.intersection_start().filter(|&ss| start.s + half < ss);
            if let Some(ss) = stop_line {
                let stop = integrate(start, profile, &tracks, Some(ss), &params.idm, n, dt, t0)?;
                hypotheses.push(Hypothesis {
                    route: r,
                    maneuver: Maneuver::Stop,
                    trajectory: stop,
                    probability: cand.probability * (1.0 - p_drive),
                    route_probability: cand.probability,
                    leader: leader.clone(),
                    stop_at: Some(ss),
                });
            }
            hypotheses.push(Hypothesis {
                route: r,
                maneuver: Maneuver::Drive,
                trajectory: drive,
                probability: cand.probability * p_drive,
                route_probability: cand.probability,
                leader,
                stop_at: None,
            });
        }

        let mut total: f64 = hypotheses.iter().map(|h| h.probability).sum();
        if total <= 0.0 {
            // Every maneuver probability vanished (possible with λ overrides).
            for h in hypotheses.iter_mut() {
                h.probability = if h.maneuver == Maneuver::Drive {
                    h.route_probability
                } else {
                    0.0
                };
            }
            total = 1.0;
        }
        hypotheses.retain(|h| h.probability > 0.0);
        for h in hypotheses.iter_mut() {
            h.probability /= total;
        }
        out.push(VehiclePrediction {
            id: vehicle.id,
            belief: beliefs[i].clone(),
            hypotheses,
        });
    }
    Ok(out)
}
