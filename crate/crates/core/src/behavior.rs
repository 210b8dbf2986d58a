//! Ego behavior options as longitudinal IDM references.

use alloc::vec::Vec;

use crate::context::Context;
use crate::idm::{
    integrate, Capped, IdmError, LeaderTrack, LongState, LongTrajectory, SpeedProfile,
};
use crate::predictor::{Hypothesis, VehicleId, VehiclePrediction};
use crate::world::{ConflictZone, RouteId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BehaviorKind {
    FollowOrFree,
    Stop,
    /// Merge behind `vehicle`, whose hypothesis index `hypothesis` defines
    /// the virtual leader.
    MergeBehind {
        vehicle: VehicleId,
        hypothesis: usize,
    },
}

impl BehaviorKind {
    /// Identity used for hysteresis: merge options match on the target
    /// vehicle, since hypothesis indices shift between cycles.
    pub fn same_as(&self, other: &BehaviorKind) -> bool {
        match (self, other) {
            (Self::MergeBehind { vehicle: a, .. }, Self::MergeBehind { vehicle: b, .. }) => a == b,
            (Self::FollowOrFree, Self::FollowOrFree) | (Self::Stop, Self::Stop) => true,
            _ => false,
        }
    }

    /// Tie-break rank: stop, follow, merge.
    pub fn rank(&self) -> u8 {
        match self {
            Self::Stop => 0,
            Self::FollowOrFree => 1,
            Self::MergeBehind { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLeader {
    /// Arc lengths on the ego route.
    pub trajectory: LongTrajectory,
    /// Sample index at which the real leader reaches the merge point.
    pub merge_index: usize,
    /// t_rl^merge.
    pub merge_time: f64,
    /// s_m on the ego route.
    pub merge_position: f64,
    /// Speed of the real leader at the merge point.
    pub merge_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorOption {
    pub kind: BehaviorKind,
    pub reference: LongTrajectory,
    pub virtual_leader: Option<VirtualLeader>,
}

/// Ego longitudinal state on its route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoState {
    pub route: RouteId,
    pub long: LongState,
    pub time: f64,
}

/// Closest vehicle ahead on `route` whose belief for it exceeds the
/// relevance threshold, with its most likely hypothesis on that route.
pub fn route_leader<'a>(
    ego: &EgoState,
    predictions: &'a [VehiclePrediction],
    threshold: f64,
) -> Option<&'a Hypothesis> {
    predictions
        .iter()
        .filter_map(|p| {
            let c = p.belief.get(ego.route)?;
            if c.probability <= threshold || c.pose.s <= ego.long.s {
                return None;
            }
            Some((c.pose.s, p.on_route(ego.route)?))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, h)| h)
}

/// Builds the virtual leader of a real leader `rl` (arc lengths on its own
/// route) that joins the ego route at `ego_merge` / `rl_merge`.
///
/// The speed profile v^idm comes from a forward IDM run of the ego towards
/// the merge point, capped at the real leader's speed there. Before the
/// merge time the leader is integrated backwards along that profile, after
/// it the real leader is copied onto the shared lane. Returns `None` when
/// the real leader never reaches the merge point within its horizon or when
/// the virtual leader would start at or behind the ego.
pub fn build_virtual_leader(
    rl: &LongTrajectory,
    ego_merge: f64,
    rl_merge: f64,
    ego: &EgoState,
    ego_leader: Option<&LongTrajectory>,
    ctx: &Context,
) -> Result<Option<VirtualLeader>, IdmError> {
    let Some(m) = rl.index_reaching(rl_merge) else {
        return Ok(None);
    };
    let n = rl.len();
    let dt = rl.dt;
    let merge_speed = rl.states[m].v;
    let shift = ego_merge - rl_merge;

    let mut states = Vec::with_capacity(n);
    if m == 0 {
        states.extend(rl.states.iter().map(|x| LongState {
            s: x.s + shift,
            v: x.v,
        }));
    } else {
        let target = Capped {
            inner: ctx.curvature_profile(ego.route),
            cap: merge_speed,
        };
        let profile = speed_profile_to(ego, ego_merge, &target, ego_leader, ctx)?;
        let speed = |s: f64| match &profile {
            Some(p) if s <= p.end() => p.speed_at(s),
            _ => target.inner.speed_at(s).min(merge_speed),
        };
        states.resize(n, LongState::default());
        states[m] = LongState {
            s: ego_merge,
            v: merge_speed,
        };
        for k in (0..m).rev() {
            let next = states[k + 1].s;
            let v = speed(next);
            states[k] = LongState {
                s: next - v * dt,
                v,
            };
        }
        for k in m + 1..n {
            states[k] = LongState {
                s: rl.states[k].s + shift,
                v: rl.states[k].v,
            };
        }
    }
    if states[0].s <= ego.long.s {
        return Ok(None);
    }
    Ok(Some(VirtualLeader {
        trajectory: LongTrajectory {
            states,
            dt,
            t0: rl.t0,
        },
        merge_index: m,
        merge_time: rl.time_at(m),
        merge_position: ego_merge,
        merge_speed,
    }))
}

/// v^idm(s): forward IDM run of the ego up to `until`, with ego-route
/// leaders only.
fn speed_profile_to(
    ego: &EgoState,
    until: f64,
    target: &Capped<'_, SpeedProfile>,
    leader: Option<&LongTrajectory>,
    ctx: &Context,
) -> Result<Option<SpeedProfile>, IdmError> {
    let params = &ctx.params;
    let tracks: Vec<LeaderTrack<'_>> = leader.into_iter().map(LeaderTrack::new).collect();
    let run = integrate(
        ego.long,
        target,
        &tracks,
        None,
        &params.idm,
        params.reference_len,
        params.dt,
        ego.time,
    )?;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for x in &run.states {
        if samples.last().is_none_or(|&(s, _)| x.s > s + 1e-9) {
            samples.push((x.s, x.v));
        }
        if x.s >= until {
            break;
        }
    }
    Ok(SpeedProfile::from_samples(samples))
}

/// Follow/free, stop and merge-behind options for the ego.
pub fn generate_options(
    ego: &EgoState,
    predictions: &[VehiclePrediction],
    ctx: &Context,
) -> Result<Vec<BehaviorOption>, IdmError> {
    let params = &ctx.params;
    let idm = &params.idm;
    let n = params.reference_len;
    let dt = params.dt;
    let route = ctx.graph.route(ego.route);
    let profile = ctx.profile(ego.route);

    let leader =
        route_leader(ego, predictions, params.predictor.relevance_threshold).map(|h| &h.trajectory);
    let leader_tracks: Vec<LeaderTrack<'_>> = leader.into_iter().map(LeaderTrack::new).collect();

    let mut options = Vec::new();
    options.push(BehaviorOption {
        kind: BehaviorKind::FollowOrFree,
        reference: integrate(
            ego.long,
            profile,
            &leader_tracks,
            None,
            idm,
            n,
            dt,
            ego.time,
        )?,
        virtual_leader: None,
    });

    let half = 0.5 * idm.vehicle_length;
    if let Some(ss) = route
        .intersection_start()
        .filter(|&ss| ego.long.s + half < ss)
    {
        options.push(BehaviorOption {
            kind: BehaviorKind::Stop,
            reference: integrate(
                ego.long,
                profile,
                &leader_tracks,
                Some(ss),
                idm,
                n,
                dt,
                ego.time,
            )?,
            virtual_leader: None,
        });
    }

    if !params.merge_options {
        return Ok(options);
    }
    let mut merges = Vec::new();
    for pred in predictions {
        for (index, h) in pred.hypotheses.iter().enumerate() {
            if h.probability < params.predictor.relevance_threshold || h.route == ego.route {
                continue;
            }
            let Some(ConflictZone::Merging { first, second }) =
                ctx.graph.conflict(ego.route, h.route)
            else {
                continue;
            };
            let Some(vl) = build_virtual_leader(&h.trajectory, first, second, ego, leader, ctx)?
            else {
                continue;
            };
            let mut tracks = leader_tracks.clone();
            tracks.push(LeaderTrack::new(&vl.trajectory));
            let reference = integrate(ego.long, profile, &tracks, None, idm, n, dt, ego.time)?;
            merges.push(BehaviorOption {
                kind: BehaviorKind::MergeBehind {
                    vehicle: pred.id,
                    hypothesis: index,
                },
                reference,
                virtual_leader: Some(vl),
            });
        }
    }
    merges.sort_by(|a, b| {
        let ta = a.virtual_leader.as_ref().map_or(0.0, |v| v.merge_time);
        let tb = b.virtual_leader.as_ref().map_or(0.0, |v| v.merge_time);
        ta.total_cmp(&tb)
    });
    options.extend(merges);
    Ok(options)
}
