//! Scoring of behavior options by progress and courtesy, with hysteresis.

use alloc::vec::Vec;

use crate::behavior::{BehaviorKind, BehaviorOption, EgoState};
use crate::context::Context;
use crate::idm::{
    idm_acceleration, integrate, IdmError, Interaction, LeaderTrack, LongTrajectory, MIN_GAP,
};
use crate::predictor::{zone_extents, Hypothesis, VehiclePrediction};
use crate::world::{ConflictZone, RouteId};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ArbiterError {
    #[error("no behavior option to select from")]
    NoOption,
    #[error("reference lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Idm(#[from] IdmError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArbiterParams {
    /// w_p.
    pub progress_weight: f64,
    /// w_c.
    pub courtesy_weight: f64,
    /// H_a^const, m/s².
    pub accel_hysteresis: f64,
    /// H_ttc^const, s.
    pub ttc_hysteresis: f64,
    /// Δa_max, m/s².
    pub max_disturbance: f64,
    /// Δt_max, s.
    pub min_time_margin: f64,
}

impl Default for ArbiterParams {
    fn default() -> Self {
        Self {
            progress_weight: 1.0,
            courtesy_weight: 1.0,
            accel_hysteresis: 0.25,
            ttc_hysteresis: 0.25,
            max_disturbance: 0.9,
            min_time_margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredOption {
    pub option: BehaviorOption,
    pub progress_cost: f64,
    /// Probability-weighted courtesy cost summed over all vehicles.
    pub courtesy_cost: f64,
    /// Pruned options brake harder than the stop option at the first step.
    pub pruned: bool,
    /// Infinite when pruned or discourteous.
    pub total: f64,
}

/// Mean of `a_stop,n − a_n` over forward-difference accelerations.
pub fn progress_cost(
    reference: &LongTrajectory,
    stop: &LongTrajectory,
) -> Result<f64, ArbiterError> {
    if reference.len() != stop.len() {
        return Err(ArbiterError::LengthMismatch(reference.len(), stop.len()));
    }
    let a = reference.accelerations();
    let b = stop.accelerations();
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(&b).map(|(a, b)| b - a).sum();
    Ok(sum / a.len() as f64)
}

fn hysteresis(same: bool, h: f64) -> f64 {
    if same {
        h
    } else {
        -h
    }
}

/// Courtesy toward a vehicle on a merging route.
///
/// `ego_merge` and `other_merge` locate the merge point on the ego and the
/// other route. A vehicle behind the ego's entry into the shared lane is
/// re-simulated with the ego reference as an additional leader from the
/// entry time on; the cost is the mean absolute acceleration change minus
/// the hysteresis bonus.
///
/// A vehicle ahead at entry must belong to the gap the option aims for:
/// it has to pass the merge point no later than `gap_opens`, the merge time
/// of the vehicle the option merges behind (the planning time for the
/// free option). Otherwise, or when following it on the shared lane would
/// take more than the comfortable deceleration, the reference is infeasible.
#[allow(clippy::too_many_arguments)]
pub fn merge_courtesy(
    reference: &LongTrajectory,
    ego_route: RouteId,
    ego_merge: f64,
    h: &Hypothesis,
    other_merge: f64,
    gap_opens: f64,
    same_as_last: bool,
    ctx: &Context,
) -> Result<f64, IdmError> {
    let idm = &ctx.params.idm;
    let p = &ctx.params.arbiter;
    let Some(entry) = reference.index_reaching(ego_merge) else {
        return Ok(0.0);
    };
    let offset = other_merge - ego_merge;
    let traj = &h.trajectory;
    let n = traj.len().min(reference.len());
    if entry >= n {
        return Ok(0.0);
    }

    if traj.states[entry].s >= reference.states[entry].s + offset {
        let passes = traj
            .index_reaching(other_merge)
            .map_or(f64::INFINITY, |k| traj.t0 + k as f64 * traj.dt);
        if passes > gap_opens + 0.5 * traj.dt {
            return Ok(f64::INFINITY);
        }
        let profile = ctx.profile(ego_route);
        for k in entry..n {
            let lead = traj.states[k];
            if lead.s < other_merge {
                continue;
            }
            let ego = reference.states[k];
            let inter = Interaction {
                gap: (lead.s - offset - ego.s - idm.vehicle_length).max(MIN_GAP),
                approach_rate: ego.v - lead.v,
            };
            let v0 = profile.speed_at(ego.s).max(1e-3);
            if idm_acceleration(ego.v, v0, Some(inter), idm)? < -idm.comfort_decel {
                return Ok(f64::INFINITY);
            }
        }
        return Ok(0.0);
    }

    let mut tracks: Vec<LeaderTrack<'_>> = h.leader.iter().map(LeaderTrack::new).collect();
    tracks.push(LeaderTrack {
        trajectory: reference,
        from: entry,
        offset,
    });
    let reaction = integrate(
        traj.first(),
        ctx.profile(h.route),
        &tracks,
        h.stop_at,
        idm,
        traj.len(),
        traj.dt,
        traj.t0,
    )?;
    let a = traj.accelerations();
    let r = reaction.accelerations();
    let mean = a.iter().zip(&r).map(|(a, r)| (a - r).abs()).sum::<f64>() / a.len().max(1) as f64;
    let cost = mean - hysteresis(same_as_last, p.accel_hysteresis);
    Ok(if cost > p.max_disturbance {
        f64::INFINITY
    } else {
        cost
    })
}

/// Courtesy toward a vehicle on a crossing route: zero when the ego clears
/// the zone at least Δt_max before the other enters, or enters at least
/// Δt_max after it left; infinite otherwise.
pub fn crossing_courtesy(
    reference: &LongTrajectory,
    ego_span: (f64, f64),
    h: &Hypothesis,
    other_span: (f64, f64),
    same_as_last: bool,
    ctx: &Context,
) -> f64 {
    let half = 0.5 * ctx.params.idm.vehicle_length;
    let p = &ctx.params.arbiter;
    let dt = reference.dt;
    let Some(ego_in) = reference.index_reaching(ego_span.0 - half) else {
        return 0.0;
    };
    let traj = &h.trajectory;
    if traj.first().s - half >= other_span.1 {
        return 0.0;
    }
    let Some(other_in) = traj.index_reaching(other_span.0 - half) else {
        return 0.0;
    };
    let ego_out = reference
        .index_reaching(ego_span.1 + half)
        .map_or(f64::INFINITY, |k| k as f64 * dt);
    let other_out = traj
        .index_reaching(other_span.1 + half)
        .map_or(f64::INFINITY, |k| k as f64 * dt);
    let bias = hysteresis(same_as_last, p.ttc_hysteresis);
    let go_first = other_in as f64 * dt - ego_out + bias >= p.min_time_margin;
    let go_after = ego_in as f64 * dt - other_out + bias >= p.min_time_margin;
    if go_first || go_after {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Courtesy cost of one option toward one hypothesis, zero for routes
/// without conflict.
pub fn hypothesis_courtesy(
    option: &BehaviorOption,
    ego: &EgoState,
    h: &Hypothesis,
    same_as_last: bool,
    ctx: &Context,
) -> Result<f64, IdmError> {
    if h.route == ego.route {
        return Ok(0.0);
    }
    match ctx.graph.conflict(ego.route, h.route) {
        None => Ok(0.0),
        Some(ConflictZone::Merging { first, second }) => {
            let gap_opens = option
                .virtual_leader
                .as_ref()
                .map_or(ego.time, |vl| vl.merge_time);
            merge_courtesy(
                &option.reference,
                ego.route,
                first,
                h,
                second,
                gap_opens,
                same_as_last,
                ctx,
            )
        }
        Some(zone) => {
            let (start, end, other) = zone_extents(zone);
            Ok(crossing_courtesy(
                &option.reference,
                (start, end),
                h,
                other,
                same_as_last,
                ctx,
            ))
        }
    }
}

/// Scores every option. Without a stop option the free option serves as
/// its own progress baseline and nothing is pruned.
pub fn evaluate(
    options: Vec<BehaviorOption>,
    ego: &EgoState,
    predictions: &[VehiclePrediction],
    last: Option<&BehaviorKind>,
    ctx: &Context,
) -> Result<Vec<ScoredOption>, ArbiterError> {
    let p = &ctx.params.arbiter;
    let stop = options
        .iter()
        .find(|o| o.kind == BehaviorKind::Stop)
        .map(|o| o.reference.clone());
    let stop_a1 = stop
        .as_ref()
        .and_then(|s| s.accelerations().first().copied());

    let mut scored = Vec::with_capacity(options.len());
    for option in options {
        let same = last.is_some_and(|l| l.same_as(&option.kind));
        let progress = match &stop {
            Some(stop) => progress_cost(&option.reference, stop)?,
            None => 0.0,
        };
        let pruned = option.kind != BehaviorKind::Stop
            && match (stop_a1, option.reference.accelerations().first()) {
                (Some(s), Some(&a)) => a < s - 1e-9,
                _ => false,
            };
        let mut courtesy = 0.0;
        for pred in predictions {
            for h in &pred.hypotheses {
                let c = hypothesis_courtesy(&option, ego, h, same, ctx)?;
                if c != 0.0 {
                    courtesy += h.probability * c;
                }
            }
        }
        let total = if pruned {
            f64::INFINITY
        } else {
            p.progress_weight * progress + p.courtesy_weight * courtesy
        };
        scored.push(ScoredOption {
            option,
            progress_cost: progress,
            courtesy_cost: courtesy,
            pruned,
            total,
        });
    }
    Ok(scored)
}

/// Index of the option with the lowest finite total. Exact ties prefer the
/// previous selection, then stop, follow and merge in that order. When no
/// total is finite the stop option is returned, or else the option that
/// travels the shortest distance.
pub fn select(scored: &[ScoredOption], last: Option<&BehaviorKind>) -> Result<usize, ArbiterError> {
    if scored.is_empty() {
        return Err(ArbiterError::NoOption);
    }
    let key = |o: &ScoredOption| {
        let retained = last.is_some_and(|l| l.same_as(&o.option.kind));
        (!retained, o.option.kind.rank())
    };
    let best = scored
        .iter()
        .enumerate()
        .filter(|(_, o)| o.total.is_finite())
        .min_by(|(_, a), (_, b)| a.total.total_cmp(&b.total).then(key(a).cmp(&key(b))));
    if let Some((i, _)) = best {
        return Ok(i);
    }
    if let Some(i) = scored
        .iter()
        .position(|o| o.option.kind == BehaviorKind::Stop)
    {
        return Ok(i);
    }
    let (i, _) = scored
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.option
                .reference
                .last()
                .s
                .total_cmp(&b.option.reference.last().s)
        })
        .expect("non-empty");
    Ok(i)
}
