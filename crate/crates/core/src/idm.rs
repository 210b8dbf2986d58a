//! Intelligent Driver Model: acceleration law, curvature-adapted target
//! speeds and forward integration into longitudinal trajectories.

use alloc::vec::Vec;

use crate::world::Route;

/// Lower acceleration bound applied to every IDM evaluation, m/s².
pub const HARD_DECEL: f64 = 8.0;
/// Gaps below this are evaluated as this value inside rollouts, m.
pub const MIN_GAP: f64 = 0.01;
/// Spacing of curvature speed profiles, m.
pub const PROFILE_STEP: f64 = 0.5;
const CURVATURE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum IdmError {
    #[error("gap to leader must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("leader trajectory has {got} samples, rollout needs {need}")]
    HorizonMismatch { got: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    /// a_IDM, m/s².
    pub max_accel: f64,
    /// b, m/s².
    pub comfort_decel: f64,
    /// s0, m.
    pub min_gap: f64,
    /// T, s.
    pub time_gap: f64,
    /// δ.
    pub exponent: f64,
    /// Bumper-to-bumper length used to turn center distances into gaps, m.
    pub vehicle_length: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            max_accel: 2.0,
            comfort_decel: 4.0,
            min_gap: 4.0,
            time_gap: 2.5,
            exponent: 4.0,
            vehicle_length: 5.0,
        }
    }
}

/// Gap to the leading vehicle and approach rate `v - v_leader`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub gap: f64,
    pub approach_rate: f64,
}

/// Desired distance s*.
pub fn desired_gap(v: f64, approach_rate: f64, p: &IdmParams) -> f64 {
    p.min_gap
        + v * p.time_gap
        + v * approach_rate / (2.0 * libm::sqrt(p.max_accel * p.comfort_decel))
}

/// IDM acceleration clamped to `[-HARD_DECEL, max_accel]`.
pub fn idm_acceleration(
    v: f64,
    v0: f64,
    leader: Option<Interaction>,
    p: &IdmParams,
) -> Result<f64, IdmError> {
    let free = 1.0 - libm::pow(v / v0, p.exponent);
    let interaction = match leader {
        None => 0.0,
        Some(l) if l.gap <= 0.0 => return Err(IdmError::NonPositiveGap(l.gap)),
        Some(l) => {
            let r = desired_gap(v, l.approach_rate, p) / l.gap;
            r * r
        }
    };
    Ok((p.max_accel * (free - interaction)).clamp(-HARD_DECEL, p.max_accel))
}

/// Longitudinal state on a route.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LongState {
    pub s: f64,
    pub v: f64,
}

/// Uniformly time-sampled longitudinal states.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTrajectory {
    pub states: Vec<LongState>,
    pub dt: f64,
    pub t0: f64,
}

impl LongTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn first(&self) -> LongState {
        self.states[0]
    }

    pub fn last(&self) -> LongState {
        self.states[self.states.len() - 1]
    }

    /// First sample index with `s >= target`.
    pub fn index_reaching(&self, target: f64) -> Option<usize> {
        self.states.iter().position(|x| x.s >= target)
    }

    /// Forward-difference accelerations, one fewer than samples.
    pub fn accelerations(&self) -> Vec<f64> {
        self.states
            .windows(2)
            .map(|w| (w[1].v - w[0].v) / self.dt)
            .collect()
    }
}

/// Anything that yields a target speed along a route.
pub trait TargetSpeed {
    fn target_at(&self, s: f64) -> f64;
}

/// Target speeds sampled along a route, linearly interpolated and held
/// constant beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    s: Vec<f64>,
    v: Vec<f64>,
}

impl SpeedProfile {
    /// `samples` must have strictly increasing `s`; returns `None` otherwise
    /// or when empty.
    pub fn from_samples(samples: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let (s, v): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        if s.is_empty() || s.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        Some(Self { s, v })
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.v.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.s[0]
    }

    pub fn end(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return self.v[0];
        }
        if s >= self.s[n - 1] {
            return self.v[n - 1];
        }
        let i = self.s.partition_point(|&x| x <= s) - 1;
        let t = (s - self.s[i]) / (self.s[i + 1] - self.s[i]);
        self.v[i] + t * (self.v[i + 1] - self.v[i])
    }
}

impl TargetSpeed for SpeedProfile {
    fn target_at(&self, s: f64) -> f64 {
        self.speed_at(s)
    }
}

/// A profile capped at a constant speed.
#[derive(Debug, Clone, Copy)]
pub struct Capped<'a, T: ?Sized> {
    pub inner: &'a T,
    pub cap: f64,
}

impl<T: TargetSpeed + ?Sized> TargetSpeed for Capped<'_, T> {
    fn target_at(&self, s: f64) -> f64 {
        self.inner.target_at(s).min(self.cap)
    }
}

impl TargetSpeed for f64 {
    fn target_at(&self, _s: f64) -> f64 {
        *self
    }
}

/// Target speed `min(v_limit, sqrt(a_lat_max / |κ|))` every
/// [`PROFILE_STEP`] meters, then limited by a backward pass so that the
/// profile never asks for more than `decel` to slow down for a curve.
pub fn target_speed_profile(
    route: &Route,
    v_limit: f64,
    a_lat_max: f64,
    decel: f64,
) -> SpeedProfile {
    let len = route.length();
    let n = libm::ceil(len / PROFILE_STEP) as usize;
    let s: Vec<f64> = (0..=n)
        .map(|i| (i as f64 * PROFILE_STEP).min(len))
        .collect();
    let mut v: Vec<f64> = s
        .iter()
        .map(|&x| {
            let k = route.curvature_at(x).abs().max(CURVATURE_EPS);
            v_limit.min(libm::sqrt(a_lat_max / k))
        })
        .collect();
    for i in (0..v.len() - 1).rev() {
        let ds = s[i + 1] - s[i];
        let reachable = libm::sqrt(v[i + 1] * v[i + 1] + 2.0 * decel * ds);
        v[i] = v[i].min(reachable);
    }
    // A route shorter than one step produces a duplicated end sample.
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(s.len());
    for (x, y) in s.into_iter().zip(v) {
        if samples.last().is_none_or(|&(px, _)| x > px) {
            samples.push((x, y));
        }
    }
    SpeedProfile::from_samples(samples).expect("profile arc lengths increase")
}

/// A leading trajectory seen from the follower's route: active from sample
/// `from` on, with `offset` added to its arc lengths.
#[derive(Debug, Clone, Copy)]
pub struct LeaderTrack<'a> {
    pub trajectory: &'a LongTrajectory,
    pub from: usize,
    pub offset: f64,
}

impl<'a> LeaderTrack<'a> {
    pub fn new(trajectory: &'a LongTrajectory) -> Self {
        Self {
            trajectory,
            from: 0,
            offset: 0.0,
        }
    }
}

/// Forward Euler integration of the IDM.
///
/// Every leader and the optional stop target are evaluated separately and
/// the lowest acceleration wins. The stop target behaves like a standing
/// vehicle whose rear is at `stop_at`, measured from the vehicle center, so
/// the vehicle comes to rest `min_gap` before it.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    start: LongState,
    target: &(impl TargetSpeed + ?Sized),
    leaders: &[LeaderTrack<'_>],
    stop_at: Option<f64>,
    p: &IdmParams,
    n: usize,
    dt: f64,
    t0: f64,
) -> Result<LongTrajectory, IdmError> {
    for l in leaders {
        if l.trajectory.len() < n {
            return Err(IdmError::HorizonMismatch {
                got: l.trajectory.len(),
                need: n,
            });
        }
    }
    let mut states = Vec::with_capacity(n);
    let mut x = LongState {
        s: start.s,
        v: start.v.max(0.0),
    };
    states.push(x);
    for k in 0..n.saturating_sub(1) {
        let v0 = target.target_at(x.s).max(1e-3);
        let mut a = idm_acceleration(x.v, v0, None, p)?;
        for l in leaders.iter().filter(|l| k >= l.from) {
            let lead = l.trajectory.states[k];
            let gap = (lead.s + l.offset - x.s - p.vehicle_length).max(MIN_GAP);
            let inter = Interaction {
                gap,
                approach_rate: x.v - lead.v,
            };
            a = a.min(idm_acceleration(x.v, v0, Some(inter), p)?);
        }
        if let Some(stop) = stop_at {
            let inter = Interaction {
                gap: (stop - x.s).max(MIN_GAP),
                approach_rate: x.v,
            };
            a = a.min(idm_acceleration(x.v, v0, Some(inter), p)?);
        }
        x = LongState {
            s: x.s + x.v * dt,
            v: (x.v + a * dt).max(0.0),
        };
        states.push(x);
    }
    Ok(LongTrajectory { states, dt, t0 })
}

/// Rollout with at most one leader, sampled on the same time grid.
#[allow(clippy::too_many_arguments)]
pub fn rollout(
    start: LongState,
    profile: &(impl TargetSpeed + ?Sized),
    leader: Option<&LongTrajectory>,
    stop_at: Option<f64>,
    p: &IdmParams,
    n: usize,
    dt: f64,
    t0: f64,
) -> Result<LongTrajectory, IdmError> {
    let tracks: Vec<LeaderTrack<'_>> = leader.into_iter().map(LeaderTrack::new).collect();
    integrate(start, profile, &tracks, stop_at, p, n, dt, t0)
}

/// Gap at which the IDM acceleration vanishes for a leader at equal speed.
pub fn equilibrium_gap(v: f64, v0: f64, p: &IdmParams) -> Option<f64> {
    let free = 1.0 - libm::pow(v / v0, p.exponent);
    (free > 0.0).then(|| desired_gap(v, 0.0, p) / libm::sqrt(free))
}
