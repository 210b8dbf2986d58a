//! Parameter blocks with their defaults and string-keyed overrides.

use crate::arbiter::ArbiterParams;
use crate::idm::IdmParams;
use crate::optimizer::OptimizerWeights;
use crate::predictor::PredictorParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownKey(alloc::string::String),
    #[error("invalid value {value} for `{key}`")]
    InvalidValue {
        key: alloc::string::String,
        value: f64,
    },
}

/// Everything one planning cycle needs besides the map.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub idm: IdmParams,
    pub predictor: PredictorParams,
    pub arbiter: ArbiterParams,
    pub optimizer: OptimizerWeights,
    /// N_ref, samples of every longitudinal reference and prediction.
    pub reference_len: usize,
    /// N_opt, samples of the optimized Cartesian trajectory.
    pub optimized_len: usize,
    /// Δt, s.
    pub dt: f64,
    /// Lateral acceleration used for curvature speed limits, m/s².
    pub lateral_accel: f64,
    /// Generate merge-behind options through virtual leaders.
    pub merge_options: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            predictor: PredictorParams::default(),
            arbiter: ArbiterParams::default(),
            optimizer: OptimizerWeights::default(),
            reference_len: 201,
            optimized_len: 60,
            dt: 0.05,
            lateral_accel: 2.0,
            merge_options: true,
        }
    }
}

/// Keys accepted by [`PlannerParams::set`].
pub const PLANNER_KEYS: &[&str] = &[
    "a_idm",
    "b",
    "s0",
    "T",
    "delta",
    "vehicle_length",
    "sigma_phi",
    "sigma_d",
    "delta_r",
    "dt_inter",
    "lambda1",
    "lambda2",
    "lambda3",
    "w_p",
    "w_c",
    "H_a_const",
    "H_ttc_const",
    "da_max",
    "dt_max",
    "w_spatial",
    "w_acc",
    "w_jerk",
    "w_snap",
    "a_max",
    "N_ref",
    "N_opt",
    "dt",
    "a_lat_max",
    "merge_options",
];

impl PlannerParams {
    /// Overrides one parameter by its conventional symbol name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ParamError> {
        let invalid = || ParamError::InvalidValue {
            key: key.into(),
            value,
        };
        if !value.is_finite() {
            return Err(invalid());
        }
        let positive = |v: f64| if v > 0.0 { Ok(v) } else { Err(invalid()) };
        let non_negative = |v: f64| if v >= 0.0 { Ok(v) } else { Err(invalid()) };
        let unit = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(invalid())
            }
        };
        let count = |v: f64, min: f64| {
            if v >= min && libm::trunc(v) == v {
                Ok(v as usize)
            } else {
                Err(invalid())
            }
        };
        match key {
            "a_idm" => self.idm.max_accel = positive(value)?,
            "b" => self.idm.comfort_decel = positive(value)?,
            "s0" => self.idm.min_gap = positive(value)?,
            "T" => self.idm.time_gap = positive(value)?,
            "delta" => self.idm.exponent = positive(value)?,
            "vehicle_length" => self.idm.vehicle_length = positive(value)?,
            "sigma_phi" => self.predictor.sigma_heading = positive(value)?,
            "sigma_d" => self.predictor.sigma_lateral = positive(value)?,
            "delta_r" => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(invalid());
                }
                self.predictor.relevance_threshold = value
            }
            "dt_inter" => self.predictor.interaction_horizon = positive(value)?,
            "lambda1" => self.predictor.lambda_conflict = unit(value)?,
            "lambda2" => self.predictor.lambda_clear = unit(value)?,
            "lambda3" => self.predictor.lambda_priority = unit(value)?,
            "w_p" => self.arbiter.progress_weight = non_negative(value)?,
            "w_c" => self.arbiter.courtesy_weight = non_negative(value)?,
            "H_a_const" => self.arbiter.accel_hysteresis = non_negative(value)?,
            "H_ttc_const" => self.arbiter.ttc_hysteresis = non_negative(value)?,
            "da_max" => self.arbiter.max_disturbance = non_negative(value)?,
            "dt_max" => self.arbiter.min_time_margin = non_negative(value)?,
            "w_spatial" => self.optimizer.spatial = non_negative(value)?,
            "w_acc" => self.optimizer.acc = non_negative(value)?,
            "w_jerk" => self.optimizer.jerk = non_negative(value)?,
            "w_snap" => self.optimizer.snap = non_negative(value)?,
            "a_max" => self.optimizer.max_accel = positive(value)?,
            "N_ref" => self.reference_len = count(value, 2.0)?,
            "N_opt" => self.optimized_len = count(value, 8.0)?,
            "dt" => self.dt = positive(value)?,
            "a_lat_max" => self.lateral_accel = positive(value)?,
            "merge_options" => self.merge_options = value != 0.0,
            _ => return Err(ParamError::UnknownKey(key.into())),
        }
        Ok(())
    }
}
