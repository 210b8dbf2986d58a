//! One planning cycle: predict, generate options, arbitrate, smooth.

use alloc::vec::Vec;

use crate::arbiter::{evaluate, select, ArbiterError};
use crate::behavior::{generate_options, BehaviorKind, EgoState};
use crate::context::Context;
use crate::geom::Vec2;
use crate::idm::{IdmError, LongState};
use crate::optimizer::{
    reference_to_cartesian, CartesianTrajectory, OptimizerError, Problem, FEASIBILITY_TOLERANCE,
    FIXED,
};
use crate::predictor::{predict, ObservedVehicle, PredictError, SceneState, VehicleId};
use crate::world::{RouteId, WorldError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("prediction failed: {0}")]
    Predict(#[from] PredictError),
    #[error("behavior generation failed: {0}")]
    Idm(#[from] IdmError),
    #[error("arbitration failed: {0}")]
    Arbiter(#[from] ArbiterError),
    #[error("optimization failed: {0}")]
    Optimizer(#[from] OptimizerError),
    #[error("ego is off its route: {0}")]
    World(#[from] WorldError),
}

/// Identifier the planner gives the ego inside its own predictions.
pub const EGO_ID: VehicleId = VehicleId(u32::MAX);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoInput {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    /// Last four executed positions, oldest first. `None` on the first
    /// cycle.
    pub prefix: Option<[Vec2; FIXED]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionCost {
    pub kind: BehaviorKind,
    pub progress: f64,
    pub courtesy: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub trajectory: CartesianTrajectory,
    pub selected: BehaviorKind,
    pub options: Vec<OptionCost>,
    pub ego: EgoState,
    pub converged: bool,
    pub iterations: usize,
}

/// Stateful planner: remembers the previous selection for hysteresis.
#[derive(Debug, Clone)]
pub struct Planner {
    ctx: Context,
    route: RouteId,
    last: Option<BehaviorKind>,
}

impl Planner {
    pub fn new(ctx: Context, route: RouteId) -> Self {
        Self {
            ctx,
            route,
            last: None,
        }
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn route(&self) -> RouteId {
        self.route
    }

    pub fn last_selected(&self) -> Option<BehaviorKind> {
        self.last
    }

    pub fn plan(&mut self, ego: &EgoInput, scene: &SceneState) -> Result<Plan, PlanError> {
        let ctx = &self.ctx;
        let params = &ctx.params;
        let route = ctx.graph.route(self.route);
        let pose = route.project(ego.position, ego.heading)?;
        let state = EgoState {
            route: self.route,
            long: LongState {
                s: pose.s,
                v: ego.speed.max(0.0),
            },
            time: scene.time,
        };

        let mut with_ego = scene.clone();
        with_ego.vehicles.push(ObservedVehicle {
            id: EGO_ID,
            position: ego.position,
            heading: ego.heading,
            speed: ego.speed.max(0.0),
        });
        let mut predictions = predict(&with_ego, ctx)?;
        predictions.retain(|p| p.id != EGO_ID);

        let options = generate_options(&state, &predictions, ctx)?;
        let scored = evaluate(options, &state, &predictions, self.last.as_ref(), ctx)?;
        let best = select(&scored, self.last.as_ref())?;
        let chosen = &scored[best].option;

        let n = params.optimized_len;
        let cart = reference_to_cartesian(&chosen.reference, route, n - (FIXED - 1))?;
        let dt = params.dt;
        let prefix = ego.prefix.unwrap_or_else(|| {
            let v = Vec2::from_heading(ego.heading) * (ego.speed * dt);
            core::array::from_fn(|k| ego.position - v * (FIXED - 1 - k) as f64)
        });
        let mut targets = prefix[..FIXED - 1].to_vec();
        targets.extend(cart.positions);
        let problem = Problem::new(
            prefix,
            targets,
            params.optimizer,
            dt,
            scene.time - (FIXED - 1) as f64 * dt,
        )?;
        let result = match problem.solve() {
            Ok(r) => r,
            Err(OptimizerError::NotConverged { best })
                if best.max_violation <= FEASIBILITY_TOLERANCE =>
            {
                best
            }
            Err(e) => return Err(e.into()),
        };

        let selected = chosen.kind;
        self.last = Some(selected);
        Ok(Plan {
            trajectory: result.trajectory,
            selected,
            options: scored
                .iter()
                .map(|o| OptionCost {
                    kind: o.option.kind,
                    progress: o.progress_cost,
                    courtesy: o.courtesy_cost,
                    total: o.total,
                })
                .collect(),
            ego: state,
            converged: result.converged,
            iterations: result.iterations,
        })
    }
}
