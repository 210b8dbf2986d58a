//! Smoothing of the selected reference into a Cartesian trajectory: a
//! quadratic cost on deviation, acceleration, jerk and snap, with the
//! absolute acceleration bounded at every free sample. Solved by SQP with
//! exact Hessians and a dual active-set QP.

pub mod qp;

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::geom::Vec2;
use crate::idm::LongTrajectory;
use crate::world::{Route, WorldError};

/// Number of leading samples held fixed.
pub const FIXED: usize = 4;
/// First sample whose acceleration is bounded: the last fixed one, since its
/// stencil already reaches the first free point.
pub const FIRST_BOUNDED: usize = FIXED - 1;
pub const MAX_ITERATIONS: usize = 100;
pub const KKT_TOLERANCE: f64 = 1e-6;
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerWeights {
    pub spatial: f64,
    pub acc: f64,
    pub jerk: f64,
    pub snap: f64,
    /// a_max, m/s².
    pub max_accel: f64,
}

impl Default for OptimizerWeights {
    fn default() -> Self {
        Self {
            spatial: 1.0,
            acc: 0.1,
            jerk: 0.1,
            snap: 0.1,
            max_accel: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianTrajectory {
    pub positions: Vec<Vec2>,
    pub dt: f64,
    pub t0: f64,
}

impl CartesianTrajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Central-difference velocity at interior sample `n`.
    pub fn velocity(&self, n: usize) -> Vec2 {
        (self.positions[n + 1] - self.positions[n - 1]) / (2.0 * self.dt)
    }

    /// Central-difference acceleration at interior sample `n`.
    pub fn acceleration(&self, n: usize) -> Vec2 {
        let x = &self.positions;
        (x[n + 1] - x[n] * 2.0 + x[n - 1]) / (self.dt * self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpResult {
    pub trajectory: CartesianTrajectory,
    pub converged: bool,
    pub iterations: usize,
    pub cost: f64,
    /// Largest ‖a_n‖² − a_max², clipped at zero.
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("trajectory needs at least 8 samples, got {0}")]
    TooShort(usize),
    #[error("reference has {got} samples, need {need}")]
    ReferenceTooShort { got: usize, need: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("solver stopped after {} iterations without convergence", best.iterations)]
    NotConverged { best: NlpResult },
}

/// Center-line positions of the first `n` reference samples.
pub fn reference_to_cartesian(
    reference: &LongTrajectory,
    route: &Route,
    n: usize,
) -> Result<CartesianTrajectory, OptimizerError> {
    if reference.len() < n {
        return Err(OptimizerError::ReferenceTooShort {
            got: reference.len(),
            need: n,
        });
    }
    let positions = reference.states[..n]
        .iter()
        .map(|x| route.to_cartesian(x.s, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CartesianTrajectory {
        positions,
        dt: reference.dt,
        t0: reference.t0,
    })
}

/// One weighted residual row: Σ coef·x_index − target.
#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    target: Vec2,
}

const ACC: [f64; 3] = [1.0, -2.0, 1.0];
const JERK: [f64; 4] = [-1.0, 3.0, -3.0, 1.0];
const SNAP: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

/// The smoothing problem for one planning cycle.
#[derive(Debug, Clone)]
pub struct Problem {
    prefix: [Vec2; FIXED],
    reference: Vec<Vec2>,
    weights: OptimizerWeights,
    dt: f64,
    t0: f64,
    rows: Vec<Row>,
}

impl Problem {
    /// `reference` holds all `N` target positions; only entries from index
    /// 4 on enter the cost.
    pub fn new(
        prefix: [Vec2; FIXED],
        reference: Vec<Vec2>,
        weights: OptimizerWeights,
        dt: f64,
        t0: f64,
    ) -> Result<Self, OptimizerError> {
        let n = reference.len();
        if n < 8 {
            return Err(OptimizerError::TooShort(n));
        }
        let finite = prefix.iter().chain(&reference).all(|p| p.is_finite())
            && dt.is_finite()
            && dt > 0.0
            && [
                weights.spatial,
                weights.acc,
                weights.jerk,
                weights.snap,
                weights.max_accel,
            ]
            .iter()
            .all(|w| w.is_finite());
        if !finite {
            return Err(OptimizerError::NonFinite);
        }
        let mut rows = Vec::new();
        let ws = libm::sqrt(weights.spatial);
        if ws > 0.0 {
            for i in FIXED..n {
                rows.push(Row {
                    terms: vec![(i, ws)],
                    target: reference[i] * ws,
                });
            }
        }
        let mut stencil =
            |w: f64, power: i32, coefs: &[f64], first: usize, last: usize, lead: usize| {
                let scale = libm::sqrt(w) / libm::pow(dt, power as f64);
                if scale == 0.0 {
                    return;
                }
                for i in first..=last {
                    rows.push(Row {
                        terms: coefs
                            .iter()
                            .enumerate()
                            .map(|(k, c)| (i + k - lead, c * scale))
                            .collect(),
                        target: Vec2::new(0.0, 0.0),
                    });
                }
            };
        // acceleration x_{i-1..i+1}, jerk x_{i-2..i+1}, snap x_{i-2..i+2}
        stencil(weights.acc, 2, &ACC, FIXED, n - 2, 1);
        stencil(weights.jerk, 3, &JERK, FIXED, n - 2, 2);
        stencil(weights.snap, 4, &SNAP, FIXED, n - 3, 2);
        Ok(Self {
            prefix,
            reference,
            weights,
            dt,
            t0,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn prefix(&self) -> &[Vec2; FIXED] {
        &self.prefix
    }

    pub fn reference(&self) -> &[Vec2] {
        &self.reference
    }

    /// Number of free points.
    pub fn free(&self) -> usize {
        self.len() - FIXED
    }

    /// Prefix followed by the reference: the initial guess.
    pub fn initial_guess(&self) -> Vec<Vec2> {
        let mut x = self.prefix.to_vec();
        x.extend_from_slice(&self.reference[FIXED..]);
        x
    }

    /// J at full positions (prefix included).
    pub fn cost(&self, positions: &[Vec2]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let mut e = -r.target;
                for &(i, c) in &r.terms {
                    e += positions[i] * c;
                }
                e.norm_squared()
            })
            .sum()
    }

    /// ∇J over the free points: x components of points 4.. first, then y.
    pub fn gradient(&self, positions: &[Vec2]) -> Vec<f64> {
        let m = self.free();
        let mut g = vec![0.0; 2 * m];
        for r in &self.rows {
            let mut e = -r.target;
            for &(i, c) in &r.terms {
                e += positions[i] * c;
            }
            for &(i, c) in &r.terms {
                if i >= FIXED {
                    g[i - FIXED] += 2.0 * c * e.x;
                    g[m + i - FIXED] += 2.0 * c * e.y;
                }
            }
        }
        g
    }

    /// Bounded accelerations a_3..a_{N-2}.
    pub fn accelerations(&self, positions: &[Vec2]) -> Vec<Vec2> {
        let dt2 = self.dt * self.dt;
        (FIRST_BOUNDED..self.len() - 1)
            .map(|i| (positions[i + 1] - positions[i] * 2.0 + positions[i - 1]) / dt2)
            .collect()
    }

    fn max_violation(&self, positions: &[Vec2]) -> f64 {
        let a2 = self.weights.max_accel * self.weights.max_accel;
        self.accelerations(positions)
            .iter()
            .map(|a| a.norm_squared() - a2)
            .fold(0.0, f64::max)
    }

    fn trajectory(&self, positions: Vec<Vec2>) -> CartesianTrajectory {
        CartesianTrajectory {
            positions,
            dt: self.dt,
            t0: self.t0,
        }
    }

    /// Minimizes J subject to ‖a_n‖ ≤ a_max, starting from the reference.
    pub fn solve(&self) -> Result<NlpResult, OptimizerError> {
        let n = self.len();
        let m = self.free();
        let origin = self.prefix[FIXED - 1];
        // Local coordinates keep the problem well scaled far from the map
        // origin.
        let local = Problem::new(
            self.prefix.map(|p| p - origin),
            self.reference.iter().map(|&p| p - origin).collect(),
            self.weights,
            self.dt,
            self.t0,
        )?;
        let (result, converged) = local.sqp(n, m);
        let positions: Vec<Vec2> = self
            .prefix
            .iter()
            .copied()
            .chain(
                result.trajectory.positions[FIXED..]
                    .iter()
                    .map(|&p| p + origin),
            )
            .collect();
        let out = NlpResult {
            cost: self.cost(&positions),
            max_violation: self.max_violation(&positions),
            trajectory: self.trajectory(positions),
            ..result
        };
        if converged {
            Ok(out)
        } else {
            Err(OptimizerError::NotConverged { best: out })
        }
    }

    fn sqp(&self, n: usize, m: usize) -> (NlpResult, bool) {
        let dt2 = self.dt * self.dt;
        let a_max2 = self.weights.max_accel * self.weights.max_accel;
        let nc = n - 1 - FIRST_BOUNDED;

        // Free-variable part of the residual rows, shared by x and y.
        let mut f = DMatrix::<f64>::zeros(self.rows.len(), m);
        for (k, r) in self.rows.iter().enumerate() {
            for &(i, c) in &r.terms {
                if i >= FIXED {
                    f[(k, i - FIXED)] = c;
                }
            }
        }
        // Acceleration stencils, row j for a_{j+3}.
        let mut s = DMatrix::<f64>::zeros(nc, m);
        for j in 0..nc {
            let i = j + FIRST_BOUNDED;
            for (k, c) in ACC.iter().enumerate() {
                let col = i + k - 1;
                if col >= FIXED {
                    s[(j, col - FIXED)] = c / dt2;
                }
            }
        }

        let mut x = self.initial_guess();
        let mut mu = vec![0.0; nc];
        let mut rho: f64 = 1.0;
        let penalty = |x: &[Vec2]| -> f64 {
            self.accelerations(x)
                .iter()
                .map(|a| (a.norm_squared() - a_max2).max(0.0))
                .sum()
        };

        let mut iterations = 0;
        let mut converged = false;
        while iterations < MAX_ITERATIONS {
            let acc = self.accelerations(&x);
            let cons: Vec<f64> = acc.iter().map(|a| a.norm_squared() - a_max2).collect();
            let grad = DVector::from_vec(self.gradient(&x));
            let cons_grad: Vec<DVector<f64>> = acc
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let row = s.row(j);
                    let mut g = DVector::zeros(2 * m);
                    for col in 0..m {
                        g[col] = 2.0 * a.x * row[col];
                        g[m + col] = 2.0 * a.y * row[col];
                    }
                    g
                })
                .collect();

            let violation = cons.iter().copied().fold(0.0, f64::max);
            if iterations > 0 && violation <= FEASIBILITY_TOLERANCE {
                let mut lag = grad.clone();
                let mut scale = grad.amax();
                for (g, &u) in cons_grad.iter().zip(&mu) {
                    if u != 0.0 {
                        lag.axpy(u, g, 1.0);
                        scale = scale.max(u * g.amax());
                    }
                }
                if lag.amax() <= KKT_TOLERANCE * scale.max(1.0) {
                    converged = true;
                    break;
                }
            }
            iterations += 1;

            // Lagrangian Hessian, identical for x and y: 2FᵀF + Σ 2μ SᵀS.
            // Its factor comes from a QR of the stacked rows for accuracy.
            let active: Vec<usize> = (0..nc).filter(|&j| mu[j] > 0.0).collect();
            let mut stacked = DMatrix::<f64>::zeros(f.nrows() + active.len(), m);
            stacked.rows_mut(0, f.nrows()).copy_from(&f);
            for (k, &j) in active.iter().enumerate() {
                let w = libm::sqrt(mu[j]);
                stacked.row_mut(f.nrows() + k).copy_from(&(s.row(j) * w));
            }
            let r = stacked.clone().qr().r();
            let rtr_solve = |rhs: &DVector<f64>| {
                let y = r
                    .tr_solve_upper_triangular(rhs)
                    .unwrap_or_else(|| DVector::zeros(m));
                r.solve_upper_triangular(&y)
                    .unwrap_or_else(|| DVector::zeros(m))
            };
            let w_inv = |v: &DVector<f64>| {
                let mut out = DVector::zeros(2 * m);
                for half in 0..2 {
                    let rhs = v.rows(half * m, m) * 0.5;
                    let mut u = rtr_solve(&rhs);
                    // one correction step; RᵀR alone squares the conditioning
                    let residual = &rhs - stacked.tr_mul(&(&stacked * &u));
                    u += rtr_solve(&residual);
                    out.rows_mut(half * m, m).copy_from(&u);
                }
                out
            };
            let c: Vec<DVector<f64>> = cons_grad.iter().map(|g| -g).collect();
            let b: Vec<f64> = cons.clone();
            let sol = match qp::solve(w_inv, &grad, &c, &b, 1e-12) {
                Ok(sol) => sol,
                Err(_) => break,
            };

            let d = &sol.d;
            let lam_max = sol.multipliers.iter().copied().fold(0.0, f64::max);
            rho = rho.max(2.0 * lam_max + 1.0);
            let viol_sum: f64 = cons.iter().map(|c| c.max(0.0)).sum();
            let slope = grad.dot(d) - rho * viol_sum;
            // J is quadratic: J(x + αd) − J(x) = 2αΣ e·Fd + α²Σ |Fd|². Evaluating
            // it this way avoids the cancellation in J(x + αd) − J(x) that
            // otherwise stalls the last refinement steps.
            let (mut lin, mut quad) = (0.0, 0.0);
            for r in &self.rows {
                let mut e = -r.target;
                let mut u = Vec2::new(0.0, 0.0);
                for &(i, c) in &r.terms {
                    e += x[i] * c;
                    if i >= FIXED {
                        u += Vec2::new(d[i - FIXED], d[m + i - FIXED]) * c;
                    }
                }
                lin += e.dot(u);
                quad += u.norm_squared();
            }
            let penalty0 = penalty(&x);
            let decrease = |alpha: f64, y: &[Vec2]| {
                2.0 * alpha * lin + alpha * alpha * quad + rho * (penalty(y) - penalty0)
            };
            let step = |alpha: f64| -> Vec<Vec2> {
                let mut y = x.clone();
                for i in 0..m {
                    y[FIXED + i].x += alpha * d[i];
                    y[FIXED + i].y += alpha * d[m + i];
                }
                y
            };
            let mut alpha = 1.0;
            let mut trial = step(alpha);
            while decrease(alpha, &trial) > 1e-4 * alpha * slope && alpha > 1e-10 {
                alpha *= 0.5;
                trial = step(alpha);
            }
            let small_step = d.amax() * alpha
                <= 1e-12
                    * (1.0
                        + x.iter()
                            .map(|p| p.x.abs().max(p.y.abs()))
                            .fold(0.0, f64::max));
            x = trial;
            for (u, l) in mu.iter_mut().zip(&sol.multipliers) {
                *u += alpha * (l - *u);
            }
            if small_step && self.max_violation(&x) <= FEASIBILITY_TOLERANCE {
                converged = true;
                break;
            }
        }
        let result = NlpResult {
            cost: self.cost(&x),
            max_violation: self.max_violation(&x),
            trajectory: self.trajectory(x),
            converged,
            iterations,
        };
        (result, converged)
    }
}
