//! Dense strictly convex QP by the dual active-set method of Goldfarb and
//! Idnani: minimize ½ dᵀWd + gᵀd subject to cᵢᵀd ≥ bᵢ.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum QpError {
    #[error("quadratic subproblem is infeasible")]
    Infeasible,
    #[error("active constraints became linearly dependent")]
    Degenerate,
    #[error("active-set iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub d: DVector<f64>,
    /// One multiplier per constraint, zero when inactive.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
}

/// `w_inv` applies W⁻¹. Constraints are given as columns `c` with bounds `b`.
pub fn solve(
    w_inv: impl Fn(&DVector<f64>) -> DVector<f64>,
    g: &DVector<f64>,
    c: &[DVector<f64>],
    b: &[f64],
    tol: f64,
) -> Result<QpSolution, QpError> {
    let m = c.len();
    let mut d = -w_inv(g);
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<f64> = Vec::new();
    let mut cache: Vec<Option<DVector<f64>>> = vec![None; m];
    let w_inv_c = |i: usize, cache: &mut Vec<Option<DVector<f64>>>| -> DVector<f64> {
        cache[i].get_or_insert_with(|| w_inv(&c[i])).clone()
    };
    let scale: Vec<f64> = b.iter().map(|b| tol * (1.0 + b.abs())).collect();

    let max_iter = 10 * (m + 1) + 50;
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(QpError::IterationLimit);
        }
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let slack = c[i].dot(&d) - b[i];
            if slack < -scale[i] && worst.is_none_or(|(_, s)| slack < s) {
                worst = Some((i, slack));
            }
        }
        let Some((p, _)) = worst else {
            let mut multipliers = vec![0.0; m];
            for (&i, &l) in active.iter().zip(&lam) {
                multipliers[i] = l;
            }
            return Ok(QpSolution {
                d,
                multipliers,
                active,
            });
        };

        let mut lam_p = 0.0;
        let wp = w_inv_c(p, &mut cache);
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(QpError::IterationLimit);
            }
            let k = active.len();
            let (z, r) = if k == 0 {
                (wp.clone(), DVector::zeros(0))
            } else {
                let v = DMatrix::from_columns(
                    &active
                        .iter()
                        .map(|&j| w_inv_c(j, &mut cache))
                        .collect::<Vec<_>>(),
                );
                let n = DMatrix::from_columns(
                    &active.iter().map(|&j| c[j].clone()).collect::<Vec<_>>(),
                );
                let mm = n.transpose() * &v;
                let chol = mm.cholesky().ok_or(QpError::Degenerate)?;
                let r = chol.solve(&(v.transpose() * &c[p]));
                (&wp - &v * &r, r)
            };

            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for j in 0..k {
                if r[j] > 0.0 {
                    let t = lam[j] / r[j];
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            let zc = z.dot(&c[p]);
            let t2 = if zc > 1e-12 * wp.dot(&c[p]).abs().max(f64::MIN_POSITIVE) {
                -(c[p].dot(&d) - b[p]) / zc
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }
            for j in 0..k {
                lam[j] -= t * r[j];
            }
            lam_p += t;
            if t2.is_finite() {
                d += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                lam.push(lam_p);
                break;
            }
            let j = drop.expect("partial step has a blocking constraint");
            active.remove(j);
            lam.remove(j);
        }
    }
}
