//! Damped Gauss-Newton (Levenberg) with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite-difference step for Jacobians, in parameter units (m or rad).
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop when the proposed step norm falls below this.
    pub step_tolerance: f64,
    /// Stop when an accepted step lowers the squared-residual sum by less.
    pub residual_tolerance: f64,
    /// Weight of the plane penalty in the soft solver.
    pub mu: f64,
    pub damping_init: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            step_tolerance: 1e-10,
            residual_tolerance: 1e-12,
            mu: 1.0,
            damping_init: 1e-3,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_tolerance > 0.0
            && self.residual_tolerance > 0.0
            && self.damping_init > 0.0
            && self.mu >= 0.0
            && self.mu.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqReport {
    pub iterations: usize,
    pub converged: bool,
    pub initial_cost: f64,
    /// Sum of squared residuals at the returned parameters.
    pub final_cost: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Central-difference Jacobian of `f` at `p` with absolute step `step`.
pub fn numeric_jacobian<F>(f: &F, p: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut cols = Vec::with_capacity(p.len());
    let mut q = p.clone();
    for j in 0..p.len() {
        q[j] = p[j] + step;
        let fp = f(&q);
        q[j] = p[j] - step;
        let fm = f(&q);
        q[j] = p[j];
        cols.push((fp - fm) / (2.0 * step));
    }
    DMatrix::from_columns(&cols)
}

/// Minimizes `|f(p)|^2` from `init`. Trial points with non-finite residuals
/// are treated as rejected steps.
pub fn solve_least_squares<F>(f: F, init: DVector<f64>, settings: &SolverSettings) -> Result<(DVector<f64>, LsqReport)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    settings.validate()?;
    let mut p = init;
    let mut r = f(&p);
    if !finite(&r) || !finite(&p) {
        return Err(Error::NonFiniteResidual);
    }
    let mut cost = r.norm_squared();
    let mut report = LsqReport {
        iterations: 0,
        converged: false,
        initial_cost: cost,
        final_cost: cost,
        cost_history: vec![cost],
    };
    let mut damping = settings.damping_init;
    let n = p.len();
    'outer: while report.iterations < settings.max_iterations {
        if cost == 0.0 {
            report.converged = true;
            break;
        }
        let j = numeric_jacobian(&f, &p, JACOBIAN_STEP);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        report.iterations += 1;
        loop {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += damping;
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                damping *= 10.0;
                if damping > 1e20 {
                    report.converged = true;
                    break 'outer;
                }
                continue;
            };
            if delta.norm() < settings.step_tolerance {
                report.converged = true;
                break 'outer;
            }
            let p_new = &p + &delta;
            let r_new = f(&p_new);
            let cost_new = if finite(&r_new) {
                r_new.norm_squared()
            } else {
                f64::INFINITY
            };
            if cost_new <= cost {
                let decrease = cost - cost_new;
                p = p_new;
                r = r_new;
                cost = cost_new;
                report.cost_history.push(cost);
                damping = (damping / 10.0).max(1e-15);
                if decrease < settings.residual_tolerance {
                    report.converged = true;
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e20 {
                // no descent direction left at working precision
                report.converged = true;
                break 'outer;
            }
        }
    }
    report.final_cost = cost;
    Ok((p, report))
}
