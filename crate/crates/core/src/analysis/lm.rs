//! Levenberg–Marquardt least squares with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once `‖δ‖ / (‖x‖ + ε)` drops below this.
    pub step_tolerance: f64,
    /// Converged once an accepted step lowers the cost by less than this
    /// relative amount.
    pub cost_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-8,
            cost_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Half the residual sum of squares.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn jacobian<F>(f: &F, x: &[f64], m: usize) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        f(&xp, &mut rp);
        xp[j] = x[j] - h;
        f(&xp, &mut rm);
        xp[j] = x[j];
        for i in 0..m {
            let d = (rp[i] - rm[i]) / (2.0 * h);
            if !d.is_finite() {
                return None;
            }
            jac[(i, j)] = d;
        }
    }
    Some(jac)
}

/// Minimizes `½‖r(x)‖²` where `residuals(x, r)` fills `r` (length `m`).
pub fn minimize<F>(residuals: F, x0: &[f64], m: usize, opts: LmOptions) -> LmOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    residuals(&x, &mut r);
    let mut cost = cost_of(&r);
    let mut damping = 1e-3;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    for iter in 0..opts.max_iterations {
        if cost == 0.0 {
            return LmOutcome { params: x, cost, iterations: iter, converged: true };
        }
        let Some(jac) = jacobian(&residuals, &x, m) else {
            break;
        };
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();

        loop {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    damping *= 10.0;
                    if damping > 1e20 {
                        return LmOutcome { params: x, cost, iterations: iter, converged: false };
                    }
                    continue;
                }
            };
            let step_norm = step.norm();
            for i in 0..n {
                trial[i] = x[i] + step[i];
            }
            residuals(&trial, &mut r_trial);
            let new_cost = cost_of(&r_trial);
            let small_step = step_norm <= opts.step_tolerance * (x_norm + opts.step_tolerance);
            if new_cost.is_finite() && new_cost < cost {
                let reduction = (cost - new_cost) / cost;
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = new_cost;
                damping = (damping / 3.0).max(1e-15);
                if small_step || reduction < opts.cost_tolerance {
                    return LmOutcome { params: x, cost, iterations: iter + 1, converged: true };
                }
                break;
            }
            if small_step {
                // No descent left at machine resolution.
                return LmOutcome { params: x, cost, iterations: iter + 1, converged: true };
            }
            damping *= 4.0;
            if damping > 1e20 {
                return LmOutcome { params: x, cost, iterations: iter + 1, converged: true };
            }
        }
    }
    LmOutcome {
        params: x,
        cost,
        iterations: opts.max_iterations,
        converged: false,
    }
}
