//! Inner maximization oracle: `y*(x)`, the value `phi(x)` and its gradient,
//! by closed form when the problem supplies one and otherwise by regularized
//! gradient ascent run to a fixed-point tolerance.

use crate::error::{Error, Result};
use crate::problem::MinMaxProblem;
use crate::prox::prox_apply;
use crate::vecops::{all_finite, axpy, dist, norm};

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub y_star: Vec<f64>,
    pub phi: f64,
    pub grad_phi: Vec<f64>,
    pub inner_iterations: usize,
    pub inner_residual: f64,
}

/// Solves `max_y Phi(x, y) - h(y)` by iterating
/// `y <- prox_{eta h}(y + eta grad_y Phi(x, y))` with `eta = 1/L_yy`,
/// which contracts at rate `1/(1 + mu/L_yy)`. A closed form, when present,
/// short-circuits the iteration.
pub fn solve_inner(
    p: &MinMaxProblem,
    x: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OracleResult> {
    solve_inner_warm(p, x, tol, max_iter, None)
}

pub fn solve_inner_warm(
    p: &MinMaxProblem,
    x: &[f64],
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<OracleResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConstants(
            "inner tolerance must be positive".into(),
        ));
    }
    if x.len() != p.dim_x {
        return Err(Error::DimensionMismatch {
            expected: p.dim_x,
            got: x.len(),
        });
    }
    if let Some(closed) = &p.y_star_closed_form {
        let y_star = closed(x);
        return finish(p, x, y_star, 0, 0.0);
    }
    let eta = 1.0 / p.constants.l_yy;
    let mut y = warm_start
        .map(|w| w.to_vec())
        .unwrap_or_else(|| vec![0.0; p.dim_y]);
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        let gy = (p.grad_y)(x, &y);
        if !all_finite(&gy) {
            return Err(Error::NonFiniteEvaluation {
                context: format!("grad_y at inner iteration {it}"),
            });
        }
        let next = prox_apply(&p.h, eta, &axpy(&y, eta, &gy))?;
        residual = dist(&next, &y) / eta;
        y = next;
        if residual <= tol {
            return finish(p, x, y, it + 1, residual);
        }
    }
    Err(Error::MaxIterExceeded {
        tol,
        max_iter,
        residual,
    })
}

fn finish(
    p: &MinMaxProblem,
    x: &[f64],
    y_star: Vec<f64>,
    iters: usize,
    residual: f64,
) -> Result<OracleResult> {
    let phi = p.inner_objective(x, &y_star);
    let grad_phi = (p.grad_x)(x, &y_star);
    if !phi.is_finite() || !all_finite(&grad_phi) {
        return Err(Error::NonFiniteEvaluation {
            context: "phi or grad_phi at inner solution".into(),
        });
    }
    Ok(OracleResult {
        y_star,
        phi,
        grad_phi,
        inner_iterations: iters,
        inner_residual: residual,
    })
}

/// Central finite difference of `phi`, each evaluation through `solve_inner`
/// at tolerance `tol / 10`. Validation tool for the gradient formula.
pub fn grad_phi_fd(p: &MinMaxProblem, x: &[f64], step: f64, tol: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidConstants("fd step must be positive".into()));
    }
    let inner_tol = tol / 10.0;
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = solve_inner(p, &xp, inner_tol, 200_000)?.phi;
        xp[i] = x[i] - step;
        let fm = solve_inner(p, &xp, inner_tol, 200_000)?.phi;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    Ok(g)
}

/// Relative disagreement between the analytic and finite-difference
/// gradients, `||g - g_fd|| / max(1, ||g||)`.
pub fn fd_relative_error(p: &MinMaxProblem, x: &[f64], step: f64, tol: f64) -> Result<f64> {
    let analytic = solve_inner(p, x, tol, 200_000)?.grad_phi;
    let fd = grad_phi_fd(p, x, step, tol)?;
    Ok(dist(&analytic, &fd) / norm(&analytic).max(1.0))
}
