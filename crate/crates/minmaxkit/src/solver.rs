//! The three iteration schemes as pure step functions, plus the driver loop
//! that produces instrumented traces.

use crate::error::{Error, Result};
use crate::oracle::solve_inner_warm;
use crate::problem::MinMaxProblem;
use crate::prox::prox_apply;
use crate::vecops::{all_finite, axpy, norm, norm_sq, sub};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Alternating explicit gradient descent / regularized ascent.
    GdRga,
    /// Alternating implicit (proximal) descent / regularized ascent.
    PdRga,
    /// Simultaneous explicit variant: the ascent step reads the previous x.
    Ppga,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::GdRga => "gdrga",
            Scheme::PdRga => "pdrga",
            Scheme::Ppga => "ppga",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
}

/// Step sizes `(eta_x, eta_y)` with the normalized y step `tau = eta_y * L_yy`,
/// which the theory requires in `(0, 1]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepSizeConfig {
    pub eta_x: f64,
    pub eta_y: f64,
    pub tau: f64,
}

impl StepSizeConfig {
    pub fn new(eta_x: f64, eta_y: f64, l_yy: f64) -> Result<Self> {
        let tau = eta_y * l_yy;
        if !(eta_x > 0.0) || !(eta_y > 0.0) {
            return Err(Error::OutOfRangeStepSize(
                "step sizes must be positive".into(),
            ));
        }
        if !(tau > 0.0 && tau <= 1.0 + 1e-12) {
            return Err(Error::OutOfRangeStepSize(format!(
                "tau = eta_y * L_yy = {tau} must lie in (0, 1]"
            )));
        }
        Ok(Self { eta_x, eta_y, tau })
    }

    /// Single-valuedness condition for the x-proximal scheme. Returns a
    /// warning string instead of an error when `allow_override` is set.
    pub fn check_prox_wellposed(&self, rho: f64, allow_override: bool) -> Result<Option<String>> {
        if self.eta_x * rho < 1.0 {
            return Ok(None);
        }
        let msg = format!(
            "eta_x * rho = {} >= 1: the x-proximal step may be set-valued",
            self.eta_x * rho
        );
        if allow_override {
            Ok(Some(msg))
        } else {
            Err(Error::OutOfRangeStepSize(msg))
        }
    }
}

/// Shared ascent step: `prox_{eta_y h}(y + eta_y grad_y Phi(x_arg, y))`.
/// The three schemes differ only in which x it reads.
fn y_update(p: &MinMaxProblem, x_arg: &[f64], y: &[f64], eta_y: f64) -> Result<Vec<f64>> {
    let gy = (p.grad_y)(x_arg, y);
    if !all_finite(&gy) {
        return Err(Error::NonFiniteEvaluation {
            context: "grad_y in ascent step".into(),
        });
    }
    prox_apply(&p.h, eta_y, &axpy(y, eta_y, &gy))
}

pub fn gd_rga_step(
    p: &MinMaxProblem,
    s: &SolverState,
    cfg: &StepSizeConfig,
) -> Result<SolverState> {
    let gx = (p.grad_x)(&s.x, &s.y);
    if !all_finite(&gx) {
        return Err(Error::NonFiniteEvaluation {
            context: "grad_x in descent step".into(),
        });
    }
    let x = axpy(&s.x, -cfg.eta_x, &gx);
    let y = y_update(p, &x, &s.y, cfg.eta_y)?;
    Ok(SolverState { x, y, k: s.k + 1 })
}

pub fn pd_rga_step(
    p: &MinMaxProblem,
    s: &SolverState,
    cfg: &StepSizeConfig,
) -> Result<SolverState> {
    let prox_x = p.prox_x.as_ref().ok_or(Error::MissingProxOracle)?;
    let x = prox_x(cfg.eta_x, &s.x, &s.y);
    if !all_finite(&x) {
        return Err(Error::NonFiniteEvaluation {
            context: "prox_x in implicit descent step".into(),
        });
    }
    #[cfg(debug_assertions)]
    if p.smooth_in_x {
        // first-order optimality of the proximal step
        let gx = (p.grad_x)(&x, &s.y);
        let res = norm(&axpy(&sub(&x, &s.x), cfg.eta_x, &gx));
        debug_assert!(
            res <= 1e-8 * (1.0 + norm(&s.x)),
            "prox_x optimality residual {res}"
        );
    }
    let y = y_update(p, &x, &s.y, cfg.eta_y)?;
    Ok(SolverState { x, y, k: s.k + 1 })
}

pub fn ppga_step(p: &MinMaxProblem, s: &SolverState, cfg: &StepSizeConfig) -> Result<SolverState> {
    let gx = (p.grad_x)(&s.x, &s.y);
    if !all_finite(&gx) {
        return Err(Error::NonFiniteEvaluation {
            context: "grad_x in simultaneous step".into(),
        });
    }
    let x = axpy(&s.x, -cfg.eta_x, &gx);
    let y = y_update(p, &s.x, &s.y, cfg.eta_y)?;
    Ok(SolverState { x, y, k: s.k + 1 })
}

pub fn step(
    p: &MinMaxProblem,
    scheme: Scheme,
    s: &SolverState,
    cfg: &StepSizeConfig,
) -> Result<SolverState> {
    match scheme {
        Scheme::GdRga => gd_rga_step(p, s, cfg),
        Scheme::PdRga => pd_rga_step(p, s, cfg),
        Scheme::Ppga => ppga_step(p, s, cfg),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iter: usize,
    /// Optional threshold on the recorded gradient norm. Requires
    /// diagnostics, since the solver itself never needs the inner maximizer.
    pub grad_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOpts {
    /// Record y*, phi, grad norm and delta per iterate.
    pub diagnostics: bool,
    pub inner_tol: f64,
    pub warm_start: bool,
}

impl Default for TraceOpts {
    fn default() -> Self {
        Self {
            diagnostics: true,
            inner_tol: 1e-10,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_star: Option<Vec<f64>>,
    pub phi: Option<f64>,
    pub grad_phi_norm: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub problem_id: String,
    pub scheme: Scheme,
    pub cfg: StepSizeConfig,
    pub inner_tol: f64,
    pub solver_grad_evals: usize,
    pub diagnostic_evals: usize,
    #[serde(skip)]
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl IterateTrace {
    pub fn terminal_x(&self) -> &[f64] {
        &self.records.last().expect("nonempty trace").x
    }

    pub fn grad_norms(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                r.grad_phi_norm
                    .ok_or_else(|| Error::TraceIncomplete("missing grad_phi_norm".into()))
            })
            .collect()
    }
}

/// Runs `scheme` from `init` under `stop`, recording per-iterate
/// diagnostics when requested. Deterministic for identical inputs.
pub fn run_solver(
    p: &MinMaxProblem,
    scheme: Scheme,
    cfg: &StepSizeConfig,
    init: (Vec<f64>, Vec<f64>),
    stop: &StopRule,
    opts: &TraceOpts,
) -> Result<IterateTrace> {
    p.check_dims(&init.0, &init.1)?;
    let t0 = Instant::now();
    let mut state = SolverState {
        x: init.0,
        y: init.1,
        k: 0,
    };
    let mut records = Vec::with_capacity(stop.max_iter + 1);
    let mut diag_evals = 0usize;
    let mut solver_evals = 0usize;
    let mut last_y_star: Option<Vec<f64>> = None;

    let mut push_record = |state: &SolverState,
                           prev: Option<(&SolverState, &Vec<f64>)>,
                           last_y_star: &mut Option<Vec<f64>>,
                           diag_evals: &mut usize|
     -> Result<Option<f64>> {
        if !opts.diagnostics {
            records.push(TraceRecord {
                k: state.k,
                x: state.x.clone(),
                y: state.y.clone(),
                y_star: None,
                phi: None,
                grad_phi_norm: None,
                delta: None,
            });
            return Ok(None);
        }
        let warm = if opts.warm_start {
            last_y_star.as_deref()
        } else {
            None
        };
        let r = solve_inner_warm(p, &state.x, opts.inner_tol, 500_000, warm)?;
        *diag_evals += 1;
        // For the implicit scheme the analysis evaluates the gradient through
        // the prox optimality identity; the subgradient parts of grad_x cancel
        // in the cross difference, so this stays valid for nonsmooth couplings.
        let grad = match (scheme, prev) {
            (Scheme::PdRga, Some((prev_state, _))) => {
                let implicit = sub(&prev_state.x, &state.x)
                    .iter()
                    .map(|d| d / cfg.eta_x)
                    .collect::<Vec<_>>();
                let g_star = (p.grad_x)(&state.x, &r.y_star);
                let g_prev = (p.grad_x)(&state.x, &prev_state.y);
                implicit
                    .iter()
                    .zip(g_star.iter().zip(&g_prev))
                    .map(|(i, (a, b))| i + a - b)
                    .collect()
            }
            _ => r.grad_phi.clone(),
        };
        let delta = norm_sq(&sub(&r.y_star, &state.y));
        let gn = norm(&grad);
        records.push(TraceRecord {
            k: state.k,
            x: state.x.clone(),
            y: state.y.clone(),
            y_star: Some(r.y_star.clone()),
            phi: Some(r.phi),
            grad_phi_norm: Some(gn),
            delta: Some(delta),
        });
        *last_y_star = Some(r.y_star);
        Ok(Some(gn))
    };

    let mut grad_norm = push_record(&state, None, &mut last_y_star, &mut diag_evals)?;
    while state.k < stop.max_iter {
        if let (Some(tol), Some(gn)) = (stop.grad_tol, grad_norm) {
            if gn < tol {
                break;
            }
        }
        let prev = state.clone();
        state = step(p, scheme, &state, cfg)?;
        solver_evals += 2; // one x-side and one y-side evaluation per step
        let prev_y = prev.y.clone();
        grad_norm = push_record(
            &state,
            Some((&prev, &prev_y)),
            &mut last_y_star,
            &mut diag_evals,
        )?;
    }

    Ok(IterateTrace {
        meta: TraceMeta {
            problem_id: p.id.clone(),
            scheme,
            cfg: *cfg,
            inner_tol: if opts.diagnostics {
                opts.inner_tol
            } else {
                0.0
            },
            solver_grad_evals: solver_evals,
            diagnostic_evals: diag_evals,
            wall_secs: t0.elapsed().as_secs_f64(),
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ConcavitySource, MinMaxProblem, SmoothnessConstants};
    use crate::problems::toy_problem;
    use crate::prox::ProxSpec;

    fn bilinear() -> MinMaxProblem {
        MinMaxProblem {
            id: "bilinear".into(),
            dim_x: 1,
            dim_y: 1,
            grad_x: Box::new(|_x, y| vec![y[0]]),
            grad_y: Box::new(|x, _y| vec![x[0]]),
            phi_value: Box::new(|x, y| x[0] * y[0]),
            h: ProxSpec::Zero,
            prox_x: None,
            y_star_closed_form: None,
            constants: SmoothnessConstants::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap(),
            concavity_source: ConcavitySource::CouplingStronglyConcave,
            phi_inf: None,
            smooth_in_x: true,
        }
    }

    fn cfg(eta_x: f64, eta_y: f64) -> StepSizeConfig {
        StepSizeConfig::new(eta_x, eta_y, 1.0).unwrap()
    }

    #[test]
    fn gd_rga_hand_step() {
        let p = toy_problem();
        let s = SolverState {
            x: vec![-5.0],
            y: vec![5.0],
            k: 0,
        };
        let next = gd_rga_step(&p, &s, &cfg(0.29, 1.0)).unwrap();
        // grad_x(-5, 5) = g'(-5) + 5 = -8 + 5 = -3; x1 = -5 + 0.87
        assert!((next.x[0] + 4.13).abs() < 1e-12);
        // tau = 1, h = 0: y1 = y0 + (x1 - y0) = x1
        assert!((next.y[0] + 4.13).abs() < 1e-12);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn gd_rga_fixed_point() {
        let p = toy_problem();
        let x = -2.0 / 3.0;
        let s = SolverState {
            x: vec![x],
            y: vec![x],
            k: 3,
        };
        let next = gd_rga_step(&p, &s, &cfg(0.29, 1.0)).unwrap();
        assert!((next.x[0] - x).abs() < 1e-14);
        assert!((next.y[0] - x).abs() < 1e-14);
    }

    #[test]
    fn alternation_vs_simultaneous_on_bilinear() {
        let p = bilinear();
        let c = cfg(0.1, 0.1);
        // from (1, 0): both give x1 = 1, y1 = eta (grad_y is x-only)
        let s = SolverState {
            x: vec![1.0],
            y: vec![0.0],
            k: 0,
        };
        let a = gd_rga_step(&p, &s, &c).unwrap();
        assert_eq!((a.x[0], a.y[0]), (1.0, 0.1));
        let b = ppga_step(&p, &s, &c).unwrap();
        assert_eq!((b.x[0], b.y[0]), (1.0, 0.1));
        // from (0, 1): GD-RGA y1 = 1 + eta * x1 = 1 - eta^2, PPGA y1 = 1
        let s = SolverState {
            x: vec![0.0],
            y: vec![1.0],
            k: 0,
        };
        let a = gd_rga_step(&p, &s, &c).unwrap();
        assert!((a.y[0] - (1.0 - 0.01)).abs() < 1e-15);
        let b = ppga_step(&p, &s, &c).unwrap();
        assert_eq!(b.y[0], 1.0);
    }

    #[test]
    fn pd_rga_origin_fixed_point() {
        let p = toy_problem();
        let s = SolverState {
            x: vec![0.0],
            y: vec![0.0],
            k: 0,
        };
        let next = pd_rga_step(&p, &s, &cfg(0.29, 1.0)).unwrap();
        assert_eq!(next.x[0], 0.0);
        assert_eq!(next.y[0], 0.0);
    }

    #[test]
    fn pd_rga_implicit_optimality_residual() {
        let p = toy_problem();
        let c = cfg(0.2, 1.0);
        let s = SolverState {
            x: vec![-1.0],
            y: vec![2.0],
            k: 0,
        };
        let next = pd_rga_step(&p, &s, &c).unwrap();
        let gx = (p.grad_x)(&next.x, &s.y);
        let res = (next.x[0] - s.x[0] + c.eta_x * gx[0]).abs();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn pd_rga_requires_prox_oracle() {
        let p = bilinear();
        let s = SolverState {
            x: vec![0.0],
            y: vec![0.0],
            k: 0,
        };
        assert!(matches!(
            pd_rga_step(&p, &s, &cfg(0.1, 0.1)),
            Err(Error::MissingProxOracle)
        ));
    }

    #[test]
    fn frozen_x_y_updates_contract() {
        // repeated y-updates at fixed x contract to y*(x) at <= 1/(1 + mu*eta_y)
        let p = toy_problem();
        let eta_y = 0.5;
        let x = vec![1.3];
        let y_star = 1.3_f64;
        let mut y = vec![8.0];
        let factor = 1.0 / (1.0 + p.constants.mu * eta_y);
        for _ in 0..30 {
            let prev_gap = (y[0] - y_star).abs();
            y = y_update(&p, &x, &y, eta_y).unwrap();
            assert!((y[0] - y_star).abs() <= factor * prev_gap + 1e-15);
        }
    }

    #[test]
    fn run_solver_zero_budget() {
        let p = toy_problem();
        let tr = run_solver(
            &p,
            Scheme::GdRga,
            &cfg(0.29, 1.0),
            (vec![-5.0], vec![5.0]),
            &StopRule {
                max_iter: 0,
                grad_tol: None,
            },
            &TraceOpts::default(),
        )
        .unwrap();
        assert_eq!(tr.records.len(), 1);
    }

    #[test]
    fn run_solver_toy_converges() {
        let p = toy_problem();
        for (scheme, eta_x) in [
            (Scheme::GdRga, 0.29),
            (Scheme::PdRga, 0.29),
            (Scheme::Ppga, 0.06),
        ] {
            let tr = run_solver(
                &p,
                scheme,
                &cfg(eta_x, 1.0),
                (vec![-5.0], vec![5.0]),
                &StopRule {
                    max_iter: 10_000,
                    grad_tol: Some(1e-12),
                },
                &TraceOpts::default(),
            )
            .unwrap();
            let x = tr.terminal_x()[0];
            assert!((x + 2.0 / 3.0).abs() < 1e-6, "{scheme:?} ended at {x}");
        }
    }

    #[test]
    fn traces_are_deterministic() {
        let p = toy_problem();
        let mk = || {
            run_solver(
                &p,
                Scheme::GdRga,
                &cfg(0.29, 1.0),
                (vec![-5.0], vec![5.0]),
                &StopRule {
                    max_iter: 50,
                    grad_tol: None,
                },
                &TraceOpts::default(),
            )
            .unwrap()
        };
        let (a, b) = (mk(), mk());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.y, rb.y);
            assert_eq!(ra.phi, rb.phi);
        }
    }
}
