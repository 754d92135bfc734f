//! Min-max problem abstraction: the coupling, its regularizer, and the
//! smoothness/concavity constants consumed by the step-size theory.

use crate::error::{Error, Result};
use crate::prox::ProxSpec;
use crate::vecops::{all_finite, dist};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Block-wise Lipschitz and concavity moduli declared by the user.
///
/// `kappa_y = l_yy / mu >= 1` is enforced at construction: if the declared
/// `l_yy` would give `kappa_y < 1`, `l_yy` is inflated to `mu` and the
/// repair is recorded in `l_yy_inflated`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothnessConstants {
    pub l_xx: f64,
    pub l_xy: f64,
    pub l_yx: f64,
    pub l_yy: f64,
    pub mu: f64,
    pub rho: f64,
    pub l_yy_inflated: bool,
}

impl SmoothnessConstants {
    pub fn new(l_xx: f64, l_xy: f64, l_yx: f64, l_yy: f64, mu: f64, rho: f64) -> Result<Self> {
        let fields = [l_xx, l_xy, l_yx, l_yy, mu, rho];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConstants("non-finite constant".into()));
        }
        if l_xy <= 0.0 || l_yx <= 0.0 || l_yy <= 0.0 || mu <= 0.0 {
            return Err(Error::InvalidConstants(
                "l_xy, l_yx, l_yy, mu must be strictly positive".into(),
            ));
        }
        if l_xx < 0.0 || rho < 0.0 {
            return Err(Error::InvalidConstants(
                "l_xx, rho must be nonnegative".into(),
            ));
        }
        let (l_yy, inflated) = if l_yy < mu { (mu, true) } else { (l_yy, false) };
        Ok(Self {
            l_xx,
            l_xy,
            l_yx,
            l_yy,
            mu,
            rho,
            l_yy_inflated: inflated,
        })
    }

    /// Inner condition number `l_yy / mu`, always >= 1.
    pub fn kappa_y(&self) -> f64 {
        self.l_yy / self.mu
    }

    /// Natural scale of admissible x step sizes, `mu / (l_xy * l_yx)`.
    pub fn beta(&self) -> f64 {
        self.mu / (self.l_xy * self.l_yx)
    }

    /// Lipschitz constant of the gradient of the value function,
    /// `l_xx + l_xy * l_yx / mu`.
    pub fn l_phi(&self) -> f64 {
        self.l_xx + self.l_xy * self.l_yx / self.mu
    }
}

/// Which side carries the strong concavity modulus `mu`. The delta-recursion
/// analysis branches on it, so it is declared explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcavitySource {
    CouplingStronglyConcave,
    RegularizerStronglyConvex,
}

pub type GradFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type ValueFn = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
/// `(eta_x, anchor x, frozen y) -> prox of the coupling in x`.
pub type ProxXFn = Box<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type YStarFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Immutable problem object; all maps are safe for concurrent read-only use.
pub struct MinMaxProblem {
    pub id: String,
    pub dim_x: usize,
    pub dim_y: usize,
    pub grad_x: GradFn,
    pub grad_y: GradFn,
    /// Value of the coupling Phi(x, y); the regularizer h is kept separate.
    pub phi_value: ValueFn,
    pub h: ProxSpec,
    pub prox_x: Option<ProxXFn>,
    pub y_star_closed_form: Option<YStarFn>,
    pub constants: SmoothnessConstants,
    pub concavity_source: ConcavitySource,
    /// Known infimum of the value function, when available (used by the
    /// stationarity rate constants).
    pub phi_inf: Option<f64>,
    /// Whether `grad_x` is an exact gradient (false when the x-part of the
    /// coupling is nonsmooth and `grad_x` returns a subgradient selection).
    pub smooth_in_x: bool,
}

impl MinMaxProblem {
    pub fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x,
                got: x.len(),
            });
        }
        if y.len() != self.dim_y {
            return Err(Error::DimensionMismatch {
                expected: self.dim_y,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Objective of the inner maximization, `Phi(x, y) - h(y)`.
    pub fn inner_objective(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.phi_value)(x, y) - self.h.value(y)
    }
}

/// `(kappa_y, beta, l_phi)` after the `kappa_y >= 1` repair.
pub fn effective_constants(p: &MinMaxProblem) -> (f64, f64, f64) {
    let c = &p.constants;
    (c.kappa_y(), c.beta(), c.l_phi())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCheck {
    pub name: String,
    pub declared: f64,
    pub max_observed_ratio: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstantCheck>,
    pub trials: usize,
    pub all_ok: bool,
}

/// Empirical spot check of the four block-wise Lipschitz bounds on random
/// pairs drawn from `samples`. A falsification tool for understated
/// constants, not an estimator.
pub fn validate_problem(
    p: &MinMaxProblem,
    samples: &[(Vec<f64>, Vec<f64>)],
    trials: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if samples.is_empty() {
        return Err(Error::InvalidConstants("samples must be nonempty".into()));
    }
    for (x, y) in samples {
        p.check_dims(x, y)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = &p.constants;
    let mut ratios = [0.0_f64; 4]; // l_yx, l_yy, l_xx, l_xy
    const REL_SLACK: f64 = 1e-9;
    for _ in 0..trials {
        let (x1, y1) = &samples[rng.gen_range(0..samples.len())];
        let (x2, y2) = &samples[rng.gen_range(0..samples.len())];
        let gy11 = (p.grad_y)(x1, y1);
        let gy21 = (p.grad_y)(x2, y1);
        let gy12 = (p.grad_y)(x1, y2);
        let gx11 = (p.grad_x)(x1, y1);
        let gx21 = (p.grad_x)(x2, y1);
        let gx12 = (p.grad_x)(x1, y2);
        for g in [&gy11, &gy21, &gy12, &gx11, &gx21, &gx12] {
            if !all_finite(g) {
                return Err(Error::NonFiniteEvaluation {
                    context: "gradient during validation".into(),
                });
            }
        }
        let dx = dist(x1, x2);
        let dy = dist(y1, y2);
        if dx > 0.0 {
            ratios[0] = ratios[0].max(dist(&gy11, &gy21) / dx);
            ratios[2] = ratios[2].max(dist(&gx11, &gx21) / dx);
        }
        if dy > 0.0 {
            ratios[1] = ratios[1].max(dist(&gy11, &gy12) / dy);
            ratios[3] = ratios[3].max(dist(&gx11, &gx12) / dy);
        }
    }
    let names = ["L_yx", "L_yy", "L_xx", "L_xy"];
    let declared = [c.l_yx, c.l_yy, c.l_xx, c.l_xy];
    let checks: Vec<ConstantCheck> = names
        .iter()
        .zip(declared)
        .zip(ratios)
        .map(|((name, decl), ratio)| ConstantCheck {
            name: name.to_string(),
            declared: decl,
            max_observed_ratio: ratio,
            violated: ratio > decl * (1.0 + REL_SLACK),
        })
        .collect();
    let all_ok = checks.iter().all(|ch| !ch.violated);
    Ok(ValidationReport {
        checks,
        trials,
        all_ok,
    })
}
