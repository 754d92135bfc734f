//! Closed-form proximal operators for the regularizers used throughout:
//! the y-side regularizer h and the x-side prox of the doubly-proximal scheme.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A regularizer accessed through its value and closed-form proximal map.
///
/// `prox(tau, .)` is single-valued whenever `tau * weak_convexity < 1`;
/// `ToyPiecewise` additionally stays well defined for any `tau < 0.5`
/// (its closed formula only needs `1 - 2*tau > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProxSpec {
    Zero,
    SoftThreshold { alpha: f64 },
    FirmThresholdMcp { alpha: f64, gamma: f64 },
    BoxProjection { lo: f64, hi: f64 },
    Quadratic { c: f64 },
    ToyPiecewise,
}

impl ProxSpec {
    pub fn weak_convexity(&self) -> f64 {
        match self {
            ProxSpec::FirmThresholdMcp { gamma, .. } => 1.0 / gamma,
            ProxSpec::ToyPiecewise => 2.0,
            _ => 0.0,
        }
    }

    pub fn strong_convexity(&self) -> f64 {
        match self {
            ProxSpec::Quadratic { c } => *c,
            _ => 0.0,
        }
    }

    /// Function value, extended-real (`+inf` outside a box).
    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            ProxSpec::Zero => 0.0,
            ProxSpec::SoftThreshold { alpha } => alpha * v.iter().map(|t| t.abs()).sum::<f64>(),
            ProxSpec::FirmThresholdMcp { alpha, gamma } => v
                .iter()
                .map(|&t| {
                    let a = t.abs();
                    if a <= gamma * alpha {
                        alpha * a - t * t / (2.0 * gamma)
                    } else {
                        gamma * alpha * alpha / 2.0
                    }
                })
                .sum(),
            ProxSpec::BoxProjection { lo, hi } => {
                if v.iter().all(|&t| t >= *lo && t <= *hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxSpec::Quadratic { c } => 0.5 * c * v.iter().map(|t| t * t).sum::<f64>(),
            ProxSpec::ToyPiecewise => v.iter().map(|&t| toy_g(t)).sum(),
        }
    }

    /// Gradient where differentiable; the zero selection of the
    /// subdifferential at kinks (used only to assemble coupling gradients).
    pub fn subgradient(&self, v: &[f64]) -> Vec<f64> {
        match self {
            ProxSpec::Zero | ProxSpec::BoxProjection { .. } => vec![0.0; v.len()],
            ProxSpec::SoftThreshold { alpha } => v.iter().map(|&t| alpha * sgn(t)).collect(),
            ProxSpec::FirmThresholdMcp { alpha, gamma } => v
                .iter()
                .map(|&t| {
                    if t.abs() <= gamma * alpha {
                        alpha * sgn(t) - t / gamma
                    } else {
                        0.0
                    }
                })
                .collect(),
            ProxSpec::Quadratic { c } => v.iter().map(|&t| c * t).collect(),
            ProxSpec::ToyPiecewise => v.iter().map(|&t| toy_g_prime(t)).collect(),
        }
    }

    fn check_step(&self, tau: f64) -> Result<()> {
        if !(tau > 0.0) {
            return Err(Error::IllPosedProx { product: -1.0 });
        }
        match self {
            // formula-validity bound; tau*rho >= 1 is flagged by the solver, not here
            ProxSpec::ToyPiecewise => {
                if tau >= 0.5 {
                    return Err(Error::IllPosedProx { product: 2.0 * tau });
                }
            }
            _ => {
                let p = tau * self.weak_convexity();
                if p >= 1.0 {
                    return Err(Error::IllPosedProx { product: p });
                }
            }
        }
        Ok(())
    }
}

fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The piecewise regularizer of the one-dimensional benchmark problem.
pub fn toy_g(x: f64) -> f64 {
    if x.abs() <= 0.5 {
        0.5 - x * x
    } else {
        (x.abs() - 1.0) * (x.abs() - 1.0)
    }
}

pub fn toy_g_prime(x: f64) -> f64 {
    if x.abs() <= 0.5 {
        -2.0 * x
    } else {
        2.0 * (x.abs() - 1.0) * sgn(x)
    }
}

/// Component-wise proximal map `argmin_z value(z) + ||z - anchor||^2 / (2 tau)`.
pub fn prox_apply(spec: &ProxSpec, tau: f64, anchor: &[f64]) -> Result<Vec<f64>> {
    spec.check_step(tau)?;
    let out = match spec {
        ProxSpec::Zero => anchor.to_vec(),
        ProxSpec::SoftThreshold { alpha } => anchor
            .iter()
            .map(|&v| sgn(v) * (v.abs() - tau * alpha).max(0.0))
            .collect(),
        ProxSpec::FirmThresholdMcp { alpha, gamma } => anchor
            .iter()
            .map(|&v| {
                let a = v.abs();
                if a <= tau * alpha {
                    0.0
                } else if a <= gamma * alpha {
                    sgn(v) * (a - tau * alpha) / (1.0 - tau / gamma)
                } else {
                    v
                }
            })
            .collect(),
        ProxSpec::BoxProjection { lo, hi } => anchor.iter().map(|&v| v.clamp(*lo, *hi)).collect(),
        ProxSpec::Quadratic { c } => anchor.iter().map(|&v| v / (1.0 + tau * c)).collect(),
        ProxSpec::ToyPiecewise => anchor.iter().map(|&v| toy_prox_scalar(tau, v)).collect(),
    };
    Ok(out)
}

/// Three-branch closed formula for `prox` of the toy regularizer.
pub fn toy_prox_piecewise(tau: f64, anchor: f64) -> Result<f64> {
    if !(tau > 0.0) || tau >= 0.5 {
        return Err(Error::IllPosedProx { product: 2.0 * tau });
    }
    Ok(toy_prox_scalar(tau, anchor))
}

fn toy_prox_scalar(tau: f64, v: f64) -> f64 {
    if v.abs() <= 0.5 - tau {
        v / (1.0 - 2.0 * tau)
    } else if v >= 0.5 - tau {
        (v + 2.0 * tau) / (1.0 + 2.0 * tau)
    } else {
        (v - 2.0 * tau) / (1.0 + 2.0 * tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_prox_spot_values() {
        // fixed point of the first branch
        assert_eq!(toy_prox_piecewise(0.29, 0.0).unwrap(), 0.0);
        assert_eq!(toy_prox_piecewise(0.1, 0.0).unwrap(), 0.0);
        // second branch: (0.3 + 0.58) / 1.58
        let p = toy_prox_piecewise(0.29, 0.3).unwrap();
        assert!((p - 0.88 / 1.58).abs() < 1e-15);
        // third branch forced by odd symmetry
        let m = toy_prox_piecewise(0.29, -0.3).unwrap();
        assert!((m + p).abs() < 1e-15);
        // anchor 1 at tau=0.25: (1 + 0.5)/(1 + 0.5) = 1
        assert!((toy_prox_piecewise(0.25, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn toy_prox_rejects_large_step() {
        assert!(matches!(
            toy_prox_piecewise(0.5, 0.0),
            Err(Error::IllPosedProx { .. })
        ));
    }

    #[test]
    fn soft_threshold_shrinks() {
        let spec = ProxSpec::SoftThreshold { alpha: 0.5 };
        let out = prox_apply(&spec, 1.0, &[2.0, -0.3, 0.7]).unwrap();
        for (got, want) in out.iter().zip([1.5, 0.0, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_prox_closed_form() {
        let spec = ProxSpec::Quadratic { c: 2.0 };
        let out = prox_apply(&spec, 0.5, &[3.0]).unwrap();
        assert!((out[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn box_projection_idempotent() {
        let spec = ProxSpec::BoxProjection { lo: -1.0, hi: 1.0 };
        let once = prox_apply(&spec, 0.7, &[2.0, -3.0, 0.5]).unwrap();
        let twice = prox_apply(&spec, 0.7, &once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once, vec![1.0, -1.0, 0.5]);
    }

    #[test]
    fn mcp_prox_requires_small_step() {
        let spec = ProxSpec::FirmThresholdMcp {
            alpha: 1.0,
            gamma: 2.0,
        };
        assert!(prox_apply(&spec, 2.0, &[1.0]).is_err());
        assert!(prox_apply(&spec, 1.0, &[1.0]).is_ok());
    }

    #[test]
    fn zero_prox_is_identity() {
        let out = prox_apply(&ProxSpec::Zero, 3.0, &[1.0, -2.0]).unwrap();
        assert_eq!(out, vec![1.0, -2.0]);
    }

    #[test]
    fn toy_resolvent_identity_at_differentiable_points() {
        // anchor - prox(tau, anchor) = tau * g'(prox(tau, anchor))
        for &(tau, v) in &[(0.29_f64, 0.3_f64), (0.1, -2.0), (0.2, 0.05), (0.3, 1.7)] {
            let p = toy_prox_piecewise(tau, v).unwrap();
            assert!(
                (v - p - tau * toy_g_prime(p)).abs() < 1e-12,
                "tau={tau} v={v}"
            );
        }
    }
}
