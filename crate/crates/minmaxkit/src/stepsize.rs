//! Admissible step-size formulas, contraction factors, and the comparison
//! tables against prior bounds. All bounds are open-interval suprema; the
//! caller must stay strictly below them.

use crate::error::{Error, Result};
use crate::problem::SmoothnessConstants;
use serde::Serialize;

/// Supremum of admissible `eta_x` for the explicit scheme,
/// `tau * beta / (2 kappa_y)`.
pub fn bounds_gdrga(c: &SmoothnessConstants, tau: f64) -> f64 {
    tau * c.beta() / (2.0 * c.kappa_y())
}

/// Supremum of admissible `eta_x` for the implicit scheme,
/// `min(tau * beta / (sqrt(2)(sqrt(2) kappa_y + tau)), 1/rho)`.
pub fn bounds_pdrga(c: &SmoothnessConstants, tau: f64) -> f64 {
    let kappa = c.kappa_y();
    let concavity_side = tau * c.beta() / (2.0_f64.sqrt() * (2.0_f64.sqrt() * kappa + tau));
    if c.rho > 0.0 {
        concavity_side.min(1.0 / c.rho)
    } else {
        concavity_side
    }
}

/// Contraction factor of the delta recursion for the explicit scheme,
/// `1 - tau/(2 kappa_y) + 2 kappa_y eta_x^2 / (tau beta^2)`.
pub fn gamma_gdrga(c: &SmoothnessConstants, tau: f64, eta_x: f64) -> f64 {
    let kappa = c.kappa_y();
    let beta = c.beta();
    1.0 - tau / (2.0 * kappa) + 2.0 * kappa * eta_x * eta_x / (tau * beta * beta)
}

/// Same factor for the implicit scheme at the maximizing
/// `theta = tau / (sqrt(2) kappa_y)`:
/// `1 - tau/(2 kappa_y) + sqrt(2)(sqrt(2) kappa_y + tau) eta_x^2 /
///  (beta^2 tau - 2(sqrt(2) kappa_y + tau) eta_x^2)`.
pub fn gamma_pdrga(c: &SmoothnessConstants, tau: f64, eta_x: f64) -> Result<f64> {
    let kappa = c.kappa_y();
    let beta = c.beta();
    let s = 2.0_f64.sqrt() * kappa + tau;
    let denom = beta * beta * tau - 2.0 * s * eta_x * eta_x;
    if denom <= 0.0 {
        return Err(Error::DenominatorNonpositive(format!(
            "beta^2 tau - 2(sqrt(2) kappa_y + tau) eta_x^2 = {denom}"
        )));
    }
    Ok(1.0 - tau / (2.0 * kappa) + 2.0_f64.sqrt() * s * eta_x * eta_x / denom)
}

/// The two distinct `theta` values the analysis uses under one letter.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaPair {
    /// `tau / (sqrt(2) kappa_y)`: maximizes the implicit scheme's step bound.
    pub pdrga_theta: f64,
    /// `(2 kappa_y - tau)(kappa_y + tau)^2 / (2 kappa_y^3) - 1`: the Young
    /// weight in the general delta recursion.
    pub delta_lemma_theta: f64,
}

pub fn theta_star(tau: f64, kappa_y: f64) -> ThetaPair {
    assert!(tau > 0.0 && tau <= 1.0 && kappa_y >= 1.0);
    ThetaPair {
        pdrga_theta: tau / (2.0_f64.sqrt() * kappa_y),
        delta_lemma_theta: (2.0 * kappa_y - tau) * (kappa_y + tau) * (kappa_y + tau)
            / (2.0 * kappa_y * kappa_y * kappa_y)
            - 1.0,
    }
}

/// `eta_x / eta_y` ratios admissible under the jointly Lipschitz setting:
/// two prior bounds and ours, `(1/(16(k+1)^2), 1/(3(k+1)^2), 1/(2 k^2))`.
pub fn table_jointly_lipschitz(kappa_y: f64) -> (f64, f64, f64) {
    assert!(kappa_y >= 1.0);
    let kp1 = kappa_y + 1.0;
    let row = (
        1.0 / (16.0 * kp1 * kp1),
        1.0 / (3.0 * kp1 * kp1),
        1.0 / (2.0 * kappa_y * kappa_y),
    );
    debug_assert!(row.0 < row.1 && row.1 < row.2);
    row
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockwiseComparison {
    pub prior: f64,
    pub ours: f64,
    /// `Some(true)` when ours >= prior; only asserted when `L_xy == L_yx`.
    pub dominance: Option<bool>,
}

/// Block-wise Lipschitz comparison at `tau = 1` (i.e. `eta_y = 1/L_yy`):
/// prior `mu / (mu(L_xy^2 + L_phi) + 2 kappa_y(2 kappa_y + 1) L_yx^2)`
/// versus ours `beta / (2 kappa_y)`.
pub fn table_blockwise(c: &SmoothnessConstants) -> BlockwiseComparison {
    let kappa = c.kappa_y();
    let prior = c.mu
        / (c.mu * (c.l_xy * c.l_xy + c.l_phi())
            + 2.0 * kappa * (2.0 * kappa + 1.0) * c.l_yx * c.l_yx);
    let ours = bounds_gdrga(c, 1.0);
    let dominance = if c.l_xy == c.l_yx {
        Some(ours >= prior)
    } else {
        None
    };
    BlockwiseComparison {
        prior,
        ours,
        dominance,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepSizeBounds {
    pub eta_y_max: f64,
    pub eta_x_max_gdrga: f64,
    pub eta_x_max_pdrga: f64,
    pub gamma_gdrga: Option<f64>,
    pub gamma_pdrga: Option<f64>,
    pub theta_star_pdrga: f64,
}

/// All derived bounds at once; the gamma slots are populated only when
/// `eta_x` is in range for the corresponding scheme.
pub fn bounds(c: &SmoothnessConstants, tau: f64, eta_x: f64) -> StepSizeBounds {
    let g1 = gamma_gdrga(c, tau, eta_x);
    StepSizeBounds {
        eta_y_max: 1.0 / c.l_yy,
        eta_x_max_gdrga: bounds_gdrga(c, tau),
        eta_x_max_pdrga: bounds_pdrga(c, tau),
        gamma_gdrga: if g1.abs() < 1.0 { Some(g1) } else { None },
        gamma_pdrga: gamma_pdrga(c, tau, eta_x).ok().filter(|g| g.abs() < 1.0),
        theta_star_pdrga: theta_star(tau, c.kappa_y()).pdrga_theta,
    }
}
