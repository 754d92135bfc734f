//! Built-in benchmark problem instances.

use crate::problem::{ConcavitySource, MinMaxProblem, SmoothnessConstants};
use crate::prox::{toy_g, toy_g_prime, toy_prox_piecewise, ProxSpec};

/// One-dimensional benchmark `min_x max_y g(x) + x*y - 0.5 y^2` with the
/// piecewise-quadratic, 2-weakly-convex `g`. The value function has
/// stationary points at `x = +-2/3` and infimum 1/3.
pub fn toy_problem() -> MinMaxProblem {
    MinMaxProblem {
        id: "toy".into(),
        dim_x: 1,
        dim_y: 1,
        grad_x: Box::new(|x, y| vec![toy_g_prime(x[0]) + y[0]]),
        grad_y: Box::new(|x, y| vec![x[0] - y[0]]),
        phi_value: Box::new(|x, y| toy_g(x[0]) + x[0] * y[0] - 0.5 * y[0] * y[0]),
        h: ProxSpec::Zero,
        // prox_{eta Phi(., y)}(x) = prox_{eta g}(x - eta y)
        prox_x: Some(Box::new(|eta, x, y| {
            vec![toy_prox_piecewise(eta, x[0] - eta * y[0]).expect("eta < 0.5")]
        })),
        y_star_closed_form: Some(Box::new(|x| vec![x[0]])),
        constants: SmoothnessConstants::new(2.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap(),
        concavity_source: ConcavitySource::CouplingStronglyConcave,
        phi_inf: Some(1.0 / 3.0),
        smooth_in_x: true,
    }
}

/// Scalar quadratic coupling `-a x^2 + b x y - c y^2` with `a >= 0`,
/// `b, c > 0`. The value function is `(b^2/(4c) - a) x^2`; it is bounded
/// below only when `b^2/(4c) >= a`.
pub fn quadratic_problem(a: f64, b: f64, c: f64) -> MinMaxProblem {
    assert!(a >= 0.0 && b > 0.0 && c > 0.0);
    let phi_coeff = b * b / (4.0 * c) - a;
    MinMaxProblem {
        id: format!("quadratic(a={a},b={b},c={c})"),
        dim_x: 1,
        dim_y: 1,
        grad_x: Box::new(move |x, y| vec![-2.0 * a * x[0] + b * y[0]]),
        grad_y: Box::new(move |x, y| vec![b * x[0] - 2.0 * c * y[0]]),
        phi_value: Box::new(move |x, y| -a * x[0] * x[0] + b * x[0] * y[0] - c * y[0] * y[0]),
        h: ProxSpec::Zero,
        // stationarity: -2a z + b y + (z - x)/eta = 0
        prox_x: Some(Box::new(move |eta, x, y| {
            let denom = 1.0 - 2.0 * a * eta;
            assert!(denom > 0.0, "eta * rho must be < 1");
            vec![(x[0] - eta * b * y[0]) / denom]
        })),
        y_star_closed_form: Some(Box::new(move |x| vec![b * x[0] / (2.0 * c)])),
        constants: SmoothnessConstants::new(2.0 * a, b, b, 2.0 * c, 2.0 * c, 2.0 * a).unwrap(),
        concavity_source: ConcavitySource::CouplingStronglyConcave,
        phi_inf: if phi_coeff >= 0.0 { Some(0.0) } else { None },
        smooth_in_x: true,
    }
}
