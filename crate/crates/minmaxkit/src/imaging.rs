//! Dualized image-restoration min-max instance: the quadratic data term
//! `1/(2 sigma^2) ||Ax - b||^2` is rewritten through its concave conjugate so
//! the coupling is bilinear and the dual block is strongly concave.

use crate::error::{Error, Result};
use crate::linops::{power_iteration_norm, LinearOperator};
use crate::problem::{ConcavitySource, MinMaxProblem, SmoothnessConstants};
use crate::prox::{prox_apply, ProxSpec};
use crate::vecops::{axpy, dot, norm_sq, scale, sub};
use std::sync::Arc;

/// `min_x max_y <Ax - b, y> - (sigma^2 / 2 lambda) ||y||^2 + g(x)`.
#[derive(Debug, Clone)]
pub struct ImagingProblem {
    pub a: Arc<LinearOperator>,
    pub b: Vec<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub g_spec: ProxSpec,
    pub norm_a: f64,
}

/// Largest regularization weight for which the prescribed dual step stays
/// admissible: `sigma^2 / ((2 + sqrt(2)) ||A||_S)`.
pub fn lambda_cap(sigma: f64, norm_a: f64) -> f64 {
    sigma * sigma / ((2.0 + 2.0_f64.sqrt()) * norm_a)
}

impl ImagingProblem {
    /// Validates dimensions and, when `paper_faithful`, the lambda cap. The
    /// spectral norm comes from the operator hint or a seeded power iteration.
    pub fn new(
        a: LinearOperator,
        b: Vec<f64>,
        sigma: f64,
        lambda: f64,
        g_spec: ProxSpec,
        paper_faithful: bool,
        seed: u64,
    ) -> Result<Self> {
        if b.len() != a.dims.0 {
            return Err(Error::DimensionMismatch {
                expected: a.dims.0,
                got: b.len(),
            });
        }
        if !(sigma > 0.0) || !(lambda > 0.0) {
            return Err(Error::InvalidConstants(
                "sigma and lambda must be positive".into(),
            ));
        }
        let norm_a = match a.spectral_norm_hint {
            Some(h) => h,
            None => power_iteration_norm(&a, 1e-10, 100_000, seed)?,
        };
        if norm_a <= 0.0 {
            return Err(Error::InvalidConstants("operator has zero norm".into()));
        }
        if paper_faithful {
            let cap = lambda_cap(sigma, norm_a);
            if lambda > cap {
                return Err(Error::ConstraintViolated(format!(
                    "lambda = {lambda} exceeds cap {cap} = sigma^2/((2+sqrt(2))||A||)"
                )));
            }
        }
        Ok(ImagingProblem {
            a: Arc::new(a),
            b,
            sigma,
            lambda,
            g_spec,
            norm_a,
        })
    }

    /// `mu = L_yy = sigma^2 / lambda`, so `kappa_y = 1`.
    pub fn dual_curvature(&self) -> f64 {
        self.sigma * self.sigma / self.lambda
    }

    /// `eta_y` giving `tau = 1`: `lambda / sigma^2`.
    pub fn eta_y_unit_tau(&self) -> f64 {
        self.lambda / (self.sigma * self.sigma)
    }

    /// The primal objective the dualization encodes:
    /// `lambda/(2 sigma^2) ||Ax - b||^2 + g(x)`.
    pub fn primal_energy(&self, x: &[f64]) -> f64 {
        let r = sub(&self.a.apply(x), &self.b);
        self.lambda / (2.0 * self.sigma * self.sigma) * norm_sq(&r) + self.g_spec.value(x)
    }
}

/// Assembles the `MinMaxProblem` with the closed-form inner solution
/// `y*(x) = (lambda/sigma^2)(Ax - b)` and the primal-dual x-prox
/// `prox_{eta g}(x - eta A^T y)`.
pub fn build_imaging_minmax(ip: &ImagingProblem) -> Result<MinMaxProblem> {
    let mu = ip.dual_curvature();
    let rho = ip.g_spec.weak_convexity();
    let constants = SmoothnessConstants::new(0.0, ip.norm_a, ip.norm_a, mu, mu, rho)?;
    let (dim_y, dim_x) = ip.a.dims;
    let smooth_in_x = matches!(ip.g_spec, ProxSpec::Zero | ProxSpec::Quadratic { .. });

    let a1 = Arc::clone(&ip.a);
    let g1 = ip.g_spec.clone();
    let grad_x =
        Box::new(move |x: &[f64], y: &[f64]| axpy(&a1.apply_adjoint(y), 1.0, &g1.subgradient(x)));

    let a2 = Arc::clone(&ip.a);
    let b2 = ip.b.clone();
    let grad_y = Box::new(move |x: &[f64], y: &[f64]| {
        let mut r = sub(&a2.apply(x), &b2);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= mu * yi;
        }
        r
    });

    let a3 = Arc::clone(&ip.a);
    let b3 = ip.b.clone();
    let g3 = ip.g_spec.clone();
    let phi_value = Box::new(move |x: &[f64], y: &[f64]| {
        let r = sub(&a3.apply(x), &b3);
        dot(&r, y) - 0.5 * mu * norm_sq(y) + g3.value(x)
    });

    let a4 = Arc::clone(&ip.a);
    let g4 = ip.g_spec.clone();
    let prox_x = Box::new(move |eta: f64, x: &[f64], y: &[f64]| {
        let anchor = axpy(x, -eta, &a4.apply_adjoint(y));
        prox_apply(&g4, eta, &anchor).expect("eta within the prox step range")
    });

    let a5 = Arc::clone(&ip.a);
    let b5 = ip.b.clone();
    let y_scale = ip.lambda / (ip.sigma * ip.sigma);
    let y_star = Box::new(move |x: &[f64]| scale(&sub(&a5.apply(x), &b5), y_scale));

    Ok(MinMaxProblem {
        id: "imaging".into(),
        dim_x,
        dim_y,
        grad_x,
        grad_y,
        phi_value,
        h: ProxSpec::Zero,
        prox_x: Some(prox_x),
        y_star_closed_form: Some(y_star),
        constants,
        concavity_source: ConcavitySource::RegularizerStronglyConvex,
        phi_inf: Some(0.0),
        smooth_in_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_inner;

    fn identity_instance(lambda: f64, g: ProxSpec) -> ImagingProblem {
        ImagingProblem::new(
            LinearOperator::identity(4),
            vec![0.0; 4],
            0.03,
            lambda,
            g,
            false,
            0,
        )
        .unwrap()
    }

    #[test]
    fn lambda_cap_values() {
        // sigma = 0.03, ||A|| = 1: cap = 0.0009/(2+sqrt(2))
        let cap = lambda_cap(0.03, 1.0);
        assert!((cap - 0.0009 / (2.0 + 2.0_f64.sqrt())).abs() < 1e-18);
        assert!((cap - 0.00026360389693210725).abs() < 1e-15);
        assert!(0.00026 < cap);
        // ||A|| = 0.24: cap ~ 0.0010983, above 0.00109
        let cap = lambda_cap(0.03, 0.24);
        assert!((cap - 0.0010983495705504469).abs() < 1e-15);
        assert!(0.00109 < cap);
    }

    #[test]
    fn paper_faithful_mode_enforces_cap() {
        let err = ImagingProblem::new(
            LinearOperator::identity(4),
            vec![0.0; 4],
            0.03,
            0.0003,
            ProxSpec::Zero,
            true,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConstraintViolated(_)));
        assert!(ImagingProblem::new(
            LinearOperator::identity(4),
            vec![0.0; 4],
            0.03,
            0.00026,
            ProxSpec::Zero,
            true,
            0,
        )
        .is_ok());
    }

    #[test]
    fn derived_constants() {
        let ip = identity_instance(0.00026, ProxSpec::Zero);
        let p = build_imaging_minmax(&ip).unwrap();
        let mu = 0.0009 / 0.00026;
        assert!((p.constants.mu - mu).abs() < 1e-12);
        assert_eq!(p.constants.l_yy, p.constants.mu);
        assert_eq!(p.constants.kappa_y(), 1.0);
        assert_eq!((p.constants.l_xy, p.constants.l_yx), (1.0, 1.0));
        assert!((ip.eta_y_unit_tau() * p.constants.l_yy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_zero_b_closed_form_phi() {
        // y*(x) = (lambda/sigma^2) x, phi(x) = lambda/(2 sigma^2) ||x||^2
        let ip = identity_instance(0.0003, ProxSpec::Zero);
        let p = build_imaging_minmax(&ip).unwrap();
        let scale = ip.lambda / (ip.sigma * ip.sigma);
        let x = vec![0.2, -0.4, 0.0, 1.0];
        let r = solve_inner(&p, &x, 1e-12, 10).unwrap();
        for (yi, xi) in r.y_star.iter().zip(&x) {
            assert!((yi - scale * xi).abs() < 1e-12);
        }
        assert!((r.phi - 0.5 * scale * norm_sq(&x)).abs() < 1e-10);
        for (gi, xi) in r.grad_phi.iter().zip(&x) {
            assert!((gi - scale * xi).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_matches_primal_energy() {
        let a = crate::linops::make_blur_operator(crate::linops::Kernel::gaussian(3, 0.8), (4, 4))
            .unwrap();
        let b: Vec<f64> = (0..16).map(|i| 0.05 * i as f64).collect();
        let ip = ImagingProblem::new(
            a,
            b,
            0.03,
            0.0002,
            ProxSpec::SoftThreshold { alpha: 0.01 },
            true,
            3,
        )
        .unwrap();
        let p = build_imaging_minmax(&ip).unwrap();
        let x: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64) * 0.1).collect();
        let r = solve_inner(&p, &x, 1e-12, 10).unwrap();
        assert!((r.phi - ip.primal_energy(&x)).abs() < 1e-10);
    }

    #[test]
    fn y_update_one_step_at_unit_tau() {
        // with eta_y = lambda/sigma^2 the frozen-x dual update lands on y*(x)
        let ip = identity_instance(0.0003, ProxSpec::Zero);
        let p = build_imaging_minmax(&ip).unwrap();
        let x = vec![0.5, -0.1, 0.3, 0.0];
        let y0 = vec![1.0, 2.0, -3.0, 0.5];
        let eta_y = ip.eta_y_unit_tau();
        let gy = (p.grad_y)(&x, &y0);
        let y1 = axpy(&y0, eta_y, &gy);
        let ys = (p.y_star_closed_form.as_ref().unwrap())(&x);
        for (a, b) in y1.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mcp_regularizer_sets_rho() {
        let ip = identity_instance(
            0.0003,
            ProxSpec::FirmThresholdMcp {
                alpha: 0.1,
                gamma: 4.0,
            },
        );
        let p = build_imaging_minmax(&ip).unwrap();
        assert_eq!(p.constants.rho, 0.25);
        assert!(!p.smooth_in_x);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(matches!(
            ImagingProblem::new(
                LinearOperator::identity(4),
                vec![0.0; 3],
                0.03,
                0.0002,
                ProxSpec::Zero,
                false,
                0,
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
