//! Matrix-free linear operators for the imaging experiments: circular
//! convolution, s-fold downsampling of a blurred image, and a seeded power
//! iteration for the spectral norm.

use crate::error::{Error, Result};
use crate::vecops::{dot, norm, scale};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A linear map `A: R^n -> R^d` given by its forward and adjoint actions.
#[derive(Clone)]
pub struct LinearOperator {
    forward: MapFn,
    adjoint: MapFn,
    /// (d, n) = (output dim, input dim).
    pub dims: (usize, usize),
    pub spectral_norm_hint: Option<f64>,
}

impl LinearOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dims.1, "operator input dimension");
        (self.forward)(x)
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dims.0, "operator output dimension");
        (self.adjoint)(y)
    }

    pub fn identity(n: usize) -> Self {
        LinearOperator {
            forward: Arc::new(|x: &[f64]| x.to_vec()),
            adjoint: Arc::new(|y: &[f64]| y.to_vec()),
            dims: (n, n),
            spectral_norm_hint: Some(1.0),
        }
    }

    pub fn diagonal(entries: Vec<f64>) -> Self {
        let n = entries.len();
        let hint = entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let e1 = entries.clone();
        let e2 = entries;
        LinearOperator {
            forward: Arc::new(move |x: &[f64]| x.iter().zip(&e1).map(|(a, b)| a * b).collect()),
            adjoint: Arc::new(move |y: &[f64]| y.iter().zip(&e2).map(|(a, b)| a * b).collect()),
            dims: (n, n),
            spectral_norm_hint: Some(hint),
        }
    }

    /// Composition `self . inner` (first `inner`, then `self`).
    pub fn compose(self, inner: LinearOperator) -> Self {
        assert_eq!(self.dims.1, inner.dims.0, "composition dimension");
        let dims = (self.dims.0, inner.dims.1);
        let f_out = self.forward;
        let f_in = inner.forward;
        let a_out = self.adjoint;
        let a_in = inner.adjoint;
        LinearOperator {
            forward: Arc::new(move |x: &[f64]| f_out(&f_in(x))),
            adjoint: Arc::new(move |y: &[f64]| a_in(&a_out(y))),
            dims,
            spectral_norm_hint: None,
        }
    }

    /// Max relative defect of `<Ax, y> = <x, A^T y>` over seeded random pairs.
    pub fn adjoint_defect(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, n) = self.dims;
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = dot(&self.apply(&x), &y);
            let rhs = dot(&x, &self.apply_adjoint(&y));
            let defect = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.max(defect);
        }
        worst
    }

    /// Materializes the dense matrix column by column (tests only; O(n) applies).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let (d, n) = self.dims;
        let mut cols = vec![vec![0.0; d]; n];
        let mut e = vec![0.0; n];
        for (j, col) in cols.iter_mut().enumerate() {
            e[j] = 1.0;
            *col = self.apply(&e);
            e[j] = 0.0;
        }
        let mut rows = vec![vec![0.0; n]; d];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                rows[i][j] = *v;
            }
        }
        rows
    }
}

impl std::fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearOperator")
            .field("dims", &self.dims)
            .field("spectral_norm_hint", &self.spectral_norm_hint)
            .finish()
    }
}

/// A dense 2D convolution kernel with explicit center.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub weights: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// (row, col) of the kernel origin.
    pub center: (usize, usize),
}

impl Kernel {
    pub fn new(weights: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if weights.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "kernel {rows}x{cols} with {} weights",
                weights.len()
            )));
        }
        Ok(Kernel {
            weights,
            rows,
            cols,
            center: (rows / 2, cols / 2),
        })
    }

    pub fn delta() -> Self {
        Kernel::new(vec![1.0], 1, 1).unwrap()
    }

    pub fn uniform(size: usize) -> Self {
        let w = 1.0 / (size * size) as f64;
        Kernel::new(vec![w; size * size], size, size).unwrap()
    }

    pub fn gaussian(size: usize, sigma: f64) -> Self {
        assert!(size >= 1 && sigma > 0.0);
        let c = (size / 2) as isize;
        let mut w = Vec::with_capacity(size * size);
        for i in 0..size as isize {
            for j in 0..size as isize {
                let r2 = ((i - c) * (i - c) + (j - c) * (j - c)) as f64;
                w.push((-r2 / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = w.iter().sum();
        Kernel::new(scale(&w, 1.0 / total), size, size).unwrap()
    }

    /// Normalized separable triangle kernel (anti-aliasing default).
    pub fn triangle(size: usize) -> Self {
        assert!(size >= 1);
        let c = (size as f64 - 1.0) / 2.0;
        let half = (size as f64 + 1.0) / 2.0;
        let lin: Vec<f64> = (0..size)
            .map(|i| 1.0 - (i as f64 - c).abs() / half)
            .collect();
        let mut w = Vec::with_capacity(size * size);
        for a in &lin {
            for b in &lin {
                w.push(a * b);
            }
        }
        let total: f64 = w.iter().sum();
        Kernel::new(scale(&w, 1.0 / total), size, size).unwrap()
    }
}

fn convolve_circular(img: &[f64], h: usize, w: usize, k: &Kernel, correlate: bool) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    let (cr, cc) = (k.center.0 as isize, k.center.1 as isize);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut acc = 0.0;
            for kr in 0..k.rows as isize {
                for kc in 0..k.cols as isize {
                    let (sr, sc) = if correlate {
                        (r + kr - cr, c + kc - cc)
                    } else {
                        (r - (kr - cr), c - (kc - cc))
                    };
                    let sr = sr.rem_euclid(h as isize) as usize;
                    let sc = sc.rem_euclid(w as isize) as usize;
                    acc += k.weights[(kr * k.cols as isize + kc) as usize] * img[sr * w + sc];
                }
            }
            out[(r * w as isize + c) as usize] = acc;
        }
    }
    out
}

/// Circular convolution with `kernel` on `shape = (height, width)` images.
/// The adjoint is circular correlation with the same kernel.
pub fn make_blur_operator(kernel: Kernel, shape: (usize, usize)) -> Result<LinearOperator> {
    let (h, w) = shape;
    if kernel.rows > h || kernel.cols > w {
        return Err(Error::ShapeMismatch(format!(
            "kernel {}x{} larger than image {h}x{w}",
            kernel.rows, kernel.cols
        )));
    }
    let n = h * w;
    let kf = kernel.clone();
    let ka = kernel;
    Ok(LinearOperator {
        forward: Arc::new(move |x: &[f64]| convolve_circular(x, h, w, &kf, false)),
        adjoint: Arc::new(move |y: &[f64]| convolve_circular(y, h, w, &ka, true)),
        dims: (n, n),
        spectral_norm_hint: None,
    })
}

/// `A = S H`: circular convolution with `antialias` followed by keeping every
/// `s`-th pixel in each direction. Input lives on `shape`, output on
/// `shape / s`. The adjoint inserts zeros and correlates.
pub fn make_downsampling_operator(
    s: usize,
    shape: (usize, usize),
    antialias: Kernel,
) -> Result<LinearOperator> {
    let (h, w) = shape;
    if s == 0 || h % s != 0 || w % s != 0 {
        return Err(Error::ShapeMismatch(format!(
            "image {h}x{w} not divisible by factor {s}"
        )));
    }
    if antialias.rows > h || antialias.cols > w {
        return Err(Error::ShapeMismatch(format!(
            "kernel {}x{} larger than image {h}x{w}",
            antialias.rows, antialias.cols
        )));
    }
    let (oh, ow) = (h / s, w / s);
    let kf = antialias.clone();
    let ka = antialias;
    Ok(LinearOperator {
        forward: Arc::new(move |x: &[f64]| {
            let blurred = convolve_circular(x, h, w, &kf, false);
            let mut out = vec![0.0; oh * ow];
            for r in 0..oh {
                for c in 0..ow {
                    out[r * ow + c] = blurred[(r * s) * w + c * s];
                }
            }
            out
        }),
        adjoint: Arc::new(move |y: &[f64]| {
            let mut up = vec![0.0; h * w];
            for r in 0..oh {
                for c in 0..ow {
                    up[(r * s) * w + c * s] = y[r * ow + c];
                }
            }
            convolve_circular(&up, h, w, &ka, true)
        }),
        dims: (oh * ow, h * w),
        spectral_norm_hint: None,
    })
}

/// Estimates `||A||_S` as the square root of the dominant eigenvalue of
/// `A^T A`, by power iteration from a seeded random start. Converges when the
/// relative change of the estimate drops below `tol`.
pub fn power_iteration_norm(
    a: &LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.dims.1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v = scale(&v, 1.0 / nv);
    }
    let mut estimate = 0.0_f64;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let w = a.apply_adjoint(&a.apply(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        let next = nw.sqrt();
        residual = (next - estimate).abs() / next.max(1e-300);
        estimate = next;
        v = scale(&w, 1.0 / nw);
        if residual <= tol {
            return Ok(estimate);
        }
    }
    Err(Error::MaxIterExceeded {
        tol,
        max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm_is_one() {
        let a = LinearOperator::identity(64);
        let n = power_iteration_norm(&a, 1e-12, 1000, 7).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_norm() {
        let a = LinearOperator::diagonal(vec![3.0, 1.0, 0.5]);
        let n = power_iteration_norm(&a, 1e-12, 10_000, 7).unwrap();
        assert!((n - 3.0).abs() < 1e-9, "got {n}");
    }

    #[test]
    fn delta_kernel_blur_is_identity() {
        let a = make_blur_operator(Kernel::delta(), (4, 4)).unwrap();
        let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(a.apply(&x), x);
        assert_eq!(a.apply_adjoint(&x), x);
    }

    #[test]
    fn uniform_blur_preserves_constants() {
        let a = make_blur_operator(Kernel::uniform(3), (8, 8)).unwrap();
        let ones = vec![1.0; 64];
        let out = a.apply(&ones);
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let n = power_iteration_norm(&a, 1e-12, 10_000, 3).unwrap();
        assert!((n - 1.0).abs() < 1e-9, "got {n}");
    }

    #[test]
    fn blur_adjoint_consistency() {
        let a = make_blur_operator(Kernel::gaussian(5, 1.0), (8, 8)).unwrap();
        assert!(a.adjoint_defect(20, 11) < 1e-10);
    }

    #[test]
    fn downsampling_shapes_and_adjoint() {
        let a = make_downsampling_operator(2, (16, 16), Kernel::triangle(4)).unwrap();
        assert_eq!(a.dims, (64, 256));
        assert!(a.adjoint_defect(20, 5) < 1e-10);
        // s=1 with delta kernel is the identity
        let id = make_downsampling_operator(1, (4, 4), Kernel::delta()).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        assert_eq!(id.apply(&x), x);
    }

    #[test]
    fn downsampling_rejects_indivisible_shape() {
        assert!(matches!(
            make_downsampling_operator(3, (16, 16), Kernel::delta()),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            make_blur_operator(Kernel::uniform(5), (4, 4)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn power_iteration_deterministic() {
        let a = make_blur_operator(Kernel::gaussian(3, 0.8), (8, 8)).unwrap();
        let n1 = power_iteration_norm(&a, 1e-10, 10_000, 42).unwrap();
        let n2 = power_iteration_norm(&a, 1e-10, 10_000, 42).unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn power_iteration_budget_error() {
        let a = LinearOperator::diagonal(vec![2.0, 1.9999]);
        assert!(matches!(
            power_iteration_norm(&a, 1e-14, 1, 0),
            Err(Error::MaxIterExceeded { .. })
        ));
    }

    #[test]
    fn compose_matches_manual() {
        let h = make_blur_operator(Kernel::uniform(3), (8, 8)).unwrap();
        let d = LinearOperator::diagonal(vec![2.0; 64]);
        let c = d.compose(h.clone());
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.1).cos()).collect();
        let expect = scale(&h.apply(&x), 2.0);
        let got = c.apply(&x);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(c.adjoint_defect(10, 1) < 1e-10);
    }
}
