//! Gaussian windows `E_{x0,N}(x) = e^{-|x-x0|²/(4N)}`, the kernels
//! `δ_N(t) = (N/π)^{1/2} e^{-Nt²}` and Hermite-based derivative bounds.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridSignal};

/// Highest derivative order evaluated by [`window_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 64;

/// Window center `x0`, index `N` and dilation `v`; the analysis uses `E_{x0, v·N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub center: f64,
    pub index: u32,
    pub dilation: u32,
}

impl WindowSpec {
    pub fn new(center: f64, index: u32, dilation: u32) -> Result<Self> {
        if index == 0 || dilation == 0 {
            return Err(Error::Config(format!(
                "window index and dilation must be >= 1 (got N={index}, v={dilation})"
            )));
        }
        Ok(Self {
            center,
            index,
            dilation,
        })
    }

    /// `v·N`.
    pub fn effective_index(&self) -> f64 {
        f64::from(self.index) * f64::from(self.dilation)
    }

    pub fn value(&self, x: f64) -> f64 {
        gaussian_window(self.center, self.effective_index(), x)
    }
}

/// `e^{-(x-x0)²/(4m)}` for a real width parameter `m > 0`.
#[inline]
pub fn gaussian_window(x0: f64, m: f64, x: f64) -> f64 {
    let d = x - x0;
    (-d * d / (4.0 * m)).exp()
}

/// Fourier transform of `e^{-(x-x0)²/(4m)}`: `(4πm)^{1/2} e^{-mξ²} e^{-ix0ξ}`.
#[inline]
pub fn gaussian_window_spectrum(x0: f64, m: f64, xi: f64) -> Complex64 {
    Complex64::from_polar((4.0 * PI * m).sqrt() * (-m * xi * xi).exp(), -x0 * xi)
}

pub fn window_values(w: &WindowSpec, g: &Grid) -> GridSignal {
    let values = (0..g.num_points)
        .map(|i| Complex64::new(w.value(g.x(i)), 0.0))
        .collect();
    GridSignal {
        grid: *g,
        values,
        label: format!("E[x0={},vN={}]", w.center, w.effective_index()),
    }
}

/// Samples of `δ_N`; the grid must resolve the width `1/√N`.
pub fn delta_kernel(n: u32, g: &Grid) -> Result<GridSignal> {
    delta_kernel_at(n, 0.0, g)
}

/// Samples of `δ_N(· - x0)`.
pub fn delta_kernel_at(n: u32, x0: f64, g: &Grid) -> Result<GridSignal> {
    if n == 0 {
        return Err(Error::Config("delta kernel index must be >= 1".into()));
    }
    let nf = f64::from(n);
    if g.spacing > 0.2 / nf.sqrt() {
        return Err(Error::Resolution(format!(
            "spacing {} does not resolve δ_{n} (need <= {})",
            g.spacing,
            0.2 / nf.sqrt()
        )));
    }
    let amp = (nf / PI).sqrt();
    GridSignal::from_real_fn(*g, format!("delta_{n}"), |x| {
        let t = x - x0;
        amp * (-nf * t * t).exp()
    })
}

/// Normalized Hermite functions `h_k(t) = H_k(t) e^{-t²/2} / (2^k k! √π)^{1/2}`
/// for `k = 0..=order`.
///
/// The three-term recursion runs on the normalized functions, so the Gaussian
/// factor is carried at every step and nothing overflows for `order <= 64`.
pub fn hermite_functions(order: u32, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(order as usize + 1);
    let h0 = PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(h0);
    if order == 0 {
        return out;
    }
    out.push(2f64.sqrt() * t * h0);
    for k in 1..order as usize {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `ln (2^k k! √π)^{1/2}`.
fn hermite_log_norm(k: u32) -> f64 {
    let log_fact: f64 = (1..=k).map(|j| f64::from(j).ln()).sum();
    0.5 * (f64::from(k) * 2f64.ln() + log_fact + 0.5 * PI.ln())
}

/// `H_k(t) e^{-t²/2}` (physicists' Hermite polynomial).
pub fn hermite_weighted(k: u32, t: f64) -> f64 {
    hermite_functions(k, t)[k as usize] * hermite_log_norm(k).exp()
}

/// `d^k/dt^k e^{-t²} = (-1)^k H_k(t) e^{-t²}`.
pub fn gauss_derivative(k: u32, t: f64) -> f64 {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * hermite_weighted(k, t) * (-0.5 * t * t).exp()
}

/// `α`-th derivative of `e^{-(x-x0)²/(4m)}` at `x`.
pub fn gaussian_window_derivative(x0: f64, m: f64, alpha: u32, x: f64) -> f64 {
    let scale = 2.0 * m.sqrt();
    let t = (x - x0) / scale;
    gauss_derivative(alpha, t) * scale.powi(-(alpha as i32))
}

/// Exact `α`-th derivative of `E_{x0, vN}` sampled on `g`.
pub fn window_derivative(w: &WindowSpec, alpha: u32, g: &Grid) -> Result<GridSignal> {
    if alpha > MAX_DERIVATIVE_ORDER {
        return Err(Error::Config(format!(
            "derivative order {alpha} exceeds {MAX_DERIVATIVE_ORDER}"
        )));
    }
    let m = w.effective_index();
    GridSignal::from_real_fn(*g, format!("E^({alpha})"), |x| {
        gaussian_window_derivative(w.center, m, alpha, x)
    })
}

/// Sup of `|H_α(t)| e^{-t²}` and `|H_α(t)| e^{-t²/2}` over `t`.
fn hermite_sups(alpha: u32) -> (f64, f64) {
    // all zeros and extrema of H_α lie inside |t| <= sqrt(2α+1)
    let t_max = (2.0 * f64::from(alpha) + 1.0).sqrt() + 4.0;
    let steps = 40_000usize;
    let dt = t_max / steps as f64;
    let mut best_plain = (0.0f64, 0.0f64);
    let mut best_weighted = (0.0f64, 0.0f64);
    for i in 0..=steps {
        let t = i as f64 * dt;
        let w = hermite_weighted(alpha, t).abs();
        let p = w * (-0.5 * t * t).exp();
        if w > best_weighted.1 {
            best_weighted = (t, w);
        }
        if p > best_plain.1 {
            best_plain = (t, p);
        }
    }
    let refine = |(t0, v0): (f64, f64), f: &dyn Fn(f64) -> f64| -> f64 {
        // golden-section polish inside the bracketing cell
        let (mut a, mut b) = ((t0 - dt).max(0.0), t0 + dt);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        v0.max(f(0.5 * (a + b)))
    };
    let plain = refine(best_plain, &|t| {
        hermite_weighted(alpha, t).abs() * (-0.5 * t * t).exp()
    });
    let weighted = refine(best_weighted, &|t| hermite_weighted(alpha, t).abs());
    (plain, weighted)
}

/// Per-`(α, N)` record of the derivative bound calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRatio {
    pub alpha: u32,
    pub n: u32,
    /// `sup_x |E_N^(α)(x)|`.
    pub sup_plain: f64,
    /// `sup_x e^{x²/(8N)} |E_N^(α)(x)|`.
    pub sup_weighted: f64,
    /// `sup_plain / ((1/(e√N))^α α^{α/2})`; above 1 means the literal constant fails.
    pub literal_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeBoundCalibration {
    /// Least `c0` with `sup|E_N^(α)| <= (c0/√N)^α α^{α/2}`.
    pub c0_plain: f64,
    /// Least `c0` with `sup e^{x²/(8N)}|E_N^(α)| <= (c0/√N)^α α^{α/2}`.
    pub c0_weighted: f64,
    pub ratios: Vec<BoundRatio>,
}

impl DerivativeBoundCalibration {
    pub fn ratio(&self, alpha: u32, n: u32) -> Option<&BoundRatio> {
        self.ratios.iter().find(|r| r.alpha == alpha && r.n == n)
    }
}

/// `α^{α/2}` with `0^0 = 1`.
fn alpha_power(alpha: u32) -> f64 {
    if alpha == 0 {
        1.0
    } else {
        let a = f64::from(alpha);
        a.powf(a / 2.0)
    }
}

/// Fits the constants of the Hermite derivative bounds over `1 <= N <= n_max`,
/// `α <= alpha_max`.
///
/// `E_N^(α)(x) = (2√N)^{-α} (-1)^α H_α(t) e^{-t²}` with `t = x/(2√N)`, so the
/// sup over `x` is the sup over `t` rescaled; each `α` is sampled once on a
/// fine `t` grid and polished by golden-section search.
pub fn calibrate_derivative_bound(
    n_max: u32,
    alpha_max: u32,
) -> Result<DerivativeBoundCalibration> {
    if n_max == 0 || alpha_max > n_max {
        return Err(Error::Config(format!(
            "calibration needs 1 <= n_max and alpha_max <= n_max (got n_max={n_max}, alpha_max={alpha_max})"
        )));
    }
    if alpha_max > MAX_DERIVATIVE_ORDER {
        return Err(Error::Config(format!(
            "alpha_max {alpha_max} exceeds {MAX_DERIVATIVE_ORDER}"
        )));
    }
    let mut ratios = Vec::new();
    let mut c0_plain = 0.0f64;
    let mut c0_weighted = 0.0f64;
    for alpha in 0..=alpha_max {
        let (hp, hw) = hermite_sups(alpha);
        let ap = alpha_power(alpha);
        if alpha > 0 {
            let inv = 1.0 / f64::from(alpha);
            // (c0/√N)^α α^{α/2} >= (2√N)^{-α} sup  <=>  c0 >= (sup/α^{α/2})^{1/α} / 2
            c0_plain = c0_plain.max(0.5 * (hp / ap).powf(inv));
            c0_weighted = c0_weighted.max(0.5 * (hw / ap).powf(inv));
        }
        for n in 1..=n_max {
            let scale = (2.0 * f64::from(n).sqrt()).powi(-(alpha as i32));
            let sup_plain = hp * scale;
            let sup_weighted = hw * scale;
            let literal =
                (1.0 / (std::f64::consts::E * f64::from(n).sqrt())).powi(alpha as i32) * ap;
            ratios.push(BoundRatio {
                alpha,
                n,
                sup_plain,
                sup_weighted,
                literal_ratio: sup_plain / literal,
            });
        }
    }
    Ok(DerivativeBoundCalibration {
        c0_plain,
        c0_weighted,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward_transform;
    use approx::assert_relative_eq;

    #[test]
    fn window_peak_and_decay() {
        let w = WindowSpec::new(0.0, 1, 1).unwrap();
        assert_eq!(w.value(0.0), 1.0);
        assert_relative_eq!(w.value(2.0), (-1f64).exp(), epsilon = 1e-15);
        let w = WindowSpec::new(3.0, 4, 1).unwrap();
        assert_eq!(w.value(3.0), 1.0);
        assert!(WindowSpec::new(0.0, 0, 1).is_err());
    }

    #[test]
    fn window_values_in_unit_interval() {
        let g = Grid::symmetric(40.0, 1024).unwrap();
        let w = window_values(&WindowSpec::new(1.5, 3, 2).unwrap(), &g);
        assert!(w
            .values
            .iter()
            .all(|v| v.re > 0.0 && v.re <= 1.0 && v.im == 0.0));
    }

    #[test]
    fn delta_normalization() {
        let g = Grid::symmetric(16.0, 4096).unwrap();
        let d = delta_kernel(4, &g).unwrap();
        assert!((d.integral() - 1.0).norm() < 1e-8);
        let n = PI;
        // δ_N(0) = (N/π)^{1/2} = 1 at N = π
        assert_relative_eq!((n / PI).sqrt(), 1.0);
        let coarse = Grid::symmetric(16.0, 64).unwrap();
        assert!(matches!(
            delta_kernel(4, &coarse),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn delta_transform_is_window() {
        let g = Grid::symmetric(16.0, 4096).unwrap();
        for &n in &[1u32, 4, 16] {
            let s = forward_transform(&delta_kernel(n, &g).unwrap()).unwrap();
            for (xi, v) in s.freqs.iter().zip(&s.values) {
                let want = gaussian_window(0.0, f64::from(n), *xi);
                assert!((v - want).norm() < 1e-8, "N={n} xi={xi}");
            }
        }
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        for &t in &[-1.7f64, -0.3, 0.0, 0.4, 2.2] {
            let e = (-0.5 * t * t).exp();
            assert_relative_eq!(hermite_weighted(0, t), e, epsilon = 1e-13);
            assert_relative_eq!(hermite_weighted(1, t), 2.0 * t * e, epsilon = 1e-13);
            assert_relative_eq!(
                hermite_weighted(2, t),
                (4.0 * t * t - 2.0) * e,
                epsilon = 1e-13
            );
            assert_relative_eq!(
                hermite_weighted(3, t),
                (8.0 * t * t * t - 12.0 * t) * e,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                hermite_weighted(4, t),
                (16.0 * t.powi(4) - 48.0 * t * t + 12.0) * e,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn high_order_stays_finite() {
        for &t in &[0.0, 3.0, 8.0, 11.0, 30.0] {
            assert!(hermite_weighted(64, t).is_finite());
        }
    }

    #[test]
    fn symbolic_derivatives() {
        let g = Grid::symmetric(8.0, 64).unwrap();
        let w = WindowSpec::new(0.0, 1, 1).unwrap();
        let d0 = window_derivative(&w, 0, &g).unwrap();
        for (a, b) in d0.values.iter().zip(&window_values(&w, &g).values) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-14);
        }
        // E_1'(x) = -x/2 e^{-x²/4}
        assert_relative_eq!(
            gaussian_window_derivative(0.0, 1.0, 1, 1.0),
            -0.5 * (-0.25f64).exp(),
            epsilon = 1e-14
        );
        // E_1''(0) = -1/2
        assert_relative_eq!(
            gaussian_window_derivative(0.0, 1.0, 2, 0.0),
            -0.5,
            epsilon = 1e-14
        );
        // E_N''(x) = (x²/(4N²) - 1/(2N)) E_N(x)
        for &x in &[-3.0, 0.7, 2.5] {
            let n = 3.0;
            let want = (x * x / (4.0 * n * n) - 1.0 / (2.0 * n)) * gaussian_window(0.0, n, x);
            assert_relative_eq!(
                gaussian_window_derivative(0.0, n, 2, x),
                want,
                epsilon = 1e-14
            );
        }
        assert!(window_derivative(&w, 65, &g).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (x0, m) = (0.4, 2.5);
        for alpha in 1..6u32 {
            for &x in &[-2.0, 0.1, 1.3] {
                let h = 1e-4;
                let fd = (gaussian_window_derivative(x0, m, alpha - 1, x + h)
                    - gaussian_window_derivative(x0, m, alpha - 1, x - h))
                    / (2.0 * h);
                assert_relative_eq!(
                    gaussian_window_derivative(x0, m, alpha, x),
                    fd,
                    epsilon = 1e-7,
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn calibration_closed_forms() {
        let cal = calibrate_derivative_bound(16, 16).unwrap();
        // weighted form is extremal at α = 1: sup 2t e^{-t²/2} = 2e^{-1/2}
        assert_relative_eq!(cal.c0_weighted, (-0.5f64).exp(), epsilon = 1e-9);
        // plain form is extremal at α = 2, x = 0: |E_1''(0)| = 1/2
        assert_relative_eq!(cal.c0_plain, 0.5, epsilon = 1e-9);
        let r = cal.ratio(2, 1).unwrap();
        assert_relative_eq!(r.sup_plain, 0.5, epsilon = 1e-12);
        // literal constant 1/e gives 2/e² < 1/2
        assert!(r.literal_ratio > 1.0);
        assert_relative_eq!(
            r.literal_ratio,
            0.5 / (2.0 / std::f64::consts::E.powi(2)),
            epsilon = 1e-9
        );
        let r0 = cal.ratio(0, 5).unwrap();
        assert_relative_eq!(r0.sup_plain, 1.0, epsilon = 1e-12);
        assert!(calibrate_derivative_bound(4, 5).is_err());
    }
}
