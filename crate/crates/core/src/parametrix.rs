//! Truncated Neumann parametrix for `ᵗP(D)` in one dimension.
//!
//! For a frequency `ξ` with `P_m(ξ) ≠ 0`,
//! `ᵗP(D)(e^{-ixξ} w) = e^{-ixξ} P(ξ - D) w`, and
//! `P(ξ - η) / P_m(ξ) = 1 - Σ_{j=1}^m r_j(η)` where `r_j` carries the factor
//! `ξ^{-j}`. With `R_j = r_j(D)` and `L = 2N - m`,
//!
//! * `w_N = Σ_{j_1+…+j_k < L} R_{j_1}⋯R_{j_k} E_{r²N}`,
//! * `e_N = Σ_{j_1+…+j_k >= L > j_2+…+j_k} R_{j_1}⋯R_{j_k} E_{r²N}`,
//!
//! so that `(1 - R) w_N = E_{r²N} - e_N`. All `R_j` are Fourier multipliers,
//! so the sums are grouped by total `p` as `A_p = Σ_j r_j A_{p-j}` and
//! evaluated on the analytic spectrum of `E_{r²N}`.

use std::io::Write;

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classifier::{fit_constant, least_squares};
use crate::error::{Error, Result};
use crate::grid::{bracket_norm, Grid, GridSignal, Spectrum};
use crate::operator::{apply_operator_periodic, OperatorSpec};
use crate::windows::{gaussian_window, gaussian_window_spectrum};

pub const MAX_ORDER: u32 = 3;
pub const MAX_INDEX: u32 = 8;
/// Smallest `|P_m(ξ)|` accepted.
pub const PRINCIPAL_TOL: f64 = 1e-10;

/// Exact number of compositions of `p` with parts in `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionCount {
    pub sigma: BigUint,
    /// `C(2p-1, p) - C(2p-2m-3, p-m-1)`, the second term dropped when its
    /// arguments are negative.
    pub bound: BigUint,
}

impl CompositionCount {
    /// `σ_p / 4^p`.
    pub fn ratio_to_4p(&self, p: u32) -> f64 {
        big_ratio(&self.sigma, &(BigUint::from(4u32).pow(p)))
    }
}

fn big_ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = b.bits().saturating_sub(60);
    let bf = (b >> shift)
        .to_string()
        .parse::<f64>()
        .unwrap_or(f64::INFINITY);
    let af = (a >> shift)
        .to_string()
        .parse::<f64>()
        .unwrap_or(f64::INFINITY);
    af / bf
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `σ_q` for `q = 0..=p` (`σ_0 = 1`, the empty composition).
pub fn composition_table(p: u32, m: u32) -> Vec<BigUint> {
    let mut t = vec![BigUint::from(1u32)];
    for q in 1..=p as usize {
        let lo = q.saturating_sub(m as usize);
        let s = t[lo..q].iter().fold(BigUint::from(0u32), |a, b| a + b);
        t.push(s);
    }
    t
}

pub fn composition_count(p: u32, m: u32) -> Result<CompositionCount> {
    if p == 0 || m == 0 {
        return Err(Error::Config(format!(
            "composition count needs p, m >= 1 (got {p}, {m})"
        )));
    }
    let sigma = composition_table(p, m)
        .pop()
        .expect("table has p+1 entries");
    let (p64, m64) = (u64::from(p), u64::from(m));
    let first = binomial(2 * p64 - 1, p64);
    let second = if 2 * p64 >= 2 * m64 + 3 && p64 > m64 {
        binomial(2 * p64 - 2 * m64 - 3, p64 - m64 - 1)
    } else {
        BigUint::from(0u32)
    };
    Ok(CompositionCount {
        sigma,
        bound: first - second,
    })
}

/// `r_j(η)` as coefficient lists in `η`, `j = 1..=m` (index 0 unused).
fn r_polynomials(p: &OperatorSpec, xi: f64) -> Vec<Vec<Complex64>> {
    let m = p.order_m as usize;
    let am = p.coefficients[m];
    let mut r = vec![Vec::new(); m + 1];
    for (j, rj) in r.iter_mut().enumerate().skip(1) {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); j + 1];
        // terms with k - i = m - j, i.e. k = m - j + i, i = 0..=j
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = m - j + i;
            let a = p.coefficients[k];
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let binom = binomial(k as u64, i as u64)
                .to_string()
                .parse::<f64>()
                .unwrap_or(0.0);
            *c = -(a / am) * binom * sign * xi.powi(-(j as i32));
        }
        *rj = coeffs;
    }
    r
}

fn eval_poly(c: &[Complex64], eta: f64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, a| acc * eta + a)
}

/// One assembled parametrix for fixed `N` and `ξ`.
#[derive(Debug, Clone)]
pub struct ParametrixState {
    pub scale_r: f64,
    pub v: u32,
    pub n: u32,
    pub xi: f64,
    pub w_n: GridSignal,
    pub e_n: GridSignal,
    /// Number of compositions summed into `w_N`, the empty one included.
    pub term_count_s: u64,
    /// Number of compositions summed into `e_N`.
    pub remainder_count_s: u64,
    pub order_m: u32,
}

impl ParametrixState {
    /// `2N - m`.
    pub fn truncation(&self) -> i64 {
        2 * i64::from(self.n) - i64::from(self.order_m)
    }

    /// `S / 4^{max(2N-m, 0)}`.
    pub fn term_count_constant(&self) -> f64 {
        self.term_count_s as f64 / 4f64.powi(self.truncation().max(0) as i32)
    }
}

/// `max(2, 1.1 · 4h/e)`.
pub fn default_scale_r(p: &OperatorSpec) -> f64 {
    (1.1 * 4.0 * p.coeff_sup_h / std::f64::consts::E).max(2.0)
}

/// Assembles `w_N` and `e_N`; requires `scale_r² > 1` and `scale_r > 4h/e`.
pub fn build_parametrix(
    p: &OperatorSpec,
    n: u32,
    xi: f64,
    scale_r: f64,
    grid: &Grid,
) -> Result<ParametrixState> {
    let v = 1u32;
    if !(scale_r * scale_r > f64::from(v)) {
        return Err(Error::Config(format!(
            "scale_r² must exceed v={v} (scale_r={scale_r})"
        )));
    }
    let gate = 4.0 * p.coeff_sup_h / std::f64::consts::E;
    if !(scale_r > gate) {
        return Err(Error::Config(format!(
            "scale_r={scale_r} must exceed 4h/e={gate}"
        )));
    }
    build_parametrix_unchecked(p, n, xi, scale_r, grid)
}

/// As [`build_parametrix`] without the scale invariants, for probing what
/// happens when they fail.
pub fn build_parametrix_unchecked(
    p: &OperatorSpec,
    n: u32,
    xi: f64,
    scale_r: f64,
    grid: &Grid,
) -> Result<ParametrixState> {
    let m = p.order_m;
    if m == 0 || m > MAX_ORDER {
        return Err(Error::Config(format!(
            "parametrix needs 1 <= m <= {MAX_ORDER}, got {m}"
        )));
    }
    if n == 0 || n > MAX_INDEX {
        return Err(Error::Config(format!(
            "parametrix needs 1 <= N <= {MAX_INDEX}, got {n}"
        )));
    }
    if !(scale_r > 0.0) {
        return Err(Error::Config(format!(
            "scale_r must be positive, got {scale_r}"
        )));
    }
    if p.principal(xi).norm() < PRINCIPAL_TOL {
        return Err(Error::Characteristic(format!(
            "|P_m({xi})| below {PRINCIPAL_TOL:.0e}"
        )));
    }
    let width = scale_r * scale_r * f64::from(n);
    let edge = gaussian_window(0.0, width, grid.x_min).max(gaussian_window(0.0, width, grid.x_max));
    if edge > 1e-12 {
        return Err(Error::Config(format!(
            "E_{{r²N}} is {edge:.2e} at the grid edge; enlarge the box"
        )));
    }
    if xi.abs() + 6.0 / width.sqrt() >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "frequency {xi} plus window bandwidth exceeds Nyquist {}",
            grid.nyquist()
        )));
    }
    let l = (2 * i64::from(n) - i64::from(m)).max(1) as usize;
    let r = r_polynomials(p, xi);
    let freqs = grid.freqs();
    let mut w_spec = Vec::with_capacity(freqs.len());
    let mut e_spec = Vec::with_capacity(freqs.len());
    let mut a = vec![Complex64::new(0.0, 0.0); l];
    for &eta in &freqs {
        let rj: Vec<Complex64> = (0..=m as usize)
            .map(|j| {
                if j == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    eval_poly(&r[j], eta)
                }
            })
            .collect();
        a[0] = Complex64::new(1.0, 0.0);
        for q in 1..l {
            a[q] = (1..=(m as usize).min(q)).map(|j| rj[j] * a[q - j]).sum();
        }
        let w: Complex64 = a.iter().sum();
        let mut e = Complex64::new(0.0, 0.0);
        for (j, rjv) in rj.iter().enumerate().skip(1) {
            for aq in a.iter().skip(l.saturating_sub(j)) {
                e += rjv * aq;
            }
        }
        let window = gaussian_window_spectrum(0.0, width, eta);
        w_spec.push(w * window);
        e_spec.push(e * window);
    }
    let lattice = Some(grid.lattice());
    let to_signal = |values: Vec<Complex64>, label: &str| -> Result<GridSignal> {
        let s = Spectrum {
            freqs: freqs.clone(),
            values,
            convention: Default::default(),
            lattice,
        };
        Ok(crate::grid::inverse_transform(&s)?.with_label(label))
    };
    let table = composition_table(l as u32 + m, m);
    let to_u64 = |b: &BigUint| b.to_u64_digits().first().copied().unwrap_or(0);
    let term_count_s: u64 = table[..l].iter().map(to_u64).sum();
    let remainder_count_s: u64 = (l.saturating_sub(m as usize)..l)
        .map(|q| to_u64(&table[q]) * (m as u64 - (l - 1 - q) as u64))
        .sum();
    Ok(ParametrixState {
        scale_r,
        v: 1,
        n,
        xi,
        w_n: to_signal(w_spec, "w_N")?,
        e_n: to_signal(e_spec, "e_N")?,
        term_count_s,
        remainder_count_s,
        order_m: m,
    })
}

/// `ᵗP(e^{-ixξ} w_N / P_m(ξ)) - e^{-ixξ}(E_{r²N} - e_N)`, sup norm over the
/// grid relative to `‖E_{r²N}‖_∞ = 1`.
pub fn identity_residual(p: &OperatorSpec, st: &ParametrixState) -> Result<f64> {
    let pm = p.principal(st.xi);
    let width = st.scale_r * st.scale_r * f64::from(st.n);
    let phase = |x: f64| Complex64::from_polar(1.0, -x * st.xi);
    let lhs_in = st.w_n.map(|x, w| phase(x) * w / pm);
    let lhs = apply_operator_periodic(&p.transpose(), &lhs_in)?;
    let dev = lhs
        .values
        .iter()
        .zip(&st.e_n.values)
        .enumerate()
        .map(|(i, (l, e))| {
            let x = st.w_n.grid.x(i);
            (l - phase(x) * (gaussian_window(0.0, width, x) - e)).norm()
        })
        .fold(0.0, f64::max);
    Ok(dev)
}

/// One row of the residual report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRow {
    pub n: u32,
    pub xi: f64,
    pub identity_residual: f64,
    pub sup_remainder: f64,
    pub term_count: u64,
    pub remainder_count: u64,
    pub pairing: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: u32,
    pub order_m: u32,
    pub scale_r: f64,
    pub rows: Vec<ResidualRow>,
    /// Slope of `log sup|e_N|` against `log |ξ|`.
    pub fitted_slope: f64,
    /// `max_ξ sup|e_N| · |ξ|^{2N-m}`.
    pub fitted_c: f64,
    /// Least `C` with `max_ξ ⟨ξ⟩^n |⟨u, e^{-ixξ} e_N⟩| <= C^{n+1} n^{sn}`, `n <= N`.
    pub pairing_c: Option<f64>,
    pub max_identity_residual: f64,
}

impl ResidualReport {
    /// `2N - m`.
    pub fn decay_order(&self) -> f64 {
        2.0 * f64::from(self.n) - f64::from(self.order_m)
    }

    pub fn slope_ok(&self) -> bool {
        self.fitted_slope <= -self.decay_order() + 0.3
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "n",
            "m",
            "xi",
            "scale_r",
            "identity_residual",
            "sup_remainder",
            "term_count",
            "remainder_count",
            "pairing",
            "fitted_slope",
            "fitted_c",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                self.order_m.to_string(),
                r.xi.to_string(),
                self.scale_r.to_string(),
                format!("{:e}", r.identity_residual),
                format!("{:e}", r.sup_remainder),
                r.term_count.to_string(),
                r.remainder_count.to_string(),
                r.pairing.map(|v| format!("{v:e}")).unwrap_or_default(),
                self.fitted_slope.to_string(),
                format!("{:e}", self.fitted_c),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Residual, remainder-decay and pairing checks over states sharing `N`.
pub fn verify_parametrix(
    p: &OperatorSpec,
    states: &[ParametrixState],
    u: Option<&GridSignal>,
    s: f64,
) -> Result<ResidualReport> {
    let first = states
        .first()
        .ok_or_else(|| Error::Config("no parametrix states to verify".into()))?;
    if states.iter().any(|st| st.n != first.n) {
        return Err(Error::Config("all states must share N".into()));
    }
    if let Some(st) = states.iter().find(|st| st.xi.abs() < 2.0) {
        return Err(Error::Config(format!("|ξ| must be >= 2, got {}", st.xi)));
    }
    if let Some(u) = u {
        if u.grid != first.e_n.grid {
            return Err(Error::Config(
                "signal grid differs from the parametrix grid".into(),
            ));
        }
    }
    let mut rows = Vec::with_capacity(states.len());
    for st in states {
        let pairing = u.map(|u| {
            u.values
                .iter()
                .zip(&st.e_n.values)
                .enumerate()
                .map(|(i, (a, e))| a * e * Complex64::from_polar(1.0, -u.grid.x(i) * st.xi))
                .sum::<Complex64>()
                .norm()
                * u.grid.spacing
        });
        rows.push(ResidualRow {
            n: st.n,
            xi: st.xi,
            identity_residual: identity_residual(p, st)?,
            sup_remainder: st.e_n.sup_norm(),
            term_count: st.term_count_s,
            remainder_count: st.remainder_count_s,
            pairing,
        });
    }
    let decay = 2.0 * f64::from(first.n) - f64::from(first.order_m);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_remainder > 0.0)
        .map(|r| (r.xi.abs().ln(), r.sup_remainder.ln()))
        .collect();
    let fitted_slope = if pts.len() >= 2 {
        least_squares(&pts).0
    } else {
        f64::NAN
    };
    let fitted_c = rows
        .iter()
        .map(|r| r.sup_remainder * r.xi.abs().powf(decay))
        .fold(0.0, f64::max);
    let pairing_c = u.map(|_| {
        let m: Vec<f64> = (0..=first.n)
            .map(|k| {
                rows.iter()
                    .map(|r| bracket_norm(r.xi).powi(k as i32) * r.pairing.unwrap_or(0.0))
                    .fold(0.0, f64::max)
            })
            .collect();
        fit_constant(&m, s)
    });
    Ok(ResidualReport {
        n: first.n,
        order_m: first.order_m,
        scale_r: first.scale_r,
        max_identity_residual: rows.iter().map(|r| r.identity_residual).fold(0.0, f64::max),
        rows,
        fitted_slope,
        fitted_c,
        pairing_c,
    })
}

/// Builds one state per `ξ` and verifies them.
pub fn parametrix_report(
    p: &OperatorSpec,
    n: u32,
    xi_sweep: &[f64],
    scale_r: f64,
    grid: &Grid,
    u: Option<&GridSignal>,
    s: f64,
) -> Result<ResidualReport> {
    let states = xi_sweep
        .iter()
        .map(|&xi| build_parametrix(p, n, xi, scale_r, grid))
        .collect::<Result<Vec<_>>>()?;
    verify_parametrix(p, &states, u, s)
}

/// Grid used by the parametrix checks: `[-64, 64)` with 8192 points.
pub fn default_grid() -> Grid {
    Grid::symmetric(64.0, 8192).expect("static grid is valid")
}
