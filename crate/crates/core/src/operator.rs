//! Constant-coefficient operators `P(D) = Σ a_k D^k` with `D = -i d/dx`.
//!
//! Under this convention `D e^{ixη} = η e^{ixη}`, so `P(D)` acts on spectra
//! as multiplication by `P(η)`, and the transpose is `P(-D)`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classifier::{polynomial_growth_exponent, Decision, ProbeEvidence};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, GridSignal};
use crate::localization::{candidates, ExtensionCandidate};
use crate::scanner::{scan_with_candidates, ProbeSet, ScanParams, WavefrontEstimate};

/// Relative threshold for an exactly characteristic direction.
pub const CHAR_TOL: f64 = 1e-12;
/// Largest relative spectral magnitude tolerated in the outer quarter band.
pub const BAND_LIMIT_TOL: f64 = 1e-10;
/// Bins below this fraction of the spectral peak are zeroed before applying a symbol.
const ROUNDOFF_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    /// `a_k` for `k = 0..=order_m`.
    pub coefficients: Vec<Complex64>,
    pub order_m: u32,
    /// `max_k |a_k|`.
    pub coeff_sup_h: f64,
}

impl OperatorSpec {
    /// Trailing zero coefficients are dropped so the order is exact.
    pub fn new(mut coefficients: Vec<Complex64>) -> Result<Self> {
        while coefficients.last().is_some_and(|c| c.norm() == 0.0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            return Err(Error::Config("operator has no nonzero coefficient".into()));
        }
        if coefficients
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Config("operator coefficients must be finite".into()));
        }
        let coeff_sup_h = coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(Self {
            order_m: coefficients.len() as u32 - 1,
            coefficients,
            coeff_sup_h,
        })
    }

    /// `D^k`.
    pub fn monomial(k: u32) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k as usize + 1];
        c[k as usize] = Complex64::new(1.0, 0.0);
        Self::new(c).expect("monomial is nonzero")
    }

    pub fn identity() -> Self {
        Self::monomial(0)
    }

    /// `P(η) = Σ a_k η^k`.
    pub fn symbol(&self, eta: f64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, a| acc * eta + a)
    }

    /// `P_m(η) = a_m η^m`.
    pub fn principal(&self, eta: f64) -> Complex64 {
        self.coefficients[self.order_m as usize] * eta.powi(self.order_m as i32)
    }

    /// `ᵗP(D) = P(-D)`.
    pub fn transpose(&self) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| if k % 2 == 0 { *a } else { -a })
            .collect();
        Self::new(coefficients).expect("transpose keeps the leading coefficient")
    }

    /// Comma-separated text form accepted by [`FromStr`].
    pub fn to_text(&self) -> String {
        self.coefficients
            .iter()
            .map(|c| {
                if c.im == 0.0 {
                    format!("{}", c.re)
                } else {
                    format!("{}", c)
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;

    /// `a_0,a_1,...,a_m`; each entry is a real or complex literal such as
    /// `2`, `-0.5`, `1+2i` or `3i`.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                Complex64::from_str(t)
                    .map_err(|_| Error::Parse(format!("bad operator coefficient '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

fn apply_symbol(p: &OperatorSpec, f: &GridSignal, check_band: bool) -> Result<GridSignal> {
    let mut spec = forward_transform(f)?;
    let peak = spec.sup_norm();
    if check_band && peak > 0.0 {
        let cut = 0.75 * f.grid.nyquist();
        let tail = spec
            .freqs
            .iter()
            .zip(&spec.values)
            .filter(|(xi, _)| xi.abs() > cut)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if tail > BAND_LIMIT_TOL * peak {
            return Err(Error::Resolution(format!(
                "spectral tail {:.2e} of '{}' exceeds {BAND_LIMIT_TOL:.0e}; signal is not band-limited on this grid",
                tail / peak,
                f.label
            )));
        }
    }
    let floor = ROUNDOFF_FLOOR * peak;
    for (xi, v) in spec.freqs.iter().zip(spec.values.iter_mut()) {
        *v = if v.norm() <= floor {
            Complex64::new(0.0, 0.0)
        } else {
            *v * p.symbol(*xi)
        };
    }
    Ok(inverse_transform(&spec)?.with_label(format!("P(D){}", f.label)))
}

/// `P(D) f` for band-limited `f`.
pub fn apply_operator(p: &OperatorSpec, f: &GridSignal) -> Result<GridSignal> {
    apply_symbol(p, f, true)
}

/// `P(D) f` on the periodized grid, without the band-limit check. Used for
/// extensions with jumps, whose images are meaningful only as distributions.
pub fn apply_operator_periodic(p: &OperatorSpec, f: &GridSignal) -> Result<GridSignal> {
    apply_symbol(p, f, false)
}

/// Directions `±1` with `|P_m(direction)| <= CHAR_TOL · max|a|`.
pub fn characteristic_set(p: &OperatorSpec, directions: &[i8]) -> Vec<i8> {
    directions
        .iter()
        .copied()
        .filter(|&d| p.principal(f64::from(d)).norm() <= CHAR_TOL * p.coeff_sup_h)
        .collect()
}

/// Constant-coefficient operator in two variables, `Σ a_{jk} D_1^j D_2^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarOperator {
    pub terms: Vec<((u32, u32), Complex64)>,
}

impl PlanarOperator {
    /// `∂_{x1} = i D_1`.
    pub fn partial_x1() -> Self {
        Self {
            terms: vec![((1, 0), Complex64::new(0.0, 1.0))],
        }
    }

    pub fn order(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|((j, k), _)| j + k)
            .max()
            .unwrap_or(0)
    }

    pub fn principal(&self, xi1: f64, xi2: f64) -> Complex64 {
        let m = self.order();
        self.terms
            .iter()
            .filter(|((j, k), _)| j + k == m)
            .map(|((j, k), a)| a * xi1.powi(*j as i32) * xi2.powi(*k as i32))
            .sum()
    }
}

/// Angles whose unit direction is characteristic for `p`.
pub fn characteristic_set_planar(p: &PlanarOperator, angles: &[f64]) -> Vec<f64> {
    let h = p.terms.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    angles
        .iter()
        .copied()
        .filter(|t| p.principal(t.cos(), t.sin()).norm() <= CHAR_TOL * h)
        .collect()
}

/// Candidates for `P(D)u` at `x0`: `P(D)c` for each candidate `c` of `u`.
pub fn mapped_candidates(
    u: &GridSignal,
    p: &OperatorSpec,
    x0: f64,
    probes: &ProbeSet,
    params: &ScanParams,
) -> Result<Vec<ExtensionCandidate>> {
    let c = &params.classifier;
    candidates(u, x0, probes.radius, &params.kinds, c.v_max(), c.n_max())?
        .into_iter()
        .map(|cand| cand.map_signal(|s| apply_operator_periodic(p, s)))
        .collect()
}

/// Scan of `P(D)u` using mapped candidates.
pub fn scan_image(
    u: &GridSignal,
    p: &OperatorSpec,
    probes: &ProbeSet,
    params: &ScanParams,
) -> Result<WavefrontEstimate> {
    let image = apply_operator_periodic(p, u)?;
    scan_with_candidates(&image, probes, params, |x0| {
        mapped_candidates(u, p, x0, probes, params)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegVerdict {
    pub x0: f64,
    pub direction: i8,
    pub member: bool,
    /// Least polynomial growth exponent of the candidate spectra.
    pub growth_exponent: Option<f64>,
    pub decision: Decision,
    pub fitted_c: Option<f64>,
}

/// Whether `(x0, direction)` lies in `Reg(s, P, u)`: some extension has a
/// polynomially bounded spectrum and `P(D)` of it has decaying windowed
/// spectra in the cone.
pub fn reg_spu_test(
    u: &GridSignal,
    p: &OperatorSpec,
    x0: f64,
    direction: i8,
    radius: f64,
    params: &ScanParams,
) -> Result<RegVerdict> {
    params.validate()?;
    if u.values.iter().all(|v| v.norm() == 0.0) {
        return Ok(RegVerdict {
            x0,
            direction,
            member: true,
            growth_exponent: Some(0.0),
            decision: Decision::Regular,
            fitted_c: Some(0.0),
        });
    }
    let c = &params.classifier;
    let base = candidates(u, x0, radius, &params.kinds, c.v_max(), c.n_max())?;
    let growth = base
        .iter()
        .filter_map(|cand| {
            forward_transform(&cand.signal)
                .ok()
                .and_then(|s| polynomial_growth_exponent(&s).ok())
                .map(|g| g.exponent)
        })
        .filter(|e| e.is_finite())
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |a| a.min(e)))
        });
    let mapped = base
        .iter()
        .map(|cand| cand.map_signal(|s| apply_operator_periodic(p, s)))
        .collect::<Result<Vec<_>>>()?;
    let cone = crate::classifier::Cone::one_d(
        direction,
        c.xi_min,
        params.xi_max.unwrap_or(u.grid.nyquist()),
    )?;
    let report = ProbeEvidence::gather(&mapped, x0, &cone, c, params.execution)?.decide(c);
    Ok(RegVerdict {
        x0,
        direction,
        member: growth.is_some() && report.decision == Decision::Regular,
        growth_exponent: growth,
        decision: report.decision,
        fitted_c: (!report.sweep.is_empty()).then(|| report.fitted_c()),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclusionReport {
    /// Probes singular for `P(D)u` but not for `u`.
    pub image_violations: Vec<(f64, i8)>,
    /// Probes singular for `u` that are in `Reg(s,P,u)` and not characteristic.
    pub reg_violations: Vec<(f64, i8)>,
    pub characteristic: Vec<i8>,
    pub pass: bool,
    pub u_singular: Vec<(f64, i8)>,
    pub image_singular: Vec<(f64, i8)>,
}

/// Probe-wise check of `WF_s(P(D)u) ⊂ WF_s(u) ⊂ WF(s,P,u) ∪ Char(P)`.
pub fn inclusion_check(
    u: &GridSignal,
    p: &OperatorSpec,
    probes: &ProbeSet,
    params: &ScanParams,
) -> Result<InclusionReport> {
    let wf_u = crate::scanner::scan(u, probes, params)?;
    let wf_pu = scan_image(u, p, probes, params)?;
    let characteristic = characteristic_set(p, &probes.directions);
    let u_singular = wf_u.singular_pairs();
    let image_singular = wf_pu.singular_pairs();
    let image_violations: Vec<(f64, i8)> = image_singular
        .iter()
        .copied()
        .filter(|pr| !u_singular.contains(pr))
        .collect();
    let mut reg_violations = Vec::new();
    for &(x0, dir) in &u_singular {
        if characteristic.contains(&dir) {
            continue;
        }
        let reg = reg_spu_test(u, p, x0, dir, probes.radius, params)?;
        if reg.member {
            reg_violations.push((x0, dir));
        }
    }
    Ok(InclusionReport {
        pass: image_violations.is_empty() && reg_violations.is_empty(),
        image_violations,
        reg_violations,
        characteristic,
        u_singular,
        image_singular,
    })
}

/// Largest relative deviation between `F((∂f) E_{x0,N})` and
/// `iξ F(f E_{x0,N}) + (1/(2N)) F(f (x - x0) E_{x0,N})`.
///
/// `∂f` is taken spectrally; the identity is the product rule with
/// `∂E_{x0,N} = -(x - x0)/(2N) E_{x0,N}`.
pub fn derivative_window_identity_check(f: &GridSignal, x0: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("window index must be >= 1".into()));
    }
    let m = f64::from(n);
    let window = |x: f64| crate::windows::gaussian_window(x0, m, x);
    // ∂ = i D
    let d = OperatorSpec::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)])?;
    let df = apply_operator_periodic(&d, f)?;
    let lhs = forward_transform(&df.map(|x, v| v * window(x)))?;
    let fe = forward_transform(&f.map(|x, v| v * window(x)))?;
    let fxe = forward_transform(&f.map(|x, v| v * (x - x0) * window(x)))?;
    let rhs: Vec<Complex64> = fe
        .freqs
        .iter()
        .zip(fe.values.iter().zip(&fxe.values))
        .map(|(&xi, (a, b))| Complex64::new(0.0, xi) * a + b / (2.0 * m))
        .collect();
    let scale = lhs
        .sup_norm()
        .max(rhs.iter().map(|v| v.norm()).fold(0.0, f64::max));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let dev = lhs
        .values
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(dev / scale)
}

/// Unit directions sampled every `π/8`, the axes of the planar cone cover.
pub fn planar_axes() -> Vec<f64> {
    (0..16).map(|k| f64::from(k) * PI / 8.0).collect()
}
