//! Windowed spectra, cone-restricted majorants and the Gevrey `s`-regularity
//! decision at a single point and direction.
//!
//! For an extension `f^rex`, a window `E_{x0,vN}` and a cone `Γ`, the
//! majorants are `M_n = sup_{ξ∈Γ} ⟨ξ⟩^n |F(f^rex E_{x0,vN})(ξ)|`, `n <= N`.
//! The fitted constant is the least `C` with `M_n <= C^{n+1} n^{sn}`.
//!
//! The expensive part (FFTs and log-majorant tables) is gathered once per
//! probe in [`ProbeEvidence`]; deciding for a given `s` is then cheap, which
//! is what makes bisection for `s*` affordable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bracket_norm, forward_transform, Grid, Spectrum};
use crate::localization::{ExtensionCandidate, ExtensionKind};
use crate::par::{map_ordered, Execution};
use crate::windows::{gaussian_window, gaussian_window_spectrum, WindowSpec};

/// Minimum number of grid frequencies a cone must contain.
pub const MIN_CONE_FREQUENCIES: usize = 8;

/// Gevrey indices live in `[1/2, 1)`; bisection stops at this resolution.
pub const S_TOLERANCE: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// d = 1: `+1` or `-1`.
    Sign(i8),
    /// d = 2: polar angle of the cone axis.
    Angle(f64),
}

/// Frequency cone `{ξ : angle(ξ, direction) <= half_angle, xi_min <= |ξ| <= xi_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub direction: Direction,
    pub half_angle: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl Cone {
    fn check_band(xi_min: f64, xi_max: f64) -> Result<()> {
        if !(xi_min >= 1.0) || !(xi_max > xi_min) {
            return Err(Error::Config(format!(
                "cone needs 1 <= xi_min < xi_max (got {xi_min}, {xi_max})"
            )));
        }
        Ok(())
    }

    /// One-dimensional half line in direction `sign`.
    pub fn one_d(sign: i8, xi_min: f64, xi_max: f64) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::Config(format!(
                "direction must be +1 or -1, got {sign}"
            )));
        }
        Self::check_band(xi_min, xi_max)?;
        Ok(Self {
            direction: Direction::Sign(sign),
            half_angle: 0.0,
            xi_min,
            xi_max,
        })
    }

    /// Both half lines: the all-frequency cone in d = 1.
    pub fn all_frequencies(xi_min: f64, xi_max: f64) -> Result<Self> {
        Self::check_band(xi_min, xi_max)?;
        Ok(Self {
            direction: Direction::Sign(1),
            half_angle: PI,
            xi_min,
            xi_max,
        })
    }

    pub fn planar(angle: f64, half_angle: f64, xi_min: f64, xi_max: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(Error::Config(format!(
                "half angle {half_angle} outside (0, π]"
            )));
        }
        Self::check_band(xi_min, xi_max)?;
        Ok(Self {
            direction: Direction::Angle(angle),
            half_angle,
            xi_min,
            xi_max,
        })
    }

    /// Sixteen planar cones of half-angle π/8 whose axes are π/8 apart, so
    /// neighbours overlap by half.
    pub fn planar_cover(xi_min: f64, xi_max: f64) -> Result<Vec<Self>> {
        (0..16)
            .map(|k| Self::planar(f64::from(k) * PI / 8.0, PI / 8.0, xi_min, xi_max))
            .collect()
    }

    /// Same direction, new radial band.
    pub fn with_band(&self, xi_min: f64, xi_max: f64) -> Result<Self> {
        Self::check_band(xi_min, xi_max)?;
        Ok(Self {
            xi_min,
            xi_max,
            ..*self
        })
    }

    pub fn sign(&self) -> Option<i8> {
        match self.direction {
            Direction::Sign(s) => Some(s),
            Direction::Angle(_) => None,
        }
    }

    /// Membership of a one-dimensional frequency.
    pub fn contains(&self, xi: f64) -> bool {
        let a = xi.abs();
        if a < self.xi_min || a > self.xi_max {
            return false;
        }
        match self.direction {
            Direction::Sign(s) => self.half_angle >= PI || xi * f64::from(s) > 0.0,
            Direction::Angle(_) => self.contains_planar(xi, 0.0),
        }
    }

    /// Membership of a planar frequency `(ξ1, ξ2)`.
    pub fn contains_planar(&self, xi1: f64, xi2: f64) -> bool {
        let r = xi1.hypot(xi2);
        if r < self.xi_min || r > self.xi_max {
            return false;
        }
        let axis = match self.direction {
            Direction::Sign(s) => {
                if s > 0 {
                    0.0
                } else {
                    PI
                }
            }
            Direction::Angle(t) => t,
        };
        let mut d = (xi2.atan2(xi1) - axis).rem_euclid(2.0 * PI);
        if d > PI {
            d = 2.0 * PI - d;
        }
        d <= self.half_angle + 1e-12
    }

    /// Indices of the spectrum frequencies inside the cone.
    pub fn indices(&self, freqs: &[f64]) -> Vec<usize> {
        freqs
            .iter()
            .enumerate()
            .filter(|(_, &xi)| self.contains(xi))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Regular,
    Singular,
    Inconclusive,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Regular => "regular",
            Decision::Singular => "singular",
            Decision::Inconclusive => "inconclusive",
        }
    }
}

/// Tunables of the decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub s: f64,
    /// Window dilations tried; a probe is regular if any of them certifies it.
    pub v_values: Vec<u32>,
    pub n0: u32,
    pub n_sweep: Vec<u32>,
    pub c_cap: f64,
    pub growth_tol: f64,
    pub xi_min: f64,
    /// Upper end of the inner band, as a fraction of `xi_max`, used by the
    /// reach test.
    pub reach_fraction: f64,
    /// Spectral samples below this fraction of the spectrum peak count as zero.
    pub noise_floor: f64,
    /// Largest window value tolerated at the grid-box edges.
    pub leak_eps: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            s: 0.5,
            v_values: vec![1, 2, 4],
            n0: 1,
            n_sweep: vec![4, 8, 16, 32],
            c_cap: 1e6,
            growth_tol: 1.5,
            xi_min: 1.0,
            reach_fraction: 0.25,
            noise_floor: 1e-12,
            leak_eps: 1e-12,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.s >= 0.5 && self.s < 1.0) {
            return bad(format!("s must lie in [1/2, 1), got {}", self.s));
        }
        if self.v_values.is_empty() || self.v_values.contains(&0) {
            return bad("v values must be a non-empty list of positive integers".into());
        }
        if self.n0 == 0 {
            return bad("N0 must be >= 1".into());
        }
        if self.n_sweep.is_empty() {
            return bad("N sweep must not be empty".into());
        }
        if self.n_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "N sweep must be increasing, got {:?}",
                self.n_sweep
            ));
        }
        if self.n_sweep[0] <= self.n0 {
            return bad(format!(
                "every N in the sweep must exceed N0={} (got {:?})",
                self.n0, self.n_sweep
            ));
        }
        if !(self.c_cap > 0.0) || !(self.growth_tol >= 1.0) {
            return bad("C_cap must be positive and growth_tol >= 1".into());
        }
        if !(self.xi_min >= 1.0) {
            return bad(format!("xi_min must be >= 1, got {}", self.xi_min));
        }
        if !(self.reach_fraction > 0.0 && self.reach_fraction < 1.0) {
            return bad("reach_fraction must lie in (0, 1)".into());
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor < 1.0) {
            return bad("noise_floor must lie in [0, 1)".into());
        }
        if !(self.leak_eps > 0.0 && self.leak_eps < 1.0) {
            return bad("leak_eps must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn n_max(&self) -> u32 {
        *self.n_sweep.last().unwrap_or(&1)
    }

    pub fn v_max(&self) -> u32 {
        *self.v_values.iter().max().unwrap_or(&1)
    }

    pub fn with_s(&self, s: f64) -> Self {
        Self { s, ..self.clone() }
    }
}

/// `F(f^rex · E_{x0,vN})` on the grid's frequency lattice.
///
/// Fails with a configuration error when the window has not decayed to
/// `leak_eps` at the grid-box edges (periodic wrap-around would otherwise
/// enter the spectrum), and with a resolution error when the grid spacing
/// does not resolve the window width `√(2vN)`.
pub fn windowed_spectrum(
    ext: &ExtensionCandidate,
    w: &WindowSpec,
    leak_eps: f64,
) -> Result<Spectrum> {
    let g = ext.signal.grid;
    let m = w.effective_index();
    let edge = gaussian_window(w.center, m, g.x_min).max(gaussian_window(w.center, m, g.x_max));
    if edge > leak_eps {
        return Err(Error::Config(format!(
            "window E_{{{}, {}}} is {edge:.3e} at the grid edge, above leak eps {leak_eps:.1e}",
            w.center, m
        )));
    }
    if g.spacing > 0.25 * (2.0 * m).sqrt() {
        return Err(Error::Resolution(format!(
            "grid spacing {} does not resolve window width {}",
            g.spacing,
            (2.0 * m).sqrt()
        )));
    }
    let prod = ext.signal.map(|x, v| v * w.value(x));
    forward_transform(&prod)
}

/// `ln M_n`, `n = 0..=n_max`, over the cone; zero majorants are `-∞`.
///
/// Samples with `|S| <= noise_floor · max|S|` are treated as zero.
pub fn log_majorants(s: &Spectrum, cone: &Cone, n_max: u32, noise_floor: f64) -> Result<Vec<f64>> {
    let idx = cone.indices(&s.freqs);
    if idx.len() < MIN_CONE_FREQUENCIES {
        return Err(Error::Geometry(format!(
            "cone [{}, {}] holds {} grid frequencies, need {MIN_CONE_FREQUENCIES}",
            cone.xi_min,
            cone.xi_max,
            idx.len()
        )));
    }
    let floor = noise_floor * s.sup_norm();
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .filter_map(|&i| {
            let a = s.values[i].norm();
            (a > floor && a > 0.0).then(|| (bracket_norm(s.freqs[i]).ln(), a.ln()))
        })
        .collect();
    Ok((0..=n_max)
        .map(|n| {
            let nf = f64::from(n);
            pts.iter()
                .map(|&(lb, la)| la + nf * lb)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// `M_n = max_{ξ ∈ cone} ⟨ξ⟩^n |S(ξ)|` for `n = 0..=n`.
pub fn majorant_sequence(s: &Spectrum, cone: &Cone, n: u32) -> Result<Vec<f64>> {
    Ok(log_majorants(s, cone, n, 0.0)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Least `C` with `exp(log_m[n]) <= C^{n+1} n^{sn}` for all `n`.
pub fn fit_constant_log(log_m: &[f64], s: f64) -> f64 {
    log_m
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > f64::NEG_INFINITY)
        .map(|(n, &l)| {
            let nf = n as f64;
            let growth = if n == 0 { 0.0 } else { s * nf * nf.ln() };
            ((l - growth) / (nf + 1.0)).exp()
        })
        .fold(0.0, f64::max)
}

/// Least `C >= 0` with `M_n <= C^{n+1} n^{sn}` for all `n` (`0^0 = 1`).
pub fn fit_constant(m: &[f64], s: f64) -> f64 {
    let logs: Vec<f64> = m.iter().map(|v| v.ln()).collect();
    fit_constant_log(&logs, s)
}

/// `max_n (M_n(full) / M_n(inner))^{1/(n+1)}`: how much the majorants gain
/// from the outer frequency band. A bound that holds on the whole cone keeps
/// this near 1 as the band grows.
pub fn reach_ratio(full: &[f64], inner: &[f64]) -> f64 {
    full.iter()
        .zip(inner)
        .enumerate()
        .map(
            |(n, (&f, &i))| match (f > f64::NEG_INFINITY, i > f64::NEG_INFINITY) {
                (false, _) => 1.0,
                (true, false) => f64::INFINITY,
                (true, true) => ((f - i) / (n as f64 + 1.0)).exp(),
            },
        )
        .fold(1.0, f64::max)
}

/// `max_{i<j} C_j / C_i` with `0/0 = 1`.
pub fn sweep_growth(cs: &[f64]) -> f64 {
    let mut g = 1.0f64;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            let r = match (cs[i] > 0.0, cs[j] > 0.0) {
                (_, false) => 1.0,
                (false, true) => f64::INFINITY,
                (true, true) => cs[j] / cs[i],
            };
            g = g.max(r);
        }
    }
    g
}

mod inf_as_string {
    //! JSON has no infinities; they are written as strings.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                o => Err(serde::de::Error::custom(format!("bad float '{o}'"))),
            },
        }
    }
}

/// Log-majorant tables of one window index `N`.
#[derive(Debug, Clone)]
pub struct IndexEvidence {
    pub n: u32,
    /// `ln M_n` over the full cone.
    pub full: Vec<f64>,
    /// `ln M_n` over the inner band `[xi_min, reach_fraction · xi_max]`.
    pub inner: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CandidateEvidence {
    pub kind: ExtensionKind,
    pub v: u32,
    pub leak_budget: f64,
    pub per_n: Vec<IndexEvidence>,
}

/// Verdict of one `(candidate, v)` pair at a fixed `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub kind: ExtensionKind,
    pub v: u32,
    pub fitted_c: Vec<f64>,
    #[serde(with = "inf_as_string")]
    pub reach: f64,
    #[serde(with = "inf_as_string")]
    pub sweep_growth: f64,
    pub leak_budget: f64,
    pub decision: Decision,
}

impl CandidateEvidence {
    pub fn decide(&self, s: f64, params: &ClassifierParams) -> CandidateVerdict {
        let fitted_c: Vec<f64> = self
            .per_n
            .iter()
            .map(|e| fit_constant_log(&e.full, s))
            .collect();
        let reach = self
            .per_n
            .last()
            .map(|e| reach_ratio(&e.full, &e.inner))
            .unwrap_or(1.0);
        let growth = sweep_growth(&fitted_c);
        let tol = params.growth_tol;
        let first = fitted_c.first().copied().unwrap_or(0.0);
        let last = fitted_c.last().copied().unwrap_or(0.0);
        let decision =
            if fitted_c.iter().all(|&c| c <= params.c_cap) && growth <= tol && reach <= tol {
                Decision::Regular
            } else if reach > tol || last > params.c_cap || (growth > tol && last >= tol * first) {
                Decision::Singular
            } else {
                Decision::Inconclusive
            };
        CandidateVerdict {
            kind: self.kind,
            v: self.v,
            fitted_c,
            reach,
            sweep_growth: growth,
            leak_budget: self.leak_budget,
            decision,
        }
    }
}

/// Everything needed to decide a probe for any `s`.
#[derive(Debug, Clone)]
pub struct ProbeEvidence {
    pub x0: f64,
    pub cone: Cone,
    pub n_sweep: Vec<u32>,
    pub candidates: Vec<CandidateEvidence>,
}

/// Result of classifying one probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub x0: f64,
    pub cone: Cone,
    pub s: f64,
    /// Dilation of the reported candidate.
    pub v: u32,
    pub n0: u32,
    /// `(N, fitted C_N)` of the reported candidate.
    pub sweep: Vec<(u32, f64)>,
    /// Per `N`, `M_n` for `n = 0..=N` of the reported candidate.
    pub m_table: Vec<Vec<f64>>,
    pub decision: Decision,
    pub s_star: Option<f64>,
    pub best_candidate: Option<ExtensionKind>,
    pub candidates: Vec<CandidateVerdict>,
}

impl DecayReport {
    /// Largest fitted constant of the reported candidate.
    pub fn fitted_c(&self) -> f64 {
        self.sweep.iter().map(|(_, c)| *c).fold(0.0, f64::max)
    }
}

impl ProbeEvidence {
    /// Windowed spectra and log-majorant tables for every candidate, `v`
    /// and `N`.
    pub fn gather(
        candidates: &[ExtensionCandidate],
        x0: f64,
        cone: &Cone,
        params: &ClassifierParams,
        exec: Execution,
    ) -> Result<Self> {
        params.validate()?;
        if candidates.is_empty() {
            return Err(Error::Config("no extension candidates".into()));
        }
        let inner_max = params.reach_fraction * cone.xi_max;
        let inner = cone.with_band(cone.xi_min, inner_max).map_err(|_| {
            Error::Geometry(format!(
                "inner band [{}, {inner_max}] is empty; raise xi_max or reach_fraction",
                cone.xi_min
            ))
        })?;
        let jobs: Vec<(usize, u32)> = (0..candidates.len())
            .flat_map(|c| params.v_values.iter().map(move |&v| (c, v)))
            .collect();
        let results = map_ordered(exec, &jobs, |&(c, v)| -> Result<CandidateEvidence> {
            let cand = &candidates[c];
            let per_n = params
                .n_sweep
                .iter()
                .map(|&n| {
                    let w = WindowSpec::new(x0, n, v)?;
                    let spec = windowed_spectrum(cand, &w, params.leak_eps)?;
                    Ok(IndexEvidence {
                        n,
                        full: log_majorants(&spec, cone, n, params.noise_floor)?,
                        inner: log_majorants(&spec, &inner, n, params.noise_floor)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CandidateEvidence {
                kind: cand.kind,
                v,
                leak_budget: crate::localization::leak_budget(
                    leak_radius(cand, x0),
                    v,
                    params.n_max(),
                ),
                per_n,
            })
        });
        Ok(Self {
            x0,
            cone: *cone,
            n_sweep: params.n_sweep.clone(),
            candidates: results.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }

    /// Decision at `params.s` without recomputing spectra.
    pub fn decide(&self, params: &ClassifierParams) -> DecayReport {
        let verdicts: Vec<CandidateVerdict> = self
            .candidates
            .iter()
            .map(|c| c.decide(params.s, params))
            .collect();
        let decision = if verdicts.iter().any(|v| v.decision == Decision::Regular) {
            Decision::Regular
        } else if verdicts.iter().all(|v| v.decision == Decision::Singular) {
            Decision::Singular
        } else {
            Decision::Inconclusive
        };
        let score = |v: &CandidateVerdict| v.fitted_c.iter().copied().fold(0.0, f64::max);
        let best = verdicts
            .iter()
            .enumerate()
            .filter(|(_, v)| decision != Decision::Regular || v.decision == Decision::Regular)
            .min_by(|a, b| score(a.1).total_cmp(&score(b.1)))
            .map(|(i, _)| i);
        let (v, sweep, m_table, best_candidate) = match best {
            Some(i) => {
                let ev = &self.candidates[i];
                (
                    ev.v,
                    self.n_sweep
                        .iter()
                        .copied()
                        .zip(verdicts[i].fitted_c.iter().copied())
                        .collect(),
                    ev.per_n
                        .iter()
                        .map(|e| e.full.iter().map(|l| l.exp()).collect())
                        .collect(),
                    Some(ev.kind),
                )
            }
            None => (1, Vec::new(), Vec::new(), None),
        };
        DecayReport {
            x0: self.x0,
            cone: self.cone,
            s: params.s,
            v,
            n0: params.n0,
            sweep,
            m_table,
            decision,
            s_star: None,
            best_candidate,
            candidates: verdicts,
        }
    }

    /// Least `s` in `[1/2, 1 - 1/64]` classified regular, to within 1/64.
    ///
    /// Regularity is monotone in `s` (a larger `s` only loosens the bound), so
    /// bisection on the decision is sound.
    pub fn s_star(&self, params: &ClassifierParams) -> Option<f64> {
        let regular = |s: f64| self.decide(&params.with_s(s)).decision == Decision::Regular;
        let (mut lo, mut hi) = (0.5, 1.0 - S_TOLERANCE);
        if regular(lo) {
            return Some(lo);
        }
        if !regular(hi) {
            return None;
        }
        while hi - lo > S_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if regular(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Distance from `x0` to the nearest point where the candidate may differ
/// from the source: the grid edge for global data.
fn leak_radius(cand: &ExtensionCandidate, x0: f64) -> f64 {
    let g = cand.signal.grid;
    (x0 - g.x_min).min(g.x_max - x0)
}

/// Gathers evidence and decides at `params.s`, filling in `s_star`.
pub fn classify(
    candidates: &[ExtensionCandidate],
    x0: f64,
    cone: &Cone,
    params: &ClassifierParams,
) -> Result<DecayReport> {
    classify_with(candidates, x0, cone, params, Execution::default())
}

pub fn classify_with(
    candidates: &[ExtensionCandidate],
    x0: f64,
    cone: &Cone,
    params: &ClassifierParams,
    exec: Execution,
) -> Result<DecayReport> {
    let ev = ProbeEvidence::gather(candidates, x0, cone, params, exec)?;
    let mut report = ev.decide(params);
    report.s_star = ev.s_star(params);
    Ok(report)
}

pub fn estimate_s_star(
    candidates: &[ExtensionCandidate],
    x0: f64,
    cone: &Cone,
    params: &ClassifierParams,
) -> Result<Option<f64>> {
    Ok(ProbeEvidence::gather(candidates, x0, cone, params, Execution::default())?.s_star(params))
}

/// Least-squares power law of a spectrum's upper envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthExponent {
    /// `max(0, slope)`: least `l` with `⟨ξ⟩^{-l}|S|` bounded.
    #[serde(with = "inf_as_string")]
    pub exponent: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log max|S|` against `log ⟨ξ⟩` over `|ξ| >= 1`.
///
/// The envelope is taken over 40 logarithmic bins so oscillation zeros do not
/// drag the slope down.
pub fn polynomial_growth_exponent(s: &Spectrum) -> Result<GrowthExponent> {
    const BINS: usize = 40;
    let pts: Vec<(f64, f64)> = s
        .freqs
        .iter()
        .zip(&s.values)
        .filter(|(xi, v)| xi.abs() >= 1.0 && v.norm() > 0.0)
        .map(|(xi, v)| (bracket_norm(*xi).ln(), v.norm().ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::Fit("spectrum vanishes for |ξ| >= 1".into()));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / BINS as f64).max(f64::MIN_POSITIVE);
    let mut env = vec![(0.0, f64::NEG_INFINITY); BINS];
    for &(x, y) in &pts {
        let b = (((x - lo) / width) as usize).min(BINS - 1);
        if y > env[b].1 {
            env[b] = (x, y);
        }
    }
    let env: Vec<(f64, f64)> = env
        .into_iter()
        .filter(|e| e.1 > f64::NEG_INFINITY)
        .collect();
    if env.len() < 8 {
        return Err(Error::Fit(format!(
            "only {} usable frequency bins for a growth fit",
            env.len()
        )));
    }
    let (slope, intercept) = least_squares(&env);
    let residual = (env
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / env.len() as f64)
        .sqrt();
    Ok(GrowthExponent {
        exponent: if slope.is_finite() {
            slope.max(0.0)
        } else {
            f64::INFINITY
        },
        slope,
        residual,
        points: env.len(),
    })
}

/// Ordinary least-squares line `y = a x + b`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Discrete `‖⟨ξ⟩^l Ê_N‖_{L¹}` with `Ê_N(ξ) = (4πN)^{1/2} e^{-Nξ²}` on the
/// grid's frequency lattice.
pub fn window_moment_l1(l: u32, n: u32, grid: &Grid) -> f64 {
    let m = f64::from(n);
    grid.freqs()
        .iter()
        .map(|&xi| bracket_norm(xi).powi(l as i32) * gaussian_window_spectrum(0.0, m, xi).norm())
        .sum::<f64>()
        * grid.freq_spacing()
}
