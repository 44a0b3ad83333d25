//! Probe scans that assemble per-point decisions into wave-front set
//! estimates, plus the `𝔈̃^s` membership test and derivative cross-checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    reach_ratio, ClassifierParams, Cone, DecayReport, Decision, ProbeEvidence,
};
use crate::error::{Error, Result};
use crate::grid::{bracket_norm, forward_transform, GridSignal};
use crate::localization::{candidates, ExtensionCandidate, ExtensionKind};
use crate::par::{map_ordered, Execution};

/// Highest finite-difference derivative order; beyond it grid noise dominates.
pub const MAX_FD_ORDER: u32 = 6;

/// Probe centers and directions; every center is paired with every direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub centers: Vec<f64>,
    pub directions: Vec<i8>,
    pub radius: f64,
}

impl ProbeSet {
    pub fn new(centers: Vec<f64>, directions: Vec<i8>, radius: f64) -> Result<Self> {
        if centers.is_empty() || directions.is_empty() {
            return Err(Error::Config(
                "probe set needs centers and directions".into(),
            ));
        }
        if let Some(d) = directions.iter().find(|d| **d != 1 && **d != -1) {
            return Err(Error::Config(format!(
                "direction must be +1 or -1, got {d}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "probe radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            centers,
            directions,
            radius,
        })
    }

    /// `{-2, 0, 2} × {+1, -1}` with unit balls.
    pub fn standard() -> Self {
        Self {
            centers: vec![-2.0, 0.0, 2.0],
            directions: vec![1, -1],
            radius: 1.0,
        }
    }

    pub fn probes(&self) -> Vec<(f64, i8)> {
        self.centers
            .iter()
            .flat_map(|&c| self.directions.iter().map(move |&d| (c, d)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub classifier: ClassifierParams,
    pub kinds: Vec<ExtensionKind>,
    /// Outer cone radius; the grid Nyquist frequency when absent.
    pub xi_max: Option<f64>,
    pub execution: Execution,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            classifier: ClassifierParams::default(),
            kinds: ExtensionKind::STANDARD.to_vec(),
            xi_max: None,
            execution: Execution::default(),
        }
    }
}

impl ScanParams {
    pub fn with_s(&self, s: f64) -> Self {
        Self {
            classifier: self.classifier.with_s(s),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        if self.kinds.is_empty() {
            return Err(Error::Config("extension kinds must not be empty".into()));
        }
        Ok(())
    }

    fn cone(&self, f: &GridSignal, sign: i8) -> Result<Cone> {
        Cone::one_d(
            sign,
            self.classifier.xi_min,
            self.xi_max.unwrap_or(f.grid.nyquist()),
        )
    }
}

/// One line of a scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub x0: f64,
    pub direction: i8,
    pub s: f64,
    pub decision: Decision,
    pub s_star: Option<f64>,
    pub best_candidate: Option<ExtensionKind>,
    /// Largest fitted constant of the reported candidate over the sweep.
    pub fitted_c: Option<f64>,
    pub sweep: Vec<(u32, f64)>,
    /// Probe-level failure (geometry, budget); the decision is then inconclusive.
    pub error: Option<String>,
    pub report: Option<DecayReport>,
}

/// Whether one constant serves every probe of an all-regular family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityReport {
    pub all_regular: bool,
    pub max_fitted_c: Option<f64>,
    pub attained_at: Option<(f64, i8)>,
    pub within_cap: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WavefrontEstimate {
    pub s: f64,
    pub entries: Vec<ProbeRecord>,
    pub uniformity: UniformityReport,
    pub warnings: Vec<String>,
}

impl WavefrontEstimate {
    pub fn entry(&self, x0: f64, direction: i8) -> Option<&ProbeRecord> {
        self.entries
            .iter()
            .find(|e| e.x0 == x0 && e.direction == direction)
    }

    pub fn decision(&self, x0: f64, direction: i8) -> Option<Decision> {
        self.entry(x0, direction).map(|e| e.decision)
    }

    /// `(x0, direction)` pairs decided singular.
    pub fn singular_pairs(&self) -> Vec<(f64, i8)> {
        self.entries
            .iter()
            .filter(|e| e.decision == Decision::Singular)
            .map(|e| (e.x0, e.direction))
            .collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.entries)?;
        Ok(())
    }

    /// `x0,direction,s,log10_fitted_c,decision` rows.
    pub fn write_heatmap<W: Write>(&self, w: W) -> Result<()> {
        write_heatmap(&self.entries, w)
    }
}

pub fn write_heatmap<W: Write>(entries: &[ProbeRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x0", "direction", "s", "log10_fitted_c", "decision"])?;
    for e in entries {
        let lc = e
            .fitted_c
            .map(|c| format!("{}", c.log10()))
            .unwrap_or_else(|| "nan".into());
        out.write_record([
            e.x0.to_string(),
            e.direction.to_string(),
            e.s.to_string(),
            lc,
            e.decision.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-probe evidence, reusable across `s`.
#[derive(Debug, Clone)]
pub struct ScanEvidence {
    pub probes: Vec<(f64, i8, std::result::Result<ProbeEvidence, String>)>,
}

impl ScanEvidence {
    /// Decides every probe at `params.s`.
    pub fn estimate(&self, params: &ClassifierParams) -> WavefrontEstimate {
        let entries: Vec<ProbeRecord> = self
            .probes
            .iter()
            .map(|(x0, dir, ev)| match ev {
                Ok(ev) => {
                    let mut r = ev.decide(params);
                    r.s_star = ev.s_star(params);
                    ProbeRecord {
                        x0: *x0,
                        direction: *dir,
                        s: params.s,
                        decision: r.decision,
                        s_star: r.s_star,
                        best_candidate: r.best_candidate,
                        fitted_c: (!r.sweep.is_empty()).then(|| r.fitted_c()),
                        sweep: r.sweep.clone(),
                        error: None,
                        report: Some(r),
                    }
                }
                Err(e) => ProbeRecord {
                    x0: *x0,
                    direction: *dir,
                    s: params.s,
                    decision: Decision::Inconclusive,
                    s_star: None,
                    best_candidate: None,
                    fitted_c: None,
                    sweep: Vec::new(),
                    error: Some(e.clone()),
                    report: None,
                },
            })
            .collect();
        let uniformity = uniformity(&entries, params.c_cap);
        let warnings = closedness_warnings(&entries);
        WavefrontEstimate {
            s: params.s,
            entries,
            uniformity,
            warnings,
        }
    }
}

fn uniformity(entries: &[ProbeRecord], c_cap: f64) -> UniformityReport {
    let all_regular =
        !entries.is_empty() && entries.iter().all(|e| e.decision == Decision::Regular);
    let best = entries
        .iter()
        .filter_map(|e| e.fitted_c.map(|c| (c, (e.x0, e.direction))))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    UniformityReport {
        all_regular,
        max_fitted_c: best.map(|b| b.0),
        attained_at: best.map(|b| b.1),
        within_cap: all_regular && best.is_some_and(|b| b.0.is_finite() && b.0 <= c_cap),
    }
}

/// Flags singular probes whose neighbouring centers (same direction) are both
/// regular: a closed wave-front set should not look like that unless the
/// singularity is genuinely isolated between probes.
fn closedness_warnings(entries: &[ProbeRecord]) -> Vec<String> {
    let mut out = Vec::new();
    for dir in [1i8, -1] {
        let mut line: Vec<&ProbeRecord> = entries.iter().filter(|e| e.direction == dir).collect();
        line.sort_by(|a, b| a.x0.total_cmp(&b.x0));
        for w in line.windows(3) {
            if w[1].decision == Decision::Singular
                && w[0].decision == Decision::Regular
                && w[2].decision == Decision::Regular
            {
                out.push(format!(
                    "isolated singular probe at x0={} direction={dir:+} between regular neighbours",
                    w[1].x0
                ));
            }
        }
    }
    out
}

/// Gathers evidence for every probe, building candidates with `make`.
pub fn scan_evidence_with<F>(
    f: &GridSignal,
    probes: &ProbeSet,
    params: &ScanParams,
    make: F,
) -> Result<ScanEvidence>
where
    F: Fn(f64) -> Result<Vec<ExtensionCandidate>> + Sync,
{
    params.validate()?;
    let list = probes.probes();
    let probes = map_ordered(params.execution, &list, |&(x0, dir)| {
        let ev = params.cone(f, dir).and_then(|cone| {
            let cands = make(x0)?;
            ProbeEvidence::gather(&cands, x0, &cone, &params.classifier, params.execution)
        });
        (x0, dir, ev.map_err(|e| e.to_string()))
    });
    Ok(ScanEvidence { probes })
}

/// Evidence with the configured extension kinds of `f` itself.
pub fn scan_evidence(
    f: &GridSignal,
    probes: &ProbeSet,
    params: &ScanParams,
) -> Result<ScanEvidence> {
    let c = &params.classifier;
    scan_evidence_with(f, probes, params, |x0| {
        candidates(f, x0, probes.radius, &params.kinds, c.v_max(), c.n_max())
    })
}

pub fn scan(f: &GridSignal, probes: &ProbeSet, params: &ScanParams) -> Result<WavefrontEstimate> {
    Ok(scan_evidence(f, probes, params)?.estimate(&params.classifier))
}

/// Scan with caller-supplied candidates (operator images, products).
pub fn scan_with_candidates<F>(
    f: &GridSignal,
    probes: &ProbeSet,
    params: &ScanParams,
    make: F,
) -> Result<WavefrontEstimate>
where
    F: Fn(f64) -> Result<Vec<ExtensionCandidate>> + Sync,
{
    Ok(scan_evidence_with(f, probes, params, make)?.estimate(&params.classifier))
}

/// Centers with at least one singular direction, sorted.
pub fn singular_support(wf: &WavefrontEstimate) -> Vec<f64> {
    let mut xs: Vec<f64> = wf.singular_pairs().into_iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|j| f64::from(j).ln()).sum()
}

/// Outcome of the `𝔈̃^s` membership test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub s: f64,
    /// Largest admissible `h`; `inf` for `θ ≡ 0`, absent when `q_α` grows
    /// faster than any geometric sequence on the grid.
    pub h: Option<f64>,
    /// `q_α = ‖⟨ξ⟩^α θ̂‖_∞ / α!^s`.
    pub q: Vec<f64>,
    /// How far the outer frequency band lifts the weighted sups.
    pub reach: f64,
}

/// Relative spectral floor below which `θ̂` counts as zero.
const MEMBERSHIP_NOISE: f64 = 1e-12;
/// Edge decay required of `θ` on the grid box.
const EDGE_DECAY: f64 = 1e-10;
/// Growth tolerance of the membership reach test.
const MEMBERSHIP_REACH_TOL: f64 = 1.5;

pub fn tilde_es_membership(theta: &GridSignal, s: f64, alpha_max: u32) -> Result<MembershipReport> {
    let edge = theta.values[0]
        .norm()
        .max(theta.values[theta.len() - 1].norm());
    if edge > EDGE_DECAY {
        return Err(Error::Budget(format!(
            "θ is {edge:.3e} at the grid edge, above {EDGE_DECAY:.0e}"
        )));
    }
    let spec = forward_transform(theta)?;
    let peak = spec.sup_norm();
    if peak == 0.0 {
        return Ok(MembershipReport {
            s,
            h: Some(f64::INFINITY),
            q: vec![0.0; alpha_max as usize + 1],
            reach: 1.0,
        });
    }
    let floor = MEMBERSHIP_NOISE * peak;
    let inner_max = 0.25 * theta.grid.nyquist();
    let mut full = vec![f64::NEG_INFINITY; alpha_max as usize + 1];
    let mut inner = full.clone();
    for (&xi, v) in spec.freqs.iter().zip(&spec.values) {
        let a = v.norm();
        if a <= floor {
            continue;
        }
        let (lb, la) = (bracket_norm(xi).ln(), a.ln());
        for (alpha, slot) in full.iter_mut().enumerate() {
            let l = la + alpha as f64 * lb;
            *slot = slot.max(l);
            if xi.abs() <= inner_max {
                inner[alpha] = inner[alpha].max(l);
            }
        }
    }
    let reach = reach_ratio(&full, &inner);
    let log_q: Vec<f64> = full
        .iter()
        .enumerate()
        .map(|(a, l)| l - s * ln_factorial(a as u32))
        .collect();
    let q: Vec<f64> = log_q.iter().map(|l| l.exp()).collect();
    let h = if reach > MEMBERSHIP_REACH_TOL {
        None
    } else {
        let ten_q0 = 10f64.ln() + log_q[0];
        let h = (1..log_q.len())
            .map(|a| ((ten_q0 - log_q[a]) / a as f64).exp())
            .fold(f64::INFINITY, f64::min);
        (h.is_finite() && h > 1e-6).then_some(h)
    };
    Ok(MembershipReport { s, h, q, reach })
}

/// Central difference of order `alpha` with step `step` samples, at index `i`.
fn fd_at(
    values: &[num_complex::Complex64],
    i: usize,
    step: usize,
    alpha: u32,
    dx: f64,
) -> Option<f64> {
    let a = alpha as usize;
    let reach = a * step;
    if i < reach || i + reach >= values.len() {
        return None;
    }
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    let mut binom = 1.0f64;
    for j in 0..=a {
        let idx = i + reach - 2 * j * step;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += values[idx] * (sign * binom);
        binom = binom * (a - j) as f64 / (j + 1) as f64;
    }
    Some(acc.norm() / (2.0 * step as f64 * dx).powi(alpha as i32))
}

/// `sup |f^(α)|` over index range `[lo, hi)` by central differences.
fn fd_sup(f: &GridSignal, lo: usize, hi: usize, step: usize, alpha: u32) -> f64 {
    (lo..hi)
        .filter_map(|i| fd_at(&f.values, i, step, alpha, f.grid.spacing))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub pass: bool,
    /// Largest `h1 <= h` with `sup_α h1^α ‖θ^(α)‖_∞ / α!^s <= 10 ‖θ‖_∞`.
    pub h1: f64,
    /// `‖θ^(α)‖_∞` by finite differences.
    pub sups: Vec<f64>,
    /// Spectral bounds `(1/2) ‖⟨ξ⟩^{α+2} θ̂‖_∞ >= ‖θ^(α)‖_∞`.
    pub bounds: Vec<f64>,
}

/// Checks that the sup-norm derivative bounds implied by `𝔈̃^s` membership
/// hold on the grid.
///
/// `|θ^(α)(x)| <= (1/2π) ∫ |ξ|^α |θ̂| <= (1/2) ‖⟨ξ⟩^{α+2} θ̂‖_∞` since
/// `∫ ⟨ξ⟩^{-2} = π`; finite-difference sups must respect it.
pub fn cross_check_sup_derivatives(
    theta: &GridSignal,
    s: f64,
    h: f64,
    alpha_max: u32,
) -> Result<DerivativeCheck> {
    let top = alpha_max.min(MAX_FD_ORDER);
    let n = theta.len();
    let sups: Vec<f64> = (0..=top)
        .map(|a| {
            if a == 0 {
                theta.sup_norm()
            } else {
                fd_sup(theta, 0, n, 1, a)
            }
        })
        .collect();
    let spec = forward_transform(theta)?;
    let bounds: Vec<f64> = (0..=top)
        .map(|a| {
            let w = (a + 2) as i32;
            0.5 * spec
                .freqs
                .iter()
                .zip(&spec.values)
                .map(|(&xi, v)| bracket_norm(xi).powi(w) * v.norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let pass = sups
        .iter()
        .zip(&bounds)
        .all(|(d, b)| *d <= b * 1.05 + 1e-12);
    let d0 = sups[0];
    let h1 = if d0 == 0.0 {
        h
    } else {
        (1..sups.len())
            .filter(|&a| sups[a] > 0.0)
            .map(|a| ((10.0 * d0).ln() + s * ln_factorial(a as u32) - sups[a].ln()) / a as f64)
            .map(f64::exp)
            .fold(h, f64::min)
    };
    Ok(DerivativeCheck {
        pass,
        h1,
        sups,
        bounds,
    })
}

/// Finite-difference Gevrey test on `|x - x0| < r/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDerivativeReport {
    pub x0: f64,
    pub pass: bool,
    /// Least `C1` with `sup |f^(α)| <= C1^{α+1} α!^s`, `α <= 6`.
    pub fitted_c1: f64,
    /// Fine-step over coarse-step sup ratios, `α = 1..=6`.
    pub refinement_ratios: Vec<f64>,
}

/// Derivatives at steps `2 dx` and `4 dx`; converged (ratio within
/// `growth_tol`) derivatives mean `f` is smooth on the neighbourhood at the
/// grid's scale, while a jump makes the ratio grow like `2^α`.
pub fn local_derivative_test(
    f: &GridSignal,
    x0: f64,
    r: f64,
    s: f64,
    growth_tol: f64,
) -> Result<LocalDerivativeReport> {
    let g = f.grid;
    let half = 0.5 * r;
    if x0 - r < g.x_min || x0 + r > g.x_max {
        return Err(Error::Geometry(format!(
            "neighbourhood of {x0} leaves the grid box"
        )));
    }
    let lo = (0..g.num_points).find(|&i| g.x(i) > x0 - half).unwrap_or(0);
    let hi = (lo..g.num_points)
        .find(|&i| g.x(i) >= x0 + half)
        .unwrap_or(g.num_points);
    let mut ratios = Vec::new();
    let mut sups = vec![(lo..hi).map(|i| f.values[i].norm()).fold(0.0, f64::max)];
    for alpha in 1..=MAX_FD_ORDER {
        let fine = fd_sup(f, lo, hi, 2, alpha);
        let coarse = fd_sup(f, lo, hi, 4, alpha);
        let ratio = match (fine > 0.0, coarse > 0.0) {
            (false, _) => 1.0,
            (true, false) => f64::INFINITY,
            (true, true) => fine / coarse,
        };
        // round-off sized derivatives of constants carry no information
        let negligible = fine <= 1e-9 * sups[0].max(1e-300) * 10f64.powi(alpha as i32);
        ratios.push(if negligible { 1.0 } else { ratio });
        sups.push(fine);
    }
    let fitted_c1 = sups
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(a, d)| ((d.ln() - s * ln_factorial(a as u32)) / (a as f64 + 1.0)).exp())
        .fold(0.0, f64::max);
    Ok(LocalDerivativeReport {
        x0,
        pass: ratios.iter().all(|r| *r <= growth_tol),
        fitted_c1,
        refinement_ratios: ratios,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductStability {
    pub pass: bool,
    /// Hypothesis that failed, when the check was not run.
    pub skipped: Option<String>,
    /// Probes regular for `f` but not for `θ f`.
    pub violations: Vec<(f64, i8)>,
}

/// Every probe regular for `f` must stay regular for `θ f`.
///
/// Candidates for `θ f` are `θ · c` for the candidates `c` of `f`, which are
/// extensions of `θ f` restricted to the ball.
pub fn product_stability_check(
    f: &GridSignal,
    theta: &GridSignal,
    probes: &ProbeSet,
    params: &ScanParams,
) -> Result<ProductStability> {
    if f.values.iter().all(|v| v.norm() == 0.0) {
        return Ok(ProductStability {
            pass: true,
            skipped: None,
            violations: Vec::new(),
        });
    }
    let m = tilde_es_membership(theta, params.classifier.s, 8)?;
    if m.h.is_none() {
        return Ok(ProductStability {
            pass: false,
            skipped: Some("θ fails the membership test".into()),
            violations: Vec::new(),
        });
    }
    let growth = crate::classifier::polynomial_growth_exponent(&forward_transform(f)?);
    if !growth.as_ref().is_ok_and(|g| g.exponent.is_finite()) {
        return Ok(ProductStability {
            pass: false,
            skipped: Some("f has no polynomial spectral bound".into()),
            violations: Vec::new(),
        });
    }
    let before = scan(f, probes, params)?;
    let c = &params.classifier;
    let product = f.mul(theta)?;
    let after = scan_with_candidates(&product, probes, params, |x0| {
        candidates(f, x0, probes.radius, &params.kinds, c.v_max(), c.n_max())?
            .into_iter()
            .map(|cand| cand.map_signal(|sig| sig.mul(theta)))
            .collect()
    })?;
    let violations: Vec<(f64, i8)> = before
        .entries
        .iter()
        .filter(|e| e.decision == Decision::Regular)
        .filter(|e| after.decision(e.x0, e.direction) != Some(Decision::Regular))
        .map(|e| (e.x0, e.direction))
        .collect();
    Ok(ProductStability {
        pass: violations.is_empty(),
        skipped: None,
        violations,
    })
}
