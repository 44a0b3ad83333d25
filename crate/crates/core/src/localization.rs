//! Restriction of a signal to an open ball and computable extensions of the
//! restriction back to the whole grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSignal;

/// `f` restricted to `(center - radius, center + radius)`.
#[derive(Debug, Clone)]
pub struct BallRestriction {
    pub center: f64,
    pub radius: f64,
    pub source: GridSignal,
    /// First and one-past-last sample index inside the ball.
    pub range: (usize, usize),
}

impl BallRestriction {
    pub fn values(&self) -> &[Complex64] {
        &self.source.values[self.range.0..self.range.1]
    }

    pub fn contains_index(&self, i: usize) -> bool {
        i >= self.range.0 && i < self.range.1
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    /// The source itself.
    Global,
    /// Zero outside the ball.
    ZeroFill,
    /// Each side continued by the mean of its boundary shell.
    ConstantFill,
    /// Built by a caller (operator images, products).
    Derived,
}

impl ExtensionKind {
    pub const STANDARD: [ExtensionKind; 3] = [
        ExtensionKind::Global,
        ExtensionKind::ZeroFill,
        ExtensionKind::ConstantFill,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExtensionKind::Global => "global",
            ExtensionKind::ZeroFill => "zero_fill",
            ExtensionKind::ConstantFill => "constant_fill",
            ExtensionKind::Derived => "derived",
        }
    }
}

impl std::str::FromStr for ExtensionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(ExtensionKind::Global),
            "zero_fill" => Ok(ExtensionKind::ZeroFill),
            "constant_fill" => Ok(ExtensionKind::ConstantFill),
            other => Err(Error::Parse(format!("unknown extension kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionCandidate {
    pub kind: ExtensionKind,
    pub signal: GridSignal,
    /// `e^{-r²/(4 v N_max)}`: the largest window value outside the ball.
    pub leak_budget: f64,
}

impl ExtensionCandidate {
    /// Wraps an arbitrary signal as a candidate, e.g. `P(D)` applied to
    /// another candidate.
    pub fn derived(signal: GridSignal, leak_budget: f64) -> Self {
        Self {
            kind: ExtensionKind::Derived,
            signal,
            leak_budget,
        }
    }

    pub fn map_signal<F>(&self, f: F) -> Result<ExtensionCandidate>
    where
        F: FnOnce(&GridSignal) -> Result<GridSignal>,
    {
        Ok(ExtensionCandidate {
            kind: self.kind,
            signal: f(&self.signal)?,
            leak_budget: self.leak_budget,
        })
    }
}

/// Samples of width for the constant-fill boundary shell.
const SHELL_SAMPLES: usize = 2;

pub fn restrict(f: &GridSignal, x0: f64, r: f64) -> Result<BallRestriction> {
    let g = f.grid;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Geometry(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    if x0 - r < g.x_min || x0 + r > g.x_max {
        return Err(Error::Geometry(format!(
            "ball ({}, {}) exceeds grid box [{}, {})",
            x0 - r,
            x0 + r,
            g.x_min,
            g.x_max
        )));
    }
    let lo = (0..g.num_points)
        .find(|&i| g.x(i) > x0 - r)
        .unwrap_or(g.num_points);
    let hi = (lo..g.num_points)
        .find(|&i| g.x(i) >= x0 + r)
        .unwrap_or(g.num_points);
    if hi - lo < 2 * SHELL_SAMPLES {
        return Err(Error::Geometry(format!(
            "ball of radius {r} holds only {} samples",
            hi - lo
        )));
    }
    Ok(BallRestriction {
        center: x0,
        radius: r,
        source: f.clone(),
        range: (lo, hi),
    })
}

pub fn leak_budget(radius: f64, v: u32, n_max: u32) -> f64 {
    (-radius * radius / (4.0 * f64::from(v) * f64::from(n_max))).exp()
}

pub fn extend(
    res: &BallRestriction,
    kind: ExtensionKind,
    v: u32,
    n_max: u32,
) -> Result<ExtensionCandidate> {
    if v == 0 || n_max == 0 {
        return Err(Error::Config("v and N_max must be >= 1".into()));
    }
    let budget = leak_budget(res.radius, v, n_max);
    let src = &res.source;
    let (lo, hi) = res.range;
    let signal = match kind {
        ExtensionKind::Global | ExtensionKind::Derived => src.clone(),
        ExtensionKind::ZeroFill => {
            let mut out = GridSignal::zeros(src.grid, format!("{}|zero_fill", src.label));
            out.values[lo..hi].copy_from_slice(&src.values[lo..hi]);
            out
        }
        ExtensionKind::ConstantFill => {
            let mean = |s: &[Complex64]| s.iter().sum::<Complex64>() / s.len() as f64;
            let left = mean(&src.values[lo..lo + SHELL_SAMPLES]);
            let right = mean(&src.values[hi - SHELL_SAMPLES..hi]);
            let mut values = src.values.clone();
            values[..lo].iter_mut().for_each(|v| *v = left);
            values[hi..].iter_mut().for_each(|v| *v = right);
            GridSignal {
                grid: src.grid,
                values,
                label: format!("{}|constant_fill", src.label),
            }
        }
    };
    Ok(ExtensionCandidate {
        kind,
        signal,
        leak_budget: budget,
    })
}

/// Extensions of `f` restricted to the ball around `x0`, one per kind.
pub fn candidates(
    f: &GridSignal,
    x0: f64,
    radius: f64,
    kinds: &[ExtensionKind],
    v: u32,
    n_max: u32,
) -> Result<Vec<ExtensionCandidate>> {
    let res = restrict(f, x0, radius)?;
    kinds.iter().map(|&k| extend(&res, k, v, n_max)).collect()
}

/// Smallest `r` with `e^{-r²/(4 v N_max)} <= eps`.
pub fn leakage_required_radius(v: u32, n_max: u32, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!(
            "leak eps must lie in (0,1), got {eps}"
        )));
    }
    Ok((4.0 * f64::from(v) * f64::from(n_max) * (1.0 / eps).ln()).sqrt())
}
