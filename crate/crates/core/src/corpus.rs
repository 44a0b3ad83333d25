//! Reference signals with known wave-front sets at their standard probes.

use num_complex::Complex64;
use serde::Serialize;

use crate::classifier::Decision;
use crate::error::{Error, Result};
use crate::grid::{inverse_transform, Grid, GridSignal, Spectrum};
use crate::scanner::ProbeSet;

/// Default analysis grid: `[-128, 128)`, spacing `1/64`.
pub fn default_grid() -> Grid {
    Grid::symmetric(128.0, 16384).expect("static grid is valid")
}

/// Heaviside damping `1/(1 + e^{(x - 96)/2})`: below `1e-20` of a constant
/// inside any probe ball, about `1e-7` at the grid edge.
pub const HEAVISIDE_DAMP_CENTER: f64 = 96.0;
pub const HEAVISIDE_DAMP_WIDTH: f64 = 2.0;
/// Negative-frequency envelope `e^{-(ξ/Λ)^16}` uses `Λ = 0.7 · Nyquist`.
pub const ONE_SIDED_CUTOFF_FRACTION: f64 = 0.7;
pub const ONE_SIDED_ENVELOPE_POWER: i32 = 16;

#[derive(Debug, Clone, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// How the expected verdicts were obtained.
    pub oracle: &'static str,
    pub probes: ProbeSet,
    /// Expected `(x0, direction, decision)` at every probe.
    pub ground_truth: Vec<(f64, i8, Decision)>,
}

impl CorpusEntry {
    pub fn build(&self, grid: &Grid) -> Result<GridSignal> {
        build(self.name, grid)
    }

    pub fn expected(&self, x0: f64, direction: i8) -> Option<Decision> {
        self.ground_truth
            .iter()
            .find(|(x, d, _)| *x == x0 && *d == direction)
            .map(|t| t.2)
    }
}

pub const NAMES: [&str; 5] = [
    "gaussian",
    "heaviside",
    "impulse",
    "one_sided_spectrum",
    "chirp",
];

fn truth(probes: &ProbeSet, singular: &[(f64, i8)]) -> Vec<(f64, i8, Decision)> {
    probes
        .probes()
        .into_iter()
        .map(|(x, d)| {
            let dec = if singular.contains(&(x, d)) {
                Decision::Singular
            } else {
                Decision::Regular
            };
            (x, d, dec)
        })
        .collect()
}

pub fn entry(name: &str) -> Result<CorpusEntry> {
    let std = ProbeSet::standard();
    let e = match name {
        "gaussian" => CorpusEntry {
            name: "gaussian",
            description: "e^{-x²}",
            oracle: "windowed spectrum is a Gaussian in ξ; calculus bounds M_n by C^{n+1} n^{n/2}",
            ground_truth: truth(&std, &[]),
            probes: std,
        },
        "heaviside" => CorpusEntry {
            name: "heaviside",
            description: "H(x) damped by 1/(1 + e^{(x-96)/2})",
            oracle: "constant extensions away from the jump are exact; at the jump the windowed spectrum decays like 1/|ξ|",
            ground_truth: truth(&std, &[(0.0, 1), (0.0, -1)]),
            probes: std,
        },
        "impulse" => CorpusEntry {
            name: "impulse",
            description: "discrete unit impulse at x = 0",
            oracle: "zero extensions away from 0 give spectrum 0; at 0 the windowed spectrum is constant",
            ground_truth: truth(&std, &[(0.0, 1), (0.0, -1)]),
            probes: std,
        },
        "one_sided_spectrum" => {
            let probes = ProbeSet::new(vec![0.0], vec![1, -1], 1.0)?;
            CorpusEntry {
                name: "one_sided_spectrum",
                description: "f̂ = e^{-ξ²} for ξ >= 0, e^{-(ξ/Λ)^16} for ξ < 0, Λ = 0.7·Nyquist",
                oracle: "spectrum decays like a Gaussian for ξ > 0 and stays flat for ξ < 0",
                ground_truth: truth(&probes, &[(0.0, -1)]),
                probes,
            }
        }
        "chirp" => CorpusEntry {
            name: "chirp",
            description: "e^{ix²} e^{-x²/4}",
            oracle: "entire function with Gaussian decay; windowed spectra are complex Gaussians",
            ground_truth: truth(&std, &[]),
            probes: std,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown corpus entry '{other}' (known: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(e)
}

pub fn entries() -> Vec<CorpusEntry> {
    NAMES
        .iter()
        .map(|n| entry(n).expect("known name"))
        .collect()
}

/// Samples the named signal on `grid`.
pub fn build(name: &str, grid: &Grid) -> Result<GridSignal> {
    match name {
        "gaussian" => GridSignal::from_real_fn(*grid, name, |x| (-x * x).exp()),
        "heaviside" => GridSignal::from_real_fn(*grid, name, |x| {
            if x >= 0.0 {
                1.0 / (1.0 + ((x - HEAVISIDE_DAMP_CENTER) / HEAVISIDE_DAMP_WIDTH).exp())
            } else {
                0.0
            }
        }),
        "impulse" => {
            let i0 = grid
                .nearest_index(0.0)
                .ok_or_else(|| Error::Geometry("grid does not contain x = 0".into()))?;
            let mut f = GridSignal::zeros(*grid, name);
            f.values[i0] = Complex64::new(1.0 / grid.spacing, 0.0);
            Ok(f)
        }
        "one_sided_spectrum" => {
            let cutoff = ONE_SIDED_CUTOFF_FRACTION * grid.nyquist();
            let s = Spectrum::on_grid(grid, |xi| {
                Complex64::new(one_sided_spectrum(xi, cutoff), 0.0)
            });
            Ok(inverse_transform(&s)?.with_label(name))
        }
        "chirp" => GridSignal::from_fn(*grid, name, |x| {
            Complex64::from_polar((-x * x / 4.0).exp(), x * x)
        }),
        other => Err(Error::Config(format!("unknown corpus entry '{other}'"))),
    }
}

/// The one-sided spectrum with its negative-frequency envelope.
pub fn one_sided_spectrum(xi: f64, cutoff: f64) -> f64 {
    if xi >= 0.0 {
        (-xi * xi).exp()
    } else {
        (-(xi / cutoff).powi(ONE_SIDED_ENVELOPE_POWER)).exp()
    }
}
