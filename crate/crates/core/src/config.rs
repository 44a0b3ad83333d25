//! TOML run configuration and run orchestration.
//!
//! ```toml
//! [grid]
//! x_min = -128.0
//! x_max = 128.0
//! num_points = 16384
//!
//! [signal]
//! corpus = "heaviside"        # or: file = "signal.csv"
//!
//! [probes]
//! centers = [-2.0, 0.0, 2.0]
//! directions = [1, -1]
//! radius = 1.0
//!
//! [classifier]
//! s = 0.5
//! v = [1, 2, 4]
//! N0 = 1
//! N_sweep = [4, 8, 16, 32]
//! C_cap = 1e6
//! growth_tol = 1.5
//! xi_min = 1.0
//!
//! [extension]
//! kinds = ["global", "zero_fill", "constant_fill"]
//! leak_eps = 1e-12
//!
//! [operator]                  # optional
//! coefficients = "0,1"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section and key is optional; missing ones take the defaults shown.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::classifier::{ClassifierParams, Decision};
use crate::corpus;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSignal};
use crate::localization::ExtensionKind;
use crate::operator::{inclusion_check, InclusionReport, OperatorSpec};
use crate::par::Execution;
use crate::scanner::{scan, ProbeSet, ScanParams, WavefrontEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub num_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = corpus::default_grid();
        Self {
            x_min: g.x_min,
            x_max: g.x_max,
            num_points: g.num_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub centers: Vec<f64>,
    pub directions: Vec<i8>,
    pub radius: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let p = ProbeSet::standard();
        Self {
            centers: p.centers,
            directions: p.directions,
            radius: p.radius,
        }
    }
}

/// Accepts `v = 2` or `v = [1, 2, 4]`.
fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u32>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        One(u32),
        Many(Vec<u32>),
    }
    Ok(match Repr::deserialize(d)? {
        Repr::One(v) => vec![v],
        Repr::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub s: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub v: Vec<u32>,
    #[serde(rename = "N0")]
    pub n0: u32,
    #[serde(rename = "N_sweep")]
    pub n_sweep: Vec<u32>,
    #[serde(rename = "C_cap")]
    pub c_cap: f64,
    pub growth_tol: f64,
    pub xi_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    pub reach_fraction: f64,
    pub noise_floor: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let p = ClassifierParams::default();
        Self {
            s: p.s,
            v: p.v_values,
            n0: p.n0,
            n_sweep: p.n_sweep,
            c_cap: p.c_cap,
            growth_tol: p.growth_tol,
            xi_min: p.xi_min,
            xi_max: None,
            reach_fraction: p.reach_fraction,
            noise_floor: p.noise_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtensionSection {
    pub kinds: Vec<ExtensionKind>,
    pub leak_eps: f64,
}

impl Default for ExtensionSection {
    fn default() -> Self {
        Self {
            kinds: ExtensionKind::STANDARD.to_vec(),
            leak_eps: ClassifierParams::default().leak_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    /// `a_0,a_1,...,a_m` in the `D = -i d/dx` convention.
    pub coefficients: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub signal: SignalSection,
    pub probes: ProbeSection,
    pub classifier: ClassifierSection,
    pub extension: ExtensionSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSection>,
    pub output: OutputSection,
}

fn field_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // relative signal files resolve against the config's directory
        if let (Some(file), Some(dir)) = (cfg.signal.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    /// Canonical TOML: every key written, fixed order.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Config for a corpus entry with its standard probes.
    pub fn for_corpus(name: &str) -> Result<Self> {
        let e = corpus::entry(name)?;
        Ok(Self {
            signal: SignalSection {
                corpus: Some(name.to_string()),
                file: None,
            },
            probes: ProbeSection {
                centers: e.probes.centers,
                directions: e.probes.directions,
                radius: e.probes.radius,
            },
            ..Self::default()
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.num_points)
            .map_err(|e| field_err("grid", e))
    }

    pub fn classifier_params(&self) -> ClassifierParams {
        let c = &self.classifier;
        ClassifierParams {
            s: c.s,
            v_values: c.v.clone(),
            n0: c.n0,
            n_sweep: c.n_sweep.clone(),
            c_cap: c.c_cap,
            growth_tol: c.growth_tol,
            xi_min: c.xi_min,
            reach_fraction: c.reach_fraction,
            noise_floor: c.noise_floor,
            leak_eps: self.extension.leak_eps,
        }
    }

    pub fn scan_params(&self, execution: Execution) -> ScanParams {
        ScanParams {
            classifier: self.classifier_params(),
            kinds: self.extension.kinds.clone(),
            xi_max: self.classifier.xi_max,
            execution,
        }
    }

    pub fn probe_set(&self) -> Result<ProbeSet> {
        ProbeSet::new(
            self.probes.centers.clone(),
            self.probes.directions.clone(),
            self.probes.radius,
        )
        .map_err(|e| field_err("probes", e))
    }

    pub fn operator_spec(&self) -> Result<Option<OperatorSpec>> {
        self.operator
            .as_ref()
            .map(|o| {
                o.coefficients
                    .parse()
                    .map_err(|e| field_err("operator.coefficients", e))
            })
            .transpose()
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let g = self.grid()?;
        let c = &self.classifier;
        if !(c.s >= 0.5 && c.s < 1.0) {
            return Err(field_err(
                "classifier.s",
                format!("must lie in [0.5, 1), got {}", c.s),
            ));
        }
        if c.v.is_empty() || c.v.contains(&0) {
            return Err(field_err("classifier.v", "must be positive integers"));
        }
        if c.n0 == 0 {
            return Err(field_err("classifier.N0", "must be >= 1"));
        }
        if c.n_sweep.is_empty() {
            return Err(field_err("classifier.N_sweep", "must not be empty"));
        }
        if c.n_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field_err(
                "classifier.N_sweep",
                format!("must be increasing, got {:?}", c.n_sweep),
            ));
        }
        if let Some(bad) = c.n_sweep.iter().find(|&&n| n <= c.n0) {
            return Err(field_err(
                "classifier.N0",
                format!(
                    "must be below every N in classifier.N_sweep (N0={}, N={bad})",
                    c.n0
                ),
            ));
        }
        if !(c.c_cap > 0.0) {
            return Err(field_err("classifier.C_cap", "must be positive"));
        }
        if !(c.growth_tol >= 1.0) {
            return Err(field_err("classifier.growth_tol", "must be >= 1"));
        }
        if !(c.xi_min >= 1.0) {
            return Err(field_err("classifier.xi_min", "must be >= 1"));
        }
        if let Some(xm) = c.xi_max {
            if !(xm > c.xi_min) || xm > g.nyquist() {
                return Err(field_err(
                    "classifier.xi_max",
                    format!("must lie in (xi_min, Nyquist={}]", g.nyquist()),
                ));
            }
        }
        if !(c.reach_fraction > 0.0 && c.reach_fraction < 1.0) {
            return Err(field_err("classifier.reach_fraction", "must lie in (0, 1)"));
        }
        if !(c.noise_floor >= 0.0 && c.noise_floor < 1.0) {
            return Err(field_err("classifier.noise_floor", "must lie in [0, 1)"));
        }
        if self.extension.kinds.is_empty() {
            return Err(field_err("extension.kinds", "must not be empty"));
        }
        let eps = self.extension.leak_eps;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(field_err("extension.leak_eps", "must lie in (0, 1)"));
        }
        match (&self.signal.corpus, &self.signal.file) {
            (Some(_), Some(_)) => {
                return Err(field_err("signal", "set either corpus or file, not both"))
            }
            (None, None) => return Err(field_err("signal", "set corpus or file")),
            (Some(name), None) => {
                corpus::entry(name).map_err(|e| field_err("signal.corpus", e))?;
            }
            _ => {}
        }
        self.probe_set()?;
        self.operator_spec()?;
        // windows must fit the box around every probe
        let v_max = f64::from(*c.v.iter().max().unwrap_or(&1));
        let n_max = f64::from(*c.n_sweep.last().unwrap_or(&1));
        let reach = self.probes.radius + 6.0 * (v_max * n_max).sqrt();
        for (i, &x0) in self.probes.centers.iter().enumerate() {
            if x0 - reach < g.x_min || x0 + reach > g.x_max {
                return Err(field_err(
                    &format!("probes.centers[{i}]"),
                    format!(
                        "x0={x0} needs [{}, {}] inside the grid box [{}, {})",
                        x0 - reach,
                        x0 + reach,
                        g.x_min,
                        g.x_max
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn load_signal(&self) -> Result<GridSignal> {
        let g = self.grid()?;
        if let Some(name) = &self.signal.corpus {
            return corpus::build(name, &g);
        }
        let path = self.signal.file.as_ref().expect("validated");
        let f = fs::File::open(path)
            .map_err(|e| field_err("signal.file", format!("{}: {e}", path.display())))?;
        let sig = GridSignal::read_csv(f, path.display().to_string())?;
        if sig.grid != g {
            return Err(field_err(
                "signal.file",
                format!("sampled on {:?}, config grid is {:?}", sig.grid, g),
            ));
        }
        Ok(sig)
    }
}

/// Comparison of a scan with a corpus entry's expected verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthCheck {
    pub entry: String,
    pub pass: bool,
    /// `(x0, direction, expected, got)`.
    pub mismatches: Vec<(f64, i8, Decision, Decision)>,
}

pub fn check_ground_truth(name: &str, wf: &WavefrontEstimate) -> Result<GroundTruthCheck> {
    let e = corpus::entry(name)?;
    let mismatches: Vec<_> = e
        .ground_truth
        .iter()
        .filter_map(|&(x0, d, want)| {
            let got = wf.decision(x0, d).unwrap_or(Decision::Inconclusive);
            (got != want).then_some((x0, d, want, got))
        })
        .collect();
    Ok(GroundTruthCheck {
        entry: name.to_string(),
        pass: mismatches.is_empty(),
        mismatches,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub signal: String,
    pub s: f64,
    pub probes: usize,
    pub singular: Vec<(f64, i8)>,
    pub singular_support: Vec<f64>,
    pub all_regular: bool,
    pub max_fitted_c: Option<f64>,
    pub warnings: Vec<String>,
    pub probe_errors: usize,
    pub ground_truth: Option<GroundTruthCheck>,
    pub propagation: Option<InclusionReport>,
}

impl RunSummary {
    /// False only on a ground-truth mismatch or a failed propagation check.
    pub fn pass(&self) -> bool {
        self.ground_truth.as_ref().is_none_or(|g| g.pass)
            && self.propagation.as_ref().is_none_or(|p| p.pass)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub estimate: WavefrontEstimate,
    pub summary: RunSummary,
    /// Files written, in order.
    pub written: Vec<PathBuf>,
}

pub const RESULTS_FILE: &str = "results.json";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Scans the configured signal, compares with ground truth for corpus
/// entries, checks propagation when an operator is set, and writes the
/// result JSON, heatmap CSV and summary JSON when an output dir is set.
pub fn run(cfg: &RunConfig, execution: Execution) -> Result<RunOutcome> {
    cfg.validate()?;
    let f = cfg.load_signal()?;
    let probes = cfg.probe_set()?;
    let params = cfg.scan_params(execution);
    let estimate = scan(&f, &probes, &params)?;
    let ground_truth = cfg
        .signal
        .corpus
        .as_deref()
        .map(|n| check_ground_truth(n, &estimate))
        .transpose()?;
    let propagation = cfg
        .operator_spec()?
        .map(|p| inclusion_check(&f, &p, &probes, &params))
        .transpose()?;
    let summary = RunSummary {
        signal: cfg.signal.corpus.clone().unwrap_or_else(|| f.label.clone()),
        s: params.classifier.s,
        probes: estimate.entries.len(),
        singular: estimate.singular_pairs(),
        singular_support: crate::scanner::singular_support(&estimate),
        all_regular: estimate.uniformity.all_regular,
        max_fitted_c: estimate.uniformity.max_fitted_c,
        warnings: estimate.warnings.clone(),
        probe_errors: estimate
            .entries
            .iter()
            .filter(|e| e.error.is_some())
            .count(),
        ground_truth,
        propagation,
    };
    let mut written = Vec::new();
    if let Some(dir) = &cfg.output.dir {
        fs::create_dir_all(dir)?;
        let results = dir.join(RESULTS_FILE);
        estimate.write_json(fs::File::create(&results)?)?;
        written.push(results);
        let heat = dir.join(HEATMAP_FILE);
        estimate.write_heatmap(fs::File::create(&heat)?)?;
        written.push(heat);
        let sum = dir.join(SUMMARY_FILE);
        serde_json::to_writer_pretty(fs::File::create(&sum)?, &summary)?;
        written.push(sum);
    }
    Ok(RunOutcome {
        estimate,
        summary,
        written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_with_signal() {
        let cfg = RunConfig::for_corpus("gaussian").unwrap();
        cfg.validate().unwrap();
        assert!(RunConfig::default().validate().is_err());
    }

    #[test]
    fn field_paths_in_errors() {
        let bad = |text: &str, path: &str| {
            let e = RunConfig::parse(text).unwrap_err().to_string();
            assert!(e.contains(path), "{e} lacks {path}");
        };
        bad(
            "[signal]\ncorpus='gaussian'\n[classifier]\nN0 = 40\n",
            "classifier.N0",
        );
        bad(
            "[signal]\ncorpus='gaussian'\n[classifier]\nN_sweep = [8, 4]\n",
            "classifier.N_sweep",
        );
        bad(
            "[signal]\ncorpus='gaussian'\n[classifier]\ns = 1.2\n",
            "classifier.s",
        );
        bad("[signal]\ncorpus='nope'\n", "signal.corpus");
        bad(
            "[signal]\ncorpus='gaussian'\n[extension]\nleak_eps = 0\n",
            "extension.leak_eps",
        );
        bad(
            "[signal]\ncorpus='gaussian'\n[probes]\ncenters = [100.0]\n",
            "probes.centers[0]",
        );
        bad(
            "[signal]\ncorpus='gaussian'\n[operator]\ncoefficients = 'x'\n",
            "operator.coefficients",
        );
        assert!(RunConfig::parse("[signal]\ncorpus='gaussian'\nbogus=1\n").is_err());
    }

    #[test]
    fn scalar_v_accepted() {
        let cfg = RunConfig::parse("[signal]\ncorpus='gaussian'\n[classifier]\nv = 2\n").unwrap();
        assert_eq!(cfg.classifier.v, vec![2]);
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = RunConfig::parse(
            "[signal]\ncorpus='impulse'\n[classifier]\ns=0.75\nv=[1]\n[operator]\ncoefficients='0,1'\n[output]\ndir='o'\n",
        )
        .unwrap();
        let text = cfg.to_toml().unwrap();
        let again = RunConfig::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml().unwrap(), text);
    }
}
