//! Uniform grids, sampled signals and the discrete Fourier transform.
//!
//! Convention: the forward transform realizes `∫ f(x) e^{-ixξ} dx` with
//! trapezoidal (rectangle, on a periodic box) weights `dx`; the inverse is
//! `(2π)^{-1} ∫ S(ξ) e^{ixξ} dξ`. Frequencies live on the lattice
//! `ξ_k = 2πk / (n·dx)`, `k = -n/2 .. n/2 - 1`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform sampling of `[x_min, x_max)` with a power-of-two point count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub num_points: usize,
    pub spacing: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, num_points: usize) -> Result<Self> {
        if num_points < 2 || !num_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.num_points must be a power of two >= 2, got {num_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Config(format!(
                "grid box must satisfy x_min < x_max, got [{x_min}, {x_max})"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            num_points,
            spacing: (x_max - x_min) / num_points as f64,
        })
    }

    /// Symmetric box `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, num_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, num_points)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.x(i)).collect()
    }

    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / (self.num_points as f64 * self.spacing)
    }

    /// `π / spacing`; the lattice spans `[-nyquist, nyquist)`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing
    }

    /// Frequency lattice in increasing order.
    pub fn freqs(&self) -> Vec<f64> {
        let n = self.num_points as i64;
        let dxi = self.freq_spacing();
        (-n / 2..n / 2).map(|k| k as f64 * dxi).collect()
    }

    /// Index of the sample nearest to `x`, if `x` lies in the box.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x >= self.x_max {
            return None;
        }
        let i = ((x - self.x_min) / self.spacing).round() as usize;
        Some(i.min(self.num_points - 1))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            x_min: self.x_min,
            spacing: self.spacing,
            num_points: self.num_points,
        }
    }
}

/// Samples of a complex function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl GridSignal {
    pub fn new(grid: Grid, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.num_points {
            return Err(Error::InvalidSignal(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.num_points
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample at index {i} (x = {})",
                grid.x(i)
            )));
        }
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn zeros(grid: Grid, label: impl Into<String>) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.num_points],
            label: label.into(),
        }
    }

    pub fn from_fn<F>(grid: Grid, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let values = (0..grid.num_points).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values, label)
    }

    pub fn from_real_fn<F>(grid: Grid, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::from_fn(grid, label, |x| Complex64::new(f(x), 0.0))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Pointwise product; both signals must share the grid.
    pub fn mul(&self, other: &GridSignal) -> Result<GridSignal> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(GridSignal {
            grid: self.grid,
            values,
            label: format!("{}*{}", self.label, other.label),
        })
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: Complex64, other: &GridSignal, b: Complex64) -> Result<GridSignal> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(GridSignal {
            grid: self.grid,
            values,
            label: self.label.clone(),
        })
    }

    pub fn map<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> GridSignal {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| f(self.grid.x(i), *v))
            .collect();
        GridSignal {
            grid: self.grid,
            values,
            label: self.label.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.spacing
    }

    /// Discrete integral `Σ f_j dx`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.spacing
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "re", "im"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record(&[
                format_f64(self.grid.x(i)),
                format_f64(v.re),
                format_f64(v.im),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `x,re,im` rows; the grid is inferred from the `x` column and
    /// must be uniform with a power-of-two length.
    pub fn read_csv<R: Read>(r: R, label: impl Into<String>) -> Result<GridSignal> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "re", "im"] {
            return Err(Error::Parse(format!(
                "signal CSV must have header x,re,im; got {:?}",
                headers
            )));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column {k}", line + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            xs.push(field(0)?);
            values.push(Complex64::new(field(1)?, field(2)?));
        }
        if xs.len() < 2 {
            return Err(Error::Parse("signal CSV needs at least two rows".into()));
        }
        let dx = xs[1] - xs[0];
        for (i, w) in xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "non-uniform sampling at row {}: step {} vs {}",
                    i + 3,
                    w[1] - w[0],
                    dx
                )));
            }
        }
        let grid = Grid::new(xs[0], xs[0] + dx * xs.len() as f64, xs.len())?;
        GridSignal::new(grid, values, label)
    }
}

fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::Config(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// The spatial lattice a spectrum was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub x_min: f64,
    pub spacing: f64,
    pub num_points: usize,
}

/// Forward kernel `e^{-ixξ}`, no normalization prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Convention {
    #[default]
    KernelMinusUnscaled,
}

/// Sampled Fourier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub convention: Convention,
    pub lattice: Option<Lattice>,
}

impl Spectrum {
    /// A spectrum on arbitrary increasing frequencies (no inverse available).
    pub fn from_samples(freqs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::Config(format!(
                "{} frequencies for {} values",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            freqs,
            values,
            convention: Convention::default(),
            lattice: None,
        })
    }

    /// Builds a spectrum on the lattice of `grid` from a function of ξ.
    pub fn on_grid<F: Fn(f64) -> Complex64>(grid: &Grid, f: F) -> Self {
        let freqs = grid.freqs();
        let values = freqs.iter().map(|&xi| f(xi)).collect();
        Self {
            freqs,
            values,
            convention: Convention::default(),
            lattice: Some(grid.lattice()),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let dxi = match self.lattice {
            Some(l) => 2.0 * PI / (l.num_points as f64 * l.spacing),
            None if self.freqs.len() > 1 => self.freqs[1] - self.freqs[0],
            None => 1.0,
        };
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dxi
    }

    pub fn map<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> Spectrum {
        Spectrum {
            freqs: self.freqs.clone(),
            values: self
                .freqs
                .iter()
                .zip(&self.values)
                .map(|(&xi, &v)| f(xi, v))
                .collect(),
            convention: self.convention,
            lattice: self.lattice,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["xi", "re", "im"])?;
        for (xi, v) in self.freqs.iter().zip(&self.values) {
            out.write_record(&[format_f64(*xi), format_f64(v.re), format_f64(v.im)])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn format_f64(v: f64) -> String {
    format!("{v:.17e}")
}

thread_local! {
    // the planner caches plans by length and direction
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|cell| {
        let mut planner = cell.borrow_mut();
        if forward {
            planner.plan_fft_forward(n)
        } else {
            planner.plan_fft_inverse(n)
        }
    })
}

/// `∫ f(x) e^{-ixξ} dx` on the grid's frequency lattice.
pub fn forward_transform(f: &GridSignal) -> Result<Spectrum> {
    let g = f.grid;
    if !g.num_points.is_power_of_two() {
        return Err(Error::Config(format!(
            "forward transform needs a power-of-two grid, got {}",
            g.num_points
        )));
    }
    let n = g.num_points;
    let mut buf = f.values.clone();
    plan(n, true).process(&mut buf);
    let freqs = g.freqs();
    let half = n / 2;
    let values = freqs
        .iter()
        .enumerate()
        .map(|(k, &xi)| {
            // k-th increasing frequency corresponds to FFT bin (k - n/2) mod n
            let bin = (k + half) % n;
            buf[bin] * g.spacing * Complex64::from_polar(1.0, -g.x_min * xi)
        })
        .collect();
    Ok(Spectrum {
        freqs,
        values,
        convention: Convention::default(),
        lattice: Some(g.lattice()),
    })
}

/// Inverse of [`forward_transform`]; the spectrum must carry its lattice.
pub fn inverse_transform(s: &Spectrum) -> Result<GridSignal> {
    let lat = s
        .lattice
        .ok_or_else(|| Error::Config("spectrum has no spatial lattice to invert onto".into()))?;
    let n = lat.num_points;
    let grid = Grid::new(lat.x_min, lat.x_min + lat.spacing * n as f64, n)?;
    let expected = grid.freqs();
    if s.freqs.len() != n
        || s.freqs
            .iter()
            .zip(&expected)
            .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
    {
        return Err(Error::Config(
            "spectrum frequencies do not match its lattice".into(),
        ));
    }
    let half = n / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, (&xi, &v)) in s.freqs.iter().zip(&s.values).enumerate() {
        buf[(k + half) % n] = v * Complex64::from_polar(1.0, grid.x_min * xi);
    }
    plan(n, false).process(&mut buf);
    let scale = 1.0 / (n as f64 * grid.spacing);
    for v in &mut buf {
        *v *= scale;
    }
    GridSignal::new(grid, buf, "inverse")
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
#[inline]
pub fn bracket_norm(xi: f64) -> f64 {
    xi.hypot(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::symmetric(32.0, 2048).unwrap()
    }

    /// Composite Simpson rule for ∫ e^{-x²} cos(xξ) dx on [-12, 12].
    fn simpson_gauss_ft(xi: f64) -> f64 {
        let (a, b, m) = (-12.0_f64, 12.0_f64, 20_000usize);
        let h = (b - a) / m as f64;
        let g = |x: f64| (-x * x).exp() * (x * xi).cos();
        let mut acc = g(a) + g(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Grid::new(0.0, 1.0, 1000), Err(Error::Config(_))));
        assert!(matches!(Grid::new(0.0, 1.0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        let v = vec![Complex64::new(f64::NAN, 0.0); 4];
        assert!(GridSignal::new(g, v, "bad").is_err());
    }

    #[test]
    fn zero_maps_to_zero() {
        let s = forward_transform(&GridSignal::zeros(grid(), "0")).unwrap();
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
        let back = inverse_transform(&s).unwrap();
        assert!(back.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn unit_window_transform() {
        let f = GridSignal::from_real_fn(grid(), "E1", |x| (-x * x / 4.0).exp()).unwrap();
        let s = forward_transform(&f).unwrap();
        for (xi, v) in s.freqs.iter().zip(&s.values) {
            let want = (4.0 * PI).sqrt() * (-xi * xi).exp();
            assert!((v - want).norm() <= 1e-8 * (4.0 * PI).sqrt(), "xi={xi}");
        }
    }

    #[test]
    fn gaussian_matches_quadrature_oracle() {
        let f = GridSignal::from_real_fn(grid(), "g", |x| (-x * x).exp()).unwrap();
        let s = forward_transform(&f).unwrap();
        for (xi, v) in s
            .freqs
            .iter()
            .zip(&s.values)
            .filter(|(xi, _)| xi.abs() < 6.0)
        {
            let oracle = simpson_gauss_ft(*xi);
            let closed = PI.sqrt() * (-xi * xi / 4.0).exp();
            assert_relative_eq!(oracle, closed, epsilon = 1e-10);
            assert!(
                (v.re - oracle).abs() < 1e-10 && v.im.abs() < 1e-10,
                "xi={xi}"
            );
        }
    }

    #[test]
    fn round_trip_window() {
        let f = GridSignal::from_real_fn(grid(), "E1", |x| (-x * x / 4.0).exp()).unwrap();
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        let err: f64 = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let norm: f64 = f.values.iter().map(|a| a.norm_sqr()).sum();
        assert!((err / norm).sqrt() < 1e-10);
    }

    #[test]
    fn inverse_rejects_foreign_lattice() {
        let s = Spectrum::from_samples(vec![0.0, 1.0], vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!(matches!(inverse_transform(&s), Err(Error::Config(_))));
        let mut t = forward_transform(&GridSignal::zeros(grid(), "z")).unwrap();
        t.freqs[3] += 0.5;
        assert!(matches!(inverse_transform(&t), Err(Error::Config(_))));
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket_norm(0.0), 1.0);
        assert_relative_eq!(bracket_norm(1.0), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(bracket_norm(3.0), 10f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(bracket_norm(-3.0), 10f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let f = GridSignal::from_fn(Grid::new(-1.0, 1.0, 8).unwrap(), "c", |x| {
            Complex64::new(x, -2.0 * x)
        })
        .unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = GridSignal::read_csv(buf.as_slice(), "c").unwrap();
        assert_eq!(g.grid.num_points, 8);
        assert_relative_eq!(g.grid.x_min, -1.0);
        assert_relative_eq!(g.grid.spacing, 0.25, epsilon = 1e-15);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
