//! Property tests for the transform, the fit and the combinatorics.

use num_complex::Complex64;
use proptest::prelude::*;
use qmwf::classifier::fit_constant;
use qmwf::config::RunConfig;
use qmwf::grid::{forward_transform, inverse_transform, Grid, GridSignal};
use qmwf::parametrix::composition_count;

fn grid() -> Grid {
    Grid::symmetric(16.0, 512).unwrap()
}

/// Sum of Gaussian bumps, well inside the box.
fn bumps(params: &[(f64, f64, f64, f64)]) -> GridSignal {
    GridSignal::from_fn(grid(), "bumps", |x| {
        params
            .iter()
            .map(|&(c, w, re, im)| Complex64::new(re, im) * (-(x - c).powi(2) / w).exp())
            .sum()
    })
    .unwrap()
}

fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec(
        (-4.0..4.0f64, 0.5..4.0f64, -2.0..2.0f64, -2.0..2.0f64),
        1..4,
    )
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let scale = a.iter().chain(b).map(|v| v.norm()).fold(1e-300, f64::max);
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(p in bump_params()) {
        let f = bumps(&p);
        let s = forward_transform(&f).unwrap();
        let lhs: f64 = f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.spacing;
        let rhs: f64 = s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.freq_spacing()
            / (2.0 * std::f64::consts::PI);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn linearity(p in bump_params(), q in bump_params(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (f, g) = (bumps(&p), bumps(&q));
        let (a, b) = (Complex64::new(a, 0.5), Complex64::new(b, -0.25));
        let combo = f.axpby(a, &g, b).unwrap();
        let lhs = forward_transform(&combo).unwrap();
        let (sf, sg) = (forward_transform(&f).unwrap(), forward_transform(&g).unwrap());
        let rhs: Vec<Complex64> = sf.values.iter().zip(&sg.values).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(close(&lhs.values, &rhs, 1e-12));
    }

    #[test]
    fn round_trip(p in bump_params()) {
        let f = bumps(&p);
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        prop_assert_eq!(back.grid, f.grid);
        prop_assert!(close(&back.values, &f.values, 1e-12));
    }

    #[test]
    fn translation(p in bump_params(), k in -64i64..64) {
        // a shift by whole grid steps is exact for functions negligible at the edges
        let f = bumps(&p);
        let g = f.grid;
        let a = k as f64 * g.spacing;
        let shifted = GridSignal::from_fn(g, "shifted", |x| {
            p.iter()
                .map(|&(c, w, re, im)| Complex64::new(re, im) * (-(x - a - c).powi(2) / w).exp())
                .sum()
        })
        .unwrap();
        let lhs = forward_transform(&shifted).unwrap();
        let sf = forward_transform(&f).unwrap();
        let rhs: Vec<Complex64> = sf
            .freqs
            .iter()
            .zip(&sf.values)
            .map(|(xi, v)| v * Complex64::from_polar(1.0, -a * xi))
            .collect();
        prop_assert!(close(&lhs.values, &rhs, 1e-9));
    }

    #[test]
    fn fitted_constant_decreases_in_s(
        m in prop::collection::vec(1e-6..1e6f64, 2..24),
        s1 in 0.5..0.99f64,
        ds in 0.0..0.5f64,
    ) {
        let s2 = (s1 + ds).min(0.999);
        prop_assert!(fit_constant(&m, s2) <= fit_constant(&m, s1) * (1.0 + 1e-12));
    }

    #[test]
    fn composition_count_within_bound(p in 1u32..120, m in 1u32..8) {
        let c = composition_count(p, m).unwrap();
        prop_assert!(c.sigma <= c.bound);
        // parts at most m never exceed unrestricted compositions, 2^{p-1}
        prop_assert!(c.sigma <= num_bigint::BigUint::from(2u32).pow(p - 1));
    }

    #[test]
    fn config_round_trip(
        s in 0.5..0.99f64,
        v in prop::collection::vec(1u32..5, 1..4),
        n0 in 1u32..4,
        growth in 1.0..3.0f64,
        cap in 1.0..1e9f64,
        leak in 1e-15..1e-3f64,
    ) {
        let text = format!(
            "[signal]\ncorpus = \"gaussian\"\n[classifier]\ns = {s}\nv = {v:?}\nN0 = {n0}\nN_sweep = [4, 8, 16]\n\
             C_cap = {cap}\ngrowth_tol = {growth}\n[extension]\nleak_eps = {leak}\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let canon = cfg.to_toml().unwrap();
        let again = RunConfig::parse(&canon).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_toml().unwrap(), canon);
    }
}
