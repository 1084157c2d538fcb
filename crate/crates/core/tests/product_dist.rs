use harqir::channel::rng_stream;
use harqir::product_dist::*;
use harqir::quad;
use harqir::special_fn::{gamma_cdf_int, ln_gamma};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Gamma;
use rayon::prelude::*;

// P(R1 + R2 + R1 R2 ≤ x - 1) = ∫_0^{x-1} f_{R1}(r) F_{R2}((x - 1 - r)/(1 + r)) dr
fn two_factor_oracle(m: [u32; 2], omega: [f64; 2], x: f64) -> f64 {
    let c = x - 1.0;
    let pdf = |r: f64| {
        let mf = m[0] as f64;
        ((mf - 1.0) * r.ln() - r / omega[0] - ln_gamma(mf) - mf * omega[0].ln()).exp()
    };
    let f = |r: f64| {
        let d = if m[0] == 1 { (-r / omega[0]).exp() / omega[0] } else { pdf(r) };
        d * gamma_cdf_int(m[1], (c - r) / ((1.0 + r) * omega[1]))
    };
    quad::integrate(f, 0.0, c, 1e-14).unwrap()
}

fn mc_cdf(spec: &ProductDistSpec, x: f64, n: u64, seed: u64) -> f64 {
    let chunks = 64u64;
    let per = n / chunks;
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_stream(seed, c);
            let dists: Vec<Gamma<f64>> = spec
                .shapes()
                .iter()
                .zip(spec.scales())
                .map(|(&m, &s)| Gamma::new(m as f64, s).unwrap())
                .collect();
            (0..per)
                .filter(|_| dists.iter().map(|d| 1.0 + rng.sample(d)).product::<f64>() <= x)
                .count() as u64
        })
        .sum();
    hits as f64 / (per * chunks) as f64
}

#[test]
fn fft_matches_nested_quadrature() {
    for (m, omega) in [([1, 1], [1.0, 1.0]), ([2, 1], [0.3, 4.0]), ([1, 3], [10.0, 0.5]), ([4, 2], [100.0, 30.0])] {
        let spec = ProductDistSpec::new(m.to_vec(), omega.to_vec()).unwrap();
        for x in [1.1, 2.0, 4.0, 50.0] {
            let oracle = two_factor_oracle(m, omega, x);
            let fft = cdf_product_fft(&spec, x, &FftOptions::default()).unwrap();
            assert!(
                (fft.value - oracle).abs() <= 1e-9 * oracle.max(1e-3),
                "{m:?} {omega:?} x={x}: {} vs {oracle}",
                fft.value
            );
        }
    }
}

#[test]
fn fft_matches_mellin() {
    let cases = [
        (vec![1, 1], vec![0.5, 2.0]),
        (vec![2, 1, 1], vec![1.0, 3.0, 0.2]),
        (vec![1, 2, 3], vec![10.0, 10.0, 10.0]),
        (vec![1, 1, 1], vec![0.1, 1.0, 30.0]),
    ];
    for (shapes, scales) in cases {
        let spec = ProductDistSpec::new(shapes.clone(), scales.clone()).unwrap();
        for x in [1.5, 4.0, 16.0, 200.0] {
            let a = cdf_product_fft(&spec, x, &FftOptions::default()).unwrap().value;
            let b = cdf_product_mellin(&spec, x, &ContourOptions::default()).unwrap().value;
            assert!(
                (a - b).abs() <= 1e-8 * a.max(1e-6),
                "{shapes:?} {scales:?} x={x}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn fft_matches_sampling() {
    let spec = ProductDistSpec::new(vec![1, 2, 1], vec![2.0, 1.0, 5.0]).unwrap();
    let n = 10_000_000;
    for (x, seed) in [(4.0, 11), (20.0, 12)] {
        let p = cdf_product_fft(&spec, x, &FftOptions::default()).unwrap().value;
        let est = mc_cdf(&spec, x, n, seed);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((est - p).abs() < 4.0 * sigma, "x={x}: {est} vs {p} (σ={sigma})");
    }
}

#[test]
fn high_snr_ratio_tends_to_one() {
    let shapes = vec![1, 2, 1];
    let zeta = [1.0, 0.5, 2.0];
    let mut last_gap = f64::INFINITY;
    for gamma in [1e2, 1e3, 1e4, 1e5] {
        let scales: Vec<f64> = zeta.iter().map(|z| gamma * z).collect();
        let spec = ProductDistSpec::new(shapes.clone(), scales).unwrap();
        let exact = cdf_product_fft(&spec, 4.0, &FftOptions::default()).unwrap().value;
        let asy = cdf_product_asymptotic(&spec, 4.0, gamma, &zeta).unwrap();
        let gap = (exact / asy - 1.0).abs();
        assert!(gap < last_gap, "gap {gap} did not shrink at γ={gamma}");
        last_gap = gap;
    }
    assert!(last_gap < 1e-3);
}

#[test]
fn mb_constant_contour_cross_check() {
    let opts = ContourOptions {
        c: 4.5,
        ..ContourOptions::default()
    };
    for shapes in [vec![1, 4], vec![3, 3], vec![2, 1, 1, 2]] {
        for x in [1.5, 8.0, 64.0] {
            let series = mellin_barnes_constant(&shapes, x).unwrap();
            let contour = mellin_barnes_constant_contour(&shapes, x, &opts).unwrap();
            assert!((series - contour).abs() <= 1e-8 * series, "{shapes:?} x={x}");
        }
    }
    assert!(mellin_barnes_constant_contour(&[2, 3], 4.0, &ContourOptions::default()).is_err());
}

#[test]
fn trapezoid_error_is_second_order() {
    let spec = ProductDistSpec::new(vec![1, 1, 2], vec![1.0, 2.0, 0.7]).unwrap();
    let x = 6.0;
    let exact = cdf_product_fft(&spec, x, &FftOptions::default()).unwrap().value;
    let e1 = (cdf_on_grid(&spec, &LogGrid::spanning(x, 256).unwrap()).unwrap() - exact).abs();
    let e2 = (cdf_on_grid(&spec, &LogGrid::spanning(x, 512).unwrap()).unwrap() - exact).abs();
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn grid_limits_are_reported() {
    let spec = ProductDistSpec::new(vec![1, 1], vec![1.0, 1.0]).unwrap();
    let tight = FftOptions {
        initial_n: 16,
        max_n: 64,
        rel_tol: 1e-15,
        abs_tol: 0.0,
    };
    assert!(matches!(
        cdf_product_fft(&spec, 4.0, &tight),
        Err(harqir::Error::Convergence { .. })
    ));
    assert!(matches!(LogGrid::new(1.0, 48), Err(harqir::Error::GridTooSmall(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdf_is_monotone_and_bounded(
        shapes in prop::collection::vec(1u32..4, 2..4),
        log_scale in -1.0f64..2.0,
        x1 in 1.01f64..30.0,
        dx in 0.0f64..30.0,
    ) {
        let scales: Vec<f64> = (0..shapes.len()).map(|i| 10f64.powf(log_scale - 0.3 * i as f64)).collect();
        let spec = ProductDistSpec::new(shapes, scales).unwrap();
        let opts = FftOptions::default();
        let a = cdf_product_fft(&spec, x1, &opts).unwrap().value;
        let b = cdf_product_fft(&spec, x1 + dx, &opts).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn cdf_decreases_with_scale(m in 1u32..4, omega in 0.1f64..20.0, bump in 1.0f64..5.0, x in 1.5f64..40.0) {
        let opts = FftOptions::default();
        let lo = cdf_product_fft(&ProductDistSpec::new(vec![m, 1], vec![omega, 2.0]).unwrap(), x, &opts).unwrap().value;
        let hi = cdf_product_fft(&ProductDistSpec::new(vec![m, 1], vec![omega * bump, 2.0]).unwrap(), x, &opts).unwrap().value;
        prop_assert!(hi <= lo + 1e-12);
    }
}
