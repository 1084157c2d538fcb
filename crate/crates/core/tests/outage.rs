use harqir::channel::{rng_stream, ChannelSpec, PowerProfile};
use harqir::negmult::MultiIndex;
use harqir::outage::*;
use harqir::product_dist::{cdf_product_fft, FftOptions, ProductDistSpec};
use harqir::special_fn::g_k;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Gamma;

fn query(rho: f64, powers: Vec<f64>, rate: f64, method: Method) -> OutageQuery {
    let k = powers.len();
    OutageQuery::new(
        ChannelSpec::uniform(rho, 1.0, 1.0, k).unwrap(),
        PowerProfile::new(powers).unwrap(),
        rate,
        method,
    )
    .unwrap()
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[test]
fn single_round_mc_closed_form() {
    let q = query(0.4, vec![10.0], 2.0, Method::MonteCarlo { samples: 1_000_000, seed: 3 });
    let r = outage_mc(&q).unwrap();
    let expected = 1.0 - (-0.3f64).exp();
    let (lo, hi) = r.ci.unwrap();
    assert!(lo <= expected && expected <= hi, "{expected} outside [{lo}, {hi}]");
}

#[test]
fn tiny_rate_gives_no_outage() {
    let q = query(0.5, vec![1.0, 1.0], 1e-9, Method::MonteCarlo { samples: 100_000, seed: 1 });
    assert!(outage_mc(&q).unwrap().p < 1e-3);
    let e = outage_exact(&q.with_method(Method::Exact { truncation: 3 }).unwrap()).unwrap();
    assert!(e.p < 1e-8);
}

#[test]
fn zero_correlation_is_a_single_term() {
    let q = query(0.0, vec![3.0, 2.0, 5.0], 2.0, Method::Exact { truncation: 3 });
    let e = outage_exact(&q).unwrap();
    assert_eq!(e.error, 0.0);
    let spec = ProductDistSpec::new(vec![1, 1, 1], vec![3.0, 2.0, 5.0]).unwrap();
    let direct = cdf_product_fft(&spec, 4.0, &FftOptions::default()).unwrap().value;
    assert_eq!(e.p, direct);
}

#[test]
fn exact_matches_simulation_within_ci_and_deficit() {
    for rho in [0.3, 0.7] {
        for p_db in [0.0, 5.0, 10.0] {
            let q = query(rho, vec![db(p_db); 4], 2.0, Method::Exact { truncation: 3 });
            let e = outage_exact(&q).unwrap();
            let m = outage_mc(&q.with_method(Method::MonteCarlo { samples: 1_000_000, seed: 77 }).unwrap())
                .unwrap();
            let sigma = (e.p * (1.0 - e.p) / 1e6).sqrt();
            assert!(
                (e.p - m.p).abs() <= 4.0 * sigma + e.error,
                "ρ={rho} P={p_db} dB: exact {} mc {} ± {} deficit {}",
                e.p,
                m.p,
                m.error,
                e.error
            );
        }
    }
}

#[test]
fn raising_truncation_closes_the_gap_to_simulation() {
    // ρ = 0.7 at 0 dB: N = 3 leaves about 10% of the mixture mass out
    let q = query(0.7, vec![1.0, 1.0], 2.0, Method::Exact { truncation: 40 });
    let e = outage_exact(&q).unwrap();
    assert!(e.error < 1e-6);
    let m = outage_mc(&q.with_method(Method::MonteCarlo { samples: 1_000_000, seed: 5 }).unwrap()).unwrap();
    let sigma = (e.p * (1.0 - e.p) / 1e6).sqrt();
    assert!((m.p - e.p).abs() < 4.0 * sigma, "{} vs {}", m.p, e.p);
}

// independent Nakagami rounds: |h_k|² ~ Gamma(m_k, spread_k / m_k)
fn nakagami_outage(shapes: &[u32], spread: &[f64], powers: &[f64], rate: f64, n: u64, seed: u64) -> (f64, f64) {
    let mut rng = rng_stream(seed, 0);
    let dists: Vec<Gamma<f64>> = shapes
        .iter()
        .zip(spread)
        .map(|(&m, &s)| Gamma::new(m as f64, s / m as f64).unwrap())
        .collect();
    let threshold = rate.exp2();
    let hits = (0..n)
        .filter(|_| {
            dists
                .iter()
                .zip(powers)
                .map(|(d, p)| 1.0 + p * rng.sample(d))
                .product::<f64>()
                < threshold
        })
        .count();
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[test]
fn mixture_terms_are_nakagami_outages() {
    let rho: f64 = 0.7;
    let powers = [2.0, 3.0, 1.5];
    let channel = ChannelSpec::uniform(rho, 1.0, 1.0, 3).unwrap();
    let profile = PowerProfile::new(powers.to_vec()).unwrap();
    let scales = component_scales(&channel, &profile);
    for l in [MultiIndex(vec![0, 0, 0]), MultiIndex(vec![1, 0, 0])] {
        let shapes: Vec<u32> = l.0.iter().map(|v| v + 1).collect();
        let spread: Vec<f64> = (1..=3)
            .map(|k| (1 + l.0[k - 1]) as f64 * (1.0 - channel.common_share(k)))
            .collect();
        let term = cdf_product_fft(
            &ProductDistSpec::new(shapes.clone(), scales.clone()).unwrap(),
            4.0,
            &FftOptions::default(),
        )
        .unwrap()
        .value;
        let (p, sd) = nakagami_outage(&shapes, &spread, &powers, 2.0, 1_000_000, 21);
        assert!((term - p).abs() < 4.0 * sd, "{l:?}: {term} vs {p} ± {sd}");
    }
}

#[test]
fn asymptotic_examples() {
    let a = outage_asymptotic(&query(0.0, vec![1000.0], 2.0, Method::Asymptotic)).unwrap();
    let exact = 1.0 - (-3.0f64 / 1000.0).exp();
    // x / (1 - e^{-x}) - 1 = x/2 + x²/12 + ...
    assert!((a.p / exact - 1.0 - (1.5e-3 + 0.75e-6)).abs() < 1e-9);
    let b = outage_asymptotic(&query(0.0, vec![100.0, 100.0], 2.0, Method::Asymptotic)).unwrap();
    assert!((b.p - g_k(2, 4.0).unwrap() / 1e4).abs() < 1e-18);
    assert!((b.p - 2.5452e-4).abs() < 1e-8);
}

#[test]
fn asymptotic_terms_add_up() {
    let channel = ChannelSpec::uniform(0.6, 1.0, 1.0, 3).unwrap();
    let power = PowerProfile::new(vec![100.0, 300.0, 50.0]).unwrap();
    let t = asymptotic_terms(&channel, &power, 2.5).unwrap();
    assert_eq!(t.ln_p(), t.ln_rate + t.ln_correlation + t.ln_power);
    let q = OutageQuery::new(channel.clone(), power.clone(), 2.5, Method::Asymptotic).unwrap();
    assert_eq!(outage_asymptotic(&q).unwrap().p, t.ln_p().exp());
    // doubling one power shifts only the power term
    let doubled = PowerProfile::new(vec![200.0, 300.0, 50.0]).unwrap();
    let t2 = asymptotic_terms(&channel, &doubled, 2.5).unwrap();
    assert_eq!(t2.ln_rate, t.ln_rate);
    assert_eq!(t2.ln_correlation, t.ln_correlation);
    assert!((t.ln_power - t2.ln_power - 2f64.ln()).abs() < 1e-14);
}

#[test]
fn ell_is_below_one_under_correlation() {
    // a single round is always marginally Rayleigh
    for rho in [0.0, 0.4, 0.9] {
        let l = ell(&ChannelSpec::uniform(rho, 1.0, 1.0, 1).unwrap());
        assert!((l - 1.0).abs() < 1e-15);
    }
    for k in 2..=6 {
        assert_eq!(ell(&ChannelSpec::uniform(0.0, 1.0, 1.0, k).unwrap()), 1.0);
        for i in 1..10 {
            let rho = i as f64 / 10.0;
            let l = ell(&ChannelSpec::uniform(rho, 1.0, 1.0, k).unwrap());
            assert!(l < 1.0 && l > 0.0, "K={k} ρ={rho}: {l}");
        }
    }
}

#[test]
fn asymptotic_ratio_approaches_one() {
    for rho in [0.0, 0.5] {
        let mut last = f64::INFINITY;
        for p_db in [30.0, 40.0, 50.0] {
            let q = query(rho, vec![db(p_db); 3], 2.0, Method::Exact { truncation: 3 });
            let e = outage_exact(&q).unwrap().p;
            let a = outage_asymptotic(&q.with_method(Method::Asymptotic).unwrap()).unwrap().p;
            let gap = (e / a - 1.0).abs();
            assert!(gap < last, "ρ={rho} {p_db} dB");
            last = gap;
        }
        assert!(last < 1e-3);
    }
}

#[test]
fn diversity_slopes() {
    let theta = vec![1.0, 1.0];
    for rho in [0.0, 0.7] {
        let ch = ChannelSpec::uniform(rho, 1.0, 1.0, 2).unwrap();
        let asy = diversity_slope(&ch, &theta, 2.0, &[20.0, 30.0], Method::Asymptotic).unwrap();
        assert!((asy.slope - 2.0).abs() < 1e-12);
        let exact = diversity_slope(&ch, &theta, 2.0, &[35.0, 45.0], Method::Exact { truncation: 3 }).unwrap();
        assert!((exact.slope - 2.0).abs() < 0.1);
    }
    let ch = ChannelSpec::uniform(0.5, 1.0, 1.0, 2).unwrap();
    let mc = diversity_slope(&ch, &theta, 2.0, &[10.0, 20.0], Method::MonteCarlo { samples: 20_000, seed: 1 });
    match mc {
        Ok(s) => assert!(s.unreliable),
        Err(e) => assert!(matches!(e, harqir::Error::Convergence { .. })),
    }
    assert!(diversity_slope(&ch, &theta, 2.0, &[10.0], Method::Asymptotic).is_err());
}

#[test]
fn results_serialize() {
    let r = outage_mc(&query(0.5, vec![2.0, 2.0], 2.0, Method::MonteCarlo { samples: 1000, seed: 1 })).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"method\":\"mc\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_monotone_in_power_and_rate(
        rho in 0.0f64..0.9,
        p in 0.5f64..50.0,
        bump in 1.0f64..4.0,
        rate in 0.5f64..4.0,
        dr in 0.0f64..1.0,
        which in 0usize..3,
    ) {
        let base = vec![p; 3];
        let mut raised = base.clone();
        raised[which] *= bump;
        for method in [Method::Exact { truncation: 2 }, Method::Asymptotic] {
            let a = query(rho, base.clone(), rate, method).evaluate().unwrap().p;
            let b = query(rho, raised.clone(), rate, method).evaluate().unwrap().p;
            let c = query(rho, base.clone(), rate + dr, method).evaluate().unwrap().p;
            prop_assert!(b <= a + 1e-12);
            prop_assert!(c >= a - 1e-12);
        }
    }

    #[test]
    fn mc_monotone_in_rate_for_fixed_seed(rho in 0.0f64..0.9, rate in 0.5f64..3.0, dr in 0.0f64..1.0) {
        // same seed means the same draws, so outage counts are nested
        let m = Method::MonteCarlo { samples: 20_000, seed: 4 };
        let a = outage_mc(&query(rho, vec![3.0, 3.0], rate, m)).unwrap().p;
        let b = outage_mc(&query(rho, vec![3.0, 3.0], rate + dr, m)).unwrap().p;
        prop_assert!(b >= a);
    }
}
