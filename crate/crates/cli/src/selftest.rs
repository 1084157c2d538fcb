//! Quick cross-checks of the numerical routes against independent oracles.

use harqir::channel::{ChannelSpec, PowerProfile};
use harqir::design::{allocate_equal_powers, required_power_product, DesignTarget};
use harqir::negmult::{build_table, nm_params};
use harqir::outage::{outage_asymptotic, Method, OutageQuery};
use harqir::product_dist::{cdf_product_fft, cdf_product_mellin, ContourOptions, FftOptions, ProductDistSpec};
use harqir::quad;
use harqir::special_fn::{g_k, g_k_deriv, gamma_cdf_int, DerivOrder};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Res<T> = harqir::Result<T>;

fn check(name: &'static str, run: impl FnOnce() -> Res<(bool, String)>) -> Check {
    match run() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn single_round() -> Res<(bool, String)> {
    let q = OutageQuery::new(
        ChannelSpec::uniform(0.6, 1.0, 1.0, 1)?,
        PowerProfile::equal(5.0, 1)?,
        1.5,
        Method::Exact { truncation: 60 },
    )?;
    let expected = 1.0 - (-(1.5f64.exp2() - 1.0) / 5.0).exp();
    let err = (q.evaluate()?.p - expected).abs();
    Ok((err < 1e-9, format!("|exact - closed form| = {err:.1e}")))
}

fn fft_vs_quadrature() -> Res<(bool, String)> {
    let (o1, o2, m2, x) = (0.7, 2.5, 2u32, 6.0);
    let c = x - 1.0;
    let oracle = quad::integrate(
        |r: f64| (-r / o1).exp() / o1 * gamma_cdf_int(m2, (c - r) / ((1.0 + r) * o2)),
        0.0,
        c,
        1e-14,
    )?;
    let fft = cdf_product_fft(&ProductDistSpec::new(vec![1, m2], vec![o1, o2])?, x, &FftOptions::default())?.value;
    let err = (fft - oracle).abs();
    Ok((err < 1e-9, format!("|fft - quadrature| = {err:.1e}")))
}

fn fft_vs_mellin() -> Res<(bool, String)> {
    let spec = ProductDistSpec::new(vec![1, 2, 1], vec![3.0, 0.5, 8.0])?;
    let mut worst = 0.0f64;
    for x in [1.5, 5.0, 40.0] {
        let a = cdf_product_fft(&spec, x, &FftOptions::default())?.value;
        let b = cdf_product_mellin(&spec, x, &ContourOptions::default())?.value;
        worst = worst.max((a - b).abs());
    }
    Ok((worst < 1e-8, format!("max |fft - mellin| = {worst:.1e}")))
}

fn exact_vs_simulation() -> Res<(bool, String)> {
    let q = OutageQuery::new(
        ChannelSpec::uniform(0.5, 1.0, 1.0, 3)?,
        PowerProfile::equal(3.0, 3)?,
        2.0,
        Method::Exact { truncation: 12 },
    )?;
    let e = q.evaluate()?;
    let m = q.with_method(Method::MonteCarlo { samples: 400_000, seed: 9 })?.evaluate()?;
    let sigma = (e.p * (1.0 - e.p) / 400_000.0).sqrt();
    let z = (m.p - e.p) / sigma;
    Ok((z.abs() < 4.0 + e.error / sigma, format!("z = {z:.2}, deficit {:.1e}", e.error)))
}

fn rate_derivatives() -> Res<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 1..=4u32 {
        for r in [0.5, 2.0, 5.0] {
            let g = |r: f64| g_k(k, r.exp2());
            let h = 1e-3 * r;
            let fd = (g(r - 2.0 * h)? - 8.0 * g(r - h)? + 8.0 * g(r + h)? - g(r + 2.0 * h)?) / (12.0 * h);
            let c = g_k_deriv(k, r, DerivOrder::First)?;
            worst = worst.max((fd / c - 1.0).abs());
        }
    }
    Ok((worst < 1e-7, format!("max relative derivative mismatch {worst:.1e}")))
}

fn weight_mass() -> Res<(bool, String)> {
    let ch = ChannelSpec::uniform(0.5, 1.0, 1.0, 3)?;
    let mass = build_table(&ch, 40)?.mass();
    let tail = (1.0 - nm_params(&ch).w0).powi(41);
    let err = (mass + tail - 1.0).abs();
    Ok((err < 1e-12, format!("|mass + tail - 1| = {err:.1e}")))
}

fn design_round_trip() -> Res<(bool, String)> {
    let ch = ChannelSpec::uniform(0.7, 1.0, 1.0, 3)?;
    let d = required_power_product(&DesignTarget::new(1e-4, ch.clone())?, 2.0)?;
    let q = OutageQuery::new(ch, allocate_equal_powers(d.product, 3)?, 2.0, Method::Asymptotic)?;
    let err = (outage_asymptotic(&q)?.p / 1e-4 - 1.0).abs();
    Ok((err < 1e-12, format!("relative target error {err:.1e}")))
}

pub fn run() -> Vec<Check> {
    vec![
        check("single-round closed form", single_round),
        check("fft vs nested quadrature", fft_vs_quadrature),
        check("fft vs mellin contour", fft_vs_mellin),
        check("exact vs monte carlo", exact_vs_simulation),
        check("rate derivative", rate_derivatives),
        check("weight mass", weight_mass),
        check("power design round trip", design_round_trip),
    ]
}
