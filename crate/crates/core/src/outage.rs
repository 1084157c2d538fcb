//! Outage probability `P(Π_k (1 + γ_k) < 2^R)` by three methods.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, PowerProfile, Sampler, SnrSample};
use crate::error::{Error, Result};
use crate::negmult::build_table;
use crate::product_dist::{cdf_product_fft, FftOptions, ProductDistSpec};
use crate::special_fn::g_k;

/// Samples per Monte Carlo chunk. Chunk `i` always uses RNG stream `i`, so the
/// estimate does not depend on how chunks are spread over threads.
pub const MC_CHUNK: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Exact,
    Mc,
    Asymptotic,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::Exact => "exact",
            MethodTag::Mc => "mc",
            MethodTag::Asymptotic => "asymptotic",
        }
    }
}

impl std::str::FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MethodTag::Exact),
            "mc" | "montecarlo" | "monte-carlo" => Ok(MethodTag::Mc),
            "asymptotic" | "asy" => Ok(MethodTag::Asymptotic),
            other => Err(Error::InvalidSpec(format!(
                "unknown method '{other}' (expected exact, mc or asymptotic)"
            ))),
        }
    }
}

/// Evaluation method with its method-specific settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact { truncation: u32 },
    MonteCarlo { samples: u64, seed: u64 },
    Asymptotic,
}

impl Method {
    pub fn tag(&self) -> MethodTag {
        match self {
            Method::Exact { .. } => MethodTag::Exact,
            Method::MonteCarlo { .. } => MethodTag::Mc,
            Method::Asymptotic => MethodTag::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageQuery {
    pub channel: ChannelSpec,
    pub power: PowerProfile,
    /// Target rate in bits per channel use.
    pub rate: f64,
    pub method: Method,
}

impl OutageQuery {
    pub fn new(channel: ChannelSpec, power: PowerProfile, rate: f64, method: Method) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidSpec(format!("rate must be positive and finite, got {rate}")));
        }
        if let Method::MonteCarlo { samples: 0, .. } = method {
            return Err(Error::InvalidSpec("Monte Carlo needs at least one sample".into()));
        }
        channel.check_power(&power)?;
        Ok(Self {
            channel,
            power,
            rate,
            method,
        })
    }

    pub fn with_method(&self, method: Method) -> Result<Self> {
        Self::new(self.channel.clone(), self.power.clone(), self.rate, method)
    }

    /// Outage threshold `2^R` on the product `Π (1 + γ_k)`.
    pub fn threshold(&self) -> f64 {
        self.rate.exp2()
    }

    pub fn evaluate(&self) -> Result<OutageResult> {
        match self.method {
            Method::Exact { .. } => outage_exact(self),
            Method::MonteCarlo { .. } => outage_mc(self),
            Method::Asymptotic => outage_asymptotic(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryInfo {
    pub rounds: usize,
    pub rho: f64,
    pub rate: f64,
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageResult {
    pub p: f64,
    pub method: MethodTag,
    /// Truncation deficit bound (exact), 95% CI half-width (Monte Carlo) or
    /// zero (asymptotic).
    pub error: f64,
    /// Wilson 95% interval (Monte Carlo only).
    pub ci: Option<(f64, f64)>,
    /// Set when the asymptotic value exceeded one and was clamped.
    pub clamped: bool,
    /// Accumulated numerical error of the mixture terms (exact only).
    pub numerical_error: f64,
    pub info: QueryInfo,
}

fn info(q: &OutageQuery) -> QueryInfo {
    QueryInfo {
        rounds: q.channel.rounds(),
        rho: q.channel.rho(),
        rate: q.rate,
        powers: q.power.powers().to_vec(),
    }
}

/// `Σ_k log₂(1 + γ_k)`.
pub fn accumulated_info(snr: &SnrSample) -> f64 {
    snr.snr.iter().map(|g| g.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// Wilson score interval for `hits` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Monte Carlo estimate on the global rayon pool.
pub fn outage_mc(q: &OutageQuery) -> Result<OutageResult> {
    let Method::MonteCarlo { samples, seed } = q.method else {
        return Err(Error::InvalidSpec("outage_mc needs a Monte Carlo query".into()));
    };
    let sampler = Sampler::new(&q.channel, &q.power)?;
    let threshold = q.threshold();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            (0..n)
                .filter(|_| sampler.draw_gain(&mut rng) < threshold)
                .count() as u64
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let ci = wilson_interval(hits, samples, Z95);
    Ok(OutageResult {
        p,
        method: MethodTag::Mc,
        error: 0.5 * (ci.1 - ci.0),
        ci: Some(ci),
        clamped: false,
        numerical_error: 0.0,
        info: info(q),
    })
}

/// Monte Carlo estimate on a dedicated pool of `workers` threads.
pub fn outage_mc_with_workers(q: &OutageQuery, workers: usize) -> Result<OutageResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| outage_mc(q))
}

/// `Σ_{Σl ≤ N} W_l F_{A_l}(2^R)`, each term evaluated on the log grid.
pub fn outage_exact(q: &OutageQuery) -> Result<OutageResult> {
    outage_exact_with(q, &FftOptions::default())
}

pub fn outage_exact_with(q: &OutageQuery, opts: &FftOptions) -> Result<OutageResult> {
    let Method::Exact { truncation } = q.method else {
        return Err(Error::InvalidSpec("outage_exact needs an exact query".into()));
    };
    let table = build_table(&q.channel, truncation)?;
    let scales = component_scales(&q.channel, &q.power);
    let x = q.threshold();
    let terms: Vec<(f64, f64)> = table
        .entries()
        .par_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(l, w)| {
            let spec = ProductDistSpec::from_counts(&l.0, scales.clone())?;
            let f = cdf_product_fft(&spec, x, opts)?;
            Ok((w * f.value, w * f.error))
        })
        .collect::<Result<_>>()?;
    let p: f64 = terms.iter().map(|t| t.0).sum();
    let numerical_error = terms.iter().map(|t| t.1).sum();
    Ok(OutageResult {
        p: p.clamp(0.0, 1.0),
        method: MethodTag::Exact,
        error: table.deficit(),
        ci: None,
        clamped: false,
        numerical_error,
        info: info(q),
    })
}

/// Scales `Ω_k = P_k σ_k² (1 - ρ^{2(k+δ-1)})` shared by every mixture term.
pub fn component_scales(channel: &ChannelSpec, power: &PowerProfile) -> Vec<f64> {
    (1..=channel.rounds())
        .map(|k| power.powers()[k - 1] * channel.sigma2()[k - 1] * (1.0 - channel.common_share(k)))
        .collect()
}

/// Correlation factor `ℓ = (1 + Σ_k u_k) Π_k (1 - ρ^{2(k+δ-1)})`.
pub fn ell(spec: &ChannelSpec) -> f64 {
    let mut sum_u = 0.0;
    let mut prod = 1.0;
    for k in 1..=spec.rounds() {
        sum_u += spec.share_ratio(k);
        prod *= 1.0 - spec.common_share(k);
    }
    (1.0 + sum_u) * prod
}

/// The three factors of the asymptotic outage, kept in log form so their
/// contributions add exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticTerms {
    /// `ln G_K(2^R)`.
    pub ln_rate: f64,
    /// `-ln ℓ`.
    pub ln_correlation: f64,
    /// `-Σ_k ln(P_k σ_k²)`.
    pub ln_power: f64,
}

impl AsymptoticTerms {
    pub fn ln_p(&self) -> f64 {
        self.ln_rate + self.ln_correlation + self.ln_power
    }
}

pub fn asymptotic_terms(channel: &ChannelSpec, power: &PowerProfile, rate: f64) -> Result<AsymptoticTerms> {
    channel.check_power(power)?;
    let k = channel.rounds() as u32;
    Ok(AsymptoticTerms {
        ln_rate: g_k(k, rate.exp2())?.ln(),
        ln_correlation: -ell(channel).ln(),
        ln_power: -power
            .powers()
            .iter()
            .zip(channel.sigma2())
            .map(|(p, s)| (p * s).ln())
            .sum::<f64>(),
    })
}

/// High-SNR outage `G_K(2^R) / (ℓ Π_k P_k σ_k²)`, clamped to one.
pub fn outage_asymptotic(q: &OutageQuery) -> Result<OutageResult> {
    let terms = asymptotic_terms(&q.channel, &q.power, q.rate)?;
    let raw = terms.ln_p().exp();
    Ok(OutageResult {
        p: raw.min(1.0),
        method: MethodTag::Asymptotic,
        error: 0.0,
        ci: None,
        clamped: raw > 1.0,
        numerical_error: 0.0,
        info: info(q),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    /// `-d log₁₀ p / d log₁₀ γ`, least squares over the points.
    pub slope: f64,
    /// Set when a Monte Carlo point saw fewer than 100 outage events.
    pub unreliable: bool,
}

/// Diversity slope over the power family `P = γ θ`, with `gammas_db` in dB.
pub fn diversity_slope(
    channel: &ChannelSpec,
    theta: &[f64],
    rate: f64,
    gammas_db: &[f64],
    method: Method,
) -> Result<SlopeEstimate> {
    if gammas_db.len() < 2 {
        return Err(Error::InvalidSpec("diversity slope needs at least two points".into()));
    }
    let mut xs = Vec::with_capacity(gammas_db.len());
    let mut ys = Vec::with_capacity(gammas_db.len());
    let mut unreliable = false;
    for &db in gammas_db {
        let gamma = 10f64.powf(db / 10.0);
        let power = PowerProfile::split(gamma, theta.to_vec())?;
        let q = OutageQuery::new(channel.clone(), power, rate, method)?;
        let r = q.evaluate()?;
        if let Method::MonteCarlo { samples, .. } = method {
            unreliable |= r.p * (samples as f64) < 100.0;
        }
        if r.p <= 0.0 {
            return Err(Error::Convergence {
                what: "diversity slope (zero outage estimate)",
                residual: 0.0,
            });
        }
        xs.push(db / 10.0);
        ys.push(r.p.log10());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(SlopeEstimate {
        slope: -sxy / sxx,
        unreliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn query(rho: f64, k: usize, p: f64, method: Method) -> OutageQuery {
        OutageQuery::new(
            ChannelSpec::uniform(rho, 1.0, 1.0, k).unwrap(),
            PowerProfile::equal(p, k).unwrap(),
            2.0,
            method,
        )
        .unwrap()
    }

    #[test]
    fn accumulated_info_examples() {
        assert_eq!(accumulated_info(&SnrSample { snr: vec![0.0, 0.0] }), 0.0);
        assert_relative_eq!(accumulated_info(&SnrSample { snr: vec![1.0, 3.0] }), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn query_validation() {
        let c = ChannelSpec::uniform(0.5, 1.0, 1.0, 2).unwrap();
        let p = PowerProfile::equal(1.0, 2).unwrap();
        assert!(OutageQuery::new(c.clone(), p.clone(), 0.0, Method::Asymptotic).is_err());
        assert!(OutageQuery::new(c.clone(), p.clone(), 1.0, Method::MonteCarlo { samples: 0, seed: 1 }).is_err());
        assert!(OutageQuery::new(c, PowerProfile::equal(1.0, 3).unwrap(), 1.0, Method::Asymptotic).is_err());
        assert!(outage_mc(&query(0.5, 2, 1.0, Method::Asymptotic)).is_err());
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(&ChannelSpec::uniform(0.0, 1.0, 1.0, 3).unwrap()), 1.0);
        assert_relative_eq!(
            ell(&ChannelSpec::uniform(0.5, 1.0, 1.0, 2).unwrap()),
            1.4 * 0.75 * 0.9375,
            max_relative = 1e-14
        );
    }

    #[test]
    fn single_round_closed_form() {
        let expected = 1.0 - (-0.3f64).exp();
        for rho in [0.0, 0.6] {
            let r = outage_exact(&query(rho, 1, 10.0, Method::Exact { truncation: 3 })).unwrap();
            // the mixture collapses because K = 1 makes every term a Gamma CDF
            assert!((r.p - expected).abs() <= 1e-6 + r.error, "{} vs {expected}", r.p);
        }
        let a = outage_asymptotic(&query(0.0, 1, 1000.0, Method::Asymptotic)).unwrap();
        assert_relative_eq!(a.p, 0.003, max_relative = 1e-12);
    }

    #[test]
    fn asymptotic_clamps_at_low_snr() {
        let a = outage_asymptotic(&query(0.5, 3, 0.1, Method::Asymptotic)).unwrap();
        assert_eq!(a.p, 1.0);
        assert!(a.clamped);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn mc_reproducible_across_worker_counts() {
        let q = query(0.5, 3, 3.0, Method::MonteCarlo { samples: 200_000, seed: 9 });
        let a = outage_mc_with_workers(&q, 1).unwrap();
        let b = outage_mc_with_workers(&q, 4).unwrap();
        assert_eq!(a, b);
    }
}
