//! Exponentially time-correlated Rayleigh block fading.
//!
//! Round `k` sees `h_k = σ_k (√(1 - ρ^{2(k+δ-1)}) α_k + ρ^{k+δ-1} α_0)` with
//! `α_0, α_1, …, α_K` independent circularly-symmetric standard complex
//! normals. The received SNR is `γ_k = P_k |h_k|²`; every `γ_k` is
//! exponential with mean `P_k σ_k²`, and the rounds are coupled only
//! through the common component `α_0`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special_fn::ln_hyp0f1;

/// Correlation, feedback delay and per-round channel variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    rho: f64,
    delta: f64,
    sigma2: Vec<f64>,
}

impl ChannelSpec {
    /// `sigma2` holds one mean squared channel magnitude per round, so its
    /// length is the maximum number of transmissions `K`.
    pub fn new(rho: f64, delta: f64, sigma2: Vec<f64>) -> Result<Self> {
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::DegenerateCorrelation { rho });
        }
        // δ = 0 would make round 1 identical to the common component
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "feedback delay must be positive and finite, got {delta}"
            )));
        }
        if sigma2.is_empty() {
            return Err(Error::InvalidSpec("at least one round (K >= 1) is required".into()));
        }
        if let Some(bad) = sigma2.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "channel variances must be positive, got {bad}"
            )));
        }
        Ok(Self { rho, delta, sigma2 })
    }

    /// `K` rounds with a common channel variance.
    pub fn uniform(rho: f64, delta: f64, sigma2: f64, rounds: usize) -> Result<Self> {
        Self::new(rho, delta, vec![sigma2; rounds])
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    /// Number of rounds `K`.
    pub fn rounds(&self) -> usize {
        self.sigma2.len()
    }

    /// `ρ^{2(k+δ-1)}` for the 1-based round `k`: the share of round `k`'s
    /// channel power carried by the common component.
    pub fn common_share(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.rounds());
        (self.rho * self.rho).powf(k as f64 + self.delta - 1.0)
    }

    /// `ρ^{2(k+δ-1)} / (1 - ρ^{2(k+δ-1)})` for the 1-based round `k`.
    pub fn share_ratio(&self, k: usize) -> f64 {
        let r = self.common_share(k);
        r / (1.0 - r)
    }

    pub(crate) fn check_power(&self, power: &PowerProfile) -> Result<()> {
        if power.rounds() != self.rounds() {
            return Err(Error::InvalidSpec(format!(
                "power profile has {} rounds, channel has {}",
                power.rounds(),
                self.rounds()
            )));
        }
        Ok(())
    }
}

/// Per-round transmit powers, optionally kept in the split form `γ · θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    powers: Vec<f64>,
    split: Option<(f64, Vec<f64>)>,
}

impl PowerProfile {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::InvalidSpec("power profile is empty".into()));
        }
        if let Some(bad) = powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "transmit powers must be positive, got {bad}"
            )));
        }
        Ok(Self {
            powers,
            split: None,
        })
    }

    /// The same power `p` in each of `rounds` rounds.
    pub fn equal(p: f64, rounds: usize) -> Result<Self> {
        Self::new(vec![p; rounds])
    }

    /// Powers `P_k = γ θ_k`; `θ` is the fixed allocation shape, `γ` the scale.
    pub fn split(gamma: f64, theta: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidSpec(format!("gamma must be positive, got {gamma}")));
        }
        let mut profile = Self::new(theta.iter().map(|t| gamma * t).collect())?;
        if theta.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidSpec("theta entries must be positive".into()));
        }
        profile.split = Some((gamma, theta));
        Ok(profile)
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn rounds(&self) -> usize {
        self.powers.len()
    }

    /// `(γ, θ)` when the profile was built with [`PowerProfile::split`].
    pub fn gamma_theta(&self) -> Option<(f64, &[f64])> {
        self.split.as_ref().map(|(g, t)| (*g, t.as_slice()))
    }

    /// Product of the per-round powers `P_Π`.
    pub fn product(&self) -> f64 {
        self.powers.iter().product()
    }
}

/// One realization of the per-round SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSample {
    pub snr: Vec<f64>,
}

/// A deterministic random stream. Distinct `stream` ids under the same
/// `seed` are disjoint ChaCha keystreams, so parallel workers can own one
/// each without coordination.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Precomputed per-round amplitudes for repeated sampling.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    private: Vec<f64>,
    common: Vec<f64>,
    scale: Vec<f64>,
}

impl Sampler {
    pub(crate) fn new(spec: &ChannelSpec, power: &PowerProfile) -> Result<Self> {
        spec.check_power(power)?;
        let k_max = spec.rounds();
        let mut private = Vec::with_capacity(k_max);
        let mut common = Vec::with_capacity(k_max);
        let mut scale = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let r = spec.common_share(k);
            // only |ρ| matters for the joint law of the |h_k|²
            private.push((1.0 - r).sqrt());
            common.push(r.sqrt());
            scale.push(power.powers()[k - 1] * spec.sigma2()[k - 1]);
        }
        Ok(Self {
            private,
            common,
            scale,
        })
    }

    #[inline]
    fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        (re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let (c_re, c_im) = Self::complex_normal(rng);
        for (k, slot) in out.iter_mut().enumerate() {
            let (p_re, p_im) = Self::complex_normal(rng);
            let re = self.private[k] * p_re + self.common[k] * c_re;
            let im = self.private[k] * p_im + self.common[k] * c_im;
            *slot = self.scale[k] * (re * re + im * im);
        }
    }

    /// Draws one realization and returns `Π_k (1 + γ_k)`.
    pub(crate) fn draw_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (c_re, c_im) = Self::complex_normal(rng);
        let mut gain = 1.0;
        for k in 0..self.scale.len() {
            let (p_re, p_im) = Self::complex_normal(rng);
            let re = self.private[k] * p_re + self.common[k] * c_re;
            let im = self.private[k] * p_im + self.common[k] * c_im;
            gain *= 1.0 + self.scale[k] * (re * re + im * im);
        }
        gain
    }
}

/// Draws one SNR vector.
pub fn sample_snr<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    power: &PowerProfile,
    rng: &mut R,
) -> Result<SnrSample> {
    let sampler = Sampler::new(spec, power)?;
    let mut snr = vec![0.0; spec.rounds()];
    sampler.fill(rng, &mut snr);
    Ok(SnrSample { snr })
}

/// Density of `γ_k` at `x` given `|α_0|² = t` (`k` is 1-based).
///
/// Conditionally on the common component the round SNR is noncentral
/// chi-squared with two degrees of freedom:
/// `f(x | t) = Ω_k^{-1} exp(-(x + P_k σ_k² r t) / Ω_k) 0F1(; 1; r t x / ((1 - r) Ω_k))`
/// with `r = ρ^{2(k+δ-1)}` and `Ω_k = P_k σ_k² (1 - r)`.
pub fn cond_snr_pdf(
    spec: &ChannelSpec,
    power: &PowerProfile,
    k: usize,
    t: f64,
    x: f64,
) -> Result<f64> {
    spec.check_power(power)?;
    if k == 0 || k > spec.rounds() {
        return Err(domain(
            "cond_snr_pdf",
            format!("round {k} outside 1..={}", spec.rounds()),
        ));
    }
    if !(t >= 0.0) || !(x >= 0.0) {
        return Err(domain("cond_snr_pdf", format!("t = {t}, x = {x} must be nonnegative")));
    }
    let r = spec.common_share(k);
    let mean = power.powers()[k - 1] * spec.sigma2()[k - 1];
    let omega = mean * (1.0 - r);
    let arg = r * t * x / ((1.0 - r) * omega);
    let ln = -omega.ln() - (x + mean * r * t) / omega + ln_hyp0f1(1.0, arg)?;
    Ok(ln.exp())
}
