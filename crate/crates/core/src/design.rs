//! Power and rate design against the high-SNR outage formula.
//!
//! The asymptotic outage depends on the powers only through their product and
//! on the rate only through `G_K(2^R)`, which is increasing and convex in `R`.

use serde::Serialize;

use crate::channel::{ChannelSpec, PowerProfile};
use crate::error::{Error, Result};
use crate::outage::{asymptotic_terms, ell};
use crate::special_fn::{g_k, g_k_deriv, DerivOrder};

/// Per-round power below which the asymptotic formula is not trusted (20 dB).
pub const LOW_POWER_WARNING: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignTarget {
    pub epsilon: f64,
    pub channel: ChannelSpec,
}

impl DesignTarget {
    pub fn new(epsilon: f64, channel: ChannelSpec) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidSpec(format!("target outage must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon, channel })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerDesign {
    /// Required `Π_k P_k`.
    pub product: f64,
    /// Set when the equal split puts a round below [`LOW_POWER_WARNING`].
    pub low_power: bool,
}

/// `P_Π* = G_K(2^R) / (ℓ ε Π_k σ_k²)`: the power product meeting the target at rate `rate`.
pub fn required_power_product(target: &DesignTarget, rate: f64) -> Result<PowerDesign> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidSpec(format!("rate must be positive, got {rate}")));
    }
    let ch = &target.channel;
    let ln_sigma: f64 = ch.sigma2().iter().map(|s| s.ln()).sum();
    let k = ch.rounds() as u32;
    let ln_product = g_k(k, rate.exp2())?.ln() - ell(ch).ln() - target.epsilon.ln() - ln_sigma;
    let product = ln_product.exp();
    Ok(PowerDesign {
        product,
        low_power: (ln_product / k as f64).exp() < LOW_POWER_WARNING,
    })
}

/// Equal split `P_k = P_Π^{1/K}`, the least total power with the given product.
pub fn allocate_equal_powers(p_product: f64, rounds: usize) -> Result<PowerProfile> {
    if !(p_product > 0.0) || !p_product.is_finite() {
        return Err(Error::InvalidSpec(format!("power product must be positive, got {p_product}")));
    }
    if rounds == 0 {
        return Err(Error::InvalidSpec("need at least one round".into()));
    }
    PowerProfile::equal(p_product.powf(1.0 / rounds as f64), rounds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDesign {
    pub rate: f64,
    pub iterations: u32,
    /// `|G_K(2^R) - target|` after each iteration.
    pub residuals: Vec<f64>,
}

// G_K(2^R) must equal ε ℓ Π_k P_k σ_k²
fn rate_target(budget: &PowerProfile, spec: &ChannelSpec, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidSpec(format!("target outage must lie in (0, 1), got {epsilon}")));
    }
    // at R → 0⁺ the asymptotic outage vanishes, so a root exists whenever the
    // target is representable
    let terms = asymptotic_terms(spec, budget, 1.0)?;
    let target = (epsilon.ln() - terms.ln_correlation - terms.ln_power).exp();
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Infeasible(format!(
            "rate equation target {target} is not a positive finite number"
        )));
    }
    Ok(target)
}

fn bracket(k: u32, target: f64) -> Result<f64> {
    let mut hi = 1.0;
    while g_k(k, f64::exp2(hi))? < target {
        hi *= 2.0;
        if hi > 2048.0 {
            return Err(Error::Infeasible(format!("no rate up to {hi} bits reaches the target")));
        }
    }
    Ok(hi)
}

/// Largest rate whose asymptotic outage does not exceed `epsilon`.
///
/// Newton's method on the convex increasing `φ(R) = G_K(2^R) - target`,
/// started right of the root, so iterates decrease monotonically; a step
/// leaving the bracket is replaced by bisection.
pub fn max_rate(budget: &PowerProfile, spec: &ChannelSpec, epsilon: f64) -> Result<RateDesign> {
    let target = rate_target(budget, spec, epsilon)?;
    let k = spec.rounds() as u32;
    let phi = |r: f64| -> Result<f64> { Ok(g_k(k, r.exp2())? - target) };
    let mut lo = 0.0;
    let mut hi = bracket(k, target)?;
    let mut r = hi;
    let mut residuals = Vec::new();
    for iteration in 1..=200 {
        let f = phi(r)?;
        residuals.push(f.abs());
        if f.abs() <= 1e-13 * target {
            return Ok(RateDesign {
                rate: r,
                iterations: iteration,
                residuals,
            });
        }
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let slope = g_k_deriv(k, r, DerivOrder::First)?;
        let newton = r - f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - r).abs() <= 4.0 * f64::EPSILON * r {
            return Ok(RateDesign {
                rate: next,
                iterations: iteration,
                residuals,
            });
        }
        r = next;
    }
    Err(Error::Convergence {
        what: "max_rate Newton iteration",
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Same root by plain bisection, as an independent check on [`max_rate`].
pub fn max_rate_bisection(budget: &PowerProfile, spec: &ChannelSpec, epsilon: f64) -> Result<f64> {
    let target = rate_target(budget, spec, epsilon)?;
    let k = spec.rounds() as u32;
    let mut lo = 0.0;
    let mut hi = bracket(k, target)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_k(k, mid.exp2())? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
