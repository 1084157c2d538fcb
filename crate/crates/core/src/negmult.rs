//! Negative multinomial mixture weights.
//!
//! Conditioning on the common fading component makes the rounds independent
//! noncentral chi-squared variables, i.e. Poisson mixtures of Gamma
//! variables. Averaging the Poisson counts over the exponential common power
//! leaves a negative multinomial `NM(1, w)` law on the count vector `l`,
//! whose probabilities `W_l` weight the independent-channel terms.

use serde::Serialize;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::special_fn::ln_gamma;

/// Default cap on the number of enumerated indices in a [`WeightTable`].
pub const DEFAULT_TABLE_CAP: u128 = 5_000_000;

/// Count vector `(l_1, …, l_K)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|l| *l == 0)
    }
}

/// `W_0` and the per-round parameters `w_k` of `NM(1, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NmParams {
    pub w0: f64,
    pub w: Vec<f64>,
}

/// `W_0 = (1 + Σ_k u_k)^{-1}` and `w_k = u_k W_0`, with
/// `u_k = ρ^{2(k+δ-1)} / (1 - ρ^{2(k+δ-1)})`.
pub fn nm_params(spec: &ChannelSpec) -> NmParams {
    let u: Vec<f64> = (1..=spec.rounds()).map(|k| spec.share_ratio(k)).collect();
    let w0 = 1.0 / (1.0 + u.iter().sum::<f64>());
    NmParams {
        w0,
        w: u.iter().map(|uk| uk * w0).collect(),
    }
}

impl NmParams {
    /// `ln W_l = ln W_0 + ln (Σ l_k)! + Σ_k (l_k ln w_k - ln l_k!)`.
    pub fn ln_weight(&self, l: &MultiIndex) -> f64 {
        assert_eq!(l.len(), self.w.len(), "index length must equal K");
        let mut ln = self.w0.ln() + ln_gamma(l.total() as f64 + 1.0);
        for (&lk, &wk) in l.0.iter().zip(&self.w) {
            if lk == 0 {
                continue;
            }
            if wk == 0.0 {
                return f64::NEG_INFINITY;
            }
            ln += lk as f64 * wk.ln() - ln_gamma(lk as f64 + 1.0);
        }
        ln
    }

    pub fn weight(&self, l: &MultiIndex) -> f64 {
        self.ln_weight(l).exp()
    }

    /// Probability that the counts sum to exactly `n`: `W_0 (1 - W_0)^n`.
    pub fn total_pmf(&self, n: u32) -> f64 {
        self.w0 * (1.0 - self.w0).powi(n as i32)
    }
}

/// Mixture weight `W_l` of the count vector `l`.
pub fn weight(spec: &ChannelSpec, l: &MultiIndex) -> Result<f64> {
    if l.len() != spec.rounds() {
        return Err(Error::InvalidSpec(format!(
            "index has {} entries, channel has {} rounds",
            l.len(),
            spec.rounds()
        )));
    }
    Ok(nm_params(spec).weight(l))
}

/// All weights with `Σ l_k ≤ N`, in graded order (by total, then
/// lexicographically descending within a total).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    entries: Vec<(MultiIndex, f64)>,
    truncation: u32,
    mass: f64,
}

/// `C(N + K, K)`, the number of count vectors with `Σ l_k ≤ N`.
pub fn table_size(rounds: usize, truncation: u32) -> u128 {
    let (n, k) = (truncation as u128, rounds as u128);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (n + i) / i;
    }
    c
}

pub fn build_table(spec: &ChannelSpec, truncation: u32) -> Result<WeightTable> {
    build_table_capped(spec, truncation, DEFAULT_TABLE_CAP)
}

pub fn build_table_capped(spec: &ChannelSpec, truncation: u32, cap: u128) -> Result<WeightTable> {
    let k = spec.rounds();
    let count = table_size(k, truncation);
    if count > cap {
        return Err(Error::Resource { count, cap });
    }
    let params = nm_params(spec);
    let mut entries = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; k];
    for total in 0..=truncation {
        compositions(&mut current, 0, total, &mut |l| {
            let idx = MultiIndex(l.to_vec());
            let w = params.weight(&idx);
            entries.push((idx, w));
        });
    }
    let mass = entries.iter().map(|(_, w)| w).sum();
    Ok(WeightTable {
        entries,
        truncation,
        mass,
    })
}

// every way to write `remaining` as an ordered sum over slots pos..len
fn compositions(current: &mut [u32], pos: usize, remaining: u32, emit: &mut dyn FnMut(&[u32])) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        emit(current);
        current[pos] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(current, pos + 1, remaining - v, emit);
    }
    current[pos] = 0;
}

impl WeightTable {
    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// Sum of the included weights.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `1 - mass`: an upper bound on what the discarded terms can add to any
    /// mixture of probabilities.
    pub fn deficit(&self) -> f64 {
        (1.0 - self.mass).max(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Smallest truncation order whose table mass reaches `target`, or `None`
/// if none does up to `max_order`.
pub fn order_for_mass(spec: &ChannelSpec, target: f64, max_order: u32) -> Option<u32> {
    let params = nm_params(spec);
    let mut mass = 0.0;
    for n in 0..=max_order {
        mass += params.total_pmf(n);
        if mass >= target {
            return Some(n);
        }
    }
    None
}
