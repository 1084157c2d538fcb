//! Parameter sweeps over a base configuration.

use std::path::PathBuf;
use std::time::Instant;

use harqir::outage::{Method, MethodTag, OutageResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, OneOrMany, SweepVar};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub base: Config,
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(base: Config, variable: SweepVar, values: Vec<f64>, output: Option<PathBuf>) -> CliResult<Self> {
        if values.is_empty() {
            return Err(CliError::Config("sweep has no values".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("sweep value {v} is not finite")));
        }
        Ok(Self {
            base,
            variable,
            values,
            output,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout {
            variable: self.variable,
            methods: self.base.methods.clone(),
        }
    }
}

/// Column structure shared by all rows of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub variable: SweepVar,
    pub methods: Vec<MethodTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: MethodTag,
    pub p: Option<f64>,
    pub error: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub clamped: bool,
    /// Samples actually drawn (Monte Carlo only).
    pub samples: Option<u64>,
    pub failure: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub variable: SweepVar,
    pub value: f64,
    #[serde(rename = "K")]
    pub rounds: usize,
    pub rho: f64,
    pub delta: f64,
    pub sigma2: Vec<f64>,
    pub powers: Vec<f64>,
    pub rate_bits: f64,
    #[serde(rename = "truncation_N")]
    pub truncation: u32,
    pub mc_samples: u64,
    pub seed: u64,
    pub methods: Vec<MethodOutcome>,
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

/// Monte Carlo with optional doubling of the sample count.
fn run_mc(cfg: &Config) -> harqir::Result<(OutageResult, u64)> {
    let mut samples = cfg.mc_samples;
    loop {
        let q = cfg
            .query(MethodTag::Mc)
            .map_err(|e| harqir::Error::InvalidSpec(e.to_string()))?
            .with_method(Method::MonteCarlo {
                samples,
                seed: cfg.seed,
            })?;
        let r = q.evaluate()?;
        let precise = r.p > 0.0 && r.error < 0.1 * r.p;
        match cfg.mc_max_samples {
            Some(cap) if !precise && samples.saturating_mul(2) <= cap => samples *= 2,
            _ => return Ok((r, samples)),
        }
    }
}

pub fn evaluate(cfg: &Config, tag: MethodTag) -> MethodOutcome {
    let start = Instant::now();
    let result = match tag {
        MethodTag::Mc => run_mc(cfg).map(|(r, n)| (r, Some(n))),
        _ => cfg
            .query(tag)
            .map_err(|e| harqir::Error::InvalidSpec(e.to_string()))
            .and_then(|q| q.evaluate())
            .map(|r| (r, None)),
    };
    let wall_time_s = sig12(start.elapsed().as_secs_f64());
    match result {
        Ok((r, samples)) => MethodOutcome {
            method: tag,
            p: Some(sig12(r.p)),
            error: Some(sig12(r.error)),
            ci: r.ci.map(|(lo, hi)| (sig12(lo), sig12(hi))),
            clamped: r.clamped,
            samples,
            failure: None,
            wall_time_s,
        },
        Err(e) => failed(tag, e.to_string()),
    }
}

fn failed(tag: MethodTag, msg: String) -> MethodOutcome {
    MethodOutcome {
        method: tag,
        p: None,
        error: None,
        ci: None,
        clamped: false,
        samples: None,
        failure: Some(msg),
        wall_time_s: 0.0,
    }
}

fn row_for(cfg: &Config, variable: SweepVar, value: f64, methods: Vec<MethodOutcome>) -> ResultRow {
    let sigma2 = match &cfg.sigma2 {
        OneOrMany::One(s) => vec![*s; cfg.rounds],
        OneOrMany::Many(v) => v.clone(),
    };
    let powers = cfg.power_profile().map(|p| p.powers().to_vec()).unwrap_or_default();
    ResultRow {
        variable,
        value,
        rounds: cfg.rounds,
        rho: cfg.rho,
        delta: cfg.delta,
        sigma2,
        powers: powers.into_iter().map(sig12).collect(),
        rate_bits: cfg.rate,
        truncation: cfg.truncation,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        methods,
    }
}

/// Evaluates every method at every sweep value. Points run in parallel;
/// rows come back in sweep order. A failing point is recorded in its row.
pub fn run_sweep(cfg: &SweepConfig) -> Vec<ResultRow> {
    cfg.values
        .par_iter()
        .map(|&value| match cfg.base.with(cfg.variable, value) {
            Ok(point) => {
                let outcomes = cfg.base.methods.iter().map(|&m| evaluate(&point, m)).collect();
                row_for(&point, cfg.variable, value, outcomes)
            }
            Err(e) => {
                let outcomes = cfg.base.methods.iter().map(|&m| failed(m, e.to_string())).collect();
                row_for(&cfg.base, cfg.variable, value, outcomes)
            }
        })
        .collect()
}
