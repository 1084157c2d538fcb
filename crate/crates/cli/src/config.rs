//! Configuration files, command-line overrides and their resolution into
//! outage queries.

use std::path::Path;
use std::str::FromStr;

use harqir::channel::{ChannelSpec, PowerProfile};
use harqir::outage::{Method, MethodTag, OutageQuery};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    /// Per-round transmit power in dB (or `gamma` in dB for a split profile).
    #[serde(rename = "P_T_dB", alias = "p_t_db", alias = "power_db")]
    PowerDb,
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "rate_bits", alias = "rate", alias = "R")]
    Rate,
    #[serde(rename = "K", alias = "k")]
    Rounds,
}

impl SweepVar {
    pub fn column(&self) -> &'static str {
        match self {
            SweepVar::PowerDb => "P_T_dB",
            SweepVar::Rho => "rho",
            SweepVar::Rate => "rate_bits",
            SweepVar::Rounds => "K",
        }
    }
}

impl FromStr for SweepVar {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "P_T_dB" | "p_t_db" | "power_db" | "power" => Ok(SweepVar::PowerDb),
            "rho" => Ok(SweepVar::Rho),
            "rate_bits" | "rate" | "R" => Ok(SweepVar::Rate),
            "K" | "k" => Ok(SweepVar::Rounds),
            other => Err(CliError::Config(format!(
                "unknown sweep variable '{other}' (expected P_T_dB, rho, rate_bits or K)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

/// Contents of a configuration file. Every key is optional; missing keys
/// fall back to the defaults of [`Config::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct FileConfig {
    pub K: Option<usize>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub sigma2: Option<OneOrMany>,
    pub powers: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub theta: Option<Vec<f64>>,
    pub rate_bits: Option<f64>,
    pub truncation_N: Option<u32>,
    pub mc_samples: Option<u64>,
    pub mc_max_samples: Option<u64>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<MethodTag>>,
    pub sweep: Option<SweepSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Overwrites every key set in `other`.
    pub fn merge(&mut self, other: FileConfig) {
        let split_given = other.gamma.is_some() || other.theta.is_some();
        let explicit_given = other.powers.is_some();
        if split_given && !explicit_given {
            self.powers = None;
        }
        if explicit_given {
            self.gamma = None;
            self.theta = None;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(K, rho, delta, sigma2, powers, gamma, theta, rate_bits, truncation_N, mc_samples, mc_max_samples, seed, methods, sweep);
    }
}

/// Transmit powers before the number of rounds is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PowerSpec {
    /// Explicit linear per-round powers.
    Explicit(Vec<f64>),
    /// `P_k = gamma * theta_k`; a missing `theta` means equal powers.
    Split { gamma: f64, theta: Option<Vec<f64>> },
}

/// A fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub rounds: usize,
    pub rho: f64,
    pub delta: f64,
    pub sigma2: OneOrMany,
    pub power: PowerSpec,
    pub rate: f64,
    pub truncation: u32,
    pub mc_samples: u64,
    /// When set, Monte Carlo doubles its sample count until the CI
    /// half-width drops below 10% of the estimate or this cap is reached.
    pub mc_max_samples: Option<u64>,
    pub seed: u64,
    pub methods: Vec<MethodTag>,
}

impl Config {
    pub fn resolve(f: &FileConfig) -> CliResult<Self> {
        let power = match (&f.powers, f.gamma, &f.theta) {
            (Some(p), None, None) => PowerSpec::Explicit(p.clone()),
            (None, Some(gamma), theta) => PowerSpec::Split {
                gamma,
                theta: theta.clone(),
            },
            (None, None, None) => PowerSpec::Split {
                gamma: 10.0,
                theta: None,
            },
            (None, None, Some(_)) => {
                return Err(CliError::Config("`theta` needs `gamma` (the power scale)".into()))
            }
            (Some(_), _, _) => {
                return Err(CliError::Config(
                    "give either `powers` or `gamma` (+ optional `theta`), not both".into(),
                ))
            }
        };
        let rounds = match (f.K, &power) {
            (Some(k), _) => k,
            (None, PowerSpec::Explicit(p)) => p.len(),
            (None, PowerSpec::Split { theta: Some(t), .. }) => t.len(),
            (None, _) => 2,
        };
        let cfg = Config {
            rounds,
            rho: f.rho.unwrap_or(0.5),
            delta: f.delta.unwrap_or(1.0),
            sigma2: f.sigma2.clone().unwrap_or(OneOrMany::One(1.0)),
            power,
            rate: f.rate_bits.unwrap_or(2.0),
            truncation: f.truncation_N.unwrap_or(3),
            mc_samples: f.mc_samples.unwrap_or(1_000_000),
            mc_max_samples: f.mc_max_samples,
            seed: f.seed.unwrap_or(1),
            methods: f
                .methods
                .clone()
                .unwrap_or_else(|| vec![MethodTag::Exact, MethodTag::Asymptotic]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.rounds < 1 {
            return bad(format!("K = {}: need at least one transmission round (K >= 1)", self.rounds));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!(
                "rho = {}: the correlation coefficient must satisfy |rho| < 1; |rho| = 1 is the quasi-static channel",
                self.rho
            ));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta = {}: the initial lag must be positive", self.delta));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate_bits = {}: the rate must be positive and finite", self.rate));
        }
        if self.mc_samples == 0 {
            return bad("mc_samples = 0: Monte Carlo needs at least one sample".into());
        }
        if self.methods.is_empty() {
            return bad("methods is empty: choose from exact, mc, asymptotic".into());
        }
        let check_len = |name: &str, n: usize| {
            if n == self.rounds {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "`{name}` has {n} entries but K = {}; give one entry per round",
                    self.rounds
                )))
            }
        };
        let positive = |name: &str, v: &[f64]| match v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            Some(i) => Err(CliError::Config(format!(
                "{name}[{i}] = {}: every entry must be positive and finite",
                v[i]
            ))),
            None => Ok(()),
        };
        match &self.sigma2 {
            OneOrMany::One(s) => positive("sigma2", &[*s])?,
            OneOrMany::Many(v) => {
                check_len("sigma2", v.len())?;
                positive("sigma2", v)?;
            }
        }
        match &self.power {
            PowerSpec::Explicit(p) => {
                check_len("powers", p.len())?;
                positive("powers", p)?;
            }
            PowerSpec::Split { gamma, theta } => {
                positive("gamma", &[*gamma])?;
                if let Some(t) = theta {
                    check_len("theta", t.len())?;
                    positive("theta", t)?;
                }
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> CliResult<ChannelSpec> {
        let spec = match &self.sigma2 {
            OneOrMany::One(s) => ChannelSpec::uniform(self.rho, self.delta, *s, self.rounds),
            OneOrMany::Many(v) => ChannelSpec::new(self.rho, self.delta, v.clone()),
        };
        Ok(spec?)
    }

    pub fn power_profile(&self) -> CliResult<PowerProfile> {
        let p = match &self.power {
            PowerSpec::Explicit(p) => PowerProfile::new(p.clone()),
            PowerSpec::Split { gamma, theta: Some(t) } => PowerProfile::split(*gamma, t.clone()),
            PowerSpec::Split { gamma, theta: None } => PowerProfile::equal(*gamma, self.rounds),
        };
        Ok(p?)
    }

    pub fn method(&self, tag: MethodTag) -> Method {
        match tag {
            MethodTag::Exact => Method::Exact {
                truncation: self.truncation,
            },
            MethodTag::Mc => Method::MonteCarlo {
                samples: self.mc_samples,
                seed: self.seed,
            },
            MethodTag::Asymptotic => Method::Asymptotic,
        }
    }

    pub fn query(&self, tag: MethodTag) -> CliResult<OutageQuery> {
        Ok(OutageQuery::new(
            self.channel()?,
            self.power_profile()?,
            self.rate,
            self.method(tag),
        )?)
    }

    /// Copy of `self` with one variable replaced by a sweep value.
    pub fn with(&self, var: SweepVar, value: f64) -> CliResult<Config> {
        let mut c = self.clone();
        match var {
            SweepVar::PowerDb => match &mut c.power {
                PowerSpec::Split { gamma, .. } => *gamma = db_to_linear(value),
                PowerSpec::Explicit(_) => {
                    return Err(CliError::Config(
                        "sweeping P_T_dB conflicts with explicit `powers`; use `gamma` (and `theta`) instead".into(),
                    ))
                }
            },
            SweepVar::Rho => c.rho = value,
            SweepVar::Rate => c.rate = value,
            SweepVar::Rounds => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Config(format!("K = {value}: sweep values for K must be positive integers")));
                }
                let per_round = matches!(c.power, PowerSpec::Explicit(_) | PowerSpec::Split { theta: Some(_), .. })
                    || matches!(c.sigma2, OneOrMany::Many(_));
                if per_round {
                    return Err(CliError::Config(
                        "sweeping K conflicts with per-round lists (`powers`, `theta`, `sigma2`); use scalars".into(),
                    ));
                }
                c.rounds = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}
