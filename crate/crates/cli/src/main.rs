use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harqir::design::{allocate_equal_powers, max_rate, required_power_product, DesignTarget};
use harqir::negmult::build_table;
use harqir::outage::MethodTag;
use harqir_cli::config::{Config, FileConfig, SweepVar};
use harqir_cli::emit::{emit, write_weights, Format};
use harqir_cli::error::{CliError, CliResult};
use harqir_cli::sweep::{run_sweep, SweepConfig};
use harqir_cli::{db_to_linear, linear_to_db, selftest};
use serde_json::json;

/// Outage analysis of HARQ with incremental redundancy over time-correlated Rayleigh fading.
#[derive(Parser)]
#[command(name = "harqir", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Number of transmission rounds.
    #[arg(long = "k", short = 'k', global = true)]
    rounds: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Average channel gain per round (one value or a comma list).
    #[arg(long, global = true, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    /// Linear per-round transmit powers.
    #[arg(long, global = true, value_delimiter = ',')]
    powers: Option<Vec<f64>>,
    /// Power scale (linear).
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Power scale in dB.
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "gamma")]
    power_db: Option<f64>,
    /// Per-round power split, multiplied by gamma.
    #[arg(long, global = true, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Target rate in bits per channel use.
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Truncation order N of the exact series.
    #[arg(long, global = true)]
    truncation: Option<u32>,
    #[arg(long, global = true)]
    mc_samples: Option<u64>,
    /// Keep doubling Monte Carlo samples up to this count until the CI is tight.
    #[arg(long, global = true)]
    mc_max_samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Methods to run: exact, mc, asymptotic.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

impl Overrides {
    fn into_file_config(self) -> CliResult<FileConfig> {
        let methods = self
            .methods
            .map(|m| m.iter().map(|s| s.parse::<MethodTag>()).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Ok(FileConfig {
            K: self.rounds,
            rho: self.rho,
            delta: self.delta,
            sigma2: self.sigma2.map(|v| match v.as_slice() {
                [s] => harqir_cli::config::OneOrMany::One(*s),
                _ => harqir_cli::config::OneOrMany::Many(v),
            }),
            powers: self.powers,
            gamma: self.gamma.or(self.power_db.map(db_to_linear)),
            theta: self.theta,
            rate_bits: self.rate,
            truncation_N: self.truncation,
            mc_samples: self.mc_samples,
            mc_max_samples: self.mc_max_samples,
            seed: self.seed,
            methods,
            sweep: None,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Outage probability of a single configuration.
    Outage,
    /// Evaluate the configured methods over a list of values.
    Sweep {
        /// Variable to sweep: P_T_dB, rho, rate_bits or K.
        #[arg(long)]
        var: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Dump the mixture weight table as CSV.
    Weights {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Design from the high-SNR approximation.
    #[command(subcommand)]
    Optimize(Optimize),
    /// Cross-check the numerical routes against independent oracles.
    Selftest,
}

#[derive(Subcommand)]
enum Optimize {
    /// Smallest power product (and equal split) meeting an outage target.
    Power {
        #[arg(long)]
        epsilon: f64,
    },
    /// Largest rate meeting an outage target with the configured powers.
    Rate {
        #[arg(long)]
        epsilon: f64,
    },
}

fn print_json(v: &serde_json::Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::Encode(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Encode(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    let mut file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let sweep_section = file.sweep.take();
    file.merge(cli.overrides.into_file_config()?);
    let cfg = Config::resolve(&file)?;

    match cli.command {
        Command::Outage => {
            let mut results = Vec::new();
            for &m in &cfg.methods {
                results.push(cfg.query(m)?.evaluate()?);
            }
            print_json(&json!(results))
        }
        Command::Sweep {
            var,
            values,
            output,
            format,
        } => {
            let variable = match (var, &sweep_section) {
                (Some(v), _) => v.parse()?,
                (None, Some(s)) => s.variable,
                (None, None) => SweepVar::PowerDb,
            };
            let values = values
                .or(sweep_section.map(|s| s.values))
                .ok_or_else(|| CliError::Config("no sweep values: pass --values or add a [sweep] section".into()))?;
            let sweep = SweepConfig::new(cfg, variable, values, output)?;
            let rows = run_sweep(&sweep);
            let failures = rows
                .iter()
                .flat_map(|r| &r.methods)
                .filter(|m| m.failure.is_some())
                .count();
            if failures > 0 {
                eprintln!("warning: {failures} evaluation(s) failed; see the failures column");
            }
            emit(&rows, &sweep.layout(), format, sweep.output.as_deref())
        }
        Command::Weights { output } => {
            let table = build_table(&cfg.channel()?, cfg.truncation)?;
            match &output {
                Some(p) => {
                    let f = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
                    write_weights(f, &table, cfg.rounds)
                }
                None => write_weights(io::stdout().lock(), &table, cfg.rounds),
            }
        }
        Command::Optimize(Optimize::Power { epsilon }) => {
            let target = DesignTarget::new(epsilon, cfg.channel()?)?;
            let d = required_power_product(&target, cfg.rate)?;
            let p = allocate_equal_powers(d.product, cfg.rounds)?.powers()[0];
            if d.low_power {
                eprintln!("warning: the design lies outside the high-SNR regime; the approximation may be loose");
            }
            print_json(&json!({
                "epsilon": epsilon,
                "rate_bits": cfg.rate,
                "power_product": d.product,
                "power_product_db": linear_to_db(d.product),
                "per_round_power": p,
                "per_round_power_db": linear_to_db(p),
                "low_power": d.low_power,
            }))
        }
        Command::Optimize(Optimize::Rate { epsilon }) => {
            let r = max_rate(&cfg.power_profile()?, &cfg.channel()?, epsilon)?;
            print_json(&json!({
                "epsilon": epsilon,
                "rate_bits": r.rate,
                "iterations": r.iterations,
                "residuals": r.residuals,
            }))
        }
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                println!("{:<26} {} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
            }
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::SelfTest(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
