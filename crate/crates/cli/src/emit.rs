//! CSV and JSON output.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use harqir::negmult::WeightTable;
use serde::{Deserialize, Serialize};

use crate::config::SweepVar;
use crate::error::{CliError, CliResult};
use crate::sweep::{sig12, Layout, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Plain decimal for moderate magnitudes, exponent form otherwise.
pub fn fmt_num(x: f64) -> String {
    let x = sig12(x);
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

const FIXED: [&str; 9] = ["K", "rho", "delta", "sigma2", "powers", "rate_bits", "truncation_N", "mc_samples", "seed"];

fn fixed_columns(var: SweepVar) -> Vec<&'static str> {
    let skip = match var {
        SweepVar::PowerDb => "powers",
        other => other.column(),
    };
    FIXED.iter().copied().filter(|c| *c != skip).collect()
}

pub fn csv_header(layout: &Layout) -> Vec<String> {
    let mut h = vec![layout.variable.column().to_string()];
    h.extend(fixed_columns(layout.variable).into_iter().map(String::from));
    for m in &layout.methods {
        h.push(format!("p_{}", m.as_str()));
        h.push(format!("error_{}", m.as_str()));
    }
    h.push("failures".into());
    h
}

fn csv_record(layout: &Layout, row: &ResultRow) -> Vec<String> {
    let mut r = vec![fmt_num(row.value)];
    for c in fixed_columns(layout.variable) {
        r.push(match c {
            "K" => row.rounds.to_string(),
            "rho" => fmt_num(row.rho),
            "delta" => fmt_num(row.delta),
            "sigma2" => fmt_list(&row.sigma2),
            "powers" => fmt_list(&row.powers),
            "rate_bits" => fmt_num(row.rate_bits),
            "truncation_N" => row.truncation.to_string(),
            "mc_samples" => row.mc_samples.to_string(),
            _ => row.seed.to_string(),
        });
    }
    let mut failures = Vec::new();
    for m in &layout.methods {
        match row.methods.iter().find(|o| o.method == *m) {
            Some(o) => {
                r.push(o.p.map(fmt_num).unwrap_or_default());
                r.push(o.error.map(fmt_num).unwrap_or_default());
                if let Some(f) = &o.failure {
                    failures.push(format!("{}: {f}", m.as_str()));
                }
            }
            None => r.extend([String::new(), String::new()]),
        }
    }
    r.push(failures.join("; "));
    r
}

pub fn write_csv<W: Write>(out: W, layout: &Layout, rows: &[ResultRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let enc = |e: csv::Error| CliError::Encode(e.to_string());
    w.write_record(csv_header(layout)).map_err(enc)?;
    for row in rows {
        w.write_record(csv_record(layout, row)).map_err(enc)?;
    }
    w.flush().map_err(|e| CliError::Encode(e.to_string()))
}

pub fn write_json<W: Write>(mut out: W, rows: &[ResultRow]) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(|e| CliError::Encode(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Encode(e.to_string()))
}

/// Writes `rows` to `path`, or to stdout when no path is given.
pub fn emit(rows: &[ResultRow], layout: &Layout, format: Format, path: Option<&Path>) -> CliResult<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let res = match format {
        Format::Csv => write_csv(sink, layout, rows),
        Format::Json => write_json(sink, rows),
    };
    match (res, path) {
        (Err(CliError::Encode(msg)), Some(p)) => Err(CliError::Io {
            path: p.display().to_string(),
            source: io::Error::other(msg),
        }),
        (r, _) => r,
    }
}

/// Weight table as CSV: `l_1..l_K, W_l, cumulative_mass`.
pub fn write_weights<W: Write>(out: W, table: &WeightTable, rounds: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let enc = |e: csv::Error| CliError::Encode(e.to_string());
    let mut header: Vec<String> = (1..=rounds).map(|k| format!("l_{k}")).collect();
    header.extend(["W_l".to_string(), "cumulative_mass".to_string()]);
    w.write_record(&header).map_err(enc)?;
    let mut cumulative = 0.0;
    for (l, weight) in table.entries() {
        cumulative += weight;
        let mut rec: Vec<String> = l.0.iter().map(u32::to_string).collect();
        rec.push(fmt_num(*weight));
        rec.push(fmt_num(cumulative));
        w.write_record(&rec).map_err(enc)?;
    }
    w.flush().map_err(|e| CliError::Encode(e.to_string()))
}
