//! File formats shared by the library and the command-line tool.
//!
//! JSON inputs:
//! - distribution `{"probs": [..]}` or joint `{"probs": [[..], ..]}`
//! - constraints `{"states": [..], "observables": [[..], ..], "targets": [..]}`
//! - samples `{"n": .., "d": .., "samples": [..]}`
//! - model parameters `{"n": .., "d": .., "q": .., "psi": ..}`
//!
//! CSV inputs are one record per line; a leading non-numeric header line is
//! skipped. CSV outputs always carry a header.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::chain::{self, ChainSpec, ChainState, SumStatistic};
use crate::entropy::{JointDistribution, ProbabilityDistribution};
use crate::maxent::{ConstraintSet, StateLabel};
use crate::mle::{LikelihoodSurface, SampleFile, SampleSet};
use crate::qexp::{pmf_over_m, QExponentialModel};
use crate::scaling::ScalingSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionInput {
    Single(ProbabilityDistribution<f64>),
    Joint(JointDistribution<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawProbs {
    Flat(Vec<f64>),
    Table(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    probs: RawProbs,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

pub fn parse_distribution_json(text: &str) -> Result<DistributionInput> {
    let raw: RawDistribution = serde_json::from_str(text).map_err(json_error)?;
    Ok(match raw.probs {
        RawProbs::Flat(p) => DistributionInput::Single(ProbabilityDistribution::new(p)?),
        RawProbs::Table(t) => DistributionInput::Joint(JointDistribution::new(t)?),
    })
}

/// `q,hill_number` rows.
pub fn profile_csv(profile: &[(f64, f64)]) -> String {
    let mut out = String::from("q,hill_number\n");
    for (q, d) in profile {
        let _ = writeln!(out, "{q},{d}");
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    states: Vec<StateLabel>,
    #[serde(default)]
    observables: Vec<Vec<f64>>,
    #[serde(default)]
    targets: Vec<f64>,
}

pub fn parse_constraints_json(text: &str) -> Result<ConstraintSet<f64>> {
    let raw: RawConstraints = serde_json::from_str(text).map_err(json_error)?;
    ConstraintSet::new(raw.states, raw.observables, raw.targets)
}

/// `M,exact,asymptotic` rows; the asymptotic column is empty when `d = 0`.
pub fn count_table_csv(spec: &ChainSpec) -> Result<String> {
    let exact = chain::enumerate_exact(spec)?;
    let mut out = String::from("M,exact,asymptotic\n");
    for (m, count) in exact.iter().enumerate() {
        match chain::omega_asymptotic::<f64>(spec, m) {
            Ok(a) => {
                let _ = writeln!(out, "{m},{count},{a}");
            }
            Err(_) => {
                let _ = writeln!(out, "{m},{count},");
            }
        }
    }
    Ok(out)
}

/// `M,probability` rows.
pub fn pmf_csv(model: &QExponentialModel<f64>) -> String {
    let mut out = String::from("M,probability\n");
    for (m, p) in pmf_over_m(model).probs().iter().enumerate() {
        let _ = writeln!(out, "{m},{p}");
    }
    out
}

/// One sample per line under an `M` header.
pub fn samples_csv(values: &[SumStatistic]) -> String {
    let mut out = String::from("M\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// One `0`/`1` string per line.
pub fn states_text(states: &[ChainState]) -> String {
    let mut out = String::new();
    for s in states {
        let _ = writeln!(out, "{s}");
    }
    out
}

/// Non-empty lines with their 1-based numbers, minus a non-numeric header.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let header = lines
        .peek()
        .is_some_and(|(_, l)| l.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_err()));
    if header {
        lines.next();
    }
    lines
}

/// One integer `M` per line.
pub fn parse_samples_csv(text: &str, spec: ChainSpec) -> Result<SampleSet> {
    let mut values = Vec::new();
    for (line, l) in data_lines(text) {
        let field = l.split(',').next().unwrap_or("").trim();
        let m: SumStatistic = field
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}, field 1: expected a non-negative integer, got {field:?}")))?;
        values.push(m);
    }
    SampleSet::new(spec, values)
}

pub fn parse_samples_json(text: &str) -> Result<SampleSet> {
    let raw: SampleFile = serde_json::from_str(text).map_err(json_error)?;
    SampleSet::new(ChainSpec::new(raw.n, raw.d)?, raw.samples)
}

/// `q,psi,delta` rows in row-major order; `inf` marks points outside the support.
pub fn surface_csv(surface: &LikelihoodSurface<f64>) -> String {
    let mut out = String::from("q,psi,delta\n");
    for (q, row) in surface.q_grid.iter().zip(&surface.deltas) {
        for (psi, delta) in surface.psi_grid.iter().zip(row) {
            match delta {
                Some(d) => {
                    let _ = writeln!(out, "{q},{psi},{d}");
                }
                None => {
                    let _ = writeln!(out, "{q},{psi},inf");
                }
            }
        }
    }
    out
}

/// `n,w` rows.
pub fn parse_series_csv(text: &str) -> Result<ScalingSeries<f64>> {
    let mut points = Vec::new();
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected 2 fields \"n,w\", got {}", fields.len())));
        }
        let n: u64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}, field 1: expected an integer size, got {:?}", fields[0])))?;
        let w: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}, field 2: expected a number, got {:?}", fields[1])))?;
        points.push((n, w));
    }
    ScalingSeries::new(points)
}
