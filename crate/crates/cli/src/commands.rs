use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use qentropy::entropy::{self, EntropicOrder, ProbabilityDistribution};
use qentropy::io::{self, DistributionInput};
use qentropy::maxent::{self, StateLabel};
use qentropy::mle::{centred_grid, FitOptions, Likelihood, SampleFile};
use qentropy::qexp::{self, ModelParams, QExponentialModel};
use qentropy::scaling;
use qentropy::{chain, ChainSpec, DegeneracyPolicy, Error};
use serde::Serialize;

use crate::output::{Outputs, RunManifest};
use crate::{Common, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Shannon,
    Renyi,
    Tsallis,
    Kl,
    Hill,
    Profile,
    MutualInfo,
    SeffCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
    Dits,
}

impl Units {
    /// Size of one unit in nats.
    fn nats(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LN_2,
            Units::Dits => std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Degeneracy {
    Auto,
    Exact,
    Asymptotic,
}

impl From<Degeneracy> for DegeneracyPolicy {
    fn from(d: Degeneracy) -> Self {
        match d {
            Degeneracy::Auto => DegeneracyPolicy::Auto,
            Degeneracy::Exact => DegeneracyPolicy::Exact,
            Degeneracy::Asymptotic => DegeneracyPolicy::Asymptotic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long, value_enum)]
    measure: Measure,
    /// Distribution JSON: `{"probs": [..]}`, or a joint table for mutual-info.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Reference distribution for kl.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Orders for the diversity profile.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0, 4.0])]
    q_values: Vec<f64>,
    /// Entropy of the first community (seff-corrected).
    #[arg(long)]
    ha: Option<f64>,
    /// Entropy of the second community (seff-corrected).
    #[arg(long)]
    hb: Option<f64>,
    /// Mutual information between the communities (seff-corrected).
    #[arg(long)]
    iab: Option<f64>,
    /// Logarithm units for entropies read and printed.
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
}

fn missing(flag: &str, measure: Measure) -> Error {
    Error::InvalidArgument(format!("--{flag} is required for {measure:?}").to_lowercase())
}

fn single(manifest: &mut RunManifest, path: Option<&PathBuf>, flag: &str, m: Measure) -> Result<ProbabilityDistribution<f64>> {
    let path = path.ok_or_else(|| missing(flag, m))?;
    match io::parse_distribution_json(&manifest.read_input(path)?)? {
        DistributionInput::Single(p) => Ok(p),
        DistributionInput::Joint(_) => {
            Err(Error::InvalidArgument(format!("{} holds a joint table, expected a flat distribution", path.display())).into())
        }
    }
}

pub fn entropy(common: &Common, args: EntropyArgs) -> Result<()> {
    let mut manifest = RunManifest::new("entropy", common, &args);
    let mut out = Outputs::new(common.out.clone());
    let unit = args.units.nats();
    let order = || EntropicOrder::new(args.q);
    let m = args.measure;

    let value = match m {
        Measure::Shannon => entropy::shannon_entropy(&single(&mut manifest, args.input.as_ref(), "input", m)?) / unit,
        Measure::Renyi => entropy::renyi_entropy(&single(&mut manifest, args.input.as_ref(), "input", m)?, order()?) / unit,
        Measure::Tsallis => entropy::tsallis_entropy(&single(&mut manifest, args.input.as_ref(), "input", m)?, order()?),
        Measure::Hill => entropy::hill_number(&single(&mut manifest, args.input.as_ref(), "input", m)?, order()?),
        Measure::Kl => {
            let p = single(&mut manifest, args.input.as_ref(), "input", m)?;
            let r = single(&mut manifest, args.reference.as_ref(), "reference", m)?;
            entropy::kl_divergence(&p, &r)? / unit
        }
        Measure::MutualInfo => {
            let path = args.input.as_ref().ok_or_else(|| missing("input", m))?;
            match io::parse_distribution_json(&manifest.read_input(path)?)? {
                DistributionInput::Joint(j) => entropy::mutual_information(&j) / unit,
                DistributionInput::Single(_) => {
                    return Err(Error::InvalidArgument("mutual-info needs a joint table {\"probs\": [[..], ..]}".into()).into())
                }
            }
        }
        Measure::SeffCorrected => {
            let ha = args.ha.ok_or_else(|| missing("ha", m))?;
            let hb = args.hb.ok_or_else(|| missing("hb", m))?;
            let iab = args.iab.ok_or_else(|| missing("iab", m))?;
            entropy::effective_species_corrected(ha * unit, hb * unit, iab * unit)?
        }
        Measure::Profile => {
            let p = single(&mut manifest, args.input.as_ref(), "input", m)?;
            let orders = args
                .q_values
                .iter()
                .map(|&q| EntropicOrder::new(q))
                .collect::<qentropy::Result<Vec<_>>>()?;
            let profile = entropy::diversity_profile(&p, &orders)?;
            let text = match common.format {
                Some(Format::Json) => {
                    #[derive(Serialize)]
                    struct Row {
                        q: f64,
                        hill_number: f64,
                    }
                    let rows: Vec<Row> = profile.iter().map(|&(q, hill_number)| Row { q, hill_number }).collect();
                    json(&rows)?
                }
                _ => io::profile_csv(&profile),
            };
            out.primary(text);
            return out.commit(manifest);
        }
    };

    let q = matches!(m, Measure::Renyi | Measure::Tsallis | Measure::Hill).then_some(args.q);
    let text = match common.format {
        None => format!("{value}\n"),
        Some(Format::Csv) => {
            let q = q.map(|q| q.to_string()).unwrap_or_default();
            format!("measure,q,value\n{},{q},{value}\n", name(&m))
        }
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Report<'a> {
                measure: Measure,
                q: Option<f64>,
                units: &'a Units,
                value: f64,
            }
            json(&Report { measure: m, q, units: &args.units, value })?
        }
    };
    out.primary(text);
    out.commit(manifest)
}

#[derive(Debug, Args, Serialize)]
pub struct MaxentArgs {
    /// Constraint JSON: `{"states": [..], "observables": [[..], ..], "targets": [..]}`.
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, default_value_t = maxent::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = maxent::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

pub fn maxent(common: &Common, args: MaxentArgs) -> Result<()> {
    let mut manifest = RunManifest::new("maxent", common, &args);
    let cs = io::parse_constraints_json(&manifest.read_input(&args.constraints)?)?;
    let gibbs = maxent::solve_dual(&cs, args.tol, args.max_iter)?;

    let text = match common.format {
        Some(Format::Csv) => {
            let mut s = String::from("state,probability\n");
            for (label, p) in cs.states().iter().zip(gibbs.probs.probs()) {
                let _ = writeln!(s, "{},{p}", name(label));
            }
            s
        }
        _ => {
            #[derive(Serialize)]
            struct Solution<'a> {
                states: &'a [StateLabel],
                probs: &'a [f64],
                lambdas: &'a [f64],
                log_z: f64,
                entropy: f64,
                residuals: &'a [f64],
                max_residual: f64,
                iterations: usize,
            }
            json(&Solution {
                states: cs.states(),
                probs: gibbs.probs.probs(),
                lambdas: &gibbs.lambdas,
                log_z: gibbs.log_z,
                entropy: entropy::shannon_entropy(&gibbs.probs),
                residuals: &gibbs.residuals,
                max_residual: gibbs.max_residual(),
                iterations: gibbs.iterations,
            })?
        }
    };
    let mut out = Outputs::new(common.out.clone());
    out.primary(text);
    out.commit(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainMode {
    /// Exact and asymptotic degeneracies per sum M.
    Count,
    /// Probability of each M under the q-exponential model.
    Pmf,
    /// Sums M drawn from the q-exponential model.
    Sample,
    /// Uniform configurations with a fixed sum M.
    States,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value_t = ChainMode::Count)]
    mode: ChainMode,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    /// Number of draws for sample and states.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Fixed sum for states.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = Degeneracy::Auto)]
    degeneracy: Degeneracy,
}

fn seed_or_random(common: &Common) -> u64 {
    common.seed.unwrap_or_else(rand::random)
}

fn model(args: &ChainArgs) -> Result<QExponentialModel<f64>> {
    let q = args.q.ok_or_else(|| Error::InvalidArgument("--q is required for this mode".into()))?;
    let psi = args.psi.ok_or_else(|| Error::InvalidArgument("--psi is required for this mode".into()))?;
    let params = ModelParams { n: args.n, d: args.d, q, psi };
    Ok(QExponentialModel::from_params(&params, args.degeneracy.into())?)
}

pub fn chain(common: &Common, args: ChainArgs) -> Result<()> {
    let mut manifest = RunManifest::new("chain", common, &args);
    let spec = ChainSpec::new(args.n, args.d)?;
    let text = match args.mode {
        ChainMode::Count => match common.format {
            Some(Format::Json) => {
                #[derive(Serialize)]
                struct Row {
                    #[serde(rename = "M")]
                    m: usize,
                    exact: u64,
                    asymptotic: Option<f64>,
                }
                #[derive(Serialize)]
                struct Table {
                    n: usize,
                    d: usize,
                    total: chain::PhaseSpaceVolume,
                    rows: Vec<Row>,
                }
                let rows = chain::enumerate_exact(&spec)?
                    .into_iter()
                    .enumerate()
                    .map(|(m, exact)| Row { m, exact, asymptotic: chain::omega_asymptotic(&spec, m).ok() })
                    .collect();
                json(&Table { n: args.n, d: args.d, total: chain::total_phase_space(&spec), rows })?
            }
            _ => io::count_table_csv(&spec)?,
        },
        ChainMode::Pmf => {
            let model = model(&args)?;
            manifest.degeneracy_source = Some(model.degeneracy_source());
            match common.format {
                Some(Format::Json) => {
                    #[derive(Serialize)]
                    struct Pmf {
                        params: ModelParams,
                        log_partition_function: f64,
                        mean_m: f64,
                        probability: Vec<f64>,
                    }
                    json(&Pmf {
                        params: model.params(),
                        log_partition_function: model.log_partition_function(),
                        mean_m: qexp::mean_m(&model),
                        probability: qexp::pmf_over_m(&model).into_vec(),
                    })?
                }
                _ => io::pmf_csv(&model),
            }
        }
        ChainMode::Sample => {
            let model = model(&args)?;
            let seed = seed_or_random(common);
            manifest.seed = Some(seed);
            manifest.degeneracy_source = Some(model.degeneracy_source());
            let samples = qexp::sample_m(&model, args.count, seed);
            match common.format {
                Some(Format::Json) => json(&SampleFile { n: args.n, d: args.d, samples })?,
                _ => io::samples_csv(&samples),
            }
        }
        ChainMode::States => {
            let m = args.m.ok_or_else(|| Error::InvalidArgument("--m is required for states".into()))?;
            let seed = seed_or_random(common);
            manifest.seed = Some(seed);
            let states = chain::sample_states(&spec, m, args.count, seed)?;
            match common.format {
                Some(Format::Json) => json(&states.iter().map(|s| s.to_string()).collect::<Vec<_>>())?,
                _ => io::states_text(&states),
            }
        }
    };
    let mut out = Outputs::new(common.out.clone());
    out.primary(text);
    out.commit(manifest)
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Samples as JSON `{"n", "d", "samples"}` or CSV with one M per line.
    #[arg(long)]
    samples: PathBuf,
    /// Chain length, required for CSV samples.
    #[arg(long)]
    n: Option<usize>,
    /// Flip count, required for CSV samples.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    q_min: f64,
    #[arg(long, default_value_t = 3.0)]
    q_max: f64,
    #[arg(long, default_value_t = 60)]
    q_points: usize,
    #[arg(long, value_enum, default_value_t = Degeneracy::Auto)]
    degeneracy: Degeneracy,
    /// Writes the re-centred likelihood grid as "q,psi,delta" CSV.
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Points per axis of the surface grid (odd).
    #[arg(long, default_value_t = 41)]
    surface_points: usize,
    /// Half-width of the surface grid in q.
    #[arg(long, default_value_t = 0.3)]
    surface_q_half: f64,
    /// Half-width of the surface grid in psi, as a fraction of psi*.
    #[arg(long, default_value_t = 0.3)]
    surface_psi_half: f64,
}

pub fn fit(common: &Common, args: FitArgs) -> Result<()> {
    let mut manifest = RunManifest::new("fit", common, &args);
    let text = manifest.read_input(&args.samples)?;
    let samples = if text.trim_start().starts_with('{') {
        let s = io::parse_samples_json(&text)?;
        if args.n.is_some_and(|n| n != s.spec().n()) || args.d.is_some_and(|d| d != s.spec().d()) {
            return Err(Error::InvalidArgument("--n/--d disagree with the sample file".into()).into());
        }
        s
    } else {
        let (Some(n), Some(d)) = (args.n, args.d) else {
            return Err(Error::InvalidArgument("CSV samples need --n and --d".into()).into());
        };
        io::parse_samples_csv(&text, ChainSpec::new(n, d)?)?
    };

    let opts = FitOptions {
        q_points: args.q_points,
        policy: args.degeneracy.into(),
        ..FitOptions::default()
    };
    let lik = Likelihood::<f64>::new(&samples, opts.policy)?;
    let result = lik.fit(args.q_min, args.q_max, &opts)?;
    manifest.degeneracy_source = Some(result.degeneracy_source);

    let mut out = Outputs::new(common.out.clone());
    out.primary(match common.format {
        Some(Format::Csv) => format!(
            "q_star,psi_star,log_likelihood,samples,converged\n{},{},{},{},{}\n",
            result.q_star, result.psi_star, result.log_likelihood, result.samples, result.converged
        ),
        _ => json(&result)?,
    });
    if let Some(path) = &args.surface {
        let qg = centred_grid(result.q_star, args.surface_q_half, args.surface_points, 1e-3);
        let pg = centred_grid(
            result.psi_star,
            args.surface_psi_half * result.psi_star,
            args.surface_points,
            1e-6,
        );
        let surface = lik.surface(&qg, &pg)?;
        out.extra(path.clone(), io::surface_csv(&surface));
    }
    out.commit(manifest)
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    /// CSV of "n,w" rows.
    #[arg(long)]
    series: PathBuf,
}

pub fn scaling(common: &Common, args: ScalingArgs) -> Result<()> {
    let mut manifest = RunManifest::new("scaling", common, &args);
    let series = io::parse_series_csv(&manifest.read_input(&args.series)?)?;
    let verdict = scaling::fit_scaling(&series);
    let report = scaling::recommend(&verdict);
    let text = match common.format {
        Some(Format::Csv) => format!(
            "model,recommendation,c0,exponent,exponential_rss,powerlaw_rss,super_exponential_hint\n{},{},{},{},{},{},{}\n",
            name(&verdict.model),
            name(&verdict.recommendation),
            verdict.exponential_fit.slope,
            verdict.powerlaw_fit.slope,
            verdict.exponential_fit.residual,
            verdict.powerlaw_fit.residual,
            verdict.super_exponential_hint
        ),
        _ => {
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                verdict: &'a qentropy::Verdict,
                report: &'a str,
            }
            json(&Report { verdict: &verdict, report: &report })?
        }
    };
    let mut out = Outputs::new(common.out.clone());
    out.primary(text);
    out.commit(manifest)
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Serialized name of a unit enum variant, without quotes.
fn name<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_default().trim_matches('"').to_string()
}
