use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use hfm_core::bench::{
    run_comparison, synth_dataset, BenchCase, ComparisonRow, ComparisonSummary, GridPoint,
    SynthSpec,
};
use hfm_core::fairness::{
    discriminative_risk, hfm_approx_report, hfm_exact_report, GroupCounts, GroupRates, HfmReport,
};
use hfm_core::report::{render_report, write_report, Record, ReportFormat, Value};
use hfm_core::theory::{
    monte_carlo_projection_probability, projection_order_bounds, success_bound,
};
use hfm_core::{approx_dist, default_m2, exact_set_distance, seed, FairnessValue, LabelSource};
use rand::Rng;

use crate::args::{ApproxArgs, DataArgs, FormatArg, MethodArg, OutputArgs};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    TrueLabels,
    Predictions,
}

impl From<SourceArg> for LabelSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::TrueLabels => LabelSource::TrueLabels,
            SourceArg::Predictions => LabelSource::Predictions,
        }
    }
}

type Row = Vec<(&'static str, Value)>;
type RateFn = fn(&GroupCounts) -> Option<f64>;

fn emit<R: Record>(
    records: &[R],
    out: Option<&PathBuf>,
    format: FormatArg,
) -> Result<(), CliError> {
    let format = ReportFormat::from(format);
    match out {
        Some(path) => write_report(records, path, format)?,
        None => print!("{}", render_report(records, format)?),
    }
    Ok(())
}

fn nanos(d: Duration, reproducible: bool) -> Value {
    Value::UInt(if reproducible { 0 } else { d.as_nanos() as u64 })
}

pub fn dist(
    data: &DataArgs,
    method: MethodArg,
    source: SourceArg,
    approx: &ApproxArgs,
    output: &OutputArgs,
) -> Result<(), CliError> {
    if source == SourceArg::Predictions && data.prediction.is_none() {
        return Err(CliError::input(
            "--label-source predictions needs --prediction",
        ));
    }
    let loaded = data.load()?;
    let partition = data.partition(&loaded)?;
    let d = &loaded.dataset;
    let mut result = match method {
        MethodArg::Exact => exact_set_distance(d, &partition, source.into())?,
        MethodArg::Approx => approx_dist(d, &partition, source.into(), approx.resolve(d.len()))?,
    };
    if output.reproducible {
        result.elapsed = Duration::ZERO;
    }
    emit(&[result], output.out.as_ref(), output.format)
}

pub fn hfm(
    data: &DataArgs,
    method: MethodArg,
    approx: &ApproxArgs,
    alpha: Option<f64>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    if let Some(a) = alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(CliError::input(format!(
                "--alpha must lie in [0, 1], got {a}"
            )));
        }
    }
    if data.prediction.is_none() {
        return Err(CliError::input("hfm needs --prediction"));
    }
    let loaded = data.load()?;
    let partition = data.partition(&loaded)?;
    let d = &loaded.dataset;
    let params = approx.resolve(d.len());
    let start = Instant::now();
    let HfmReport { d: dist, d_f, df } = match method {
        MethodArg::Exact => hfm_exact_report(d, &partition)?,
        MethodArg::Approx => hfm_approx_report(d, &partition, params)?,
    };
    let elapsed = start.elapsed();
    let is_approx = method == MethodArg::Approx;
    let mut rec: Vec<(&'static str, Value)> = vec![
        ("method", if is_approx { "approx" } else { "exact" }.into()),
        ("d", dist.into()),
        ("d_f", d_f.into()),
        ("df", df.into()),
        ("seed", is_approx.then_some(params.seed).into()),
        ("m1", is_approx.then_some(params.m1).into()),
        ("m2", is_approx.then_some(params.m2).into()),
        ("elapsed_ns", nanos(elapsed, output.reproducible)),
    ];
    if let Some(a) = alpha {
        let preds = d
            .predictions()
            .ok_or_else(|| CliError::input("hfm needs --prediction"))?;
        let wrong = preds.iter().zip(d.labels()).filter(|(p, y)| p != y).count();
        let error_rate = wrong as f64 / d.len() as f64;
        let combined = match df {
            FairnessValue::Finite(v) => FairnessValue::Finite(a * error_rate + (1.0 - a) * v.abs()),
            FairnessValue::PositiveInfinity if a < 1.0 => FairnessValue::PositiveInfinity,
            FairnessValue::PositiveInfinity => FairnessValue::Finite(error_rate),
        };
        rec.push(("error_rate", error_rate.into()));
        rec.push(("alpha", a.into()));
        rec.push(("combined", combined.into()));
    }
    emit(&[rec], output.out.as_ref(), output.format)
}

fn rate_row(
    metric: &'static str,
    value: hfm_core::Result<f64>,
    rates: Option<(&GroupRates, RateFn)>,
) -> Result<Vec<(&'static str, Value)>, CliError> {
    let value = match value {
        Ok(v) => Value::from(v),
        Err(hfm_core::Error::UndefinedRate(_)) => Value::from("undefined"),
        Err(e) => return Err(e.into()),
    };
    let group = |g: usize| match rates {
        Some((r, f)) => f(&r.groups[g]).map_or(Value::from("undefined"), Value::from),
        None => Value::Null,
    };
    Ok(vec![
        ("metric", metric.into()),
        ("value", value),
        ("group0", group(0)),
        ("group1", group(1)),
    ])
}

pub fn group_metrics(data: &DataArgs, output: &OutputArgs) -> Result<(), CliError> {
    if data.prediction.is_none() {
        return Err(CliError::input("group-metrics needs --prediction"));
    }
    if data.positive_label.is_none() {
        return Err(CliError::input("group-metrics needs --positive-label"));
    }
    let loaded = data.load()?;
    let partition = data.partition(&loaded)?;
    let positive = loaded
        .positive_label
        .ok_or_else(|| CliError::input("group-metrics needs --positive-label"))?;
    let rates = GroupRates::compute(&loaded.dataset, &partition, positive)?;
    let mut rows = vec![
        rate_row(
            "dp",
            rates.demographic_parity(),
            Some((&rates, GroupCounts::positive_rate)),
        )?,
        rate_row(
            "eo",
            rates.equal_opportunity(),
            Some((&rates, GroupCounts::true_positive_rate)),
        )?,
        rate_row(
            "pqp",
            rates.predictive_quality_parity(),
            Some((&rates, GroupCounts::precision)),
        )?,
    ];
    if let (Some(flipped), Some(preds)) =
        (&loaded.flipped_predictions, loaded.dataset.predictions())
    {
        rows.push(rate_row("dr", discriminative_risk(preds, flipped), None)?);
    }
    emit(&rows, output.out.as_ref(), output.format)
}

fn parse_m2(s: &str) -> Result<Option<usize>, String> {
    if s == "default" {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(Some(v)),
        _ => Err(format!(
            "expected a positive integer or 'default', got '{s}'"
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Measure this dataset instead of a synthetic sweep.
    #[command(flatten)]
    pub data: Option<DataArgs>,
    /// Number of synthetic datasets.
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    #[arg(long, default_value_t = 200)]
    pub n_min: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub nx_min: usize,
    #[arg(long, default_value_t = 8)]
    pub nx_max: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: u32,
    /// Give synthetic datasets predictions with this share of labels
    /// redrawn at random, adding a prediction row per grid point.
    #[arg(long)]
    pub prediction_noise: Option<f64>,
    /// Projection counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "25")]
    pub m1: Vec<usize>,
    /// Scan widths to sweep; `default` means ceil(2 log10 n).
    #[arg(long, value_delimiter = ',', default_value = "default", value_parser = parse_m2)]
    pub m2: Vec<Option<usize>>,
    #[arg(long, default_value_t = hfm_core::approx::DEFAULT_SEED)]
    pub seed: u64,
    /// Summary file; printed to standard error when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn synthetic_cases(a: &BenchArgs) -> Result<Vec<BenchCase>, CliError> {
    if a.n_min < 2 || a.n_min > a.n_max || a.nx_min == 0 || a.nx_min > a.nx_max {
        return Err(CliError::input(
            "need 2 <= n-min <= n-max and 1 <= nx-min <= nx-max",
        ));
    }
    let master = seed::tagged_seed(a.seed, "bench");
    (0..a.datasets)
        .map(|i| {
            let s = seed::child_seed(master, i as u64);
            let mut rng = seed::rng_for(s);
            let spec = SynthSpec {
                n: rng.gen_range(a.n_min..=a.n_max),
                n_features: rng.gen_range(a.nx_min..=a.nx_max),
                group_fraction: rng.gen_range(0.2..0.8),
                n_classes: a.classes,
                separation: rng.gen_range(0.0..0.5),
                prediction_noise: a.prediction_noise,
                seed: s,
            };
            let case = BenchCase::from_dataset(format!("synth-{i}"), synth_dataset(&spec)?)?;
            Ok(case)
        })
        .collect()
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let cases = match &a.data {
        Some(data) => {
            let loaded = data.load()?;
            let partition = data.partition(&loaded)?;
            let id = data
                .input
                .file_stem()
                .map_or("input".into(), |s| s.to_string_lossy().into_owned());
            vec![BenchCase {
                id,
                dataset: loaded.dataset,
                partition,
            }]
        }
        None => synthetic_cases(a)?,
    };
    if a.m1.contains(&0) {
        return Err(CliError::input("--m1 values must be positive"));
    }
    let grid: Vec<GridPoint> =
        a.m1.iter()
            .flat_map(|&m1| {
                a.m2.iter().map(move |&m2| GridPoint {
                    m1,
                    m2,
                    seed: a.seed,
                })
            })
            .collect();
    let mut rows: Vec<ComparisonRow> = run_comparison(&cases, &grid);
    if a.output.reproducible {
        for r in &mut rows {
            if let Ok(m) = &mut r.outcome {
                m.exact_time = Duration::ZERO;
                m.approx_time = Duration::ZERO;
            }
        }
    }
    let summary = ComparisonSummary::from_rows(&rows);
    emit(&rows, a.output.out.as_ref(), a.output.format)?;
    match &a.summary {
        Some(path) => write_report(std::slice::from_ref(&summary), path, a.output.format.into())?,
        None => eprint!(
            "{}",
            render_report(std::slice::from_ref(&summary), ReportFormat::Json)?
        ),
    }
    if summary.failed > 0 {
        return Err(CliError::compute(format!(
            "{} of {} rows failed",
            summary.failed, summary.rows
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    /// Random vector pairs for the projection-probability check.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Monte Carlo directions per pair.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub dim_min: usize,
    #[arg(long, default_value_t = 10)]
    pub dim_max: usize,
    /// Allowed Monte Carlo deviation in standard errors.
    #[arg(long, default_value_t = 4.0)]
    pub sigmas: f64,
    /// Dataset sizes of the bound table.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub n: Vec<usize>,
    /// Intrinsic dimensions of the bound table.
    #[arg(long, value_delimiter = ',', default_value = "1,3,7")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "25")]
    pub m1: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "default", value_parser = parse_m2)]
    pub m2: Vec<Option<usize>>,
    /// Scaled density of the bound table.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Approximation factor of the bound table.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = hfm_core::approx::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

const PAIR_KEYS: [&str; 12] = [
    "dim",
    "r1",
    "r2",
    "phi",
    "lower",
    "exact",
    "upper",
    "sandwich_ok",
    "mc_estimate",
    "mc_stderr",
    "mc_ok",
    "trials",
];
const BOUND_KEYS: [&str; 11] = [
    "n",
    "k",
    "mu",
    "alpha",
    "m1",
    "m2",
    "prob_linear",
    "prob_lifted",
    "prob_linear_raw",
    "prob_lifted_raw",
    "lambda",
];

/// Pair and bound rows share one table; columns of the other kind are null.
fn theory_row(
    kind: &'static str,
    index: usize,
    pair: Vec<Value>,
    bound: Vec<Value>,
) -> Vec<(&'static str, Value)> {
    let pad = |keys: &[&'static str], vals: Vec<Value>| -> Vec<(&'static str, Value)> {
        let mut vals = vals.into_iter();
        keys.iter()
            .map(|&k| (k, vals.next().unwrap_or(Value::Null)))
            .collect()
    };
    let mut row = vec![("kind", kind.into()), ("index", index.into())];
    row.extend(pad(&PAIR_KEYS, pair));
    row.extend(pad(&BOUND_KEYS, bound));
    row
}

fn pair_row(
    kind: &'static str,
    index: usize,
    v1: &[f64],
    v2: &[f64],
    a: &TheoryArgs,
    mc_seed: u64,
) -> Result<(Row, bool), CliError> {
    let b = projection_order_bounds(v1, v2)?;
    let sandwich = b.lower <= b.exact && b.exact <= b.upper;
    let (mc_vals, mc_ok) = if a.trials > 0 {
        let mc = monte_carlo_projection_probability(v1, v2, a.trials, mc_seed)?;
        let ok = (mc.estimate - b.exact).abs() <= a.sigmas * mc.stderr;
        (
            vec![
                mc.estimate.into(),
                mc.stderr.into(),
                ok.into(),
                mc.trials.into(),
            ],
            ok,
        )
    } else {
        (
            vec![Value::Null, Value::Null, Value::Null, Value::Null],
            true,
        )
    };
    let mut vals = vec![
        v1.len().into(),
        b.r1.into(),
        b.r2.into(),
        b.phi.into(),
        b.lower.into(),
        b.exact.into(),
        b.upper.into(),
        sandwich.into(),
    ];
    vals.extend(mc_vals);
    Ok((theory_row(kind, index, vals, vec![]), sandwich && mc_ok))
}

pub fn verify_theory(a: &TheoryArgs) -> Result<(), CliError> {
    if a.dim_min < 2 || a.dim_min > a.dim_max {
        return Err(CliError::input("need 2 <= dim-min <= dim-max"));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    // Equal norms: the probability is exactly one half.
    let (row, ok) = pair_row(
        "equal_norm",
        0,
        &[3.0, 4.0, 0.0],
        &[0.0, 0.0, 5.0],
        a,
        seed::tagged_seed(a.seed, "equal"),
    )?;
    let half = projection_order_bounds(&[3.0, 4.0, 0.0], &[0.0, 0.0, 5.0])?.exact;
    if !ok || (half - 0.5).abs() > 1e-12 {
        failures.push("equal_norm".to_string());
    }
    rows.push(row);

    let mut rng = seed::rng_for(seed::tagged_seed(a.seed, "pairs"));
    let mc_master = seed::tagged_seed(a.seed, "mc");
    for i in 0..a.pairs {
        let dim = rng.gen_range(a.dim_min..=a.dim_max);
        let mut v1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut v2: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        if sq(&v1) > sq(&v2) {
            std::mem::swap(&mut v1, &mut v2);
        }
        let (row, ok) = pair_row(
            "pair",
            i,
            &v1,
            &v2,
            a,
            seed::child_seed(mc_master, i as u64),
        )?;
        if !ok {
            failures.push(format!("pair {i}"));
        }
        rows.push(row);
    }

    let mut index = 0;
    for &n in &a.n {
        for &k in &a.k {
            for &m1 in &a.m1 {
                for &m2 in &a.m2 {
                    let m2 = m2.unwrap_or_else(|| default_m2(n));
                    let b = success_bound(n, k, a.mu, a.alpha, m1, m2)?;
                    let vals = vec![
                        b.n.into(),
                        b.k.into(),
                        b.mu.into(),
                        b.alpha.into(),
                        b.m1.into(),
                        b.m2.into(),
                        b.prob_linear.into(),
                        b.prob_lifted.into(),
                        b.prob_linear_raw.into(),
                        b.prob_lifted_raw.into(),
                        b.lambda.into(),
                    ];
                    rows.push(theory_row("bound", index, vec![], vals));
                    index += 1;
                }
            }
        }
    }

    emit(&rows, a.out.as_ref(), a.format)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::compute(format!(
            "checks failed: {}",
            failures.join(", ")
        )))
    }
}
