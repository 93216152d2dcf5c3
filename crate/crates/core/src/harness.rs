//! The metric-versus-regret correlation experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canon::canonicalise;
use crate::error::{Error, Result};
use crate::gen::{gen_batch, sub_seed, GenConfig, RewardPairBatch, SeedRole};
use crate::io::{write_json, EnvDocument};
use crate::mdp::Mdp;
use crate::metrics::{
    canon_options_for, distance_eval, normalise, parse_metric_spec, CanonKey, DistributionPair, MetricSpec, NormId,
};
use crate::regret::{optimal_pair_regret, RegretMode};
use crate::reward::RewardTable;

/// The metrics whose reference correlations are tabulated for the full
/// 49,152-pair study.
pub const REFERENCE_SPECS: [&str; 5] = [
    "EPIC-2-2",
    "DARD-2-2",
    "VAL-2-2",
    "VAL-1-1",
    "VALPotential-1-weighted_1",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub gen: GenConfig,
    pub n_envs: usize,
    pub metric_specs: Vec<MetricSpec>,
    pub regret_mode: RegretMode,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    pub parallelism: usize,
    pub save_batches: bool,
    pub scatter_plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gen: GenConfig::default(),
            n_envs: 8,
            metric_specs: REFERENCE_SPECS
                .iter()
                .map(|s| parse_metric_spec(s).expect("reference spec"))
                .collect(),
            regret_mode: RegretMode::Exact,
            master_seed: 0,
            output_dir: PathBuf::from("results"),
            parallelism: 0,
            save_batches: false,
            scatter_plots: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.n_envs == 0 {
            return Err(Error::Config("n_envs must be at least 1".into()));
        }
        if self.metric_specs.is_empty() {
            return Err(Error::Config("no metric specs configured".into()));
        }
        Ok(())
    }
}

/// One comparison between `R₁` and the interpolant `R_(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRecord {
    pub env_id: usize,
    pub pair_id: usize,
    pub interp_step: usize,
    pub regret: f64,
    /// Metric values in configured order; `None` when undefined.
    pub metric_values: Vec<(MetricSpec, Option<f64>)>,
}

impl ComparisonRecord {
    pub fn value(&self, spec: &MetricSpec) -> Option<f64> {
        self.metric_values.iter().find(|(s, _)| s == spec).and_then(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub spec: String,
    /// `None` when either column has zero variance.
    pub correlation: Option<f64>,
    pub n_samples: usize,
    pub n_missing: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CorrelationSummary {
    pub rows: Vec<SummaryRow>,
}

impl CorrelationSummary {
    pub fn get(&self, spec: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.spec == spec)
    }

    pub fn correlation(&self, spec: &str) -> Option<f64> {
        self.get(spec).and_then(|r| r.correlation)
    }
}

/// Sample Pearson correlation.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Standardised rewards for every spec, sharing canonicalisations.
fn standardise_all(
    specs: &[MetricSpec],
    reward: &RewardTable,
    mdp: &Mdp,
    dists: &DistributionPair,
) -> Vec<Option<RewardTable>> {
    let mut canon: BTreeMap<CanonKey, Option<RewardTable>> = BTreeMap::new();
    let mut normed: BTreeMap<(CanonKey, NormId), Option<RewardTable>> = BTreeMap::new();
    specs
        .iter()
        .map(|spec| {
            let key = CanonKey::for_spec(spec);
            normed
                .entry((key.clone(), spec.norm))
                .or_insert_with(|| {
                    let c = canon
                        .entry(key)
                        .or_insert_with(|| {
                            let opts = canon_options_for(spec, mdp, dists);
                            canonicalise(spec.canon, reward, mdp, &opts).ok()
                        })
                        .clone()?;
                    normalise(spec.norm, c, mdp).ok()
                })
                .clone()
        })
        .collect()
}

fn pair_records(config: &ExperimentConfig, batch: &RewardPairBatch, pair: usize) -> Result<Vec<ComparisonRecord>> {
    let mdp = &batch.env;
    let dists = DistributionPair::uniform(mdp.n_states(), mdp.n_actions());
    let specs = &config.metric_specs;
    let (r1, _) = &batch.base_pairs[pair];
    let base = standardise_all(specs, r1, mdp, &dists);
    let mut out = Vec::with_capacity(batch.interpolants[pair].len());
    for (i, ri) in batch.interpolants[pair].iter().enumerate() {
        let step = i + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(batch.seeds[pair].rollout, step as u64, 0, SeedRole::Rollout));
        let report = optimal_pair_regret(mdp, r1, ri, config.regret_mode, &mut rng)?;
        let other = standardise_all(specs, ri, mdp, &dists);
        let metric_values = specs
            .iter()
            .zip(base.iter().zip(&other))
            .map(|(spec, pair)| {
                let value = match pair {
                    (Some(a), Some(b)) => distance_eval(spec.dist, a, b, mdp, &dists).ok(),
                    _ => None,
                };
                (*spec, value.filter(|v| v.is_finite()))
            })
            .collect();
        out.push(ComparisonRecord {
            env_id: batch.env_index,
            pair_id: pair,
            interp_step: step,
            regret: report.regret,
            metric_values,
        });
    }
    Ok(out)
}

fn run_tasks(config: &ExperimentConfig, batches: &[RewardPairBatch]) -> Result<Vec<ComparisonRecord>> {
    let tasks: Vec<(usize, usize)> = (0..batches.len())
        .flat_map(|e| (0..config.gen.pairs_per_env).map(move |p| (e, p)))
        .collect();
    let run = |&(e, p): &(usize, usize)| pair_records(config, &batches[e], p);

    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<ComparisonRecord>>> = {
        use rayon::prelude::*;
        if config.parallelism == 1 {
            tasks.iter().map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.parallelism)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| tasks.par_iter().map(run).collect())
        }
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<ComparisonRecord>>> = tasks.iter().map(run).collect();

    let mut records = Vec::new();
    for chunk in chunks {
        records.extend(chunk?);
    }
    Ok(records)
}

/// Generates every batch of the experiment.
pub fn generate_batches(config: &ExperimentConfig) -> Result<Vec<RewardPairBatch>> {
    (0..config.n_envs)
        .map(|e| gen_batch(&config.gen, config.master_seed, e))
        .collect()
}

/// Computes every comparison and the pooled correlation summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<ComparisonRecord>, CorrelationSummary)> {
    config.validate()?;
    let batches = generate_batches(config)?;
    let records = run_tasks(config, &batches)?;
    let summary = summarise(&records, &config.metric_specs);
    Ok((records, summary))
}

/// Pearson correlation of each metric column against regret, skipping
/// records where the metric is undefined.
pub fn summarise(records: &[ComparisonRecord], specs: &[MetricSpec]) -> CorrelationSummary {
    let mut rows: Vec<SummaryRow> = specs
        .iter()
        .map(|spec| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter_map(|r| r.value(spec).map(|v| (v, r.regret)))
                .unzip();
            SummaryRow {
                spec: spec.to_string(),
                correlation: pearson_correlation(&xs, &ys).ok(),
                n_samples: xs.len(),
                n_missing: records.len() - xs.len(),
            }
        })
        .collect();
    sort_rows(&mut rows);
    CorrelationSummary { rows }
}

/// Descending by correlation, undefined last, ties by spec string.
fn sort_rows(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| match (a.correlation, b.correlation) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.spec.cmp(&b.spec)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.spec.cmp(&b.spec),
    });
}

/// Per-environment summaries, keyed by `env_id`.
pub fn summarise_by_env(records: &[ComparisonRecord], specs: &[MetricSpec]) -> BTreeMap<usize, CorrelationSummary> {
    let mut groups: BTreeMap<usize, Vec<ComparisonRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.env_id).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(env, rs)| (env, summarise(&rs, specs)))
        .collect()
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records_csv(records: &[ComparisonRecord], specs: &[MetricSpec], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "env_id".to_string(),
        "pair_id".into(),
        "interp_step".into(),
        "regret".into(),
    ];
    header.extend(specs.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.env_id.to_string(),
            r.pair_id.to_string(),
            r.interp_step.to_string(),
            fmt_float(r.regret),
        ];
        row.extend(specs.iter().map(|s| r.value(s).map(fmt_float).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} `{field}`")))
}

pub fn read_records_csv(path: &Path) -> Result<(Vec<MetricSpec>, Vec<ComparisonRecord>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "env_id" || &header[3] != "regret" {
        return Err(Error::Config("not a records file".into()));
    }
    let specs: Vec<MetricSpec> = header.iter().skip(4).map(parse_metric_spec).collect::<Result<_>>()?;
    let mut records = Vec::new();
    for row in r.records() {
        let row = row?;
        let metric_values = specs
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let field = &row[4 + j];
                let value = if field.is_empty() {
                    None
                } else {
                    Some(parse_field(field, "metric value")?)
                };
                Ok((*spec, value))
            })
            .collect::<Result<_>>()?;
        records.push(ComparisonRecord {
            env_id: parse_field(&row[0], "env_id")?,
            pair_id: parse_field(&row[1], "pair_id")?,
            interp_step: parse_field(&row[2], "interp_step")?,
            regret: parse_field(&row[3], "regret")?,
            metric_values,
        });
    }
    Ok((specs, records))
}

pub fn write_summary(summary: &CorrelationSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "correlation", "n"])?;
    for row in &summary.rows {
        w.write_record([
            row.spec.clone(),
            row.correlation.map(fmt_float).unwrap_or_default(),
            row.n_samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_by_env(by_env: &BTreeMap<usize, CorrelationSummary>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["env_id", "metric", "correlation", "n"])?;
    for (env, summary) in by_env {
        for row in &summary.rows {
            w.write_record([
                env.to_string(),
                row.spec.clone(),
                row.correlation.map(fmt_float).unwrap_or_default(),
                row.n_samples.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter plot of metric value against regret as a standalone SVG.
pub fn render_scatter_svg(records: &[ComparisonRecord], spec: &MetricSpec) -> Result<String> {
    if let Some(first) = records.first() {
        if !first.metric_values.iter().any(|(s, _)| s == spec) {
            return Err(Error::UnknownSpec(spec.to_string()));
        }
    }
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.value(spec).map(|v| (v, r.regret)))
        .collect();
    let (mut lo, mut hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(x, _)| {
            (l.min(x), h.max(x))
        });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let px = |x: f64| M + (x - lo) / (hi - lo) * (W - 2.0 * M);
    let py = |y: f64| H - M - y * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#,
        y0 = H - M,
        x1 = W - M
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{y0}" stroke="black"/>"#,
        y0 = H - M
    );
    for (t, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y:.2}" font-size="11" text-anchor="end">{label}</text>"#,
            x = M - 6.0,
            y = py(t) + 4.0
        );
    }
    for x in [lo, hi] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{y}" font-size="11" text-anchor="middle">{x:.4}</text>"#,
            px(x),
            y = H - M + 16.0
        );
    }
    let name = escape_xml(&spec.to_string());
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="13" text-anchor="middle">{name} distance</text>"#,
        x = W / 2.0,
        y = H - 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{y}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {y})">regret</text>"#,
        y = H / 2.0
    );
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    let rho = match pearson_correlation(&xs, &ys) {
        Ok(r) => format!("{r:.3}"),
        Err(_) => "undefined".into(),
    };
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="13" text-anchor="end">ρ = {rho} (n = {n})</text>"#,
        x = W - M,
        y = M - 20.0,
        n = points.len()
    );
    let _ = writeln!(svg, r##"<g fill="#1f5fa8" fill-opacity="0.5">"##);
    for &(x, y) in &points {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, px(x), py(y));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn emit_scatter_svg(records: &[ComparisonRecord], spec: &MetricSpec, path: &Path) -> Result<()> {
    fs::write(path, render_scatter_svg(records, spec)?)?;
    Ok(())
}

/// File name of the scatter plot for `spec`.
pub fn scatter_file_name(spec: &MetricSpec) -> String {
    format!("scatter_{spec}.svg")
}

/// Runs the experiment and writes `records.csv`, `summary.csv`,
/// `summary_by_env.csv`, one scatter plot per metric and, if requested, the
/// generated batches.
pub fn run_and_write(config: &ExperimentConfig) -> Result<CorrelationSummary> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let batches = generate_batches(config)?;
    if config.save_batches {
        for b in &batches {
            write_json(
                &EnvDocument::from_batch(b),
                &dir.join(format!("batch_env{}.json", b.env_index)),
            )?;
        }
    }
    let records = run_tasks(config, &batches)?;
    let summary = summarise(&records, &config.metric_specs);
    write_records_csv(&records, &config.metric_specs, &dir.join("records.csv"))?;
    write_summary(&summary, &dir.join("summary.csv"))?;
    write_summary_by_env(
        &summarise_by_env(&records, &config.metric_specs),
        &dir.join("summary_by_env.csv"),
    )?;
    if config.scatter_plots {
        for spec in &config.metric_specs {
            emit_scatter_svg(&records, spec, &dir.join(scatter_file_name(spec)))?;
        }
    }
    Ok(summary)
}
