//! Command-line entry point. Exit codes: 0 success, 1 usage error,
//! 2 data error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dataio::{read_embeddings, read_text_corpus, write_embeddings, EmbeddingMatrix};
use crate::error::Error;
use crate::fmt::{f17, to_json};
use crate::lexical::{lexical_scores, TokenizedCorpus, DEFAULT_MAX_N};
use crate::pipeline::evaluate;
use crate::plot::{render_svg, Labels, PlotKind, PointSet};
use crate::prcurve::{
    curve_extrema, default_bins, default_lambda_grid, default_pi_grid, divergence_frontier, f_gamma, log_grid, mauve_score,
    pr_curve, quantize, uniform_grid, DEFAULT_GAMMAS, DEFAULT_SCALING_C, SMOOTHING_EPS,
};
use crate::preprocess::{fit_pca, reduce_pair, DEFAULT_VARIANCE_TARGET};
use crate::stats::{mean_std, pearson, seed_variance, subsample, sweep, SeedMode, SweepConfig};
use crate::support::DEFAULT_K;
use crate::synth::{agnews_scenario, sample_mixture, scenario_spec, MixtureSpec, Scenario};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_N: usize = 4000;

#[derive(Debug, Parser)]
#[command(name = "prdist", version, about = "Distribution-based precision/recall for generative text models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Precision and recall of the output set against the reference set.
    Pr(PairArgs),
    /// Quantized PR-curve with F-scores and its extrema.
    Curve(PairArgs),
    /// Divergence frontier and MAUVE score.
    Mauve(PairArgs),
    /// Precision/recall over grids of sample count and k.
    Sweep(SweepArgs),
    /// Seed standard deviations under each resampling mode.
    Variance(VarianceArgs),
    /// Distinct-N and Self-BLEU of a JSONL corpus.
    Lexical(LexicalArgs),
    /// Pearson correlation between two CSV columns.
    Correlate(CorrelateArgs),
    /// Write synthetic mixture embeddings.
    Synth(SynthArgs),
    /// Render a CSV of labelled points as SVG.
    Plot(PlotArgs),
    /// Dump the PCA fitted on the union of two embedding files.
    PcaDump(PcaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Where to write results (standard output when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PairArgs {
    /// Reference embeddings (EMB1).
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    reference: PathBuf,
    /// Model-output embeddings (EMB1).
    #[arg(long = "out")]
    #[serde(rename = "out")]
    output_set: PathBuf,
    /// Rows drawn from each set when it holds more.
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    variance_target: f64,
    /// k-means cluster count; defaults to min(rows/20, 500).
    #[arg(long)]
    bins: Option<usize>,
    /// KL scaling constant for the divergence frontier.
    #[arg(long, default_value_t = DEFAULT_SCALING_C)]
    c: f64,
    /// Smooth both histograms with additive mass before the frontier.
    #[arg(long)]
    smooth: bool,
    /// Number of λ (curve) or π (mauve) grid points, replacing the defaults.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Repeat for several runs.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    reference: PathBuf,
    #[arg(long = "out")]
    #[serde(rename = "out")]
    output_set: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![100, 250, 500, 1000, 2000, 3000, 4000])]
    n_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = (1..=30).collect::<Vec<usize>>())]
    k_values: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    variance_target: f64,
    #[arg(long, default_value = "vary_output")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    anchor_seed: u64,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct VarianceArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    reference: PathBuf,
    #[arg(long = "out")]
    #[serde(rename = "out")]
    output_set: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    variance_target: f64,
    /// One of vary_output, vary_reference, vary_both; all three when absent.
    #[arg(long)]
    mode: Vec<String>,
    #[arg(long, default_value_t = 0)]
    anchor_seed: u64,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct LexicalArgs {
    /// JSONL corpus of generated texts.
    #[arg(long = "out")]
    #[serde(rename = "out")]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
    /// Self-BLEU subsample size.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CorrelateArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SynthArgs {
    /// Q1_subset, Q2_matched or Q3_superset.
    #[arg(long, conflicts_with = "spec")]
    scenario: Option<String>,
    /// JSON mixture spec; writes a single embedding file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory for scenarios, output file for specs.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Scatter,
    Curve,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PlotArgs {
    /// CSV with header `series,x,y`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "scatter")]
    kind: KindArg,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long, default_value = "precision")]
    x_label: String,
    #[arg(long, default_value = "recall")]
    y_label: String,
    /// Skip the covariance ellipses.
    #[arg(long)]
    no_ellipses: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PcaArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    reference: PathBuf,
    #[arg(long = "out")]
    #[serde(rename = "out")]
    output_set: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    variance_target: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Data(other),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprintln!();
            eprintln!("{}", flag_table(argv.get(1).and_then(|s| s.to_str())));
            return 1;
        }
    };
    let sub = argv.get(1).and_then(|s| s.to_str()).map(str::to_owned);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("{}", flag_table(sub.as_deref()));
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn flag_table(sub: Option<&str>) -> String {
    let mut cmd = Cli::command();
    if let Some(sc) = sub.and_then(|name| cmd.find_subcommand_mut(name)) {
        return sc.render_help().to_string();
    }
    cmd.render_help().to_string()
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Pr(a) => cmd_pr(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Mauve(a) => cmd_mauve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Variance(a) => cmd_variance(a),
        Command::Lexical(a) => cmd_lexical(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Plot(a) => cmd_plot(a),
        Command::PcaDump(a) => cmd_pca_dump(a),
    }
}

fn emit(output: Option<&Path>, text: &str) -> CmdResult {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Data(Error::io(p, e))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(output: Option<&Path>, value: &Value) -> CmdResult {
    let mut text = to_json(value).map_err(Error::from)?;
    text.push('\n');
    emit(output, &text)
}

/// Every JSON document carries the schema version and the effective config.
fn envelope(subcommand: &str, config: &impl Serialize, body: Value) -> Value {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": config,
    });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    doc
}

fn svg_labels(title: &str, x: &str, y: &str) -> Labels {
    Labels {
        title: title.into(),
        x: x.into(),
        y: y.into(),
    }
}

fn seeds_or_default(seeds: &[u64]) -> Vec<u64> {
    if seeds.is_empty() {
        vec![0]
    } else {
        seeds.to_vec()
    }
}

fn load_pair(a: &PairArgs, seed: u64) -> Result<(EmbeddingMatrix, EmbeddingMatrix), Failure> {
    if a.n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    let r = read_embeddings(&a.reference)?;
    let o = read_embeddings(&a.output_set)?;
    let cap = |m: EmbeddingMatrix, stream| -> Result<EmbeddingMatrix, Failure> {
        if m.n_rows() > a.n {
            Ok(subsample(&m, a.n, seed, stream)?)
        } else {
            Ok(m)
        }
    };
    Ok((cap(r, 1)?, cap(o, 2)?))
}

fn cmd_pr(a: PairArgs) -> CmdResult {
    let seeds = seeds_or_default(&a.seeds);
    let mut runs = Vec::new();
    for &seed in &seeds {
        let (r, o) = load_pair(&a, seed)?;
        let eval = evaluate(&r, &o, a.k, a.variance_target)?;
        runs.push((seed, eval));
    }
    let precisions: Vec<f64> = runs.iter().map(|r| r.1.result.precision).collect();
    let recalls: Vec<f64> = runs.iter().map(|r| r.1.result.recall).collect();
    let (mp, sp) = mean_std(&precisions);
    let (mr, sr) = mean_std(&recalls);
    let first = &runs[0].1;

    match a.common.format {
        Format::Json => {
            let run_docs: Vec<Value> = runs
                .iter()
                .map(|(seed, e)| {
                    json!({
                        "seed": seed,
                        "precision": e.result.precision,
                        "recall": e.result.recall,
                        "n_ref": e.result.n_ref,
                        "n_out": e.result.n_out,
                        "n_components": e.model.n_components(),
                        "metadata": e.result.metadata,
                    })
                })
                .collect();
            let mut body = json!({
                "precision": mp,
                "recall": mr,
                "n_ref": first.result.n_ref,
                "n_out": first.result.n_out,
                "k": a.k,
                "n_components": first.model.n_components(),
                "runs": run_docs,
            });
            if runs.len() > 1 {
                body["std_precision"] = json!(sp);
                body["std_recall"] = json!(sr);
            }
            emit_json(a.common.output.as_deref(), &envelope("pr", &a, body))
        }
        Format::Csv => {
            let mut out = String::from("seed,precision,recall,n_ref,n_out,k\n");
            for (seed, e) in &runs {
                out += &format!(
                    "{},{},{},{},{},{}\n",
                    seed,
                    f17(e.result.precision),
                    f17(e.result.recall),
                    e.result.n_ref,
                    e.result.n_out,
                    a.k
                );
            }
            emit(a.common.output.as_deref(), &out)
        }
        Format::Svg => {
            let pts: Vec<(f64, f64)> = precisions.iter().copied().zip(recalls.iter().copied()).collect();
            let label = first.result.metadata.get("out_label").cloned().unwrap_or_else(|| "output".into());
            let set = PointSet::new(label, pts).with_ellipse();
            let svg = render_svg(&[set], PlotKind::Scatter, &svg_labels("Precision / Recall", "precision", "recall"))?;
            emit(a.common.output.as_deref(), &svg)
        }
    }
}

fn histogram_for(a: &PairArgs) -> Result<(crate::prcurve::HistogramPair, u64), Failure> {
    let seed = seeds_or_default(&a.seeds)[0];
    let (r, o) = load_pair(a, seed)?;
    let (_, rr, ro) = reduce_pair(&r, &o, a.variance_target)?;
    let bins = a.bins.unwrap_or_else(|| default_bins(rr.len(), ro.len()));
    let mut hist = quantize(&rr, &ro, bins, seed)?;
    if a.smooth {
        hist = hist.smoothed(SMOOTHING_EPS);
    }
    Ok((hist, seed))
}

fn cmd_curve(a: PairArgs) -> CmdResult {
    let (hist, _) = histogram_for(&a)?;
    let grid = match a.grid_points {
        Some(n) if n >= 1 => log_grid(1e-4, 1e4, n),
        Some(_) => return Err(Failure::Usage("--grid-points must be positive".into())),
        None => default_lambda_grid(&hist),
    };
    let curve = pr_curve(&hist, &grid)?;
    let (alpha_inf, beta_0) = curve_extrema(&hist);
    match a.common.format {
        Format::Json => {
            let f: BTreeMap<String, f64> = DEFAULT_GAMMAS.iter().map(|&g| (f17(g), f_gamma(&curve, g))).collect();
            let body = json!({
                "bins": hist.bins,
                "alpha_inf": alpha_inf,
                "beta_0": beta_0,
                "f_scores": f,
                "f_1_8": f_gamma(&curve, 1.0 / 8.0),
                "f_8": f_gamma(&curve, 8.0),
                "curve": {"lambda": curve.lambdas, "alpha": curve.alphas, "beta": curve.betas},
            });
            emit_json(a.common.output.as_deref(), &envelope("curve", &a, body))
        }
        Format::Csv => emit(a.common.output.as_deref(), &curve.to_csv()),
        Format::Svg => {
            let pts = curve.alphas.iter().copied().zip(curve.betas.iter().copied()).collect();
            let svg = render_svg(&[PointSet::new("PR-curve", pts)], PlotKind::Curve, &svg_labels("PR-curve", "alpha (precision)", "beta (recall)"))?;
            emit(a.common.output.as_deref(), &svg)
        }
    }
}

fn cmd_mauve(a: PairArgs) -> CmdResult {
    let (hist, _) = histogram_for(&a)?;
    let grid = match a.grid_points {
        Some(n) if n >= 2 => uniform_grid(1e-3, 1.0 - 1e-3, n),
        Some(_) => return Err(Failure::Usage("--grid-points must be at least 2".into())),
        None => default_pi_grid(),
    };
    let frontier = divergence_frontier(&hist, &grid, a.c)?;
    let score = mauve_score(&frontier)?;
    match a.common.format {
        Format::Json => {
            let body = json!({
                "mauve": score.value,
                "degenerate": score.degenerate,
                "scaling_c": a.c,
                "bins": hist.bins,
                "frontier": {"pi": frontier.pis, "alpha": frontier.alphas, "beta": frontier.betas},
            });
            emit_json(a.common.output.as_deref(), &envelope("mauve", &a, body))
        }
        Format::Csv => emit(a.common.output.as_deref(), &frontier.to_csv()),
        Format::Svg => {
            let pts = frontier.alphas.iter().copied().zip(frontier.betas.iter().copied()).collect();
            let svg = render_svg(&[PointSet::new("frontier", pts)], PlotKind::Curve, &svg_labels("Divergence frontier", "alpha", "beta"))?;
            emit(a.common.output.as_deref(), &svg)
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let mode: SeedMode = a.mode.parse()?;
    let r = read_embeddings(&a.reference)?;
    let o = read_embeddings(&a.output_set)?;
    let cfg = SweepConfig {
        n_values: a.n_values.clone(),
        k_values: a.k_values.clone(),
        seeds: seeds_or_default(&a.seeds),
        mode,
        variance_target: a.variance_target,
        anchor_seed: a.anchor_seed,
    };
    let table = sweep(&r, &o, &cfg)?;
    match a.common.format {
        Format::Json => {
            let body = json!({"fixed_params": table.fixed_params, "rows": table.rows});
            emit_json(a.common.output.as_deref(), &envelope("sweep", &a, body))
        }
        Format::Csv => emit(a.common.output.as_deref(), &table.to_csv()),
        Format::Svg => {
            // mean over seeds against n (or against k when a single n is swept)
            let by_n = cfg.n_values.len() > 1;
            let (xs, fixed): (Vec<usize>, Vec<usize>) = if by_n {
                (cfg.n_values.clone(), cfg.k_values.clone())
            } else {
                (cfg.k_values.clone(), cfg.n_values.clone())
            };
            let mut sets = Vec::new();
            for &f in &fixed {
                for (metric, pick) in [("precision", 0usize), ("recall", 1)] {
                    let pts = xs
                        .iter()
                        .map(|&x| {
                            let (n, k) = if by_n { (x, f) } else { (f, x) };
                            let cell = table.cell(n, k);
                            let vals: Vec<f64> =
                                cell.rows.iter().map(|r| if pick == 0 { r.precision } else { r.recall }).collect();
                            (x as f64, mean_std(&vals).0)
                        })
                        .collect();
                    let tag = if by_n { format!("k={f}") } else { format!("n={f}") };
                    sets.push(PointSet::new(format!("{metric} {tag}"), pts));
                }
            }
            let x_label = if by_n { "n" } else { "k" };
            let svg = render_svg(&sets, PlotKind::Curve, &svg_labels("Parameter sweep", x_label, "value"))?;
            emit(a.common.output.as_deref(), &svg)
        }
    }
}

fn cmd_variance(a: VarianceArgs) -> CmdResult {
    let modes: Vec<SeedMode> = if a.mode.is_empty() {
        SeedMode::ALL.to_vec()
    } else {
        a.mode.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
    };
    let seeds = if a.seeds.is_empty() { (0..5).collect() } else { a.seeds.clone() };
    if seeds.len() < 2 {
        return Err(Failure::Usage("variance needs at least two --seed values".into()));
    }
    let r = read_embeddings(&a.reference)?;
    let o = read_embeddings(&a.output_set)?;
    let mut reports = Vec::new();
    for mode in modes {
        let cfg = SweepConfig {
            n_values: vec![a.n],
            k_values: vec![a.k],
            seeds: seeds.clone(),
            mode,
            variance_target: a.variance_target,
            anchor_seed: a.anchor_seed,
        };
        let table = sweep(&r, &o, &cfg)?;
        reports.push((seed_variance(&table, mode)?, table));
    }
    match a.common.format {
        Format::Json => {
            let docs: Vec<Value> = reports.iter().map(|(v, _)| serde_json::to_value(v).unwrap()).collect();
            emit_json(a.common.output.as_deref(), &envelope("variance", &a, json!({"reports": docs})))
        }
        Format::Csv => {
            let mut out = String::from("mode,mean_precision,std_precision,mean_recall,std_recall,n_seeds\n");
            for (v, _) in &reports {
                out += &format!(
                    "{},{},{},{},{},{}\n",
                    v.mode.name(),
                    f17(v.mean_precision),
                    f17(v.std_precision),
                    f17(v.mean_recall),
                    f17(v.std_recall),
                    v.n_seeds
                );
            }
            emit(a.common.output.as_deref(), &out)
        }
        Format::Svg => {
            let sets: Vec<PointSet> = reports
                .iter()
                .map(|(v, t)| PointSet::new(v.mode.name(), t.rows.iter().map(|r| (r.precision, r.recall)).collect()).with_ellipse())
                .collect();
            let svg = render_svg(&sets, PlotKind::Scatter, &svg_labels("Seed variance", "precision", "recall"))?;
            emit(a.common.output.as_deref(), &svg)
        }
    }
}

fn cmd_lexical(a: LexicalArgs) -> CmdResult {
    if a.max_n == 0 {
        return Err(Failure::Usage("--max-n must be positive".into()));
    }
    let corpus = read_text_corpus(&a.corpus)?;
    let tokens = TokenizedCorpus::from_corpus(&corpus);
    let seed = seeds_or_default(&a.seeds)[0];
    let scores = lexical_scores(&tokens, a.max_n, a.sample, seed)?;
    match a.common.format {
        Format::Json | Format::Svg => {
            let distinct: BTreeMap<String, f64> = scores.distinct_n.iter().map(|(n, v)| (n.to_string(), *v)).collect();
            let body = json!({
                "distinct": distinct,
                "self_bleu": scores.self_bleu,
                "n_docs": scores.n_docs,
                "self_bleu_sample": scores.sampled,
                "empty_ngram_orders": scores.empty_ngram_orders,
            });
            emit_json(a.common.output.as_deref(), &envelope("lexical", &a, body))
        }
        Format::Csv => {
            let mut out = String::from("metric,value\n");
            for (n, v) in &scores.distinct_n {
                out += &format!("distinct_{n},{}\n", f17(*v));
            }
            out += &format!("self_bleu,{}\n", f17(scores.self_bleu));
            emit(a.common.output.as_deref(), &out)
        }
    }
}

/// Columns of a headed CSV file, keyed by header name.
fn read_columns(path: &Path) -> Result<BTreeMap<String, Vec<String>>, Failure> {
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Failure::Data(Error::MalformedLine { line, reason: e.to_string() })
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut cols: BTreeMap<String, Vec<String>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        for (h, f) in header.iter().zip(record.iter()) {
            cols.get_mut(h).unwrap().push(f.to_string());
        }
    }
    Ok(cols)
}

fn numeric(col: &[String], name: &str) -> Result<Vec<f64>, Failure> {
    col.iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>().map_err(|_| {
                Failure::Data(Error::MalformedLine {
                    line: i + 2,
                    reason: format!("column {name:?}: {s:?} is not a number"),
                })
            })
        })
        .collect()
}

fn cmd_correlate(a: CorrelateArgs) -> CmdResult {
    let cols = read_columns(&a.input)?;
    let get = |name: &str| {
        cols.get(name)
            .ok_or_else(|| Failure::Usage(format!("no column named {name:?}")))
            .and_then(|c| numeric(c, name))
    };
    let x = get(&a.x)?;
    let y = get(&a.y)?;
    let r = pearson(&x, &y)?;
    match a.common.format {
        Format::Csv => emit(a.common.output.as_deref(), &format!("x,y,pearson,n\n{},{},{},{}\n", a.x, a.y, f17(r), x.len())),
        _ => emit_json(
            a.common.output.as_deref(),
            &envelope("correlate", &a, json!({"pearson": r, "n": x.len()})),
        ),
    }
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    let seed = seeds_or_default(&a.seeds)[0];
    match (&a.scenario, &a.spec) {
        (Some(name), None) => {
            let scenario: Scenario = name.parse()?;
            let (r, o) = agnews_scenario(scenario, a.n, seed)?;
            fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
            let ref_path = a.output.join(format!("{scenario}_ref.emb"));
            let out_path = a.output.join(format!("{scenario}_out.emb"));
            let side_path = a.output.join(format!("{scenario}.json"));
            write_embeddings(&r, &ref_path)?;
            write_embeddings(&o, &out_path)?;
            let sidecar = envelope(
                "synth",
                &a,
                json!({
                    "scenario": scenario.name(),
                    "n": a.n,
                    "seed": seed,
                    "allocation": "balanced",
                    "reference_spec": scenario_spec(2, seed),
                    "output_spec": scenario_spec(scenario.output_clusters(), seed),
                    "files": {"ref": ref_path, "out": out_path},
                }),
            );
            emit_json(Some(&side_path), &sidecar)?;
            emit_json(None, &json!({"ref": ref_path, "out": out_path, "sidecar": side_path}))
        }
        (None, Some(spec_path)) => {
            let text = fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
            let mut spec: MixtureSpec = serde_json::from_str(&text).map_err(Error::from)?;
            if !a.seeds.is_empty() {
                spec.seed = seed;
            }
            let m = sample_mixture(&spec, a.n)?;
            write_embeddings(&m, &a.output)?;
            let mut side = a.output.clone().into_os_string();
            side.push(".json");
            let side = PathBuf::from(side);
            emit_json(Some(&side), &envelope("synth", &a, json!({"spec": spec, "n": a.n})))?;
            emit_json(None, &json!({"out": a.output, "sidecar": side}))
        }
        _ => Err(Failure::Usage("synth needs exactly one of --scenario or --spec".into())),
    }
}

fn cmd_plot(a: PlotArgs) -> CmdResult {
    let cols = read_columns(&a.input)?;
    let (Some(series), Some(xs), Some(ys)) = (cols.get("series"), cols.get("x"), cols.get("y")) else {
        return Err(Failure::Usage("plot input needs columns series,x,y".into()));
    };
    let xs = numeric(xs, "x")?;
    let ys = numeric(ys, "y")?;
    let mut sets: Vec<PointSet> = Vec::new();
    for ((s, x), y) in series.iter().zip(xs).zip(ys) {
        match sets.iter_mut().find(|p| &p.label == s) {
            Some(p) => p.points.push((x, y)),
            None => sets.push(PointSet::new(s.clone(), vec![(x, y)])),
        }
    }
    if sets.is_empty() {
        return Err(Failure::Data(Error::InvalidShape("plot input has no rows".into())));
    }
    let kind = match a.kind {
        KindArg::Scatter => PlotKind::Scatter,
        KindArg::Curve => PlotKind::Curve,
    };
    if !a.no_ellipses {
        sets = sets.into_iter().map(PointSet::with_ellipse).collect();
    }
    let svg = render_svg(&sets, kind, &svg_labels(&a.title, &a.x_label, &a.y_label))?;
    emit(a.output.as_deref(), &svg)
}

fn cmd_pca_dump(a: PcaArgs) -> CmdResult {
    let r = read_embeddings(&a.reference)?;
    let o = read_embeddings(&a.output_set)?;
    let model = fit_pca(&r, &o, a.variance_target)?;
    let body = json!({
        "n_components": model.n_components(),
        "explained_ratio": model.explained_ratio(),
        "fingerprint": model.fingerprint(),
        "model": model,
    });
    emit_json(a.output.as_deref(), &envelope("pca-dump", &a, body))
}
