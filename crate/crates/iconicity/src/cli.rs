//! The `iconicity` command-line tool.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use iconicity_core::eval::{
    covariate_bins, level_distributions, linear_probe, roc, spearman, tpr_at_fpr,
};
use iconicity_core::gradcheck::{random_grad_check_with_step, DEFAULT_STEP};
use iconicity_core::pairs::{mixture_filter, sample_epoch};
use iconicity_core::pooling::{template_similarity, Pooling, ScoredMatch, DEFAULT_LAMBDA};
use iconicity_core::protocol::{build_protocol, ProtocolConfig};
use iconicity_core::synth::generate;
use iconicity_core::train::{score, train};
use iconicity_core::{
    feature_norm_score, Dataset, DegradationMode, MlpConfig, MlpParams, SynthConfig, TrainConfig,
};
use rayon::prelude::*;

use crate::config::Settings;
use crate::embeddings::{read_embeddings, write_embeddings};
use crate::error::{AppError, AppResult};
use crate::model::{read_model, write_model, ModelFile};
use crate::table::{fmt_f64, write_table};
use crate::tables::{
    read_matches, read_scores, read_similarities, read_templates, write_loss_log, write_matches,
    write_plan, write_scores, write_similarities, write_templates,
};

#[derive(Debug, Parser)]
#[command(
    name = "iconicity",
    version,
    about = "Learned iconicity scores for face embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key=value file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for scoring and verification (0: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic embedding dataset, optionally with templates and matches.
    Gen(GenArgs),
    /// Train the scoring network on an embedding CSV.
    Train(TrainArgs),
    /// Score every record of an embedding CSV.
    Score(ScoreArgs),
    /// Pool templates and score verification matches.
    PoolVerify(PoolVerifyArgs),
    /// ROC points and TPR at fixed FPR targets from a similarity CSV.
    EvalRoc(EvalRocArgs),
    /// Score statistics over equal-count covariate bins and covariate levels.
    EvalCovariates(EvalCovariatesArgs),
    /// Linear regression from embeddings to a covariate.
    Probe(ProbeArgs),
    /// Compare analytic and finite-difference gradients on random networks.
    GradCheck(GradCheckArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    identities: Option<usize>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    iconic_fraction: Option<f64>,
    #[arg(long)]
    iconic_noise: Option<f64>,
    #[arg(long)]
    junk_noise: Option<f64>,
    #[arg(long)]
    media: Option<usize>,
    /// two-level or continuous.
    #[arg(long)]
    mode: Option<ModeArg>,
    /// Also write a template CSV (requires --matches-out).
    #[arg(long)]
    templates_out: Option<PathBuf>,
    #[arg(long)]
    matches_out: Option<PathBuf>,
    #[arg(long)]
    template_size: Option<usize>,
    #[arg(long)]
    junk_per_template: Option<usize>,
    #[arg(long)]
    genuine: Option<usize>,
    #[arg(long)]
    impostor: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    loss_log: Option<PathBuf>,
    /// Directory for per-epoch pair plans (`plan_epochNNN.csv`).
    #[arg(long)]
    plans_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    n_pos: Option<usize>,
    #[arg(long)]
    n_neg: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Comma-separated layer widths ending in 1.
    #[arg(long)]
    widths: Option<UsizeList>,
    #[arg(long)]
    selu_last_hidden: Option<bool>,
    /// Proxy for the identity mixture filter: a covariate name or
    /// `feature-norm`. Without it every identity is eligible.
    #[arg(long)]
    mixture_proxy: Option<String>,
    /// Iconic cut on the proxy (default: its median).
    #[arg(long)]
    mixture_threshold: Option<f64>,
    #[arg(long)]
    mixture_band: Option<f64>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PoolVerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    matches: Option<PathBuf>,
    /// quality, media or plain.
    #[arg(long)]
    method: Option<MethodArg>,
    /// Score CSV for quality pooling.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Model used to score records when no score CSV is given.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalRocArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Comma-separated FPR targets.
    #[arg(long)]
    targets: Option<F64List>,
    /// TPR table output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full ROC point list.
    #[arg(long)]
    roc_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalCovariatesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    covariate: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    /// Bin table output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-level score distributions output.
    #[arg(long)]
    levels_out: Option<PathBuf>,
    #[arg(long)]
    histogram_bins: Option<usize>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    covariate: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradCheckArgs {
    #[command(flatten)]
    common: Common,
    /// First seed; seeds `seed..seed + seeds` are checked.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    widths: Option<UsizeList>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

macro_rules! list_type {
    ($name:ident, $item:ty) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Vec<$item>);

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                s.split(',')
                    .map(|x| x.trim().parse::<$item>().map_err(|e| format!("{x:?}: {e}")))
                    .collect::<Result<Vec<_>, _>>()
                    .map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    };
}

list_type!(UsizeList, usize);
list_type!(F64List, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeArg(pub DegradationMode);

impl FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "two-level" => Ok(ModeArg(DegradationMode::TwoLevel)),
            "continuous" => Ok(ModeArg(DegradationMode::Continuous)),
            _ => Err(format!("unknown mode {s:?} (two-level, continuous)")),
        }
    }
}

impl fmt::Display for ModeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            DegradationMode::TwoLevel => "two-level",
            DegradationMode::Continuous => "continuous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Quality,
    Media,
    Plain,
}

impl FromStr for MethodArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quality" => Ok(MethodArg::Quality),
            "media" => Ok(MethodArg::Media),
            "plain" => Ok(MethodArg::Plain),
            _ => Err(format!("unknown method {s:?} (quality, media, plain)")),
        }
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodArg::Quality => "quality",
            MethodArg::Media => "media",
            MethodArg::Plain => "plain",
        })
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> AppResult<()> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Score(a) => cmd_score(a),
        Command::PoolVerify(a) => cmd_pool_verify(a),
        Command::EvalRoc(a) => cmd_eval_roc(a),
        Command::EvalCovariates(a) => cmd_eval_covariates(a),
        Command::Probe(a) => cmd_probe(a),
        Command::GradCheck(a) => cmd_grad_check(a),
    }
}

/// Loads the config file and resolves `threads` first so every header
/// starts the same way.
fn settings(name: &str, common: &Common) -> AppResult<(Settings, rayon::ThreadPool)> {
    let mut s = Settings::load(common.config.as_deref())?;
    s.value("command", None, name.to_string())?;
    let threads = s.value("threads", common.threads, 0usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::Usage(format!("thread pool: {e}")))?;
    Ok((s, pool))
}

fn header(s: &Settings) -> String {
    format!("# iconicity {}\n{}", env!("CARGO_PKG_VERSION"), s.header())
}

fn cmd_gen(a: GenArgs) -> AppResult<()> {
    let (mut s, _) = settings("gen", &a.common)?;
    let d = SynthConfig::default();
    let out = s.required_path("out", a.out)?;
    let config = SynthConfig {
        seed: s.value("seed", a.seed, d.seed)?,
        num_identities: s.value("identities", a.identities, d.num_identities)?,
        images_per_identity: s.value("images", a.images, d.images_per_identity)?,
        dimension: s.value("dim", a.dim, d.dimension)?,
        iconic_fraction: s.value("iconic_fraction", a.iconic_fraction, d.iconic_fraction)?,
        iconic_noise: s.value("iconic_noise", a.iconic_noise, d.iconic_noise)?,
        junk_noise: s.value("junk_noise", a.junk_noise, d.junk_noise)?,
        media_per_identity: s.value("media", a.media, d.media_per_identity)?,
        mode: s.value("mode", a.mode, ModeArg(d.mode))?.0,
    };
    let templates_out = s.optional_path("templates_out", a.templates_out)?;
    let matches_out = s.optional_path("matches_out", a.matches_out)?;
    let protocol = match (&templates_out, &matches_out) {
        (None, None) => None,
        (Some(_), Some(_)) => {
            let p = ProtocolConfig::default();
            Some(ProtocolConfig {
                template_size: s.value("template_size", a.template_size, p.template_size)?,
                junk_per_template: s.value(
                    "junk_per_template",
                    a.junk_per_template,
                    p.junk_per_template,
                )?,
                genuine: s.value("genuine", a.genuine, p.genuine)?,
                impostor: s.value("impostor", a.impostor, p.impostor)?,
                seed: config.seed,
            })
        }
        _ => {
            return Err(AppError::Usage(
                "--templates-out and --matches-out go together".into(),
            ))
        }
    };
    s.finish()?;
    config.validate()?;
    let ds = generate(&config)?;
    let h = header(&s);
    if let (Some(p), Some(t), Some(m)) = (protocol, templates_out, matches_out) {
        let proto = build_protocol(&ds, &p)?;
        write_templates(&t, &h, &ds, &proto.templates)?;
        write_matches(&m, &h, &proto.matches)?;
    }
    write_embeddings(&out, &h, &ds)?;
    println!("wrote {} records to {}", ds.len(), out.display());
    Ok(())
}

fn proxy_scores(ds: &Dataset, proxy: &str, path: &Path) -> AppResult<Vec<f64>> {
    if proxy == "feature-norm" {
        return Ok(ds
            .records()
            .iter()
            .map(|r| feature_norm_score(&r.vector))
            .collect());
    }
    ds.records()
        .iter()
        .map(|r| {
            r.covariate(proxy).ok_or_else(|| {
                AppError::data(
                    path,
                    format!("record {} has no covariate {proxy}", r.image_id),
                )
            })
        })
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cmd_train(a: TrainArgs) -> AppResult<()> {
    let (mut s, _) = settings("train", &a.common)?;
    let d = TrainConfig::default();
    let data = s.required_path("data", a.data)?;
    let model_out = s.required_path("model_out", a.model_out)?;
    let loss_log = s.optional_path("loss_log", a.loss_log)?;
    let plans_dir = s.optional_path("plans_dir", a.plans_dir)?;
    let config = TrainConfig {
        seed: s.value("seed", a.seed, d.seed)?,
        epochs: s.value("epochs", a.epochs, d.epochs)?,
        n_pos: s.value("n_pos", a.n_pos, d.n_pos)?,
        n_neg: s.value("n_neg", a.n_neg, d.n_neg)?,
        batch_size: s.value("batch_size", a.batch_size, d.batch_size)?,
        learning_rate: s.value("lr", a.lr, d.learning_rate)?,
        momentum: s.value("momentum", a.momentum, d.momentum)?,
        margin: s.value("margin", a.margin, d.margin)?,
        widths: s.value("widths", a.widths, UsizeList(d.widths.clone()))?.0,
        selu_on_last_hidden: s.value(
            "selu_last_hidden",
            a.selu_last_hidden,
            d.selu_on_last_hidden,
        )?,
    };
    let proxy: Option<String> = s.optional("mixture_proxy", a.mixture_proxy)?;
    let threshold: Option<f64> = s.optional("mixture_threshold", a.mixture_threshold)?;
    let band = s.value("mixture_band", a.mixture_band, 0.25)?;
    s.finish()?;
    config.validate()?;

    let ds = read_embeddings(&data)?;
    let eligible: BTreeSet<String> = match proxy {
        None => ds.identity_index().keys().cloned().collect(),
        Some(p) => {
            let scores = proxy_scores(&ds, &p, &data)?;
            let t = threshold.unwrap_or_else(|| median(&scores));
            mixture_filter(&ds, &scores, t, band)?
        }
    };
    let h = header(&s);
    if let Some(dir) = &plans_dir {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        for epoch in 0..config.epochs {
            let plan = sample_epoch(
                &ds,
                &eligible,
                config.n_pos,
                config.n_neg,
                config.epoch_seed(epoch),
            )?;
            write_plan(&dir.join(format!("plan_epoch{epoch:03}.csv")), &h, &plan)?;
        }
    }
    let outcome = train(&ds, &eligible, &config)?;
    write_model(
        &model_out,
        &ModelFile::new(&outcome.params, &config, s.echo()),
    )?;
    if let Some(path) = &loss_log {
        write_loss_log(path, &h, &outcome.history)?;
    }
    match outcome.history.last() {
        Some(last) => println!(
            "trained {} epochs on {} identities, final mean loss {}",
            config.epochs,
            eligible.len(),
            fmt_f64(last.mean_loss)
        ),
        None => println!("0 epochs: wrote initialized model"),
    }
    Ok(())
}

fn score_all(pool: &rayon::ThreadPool, params: &MlpParams, ds: &Dataset) -> AppResult<Vec<f64>> {
    let scores: Result<Vec<f64>, _> = pool.install(|| {
        ds.records()
            .par_iter()
            .map(|r| score(params, &r.vector))
            .collect()
    });
    Ok(scores?)
}

fn cmd_score(a: ScoreArgs) -> AppResult<()> {
    let (mut s, pool) = settings("score", &a.common)?;
    let data = s.required_path("data", a.data)?;
    let model = s.required_path("model", a.model)?;
    let out = s.required_path("out", a.out)?;
    s.finish()?;
    let ds = read_embeddings(&data)?;
    let (_, params) = read_model(&model)?;
    if params.input_dim() != ds.dimension() {
        return Err(AppError::data(
            &data,
            format!(
                "dimension {} but the model expects {}",
                ds.dimension(),
                params.input_dim()
            ),
        ));
    }
    let scores = score_all(&pool, &params, &ds)?;
    write_scores(&out, &header(&s), &ds, &scores)?;
    println!("scored {} records", scores.len());
    Ok(())
}

fn cmd_pool_verify(a: PoolVerifyArgs) -> AppResult<()> {
    let (mut s, pool) = settings("pool-verify", &a.common)?;
    let data = s.required_path("data", a.data)?;
    let templates_path = s.required_path("templates", a.templates)?;
    let matches_path = s.required_path("matches", a.matches)?;
    let method = s.value("method", a.method, MethodArg::Quality)?;
    let out = s.required_path("out", a.out)?;
    let (scores_path, model_path, lambda) = if method == MethodArg::Quality {
        let sp = s.optional_path("scores", a.scores)?;
        let mp = s.optional_path("model", a.model)?;
        if sp.is_some() == mp.is_some() {
            return Err(AppError::Usage(
                "quality pooling needs exactly one of --scores, --model".into(),
            ));
        }
        (sp, mp, s.value("lambda", a.lambda, DEFAULT_LAMBDA)?)
    } else {
        (None, None, 0.0)
    };
    s.finish()?;

    let ds = read_embeddings(&data)?;
    let templates = read_templates(&templates_path, &ds)?;
    let matches = read_matches(&matches_path)?;
    let scores = match (&scores_path, &model_path) {
        (Some(p), _) => Some(read_scores(p, &ds)?),
        (None, Some(m)) => Some(score_all(&pool, &read_model(m)?.1, &ds)?),
        (None, None) => None,
    };
    let pooling = match (method, &scores) {
        (MethodArg::Quality, Some(sc)) => Pooling::Quality { scores: sc, lambda },
        (MethodArg::Media, _) => Pooling::MediaAverage,
        _ => Pooling::PlainAverage,
    };
    let scored = verify_parallel(&pool, &templates, &matches, &ds, pooling)?;
    write_similarities(&out, &header(&s), &scored)?;
    println!("scored {} matches", scored.len());
    Ok(())
}

/// Same output as the core protocol, with templates pooled and matches
/// scored on the worker pool. Output keeps match order.
pub fn verify_parallel(
    pool: &rayon::ThreadPool,
    templates: &[iconicity_core::Template],
    matches: &[iconicity_core::pooling::Match],
    ds: &Dataset,
    pooling: Pooling<'_>,
) -> AppResult<Vec<ScoredMatch>> {
    let by_id: std::collections::HashMap<&str, usize> = templates
        .iter()
        .enumerate()
        .map(|(k, t)| (t.id.as_str(), k))
        .collect();
    for m in matches {
        for id in [&m.template_a, &m.template_b] {
            if !by_id.contains_key(id.as_str()) {
                return Err(iconicity_core::Error::UnknownTemplate(id.clone()).into());
            }
        }
    }
    pool.install(|| {
        let pooled: Vec<_> = templates
            .par_iter()
            .map(|t| pooling.pool(t, ds))
            .collect::<Result<_, _>>()?;
        let scored: Vec<ScoredMatch> = matches
            .par_iter()
            .map(|m| {
                let a = &pooled[by_id[m.template_a.as_str()]];
                let b = &pooled[by_id[m.template_b.as_str()]];
                Ok(ScoredMatch {
                    template_a: m.template_a.clone(),
                    template_b: m.template_b.clone(),
                    genuine: m.genuine,
                    similarity: template_similarity(a, b)?,
                })
            })
            .collect::<Result<_, iconicity_core::Error>>()?;
        Ok(scored)
    })
}

fn cmd_eval_roc(a: EvalRocArgs) -> AppResult<()> {
    let (mut s, _) = settings("eval-roc", &a.common)?;
    let similarity = s.required_path("similarity", a.similarity)?;
    let targets = s.value("targets", a.targets, F64List(vec![1e-4, 1e-3, 1e-2, 1e-1]))?;
    let out = s.required_path("out", a.out)?;
    let roc_out = s.optional_path("roc_out", a.roc_out)?;
    s.finish()?;
    let scored = read_similarities(&similarity)?;
    let pairs: Vec<(f64, bool)> = scored.iter().map(|m| (m.similarity, m.genuine)).collect();
    let curve = roc(&pairs)?;
    let ops = tpr_at_fpr(&curve, &targets.0);
    let h = header(&s);
    let rows = ops.iter().map(|op| {
        [
            fmt_f64(op.target_fpr),
            fmt_f64(op.tpr),
            fmt_f64(op.fpr),
            fmt_f64(op.threshold),
            u8::from(op.resolvable).to_string(),
        ]
    });
    write_table(
        &out,
        &h,
        &["target_fpr", "tpr", "fpr", "threshold", "resolvable"],
        rows,
    )?;
    if let Some(path) = &roc_out {
        let rows = curve.points.iter().map(|p| {
            [
                fmt_f64(p.threshold),
                p.true_accepts.to_string(),
                p.false_accepts.to_string(),
                fmt_f64(p.tpr),
                fmt_f64(p.fpr),
            ]
        });
        write_table(
            path,
            &h,
            &["threshold", "true_accepts", "false_accepts", "tpr", "fpr"],
            rows,
        )?;
    }
    for op in &ops {
        println!("TPR@FPR={}: {}", fmt_f64(op.target_fpr), fmt_f64(op.tpr));
    }
    Ok(())
}

fn cmd_eval_covariates(a: EvalCovariatesArgs) -> AppResult<()> {
    let (mut s, _) = settings("eval-covariates", &a.common)?;
    let data = s.required_path("data", a.data)?;
    let scores_path = s.required_path("scores", a.scores)?;
    let covariate: String = s.required("covariate", a.covariate)?;
    let n_bins = s.value("bins", a.bins, 5usize)?;
    let out = s.required_path("out", a.out)?;
    let levels_out = s.optional_path("levels_out", a.levels_out)?;
    let histogram_bins = s.value("histogram_bins", a.histogram_bins, 10usize)?;
    s.finish()?;

    let ds = read_embeddings(&data)?;
    let scores = read_scores(&scores_path, &ds)?;
    // Records lacking the covariate are left out of every analysis.
    let records: Vec<usize> = (0..ds.len())
        .filter(|&k| ds.records()[k].covariate(&covariate).is_some())
        .collect();
    if records.is_empty() {
        return Err(AppError::data(
            &data,
            format!("no record carries covariate {covariate}"),
        ));
    }
    let cov: Vec<f64> = records
        .iter()
        .map(|&k| ds.records()[k].covariate(&covariate).unwrap_or(f64::NAN))
        .collect();
    let sel: Vec<f64> = records.iter().map(|&k| scores[k]).collect();
    let rho = spearman(&sel, &cov)?;
    let bins = covariate_bins(&ds, &records, &scores, &covariate, n_bins)?;
    let h = format!("{}# spearman={}\n", header(&s), fmt_f64(rho));
    let rows = (0..bins.len()).map(|b| {
        [
            b.to_string(),
            fmt_f64(bins.edges[b].0),
            fmt_f64(bins.edges[b].1),
            bins.counts[b].to_string(),
            fmt_f64(bins.mean_covariate[b]),
            fmt_f64(bins.mean_score[b]),
        ]
    });
    write_table(
        &out,
        &h,
        &[
            "bin",
            "lower",
            "upper",
            "count",
            "mean_covariate",
            "mean_score",
        ],
        rows,
    )?;
    if let Some(path) = &levels_out {
        let levels = level_distributions(&ds, &records, &scores, &covariate, histogram_bins)?;
        let mut cols = vec![
            "level".to_string(),
            "count".into(),
            "mean".into(),
            "stddev".into(),
        ];
        cols.extend((0..histogram_bins).map(|k| format!("hist{k}")));
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let rows = levels.iter().map(|l| {
            let mut row = vec![
                fmt_f64(l.level),
                l.count.to_string(),
                fmt_f64(l.mean),
                fmt_f64(l.stddev),
            ];
            row.extend(l.histogram.iter().map(|c| c.to_string()));
            row
        });
        write_table(path, &h, &col_refs, rows)?;
    }
    println!("spearman(score, {covariate}) = {}", fmt_f64(rho));
    Ok(())
}

fn cmd_probe(a: ProbeArgs) -> AppResult<()> {
    let (mut s, _) = settings("probe", &a.common)?;
    let data = s.required_path("data", a.data)?;
    let covariate: String = s.required("covariate", a.covariate)?;
    let seed = s.value("seed", a.seed, 0u64)?;
    let train_fraction = s.value("train_fraction", a.train_fraction, 0.7)?;
    let out = s.optional_path("out", a.out)?;
    s.finish()?;
    let ds = read_embeddings(&data)?;
    let rows: Vec<&iconicity_core::EmbeddingRecord> = ds
        .records()
        .iter()
        .filter(|r| r.covariate(&covariate).is_some())
        .collect();
    if rows.is_empty() {
        return Err(AppError::data(
            &data,
            format!("no record carries covariate {covariate}"),
        ));
    }
    let features: Vec<&[f64]> = rows.iter().map(|r| r.vector.as_slice()).collect();
    let target: Vec<f64> = rows
        .iter()
        .map(|r| r.covariate(&covariate).unwrap_or(f64::NAN))
        .collect();
    let report = linear_probe(&features, &target, seed, train_fraction)?;
    let metrics = [
        ("train_rows", report.train_rows.to_string()),
        ("test_rows", report.test_rows.to_string()),
        ("mae", fmt_f64(report.mae)),
        ("relative_error", fmt_f64(report.relative_error)),
        ("mae_over_std", fmt_f64(report.mae_over_std)),
    ];
    if let Some(path) = &out {
        write_table(
            path,
            &header(&s),
            &["metric", "value"],
            metrics.iter().map(|(k, v)| [k.to_string(), v.clone()]),
        )?;
    }
    for (k, v) in &metrics {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_grad_check(a: GradCheckArgs) -> AppResult<()> {
    let (mut s, _) = settings("grad-check", &a.common)?;
    let seed = s.value("seed", a.seed, 0u64)?;
    let seeds = s.value("seeds", a.seeds, 10u64)?;
    let input_dim = s.value("input_dim", a.input_dim, 16usize)?;
    let widths = s.value("widths", a.widths, UsizeList(vec![16, 8, 4, 2, 1]))?;
    let step = s.value("step", a.step, DEFAULT_STEP)?;
    let tolerance = s.value("tolerance", a.tolerance, 1e-5)?;
    s.finish()?;
    let config = MlpConfig::new(input_dim, widths.0);
    config.validate()?;
    let mut worst = 0.0f64;
    for k in seed..seed + seeds {
        let report = random_grad_check_with_step(k, &config, step)?;
        worst = worst.max(report.max_relative_error);
    }
    println!("max_relative_error={}", fmt_f64(worst));
    if worst < tolerance {
        Ok(())
    } else {
        Err(AppError::CheckFailed(format!(
            "max relative error {worst} >= {tolerance}"
        )))
    }
}
