//! Command-line pipeline: synthesize data, annotate clusters, train the
//! autoencoder / MaxEnt / forecaster / ridge baselines, predict, and
//! evaluate. Logs go to stderr; data artifacts go to files. Every run
//! echoes its resolved settings for reproducibility.

mod artifacts;
mod config;
mod error;
mod pipeline;

use artifacts::{
    read_envelope, read_jsonl, write_envelope, write_jsonl, AssessmentLine, BaselineDoc,
    BaselineKind, ScaledRidge, TransitionLine, BASELINE_FORMAT_VERSION,
};
use clap::{Args, Parser, Subcommand};
use config::{resolve, FileConfig};
use error::{CliError, CliResult};

use affectcast_core::autoencoder::{train_ae, AeConfig, AeDoc, AeModel};
use affectcast_core::baselines::{fit_ridge, StandardScaler};
use affectcast_core::clusters::ClusterLexicon;
use affectcast_core::codec::{LayoutMode, StateLayout};
use affectcast_core::dataio;
use affectcast_core::domain::Dataset;
use affectcast_core::forecaster::{
    train_forecaster, ForecasterConfig, ForecasterDoc, ForecasterModel, TargetMode,
};
use affectcast_core::maxent::{FitConfig, MaxEntDoc, MaxEntModel};
use affectcast_core::metrics::{
    evaluate_assessment, evaluate_transition, AssessmentPredictions, TransitionPredictions,
};
use affectcast_core::{codec, Real};

use serde_json::json;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "affectcast", version, about = "Affect assessment and forecasting pipeline")]
struct Cli {
    /// Optional TOML config; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reject unknown keys when reading dataset files.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Fill the cluster field of every entry from the lexicon.
    Annotate(AnnotateArgs),
    /// Train the indicator autoencoder.
    TrainAe(TrainAeArgs),
    /// Fit the MaxEnt model (assessment or transition mode).
    TrainMaxent(TrainMaxentArgs),
    /// Train the sliding-window neural forecaster.
    TrainForecaster(TrainForecasterArgs),
    /// Fit the ridge baselines.
    TrainBaseline(TrainBaselineArgs),
    /// Produce predictions from any trained model.
    Predict(PredictArgs),
    /// Score predictions against gold data.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    entries_min: Option<usize>,
    #[arg(long)]
    entries_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mean-reversion strength in [0,1].
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    offset_scale: Option<f64>,
    #[arg(long)]
    unseen_fraction: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainAeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainMaxentArgs {
    #[arg(long)]
    data: PathBuf,
    /// assessment or transition.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    latent_bits: Option<usize>,
    /// Autoencoder model file providing latent bits (required when
    /// latent_bits > 0).
    #[arg(long)]
    ae: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainForecasterArgs {
    #[arg(long)]
    data: PathBuf,
    /// best-valence or best-arousal; explicit flags override preset fields.
    #[arg(long)]
    preset: Option<String>,
    /// both, valence, or arousal.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    history: Option<usize>,
    #[arg(long)]
    use_text: Option<bool>,
    #[arg(long)]
    use_clusters: Option<bool>,
    #[arg(long)]
    emb_dim: Option<usize>,
    #[arg(long)]
    hidden1: Option<usize>,
    #[arg(long)]
    hidden2: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fallback_exposure: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainBaselineArgs {
    #[arg(long)]
    data: PathBuf,
    /// prev or features-prev.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Autoencoder file for MaxEnt models with latent bits.
    #[arg(long)]
    ae: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// auto, assessment, or transition.
    #[arg(long, default_value = "auto")]
    task: String,
    /// Optional JSON report path; the table always prints to stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        log::error!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let file_cfg = FileConfig::load(cli.config.as_deref())?;
    let strict = cli.strict || file_cfg.io.strict.unwrap_or(false);
    match &cli.command {
        Command::Synth(args) => cmd_synth(args, &file_cfg),
        Command::Annotate(args) => cmd_annotate(args, &file_cfg, strict),
        Command::TrainAe(args) => cmd_train_ae(args, &file_cfg, strict),
        Command::TrainMaxent(args) => cmd_train_maxent(args, &file_cfg, strict),
        Command::TrainForecaster(args) => cmd_train_forecaster(args, &file_cfg, strict),
        Command::TrainBaseline(args) => cmd_train_baseline(args, &file_cfg, strict),
        Command::Predict(args) => cmd_predict(args, &file_cfg, strict),
        Command::Evaluate(args) => cmd_evaluate(args, strict),
    }
}

fn load_dataset(path: &Path, strict: bool) -> CliResult<Dataset> {
    Ok(dataio::load(path, strict)?)
}

fn load_lexicon(flag: Option<&Path>, file_cfg: &FileConfig) -> CliResult<ClusterLexicon> {
    let from_cfg = file_cfg.io.lexicon.as_ref().map(PathBuf::from);
    match flag.map(PathBuf::from).or(from_cfg) {
        Some(p) => Ok(ClusterLexicon::from_json_path(&p)?),
        None => Ok(ClusterLexicon::builtin()),
    }
}

fn echo_run(command: &str, run: &serde_json::Value) {
    log::info!("{command} resolved config: {run}");
}

fn cmd_synth(args: &SynthArgs, file_cfg: &FileConfig) -> CliResult<()> {
    let s = &file_cfg.synth;
    let defaults = dataio::SynthConfig::default();
    let cfg = dataio::SynthConfig {
        n_users: resolve(args.users, s.users, defaults.n_users),
        entries_min: resolve(args.entries_min, s.entries_min, defaults.entries_min),
        entries_max: resolve(args.entries_max, s.entries_max, defaults.entries_max),
        seed: resolve(args.seed, s.seed, defaults.seed),
        mean_reversion: resolve(args.rho, s.mean_reversion, defaults.mean_reversion),
        noise: resolve(args.noise, s.noise, defaults.noise),
        offset_scale: resolve(args.offset_scale, s.offset_scale, defaults.offset_scale),
        unseen_user_fraction: resolve(
            args.unseen_fraction,
            s.unseen_fraction,
            defaults.unseen_user_fraction,
        ),
    };
    echo_run("synth", &serde_json::to_value(&cfg)?);
    let ds = dataio::synthesize(&cfg)?;
    dataio::save(&ds, &args.out)?;
    log::info!(
        "wrote {} entries for {} users to {}",
        ds.n_entries(),
        ds.n_users(),
        args.out.display()
    );
    Ok(())
}

fn cmd_annotate(args: &AnnotateArgs, file_cfg: &FileConfig, strict: bool) -> CliResult<()> {
    let lex = load_lexicon(args.lexicon.as_deref(), file_cfg)?;
    echo_run(
        "annotate",
        &json!({ "data": args.data.display().to_string(), "clusters": lex.cluster_names() }),
    );
    let ds = load_dataset(&args.data, strict)?;
    let (annotated, unmatched) = pipeline::annotate_dataset(&ds, &lex)?;
    dataio::save(&annotated, &args.out)?;
    log::info!(
        "annotated {} entries ({unmatched} unmatched feeling-word tokens) -> {}",
        annotated.n_entries(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train_ae(args: &TrainAeArgs, file_cfg: &FileConfig, strict: bool) -> CliResult<()> {
    let a = &file_cfg.ae;
    let defaults = AeConfig::default();
    let cfg = AeConfig {
        max_epochs: resolve(args.max_epochs, a.max_epochs, defaults.max_epochs),
        batch_size: resolve(args.batch_size, a.batch_size, defaults.batch_size),
        lr: resolve(args.lr, a.lr, defaults.lr),
        weight_decay: resolve(args.weight_decay, a.weight_decay, defaults.weight_decay),
        patience: resolve(args.patience, a.patience, defaults.patience),
        seed: resolve(args.seed, a.seed, defaults.seed),
        binarize_threshold: resolve(
            args.threshold,
            a.binarize_threshold,
            defaults.binarize_threshold,
        ),
    };
    let run = serde_json::to_value(cfg)?;
    echo_run("train-ae", &run);
    let lex = load_lexicon(args.lexicon.as_deref(), file_cfg)?;
    let ds = load_dataset(&args.data, strict)?;
    let indicators = pipeline::dataset_indicators(&ds, &lex)?;
    let (model, report) = train_ae::<Real>(&indicators, &cfg)?;
    log::info!(
        "trained autoencoder: best val loss {:.6} at epoch {} ({} epochs run)",
        report.best_val_loss,
        report.best_epoch,
        report.epochs_run
    );
    write_envelope(&args.out, "autoencoder", run, &model.to_doc())?;
    Ok(())
}

fn parse_mode(text: &str) -> CliResult<LayoutMode> {
    match text {
        "assessment" => Ok(LayoutMode::Assessment),
        "transition" => Ok(LayoutMode::Transition),
        other => Err(CliError::Config(format!(
            "unknown maxent mode `{other}` (expected assessment or transition)"
        ))),
    }
}

fn load_ae_model(path: &Path) -> CliResult<AeModel<Real>> {
    let envelope = read_envelope(path)?;
    if envelope.kind != "autoencoder" {
        return Err(CliError::Config(format!(
            "{} is a `{}` model, expected an autoencoder",
            path.display(),
            envelope.kind
        )));
    }
    let doc: AeDoc = serde_json::from_value(envelope.model)?;
    Ok(AeModel::from_doc(&doc)?)
}

fn dataset_latents(
    ds: &Dataset,
    lex: &ClusterLexicon,
    ae: Option<&AeModel<Real>>,
    latent_bits: usize,
) -> CliResult<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(ds.n_entries());
    for entry in ds.entries() {
        let latent = match ae {
            Some(ae) => pipeline::latent_of(entry, lex, ae, latent_bits)?,
            None => Vec::new(),
        };
        out.push(latent);
    }
    Ok(out)
}

fn cmd_train_maxent(args: &TrainMaxentArgs, file_cfg: &FileConfig, strict: bool) -> CliResult<()> {
    let m = &file_cfg.maxent;
    let mode_text = resolve(args.mode.clone(), m.mode.clone(), "transition".to_string());
    let mode = parse_mode(&mode_text)?;
    let ae = match &args.ae {
        Some(p) => Some(load_ae_model(p)?),
        None => None,
    };
    let default_bits = if ae.is_some() { affectcast_core::autoencoder::LATENT_BITS } else { 0 };
    let latent_bits = resolve(args.latent_bits, m.latent_bits, default_bits);
    if latent_bits > 0 && ae.is_none() {
        return Err(CliError::Config(format!(
            "latent_bits = {latent_bits} requires --ae to produce the latent bits"
        )));
    }
    if ae.is_some() && latent_bits != affectcast_core::autoencoder::LATENT_BITS {
        return Err(CliError::Config(format!(
            "latent_bits {latent_bits} does not match the autoencoder latent width {}",
            affectcast_core::autoencoder::LATENT_BITS
        )));
    }
    let l2 = resolve(args.l2, m.l2, 1e-3);
    let fit_cfg = FitConfig {
        step: resolve(args.step, m.step, FitConfig::default().step),
        tol: resolve(args.tol, m.tol, FitConfig::default().tol),
        max_iters: resolve(args.max_iters, m.max_iters, FitConfig::default().max_iters),
    };
    let run = json!({
        "mode": mode_text,
        "latent_bits": latent_bits,
        "l2": l2,
        "step": fit_cfg.step,
        "tol": fit_cfg.tol,
        "max_iters": fit_cfg.max_iters,
        "ae": args.ae.as_ref().map(|p| p.display().to_string()),
    });
    echo_run("train-maxent", &run);

    let lex = load_lexicon(args.lexicon.as_deref(), file_cfg)?;
    let ds = load_dataset(&args.data, strict)?;
    let layout = StateLayout { mode, latent_bits };

    // Latents come from each entry's own text.
    let all_latents = dataset_latents(&ds, &lex, ae.as_ref(), latent_bits)?;
    let mut latents_iter = all_latents.into_iter();
    let mut data = Vec::new();
    for series in ds.series() {
        let latents: Vec<Vec<u8>> =
            series.entries().iter().map(|_| latents_iter.next().unwrap()).collect();
        match mode {
            LayoutMode::Assessment => {
                for (entry, latent) in series.entries().iter().zip(&latents) {
                    let state = entry.state.ok_or_else(|| {
                        CliError::Data(format!(
                            "entry `{}`/{} is unlabeled",
                            entry.user_id, entry.seq
                        ))
                    })?;
                    data.push(codec::encode(state, None, latent, layout)?);
                }
            }
            LayoutMode::Transition => {
                for (idx, pair) in series.entries().windows(2).enumerate() {
                    let (cur, next) = (&pair[0], &pair[1]);
                    let (cs, ns) = match (cur.state, next.state) {
                        (Some(c), Some(n)) => (c, n),
                        _ => {
                            return Err(CliError::Data(format!(
                                "pair `{}`/{} is unlabeled",
                                cur.user_id, cur.seq
                            )))
                        }
                    };
                    let delta = affectcast_core::domain::delta_between(cs, ns);
                    data.push(codec::encode(cs, Some(delta), &latents[idx], layout)?);
                }
            }
            LayoutMode::Free => unreachable!("parse_mode never yields Free"),
        }
    }

    let m0 = MaxEntModel::<Real>::new(layout, l2);
    let outcome = m0.fit(&data, &fit_cfg)?;
    log::info!(
        "fit maxent on {} vectors: {} iterations, grad max-norm {:.3e}, mean log-likelihood {:.4}, converged: {}",
        data.len(),
        outcome.iterations,
        outcome.grad_max_norm,
        outcome.mean_log_likelihood,
        outcome.converged
    );
    write_envelope(&args.out, "maxent", run, &outcome.model.to_doc())?;
    Ok(())
}

fn parse_target(text: &str) -> CliResult<TargetMode> {
    match text {
        "both" => Ok(TargetMode::Both),
        "valence" => Ok(TargetMode::ValenceOnly),
        "arousal" => Ok(TargetMode::ArousalOnly),
        other => Err(CliError::Config(format!(
            "unknown target `{other}` (expected both, valence, or arousal)"
        ))),
    }
}

fn cmd_train_forecaster(
    args: &TrainForecasterArgs,
    file_cfg: &FileConfig,
    strict: bool,
) -> CliResult<()> {
    let f = &file_cfg.forecaster;
    let preset = args.preset.clone().or(f.preset.clone());
    let base = match preset.as_deref() {
        None | Some("best-valence") => ForecasterConfig::best_valence(),
        Some("best-arousal") => ForecasterConfig::best_arousal(),
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}` (expected best-valence or best-arousal)"
            )))
        }
    };
    let target = match args.target.clone().or(f.target.clone()) {
        Some(t) => parse_target(&t)?,
        None => base.target,
    };
    let cfg = ForecasterConfig {
        target,
        history_len: resolve(args.history, f.history_len, base.history_len),
        use_text: resolve(args.use_text, f.use_text, base.use_text),
        use_clusters: resolve(args.use_clusters, f.use_clusters, base.use_clusters),
        user_emb_dim: resolve(args.emb_dim, f.user_emb_dim, base.user_emb_dim),
        hidden: (
            resolve(args.hidden1, f.hidden1, base.hidden.0),
            resolve(args.hidden2, f.hidden2, base.hidden.1),
        ),
        dropout: resolve(args.dropout, f.dropout, base.dropout),
        lr: resolve(args.lr, f.lr, base.lr),
        weight_decay: resolve(args.weight_decay, f.weight_decay, base.weight_decay),
        batch_size: resolve(args.batch_size, f.batch_size, base.batch_size),
        patience: resolve(args.patience, f.patience, base.patience),
        max_epochs: resolve(args.max_epochs, f.max_epochs, base.max_epochs),
        seed: resolve(args.seed, f.seed, base.seed),
        fallback_exposure: resolve(args.fallback_exposure, f.fallback_exposure, base.fallback_exposure),
    };
    let run = serde_json::to_value(&cfg)?;
    echo_run("train-forecaster", &run);
    let ds = load_dataset(&args.data, strict)?;
    let (model, report) = train_forecaster::<Real>(&ds, &cfg)?;
    log::info!(
        "trained forecaster on {} windows ({} val): best val mse {:.5} at epoch {} of {}",
        report.n_train + report.n_val,
        report.n_val,
        report.best_val_mse,
        report.best_epoch,
        report.epochs_run
    );
    write_envelope(&args.out, "forecaster", run, &model.to_doc())?;
    Ok(())
}

fn parse_baseline_kind(text: &str) -> CliResult<BaselineKind> {
    match text {
        "prev" => Ok(BaselineKind::Prev),
        "features-prev" => Ok(BaselineKind::FeaturesPrev),
        other => Err(CliError::Config(format!(
            "unknown baseline kind `{other}` (expected prev or features-prev)"
        ))),
    }
}

fn cmd_train_baseline(
    args: &TrainBaselineArgs,
    file_cfg: &FileConfig,
    strict: bool,
) -> CliResult<()> {
    let b = &file_cfg.baseline;
    let kind = parse_baseline_kind(&resolve(args.kind.clone(), b.kind.clone(), "prev".into()))?;
    let lambda = resolve(args.lambda, b.lambda, 1.0);
    let run = json!({ "kind": kind, "lambda": lambda });
    echo_run("train-baseline", &run);
    let ds = load_dataset(&args.data, strict)?;

    let mut per_target = Vec::new();
    for target in 0..2 {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for series in ds.series() {
            for idx in 0..series.len().saturating_sub(1) {
                let row = pipeline::baseline_features(series, idx, target, kind)?;
                let cur = series.entries()[idx].state.unwrap();
                let next = series.entries()[idx + 1].state.ok_or_else(|| {
                    let e = &series.entries()[idx + 1];
                    CliError::Data(format!("entry `{}`/{} is unlabeled", e.user_id, e.seq))
                })?;
                let d = affectcast_core::domain::delta_between(cur, next);
                x.push(row);
                y.push(if target == 0 { d.dv() as f64 } else { d.da() as f64 });
            }
        }
        let scaler = StandardScaler::fit(&x)?;
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
        let model = fit_ridge(&scaled, &y, lambda)?;
        per_target.push(ScaledRidge { scaler, model });
    }
    let arousal = per_target.pop().unwrap();
    let valence = per_target.pop().unwrap();
    let doc = BaselineDoc {
        format_version: BASELINE_FORMAT_VERSION,
        kind,
        lambda,
        valence,
        arousal,
    };
    log::info!("fitted ridge baselines (kind {:?}, lambda {lambda})", kind);
    write_envelope(&args.out, "ridge_baseline", run, &doc)?;
    Ok(())
}


/// Clamp a predicted change so the implied next state stays on the grid.
fn clamp_delta(score: f64, delta: f64, max: f64) -> f64 {
    (score + delta).clamp(0.0, max) - score
}

fn cmd_predict(args: &PredictArgs, file_cfg: &FileConfig, strict: bool) -> CliResult<()> {
    let envelope = read_envelope(&args.model)?;
    let ds = load_dataset(&args.data, strict)?;
    echo_run(
        "predict",
        &json!({
            "model": args.model.display().to_string(),
            "kind": envelope.kind,
            "data": args.data.display().to_string(),
        }),
    );
    match envelope.kind.as_str() {
        "maxent" => {
            let doc: MaxEntDoc = serde_json::from_value(envelope.model)?;
            let model = MaxEntModel::<Real>::from_doc(&doc)?;
            match model.layout().mode {
                LayoutMode::Assessment => {
                    let lex = load_lexicon(args.lexicon.as_deref(), file_cfg)?;
                    let ae = match &args.ae {
                        Some(p) => Some(load_ae_model(p)?),
                        None if model.layout().latent_bits == 0 => None,
                        None => {
                            return Err(CliError::Config(
                                "this maxent model uses latent bits; pass --ae".into(),
                            ))
                        }
                    };
                    let latents =
                        dataset_latents(&ds, &lex, ae.as_ref(), model.layout().latent_bits)?;
                    let mut lines = Vec::new();
                    for (entry, latent) in ds.entries().zip(&latents) {
                        let (v_hat, a_hat) = model.predict_assessment(latent)?;
                        lines.push(AssessmentLine {
                            user_id: entry.user_id.clone(),
                            seq: entry.seq,
                            v_hat,
                            a_hat,
                        });
                    }
                    write_jsonl(&args.out, &lines)?;
                    log::info!("wrote {} assessment predictions", lines.len());
                }
                LayoutMode::Transition => {
                    // Only 15 possible inputs; memoize the conditionals.
                    let mut memo: HashMap<(u8, u8), (f64, f64)> = HashMap::new();
                    let mut lines = Vec::new();
                    for series in ds.series() {
                        for idx in 0..series.len().saturating_sub(1) {
                            let entry = &series.entries()[idx];
                            let state = entry.state.ok_or_else(|| {
                                CliError::Data(format!(
                                    "entry `{}`/{} is unlabeled",
                                    entry.user_id, entry.seq
                                ))
                            })?;
                            let key = (state.valence(), state.arousal());
                            let (dv, da) = match memo.get(&key) {
                                Some(&v) => v,
                                None => {
                                    let v = model.predict_transition(state)?;
                                    memo.insert(key, v);
                                    v
                                }
                            };
                            lines.push(TransitionLine {
                                user_id: entry.user_id.clone(),
                                seq: entry.seq,
                                dv_hat: Some(dv),
                                da_hat: Some(da),
                            });
                        }
                    }
                    write_jsonl(&args.out, &lines)?;
                    log::info!("wrote {} transition predictions", lines.len());
                }
                LayoutMode::Free => {
                    return Err(CliError::Config(
                        "free-layout models carry no affect blocks to predict".into(),
                    ))
                }
            }
        }
        "forecaster" => {
            let doc: ForecasterDoc = serde_json::from_value(envelope.model)?;
            let model = ForecasterModel::<Real>::from_doc(&doc)?;
            let mut lines = Vec::new();
            let mut states = HashMap::new();
            for series in ds.series() {
                for e in series.entries() {
                    if let Some(st) = e.state {
                        states.insert((e.user_id.clone(), e.seq), st);
                    }
                }
            }
            for (w, (dv_hat, da_hat)) in model.predict_dataset(&ds)? {
                let st = states[&(w.user_id.clone(), w.seq)];
                lines.push(TransitionLine {
                    user_id: w.user_id,
                    seq: w.seq,
                    dv_hat: dv_hat.map(|d| clamp_delta(st.valence() as f64, d, 4.0)),
                    da_hat: da_hat.map(|d| clamp_delta(st.arousal() as f64, d, 2.0)),
                });
            }
            write_jsonl(&args.out, &lines)?;
            log::info!("wrote {} transition predictions", lines.len());
        }
        "ridge_baseline" => {
            let doc: BaselineDoc = serde_json::from_value(envelope.model)?;
            let mut lines = Vec::new();
            for series in ds.series() {
                for idx in 0..series.len().saturating_sub(1) {
                    let entry = &series.entries()[idx];
                    let xv = pipeline::baseline_features(series, idx, 0, doc.kind)?;
                    let xa = pipeline::baseline_features(series, idx, 1, doc.kind)?;
                    let st = entry.state.unwrap();
                    lines.push(TransitionLine {
                        user_id: entry.user_id.clone(),
                        seq: entry.seq,
                        dv_hat: Some(clamp_delta(st.valence() as f64, doc.valence.predict(&xv)?, 4.0)),
                        da_hat: Some(clamp_delta(st.arousal() as f64, doc.arousal.predict(&xa)?, 2.0)),
                    });
                }
            }
            write_jsonl(&args.out, &lines)?;
            log::info!("wrote {} transition predictions", lines.len());
        }
        "autoencoder" => {
            return Err(CliError::Config(
                "autoencoder models produce latent bits, not predictions; use them via train-maxent/predict --ae"
                    .into(),
            ))
        }
        other => return Err(CliError::Config(format!("unknown model kind `{other}`"))),
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, strict: bool) -> CliResult<()> {
    let gold = load_dataset(&args.gold, strict)?;
    let text = std::fs::read_to_string(&args.pred)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.pred.display())))?;
    let task = match args.task.as_str() {
        "assessment" | "transition" => args.task.clone(),
        "auto" => {
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .ok_or_else(|| CliError::Data("prediction file is empty".into()))?;
            let value: serde_json::Value = serde_json::from_str(first)?;
            if value.get("v_hat").is_some() {
                "assessment".into()
            } else if value.get("dv_hat").is_some() || value.get("da_hat").is_some() {
                "transition".into()
            } else {
                return Err(CliError::Data(
                    "cannot infer the task from the prediction fields; pass --task".into(),
                ));
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown task `{other}` (expected auto, assessment, or transition)"
            )))
        }
    };
    let run = json!({
        "pred": args.pred.display().to_string(),
        "gold": args.gold.display().to_string(),
        "task": task,
    });
    echo_run("evaluate", &run);

    let report_value;
    let table;
    if task == "assessment" {
        let lines: Vec<AssessmentLine> = read_jsonl(&args.pred)?;
        let mut pred = AssessmentPredictions::new();
        for l in lines {
            pred.insert((l.user_id, l.seq), (l.v_hat, l.a_hat));
        }
        let report = evaluate_assessment(&pred, &gold)?;
        table = report.to_table();
        report_value = serde_json::to_value(&report)?;
    } else {
        let lines: Vec<TransitionLine> = read_jsonl(&args.pred)?;
        let mut pred = TransitionPredictions::new();
        for l in lines {
            pred.insert((l.user_id, l.seq), (l.dv_hat, l.da_hat));
        }
        let report = evaluate_transition(&pred, &gold)?;
        table = report.to_table();
        report_value = serde_json::to_value(&report)?;
    }
    print!("{table}");
    if let Some(out) = &args.out {
        let doc = json!({ "run": run, "task": task, "report": report_value });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(out, text)?;
        log::info!("wrote report to {}", out.display());
    }
    Ok(())
}
