//! Command-line front end. Relative paths in the run configuration are
//! resolved against the output directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use hifis_core::metrics::compute_metrics;
use hifis_core::train::predict;

use crate::checkpoint::{train_final, write_train_report, Checkpoint};
use crate::config::RunConfig;
use crate::dataset::{build_dataset, Dataset};
use crate::eval::{compare_models, format_table, write_cv_report, ModelSpec};
use crate::explain::{pick_pool, save_explanation, Explainer};
use crate::records::{load_records, save_records};
use crate::schema::FeatureSchema;
use crate::svg;
use crate::synth::generate_synthetic;

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CV_REPORT_FILE: &str = "cv_report.csv";
pub const TRAIN_REPORT_FILE: &str = "train_report.csv";
pub const LOSS_CURVE_FILE: &str = "loss_curve.svg";

#[derive(Debug, Parser)]
#[command(name = "hifis", version, about = "Forecast chronic homelessness from shelter service records")]
pub struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Root directory for every artifact.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic clients.csv and events.csv.
    Synth {
        #[arg(long)]
        clients: Option<usize>,
    },
    /// Turn the raw records into the example dataset.
    Preprocess,
    /// Fit the final model and write a checkpoint.
    Train(TrainArgs),
    /// Nested rolling-origin cross-validation.
    Crossval {
        #[arg(long)]
        folds: Option<usize>,
        /// Run the full model comparison instead of the configured loss only.
        #[arg(long)]
        compare: bool,
    },
    /// Score dataset examples with the checkpoint.
    Predict {
        #[arg(long, value_enum, default_value_t = Subset::All)]
        subset: Subset,
    },
    /// Explain one client's prediction.
    Explain {
        #[arg(long)]
        client: u64,
        /// Grid date to explain; defaults to the client's latest example.
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Submodular pick of explanations into a global summary.
    Pick {
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    All,
    /// Examples the model was fitted on.
    Train,
    /// Examples after the checkpoint's validation window.
    Unseen,
}

/// Configuration from defaults, then the file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.out_dir = out.clone();
    }
    match &cli.command {
        Command::Synth { clients: Some(n) } => cfg.synth.clients = *n,
        Command::Train(TrainArgs { epochs: Some(e) }) => cfg.model.max_epochs = *e,
        Command::Crossval { folds: Some(f), .. } => cfg.cv.folds = *f,
        Command::Pick { budget: Some(b) } => cfg.pick.budget = *b,
        _ => {}
    }
    let out = cfg.paths.out_dir.clone();
    let p = &mut cfg.paths;
    for path in [&mut p.raw_dir, &mut p.dataset_dir, &mut p.checkpoint] {
        if path.is_relative() {
            *path = out.join(&*path);
        }
    }
    Ok(cfg.resolve()?)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Synth { .. } => synth(&cfg),
        Command::Preprocess => preprocess(&cfg),
        Command::Train(_) => train(&cfg),
        Command::Crossval { compare, .. } => crossval(&cfg, compare),
        Command::Predict { subset } => predict_cmd(&cfg, subset),
        Command::Explain { client, date } => explain(&cfg, client, date),
        Command::Pick { .. } => pick(&cfg),
    }
}

fn write_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let path = cfg.write_to(dir)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let rs = generate_synthetic(&cfg.synth, cfg.seed)?;
    save_records(&rs, &cfg.paths.raw_dir, &FeatureSchema::default())?;
    write_config(cfg, &cfg.paths.raw_dir)?;
    println!("{} clients, {} events written to {}", rs.clients.len(), rs.events.len(), cfg.paths.raw_dir.display());
    Ok(())
}

fn preprocess(cfg: &RunConfig) -> Result<()> {
    let schema = FeatureSchema::default();
    let rs = load_records(&cfg.paths.raw_dir, &schema).with_context(|| format!("reading records from {}", cfg.paths.raw_dir.display()))?;
    let ds = build_dataset(&rs, &schema, &cfg.pipeline)?;
    ds.save(&cfg.paths.dataset_dir)?;
    write_config(cfg, &cfg.paths.dataset_dir)?;
    println!(
        "{} examples over {} time steps, {:.2}% positive, written to {}",
        ds.len(),
        ds.steps(),
        100.0 * ds.positive_rate(),
        cfg.paths.dataset_dir.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let dir = &cfg.paths.dataset_dir;
    let ds = Dataset::load(dir).with_context(|| format!("loading the dataset from {} (run `preprocess` first)", dir.display()))?;
    if ds.is_empty() {
        bail!("the dataset in {} has no examples", dir.display());
    }
    Ok(ds)
}

fn load_checkpoint(cfg: &RunConfig, ds: &Dataset) -> Result<Checkpoint> {
    let path = &cfg.paths.checkpoint;
    Checkpoint::load(path, &ds.schema.hash()).with_context(|| format!("loading checkpoint {} (run `train` first)", path.display()))
}

fn train(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let ck = train_final(&ds, &cfg.model, cfg.loss, cfg.cv.val_steps)?;
    let path = &cfg.paths.checkpoint;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    ck.save(path)?;
    write_train_report(&dir.join(TRAIN_REPORT_FILE), &ck.report)?;
    let curve = svg::loss_curve("Training and validation loss", &ck.report.train_loss, &ck.report.val_loss, ck.report.best_epoch);
    std::fs::write(dir.join(LOSS_CURVE_FILE), curve).with_context(|| format!("writing {}", dir.join(LOSS_CURVE_FILE).display()))?;
    write_config(cfg, &dir)?;
    println!(
        "best epoch {} of {} (validation loss {:.4}); checkpoint written to {}",
        ck.report.best_epoch,
        ck.report.stopped_epoch,
        ck.report.val_loss.get(ck.report.best_epoch.wrapping_sub(1)).copied().unwrap_or(f64::NAN),
        path.display()
    );
    Ok(())
}

fn crossval(cfg: &RunConfig, compare: bool) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let specs = if compare { ModelSpec::comparison() } else { vec![ModelSpec::RnnMlp { loss: cfg.loss }] };
    let reports = compare_models(&ds, &cfg.model, &cfg.cv, &specs)?;
    let out = &cfg.paths.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_cv_report(&out.join(CV_REPORT_FILE), &reports)?;
    write_config(cfg, out)?;
    print!("{}", format_table(&reports));
    Ok(())
}

fn predict_cmd(cfg: &RunConfig, subset: Subset) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let ck = load_checkpoint(cfg, &ds)?;
    let idx: Vec<usize> = match subset {
        Subset::All => (0..ds.len()).collect(),
        Subset::Train => ck.train_examples(&ds),
        Subset::Unseen => (0..ds.len()).filter(|&i| ds.examples[i].date > ck.val_end).collect(),
    };
    if idx.is_empty() {
        bail!("no examples in the {subset:?} subset");
    }
    let (mut x, y) = ds.matrix(&idx);
    ck.scaler.transform(&mut x, ds.width());
    let (probs, labels) = predict(&ck.params, &x, ck.cfg.threshold)?;

    let out = &cfg.paths.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(PREDICTIONS_FILE);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["ClientID", "Date", "y", "probability", "label"])?;
    for ((&i, p), l) in idx.iter().zip(&probs).zip(&labels) {
        let e = &ds.examples[i];
        w.write_record([e.client_id.to_string(), e.date.to_string(), e.y.to_string(), p.to_string(), l.to_string()])?;
    }
    w.flush()?;
    write_config(cfg, out)?;
    let m = compute_metrics(&y, &probs, ck.cfg.threshold)?;
    let f = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "{} predictions written to {}; recall {}, precision {}, AUC {}",
        idx.len(),
        path.display(),
        f(m.recall),
        f(m.precision),
        f(m.auc)
    );
    Ok(())
}

fn explainer<'a>(cfg: &RunConfig, ds: &Dataset, ck: &'a Checkpoint) -> Result<Explainer<'a>> {
    let (train_rows, _) = ds.matrix(&ck.train_examples(ds));
    if train_rows.is_empty() {
        bail!("the dataset has no examples from the checkpoint's training window");
    }
    Ok(Explainer::new(&ck.params, &ck.scaler, &ds.schema, &train_rows, cfg.lime.clone())?)
}

fn explain(cfg: &RunConfig, client: u64, date: Option<NaiveDate>) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let ck = load_checkpoint(cfg, &ds)?;
    let index = match date {
        Some(d) => ds.find(client, d).with_context(|| format!("no example for client {client} on {d}"))?,
        None => (0..ds.len()).rev().find(|&i| ds.examples[i].client_id == client).with_context(|| format!("no examples for client {client}"))?,
    };
    let e = explainer(cfg, &ds, &ck)?.explain_example(&ds, index, cfg.seed)?;
    let out = &cfg.paths.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_explanation(out, &e)?;
    write_config(cfg, out)?;
    println!("client {} on {}: probability {:.4}, local R^2 {:.3}", e.client_id, e.date, e.predicted_probability, e.local_fidelity_r2);
    for (statement, weight) in e.bars() {
        println!("  {weight:+.4}  {statement}");
    }
    Ok(())
}

fn pick(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let ck = load_checkpoint(cfg, &ds)?;
    let seen = ck.seen_examples(&ds);
    let pool = pick_pool(&seen, cfg.pick.pool_fraction, cfg.pick.pool_cap, cfg.seed);
    let (global, _) = explainer(cfg, &ds, &ck)?.pick(&ds, &pool, cfg.pick.budget, cfg.seed)?;
    let out = &cfg.paths.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    global.save(out, cfg.pick.chart_entries)?;
    write_config(cfg, out)?;
    println!("picked {} of {} explanations (coverage {:.4})", global.picked_instance_ids.len(), global.pool_size, global.coverage);
    for (statement, weight) in global.bars(10) {
        println!("  {weight:+.4}  {statement}");
    }
    Ok(())
}
