//! Command-line surface. Every command writes a JSON echo of its effective
//! configuration next to its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{generate_synthetic_dataset, write_dataset};
use crate::io::{read_to_string, write_atomic};
use crate::nn::{
    evaluate, read_checkpoint, train, write_checkpoint, EpochRecord, Metrics, Model, ModelConfig,
    Sample,
};
use crate::pipeline::{
    diagrams_for_file, input_dims, load_samples, pi_for_file, split_train_val, Cache,
    PipelineConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "tdacnn",
    version,
    about = "Topological features fused with a small CNN"
)]
pub struct Cli {
    /// Pipeline configuration (JSON); omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides both the pipeline seed and the model seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic disk / annulus / two-annuli dataset.
    Dataset {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        per_class: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Persistence diagrams (dimensions 0 and 1) of one image.
    Pd {
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Three-channel persistence image of one image.
    Pi {
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Train on an 80/20 split of a dataset directory.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on every image of a dataset directory.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the CNN-only, fused, and fused+SE variants with identical seeds.
    Ablate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    command: &'a str,
    args: T,
    config: &'a PipelineConfig,
}

fn write_echo<T: Serialize>(
    dir: &Path,
    name: &str,
    command: &str,
    args: T,
    config: &PipelineConfig,
) -> Result<String> {
    let json = serde_json::to_string_pretty(&Echo {
        command,
        args,
        config,
    })
    .expect("echo serializes")
        + "\n";
    write_atomic(&dir.join(name), json.as_bytes())?;
    Ok(json)
}

/// Metrics file layout: final validation metrics plus the learning curve.
#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_epoch: Vec<EpochRecord>,
}

impl MetricsReport {
    pub fn new(m: Metrics, per_epoch: Vec<EpochRecord>) -> Self {
        Self {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            per_epoch,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize") + "\n"
    }
}

pub fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_json(&read_to_string(path)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.model.seed = seed;
    }
    Ok(cfg)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Splits a dataset's samples into (train, validation) by the pipeline seed.
pub fn split_samples(samples: Vec<Sample>, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let (train_ix, val_ix) = split_train_val(samples.len(), seed);
    let mut slots: Vec<Option<Sample>> = samples.into_iter().map(Some).collect();
    let mut take = |ix: &[usize]| -> Vec<Sample> {
        ix.iter()
            .map(|&i| slots[i].take().expect("indices are unique"))
            .collect()
    };
    let train = take(&train_ix);
    let val = take(&val_ix);
    (train, val)
}

/// Trains one model configuration and scores it on `val` (or on `train`
/// when there is no validation data).
pub fn fit_and_score(
    model_cfg: &ModelConfig,
    cfg: &PipelineConfig,
    train_set: &[Sample],
    val_set: &[Sample],
) -> Result<(Model, MetricsReport)> {
    let dims = input_dims(train_set, cfg)?;
    let outcome = train(model_cfg, dims, train_set, val_set)?;
    let scored = if val_set.is_empty() {
        train_set
    } else {
        val_set
    };
    let metrics = evaluate(&outcome.model, scored)?;
    Ok((
        outcome.model,
        MetricsReport::new(metrics, outcome.per_epoch),
    ))
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    cfg.validate()?;
    let cache = Cache::new(&cfg.cache_dir);
    match &cli.command {
        Command::Dataset {
            per_class,
            size,
            out,
        } => {
            let out = out.clone().unwrap_or_else(|| cfg.dataset_dir.clone());
            let items =
                generate_synthetic_dataset(*per_class as usize, *size, cfg.seed).map_err(|e| {
                    match e {
                        Error::InvalidSize(_) => Error::InvalidConfig(e.to_string()),
                        other => other,
                    }
                })?;
            write_dataset(&out, &items)?;
            #[derive(Serialize)]
            struct Args {
                per_class: u64,
                size: usize,
            }
            write_echo(
                &out,
                "dataset.config.json",
                "dataset",
                Args {
                    per_class: *per_class,
                    size: *size,
                },
                &cfg,
            )?;
            println!("wrote {} images to {}", items.len(), out.display());
        }
        Command::Pd { image, out } => {
            let out = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let start = Instant::now();
            let ((h0, h1), provenance) = diagrams_for_file(image, &cfg, Some(&cache))?;
            log::info!(
                "{}: diagrams {:?} in {:.3} ms",
                image.display(),
                provenance,
                start.elapsed().as_secs_f64() * 1e3
            );
            let stem = file_stem(image);
            write_atomic(&out.join(format!("{stem}.pd0.csv")), h0.to_csv().as_bytes())?;
            write_atomic(&out.join(format!("{stem}.pd1.csv")), h1.to_csv().as_bytes())?;
            write_echo(&out, &format!("{stem}.pd.config.json"), "pd", image, &cfg)?;
            println!("H0: {} pairs, H1: {} pairs", h0.len(), h1.len());
        }
        Command::Pi {
            image,
            out,
            resolution,
        } => {
            let mut cfg = cfg.clone();
            if let Some(r) = resolution {
                cfg.pi.resolution = *r;
                cfg.validate()?;
            }
            let out = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let start = Instant::now();
            let (pi, provenance) = pi_for_file(image, &cfg, Some(&cache))?;
            log::info!(
                "{}: persistence image {:?} in {:.3} ms",
                image.display(),
                provenance,
                start.elapsed().as_secs_f64() * 1e3
            );
            let stem = file_stem(image);
            write_atomic(&out.join(format!("{stem}.pimg")), pi.to_text().as_bytes())?;
            write_echo(&out, &format!("{stem}.pi.config.json"), "pi", image, &cfg)?;
            println!(
                "{}x{}x{} persistence image",
                pi.height(),
                pi.width(),
                pi.channels()
            );
        }
        Command::Train {
            dataset,
            out,
            epochs,
        } => {
            let mut cfg = cfg.clone();
            if let Some(e) = epochs {
                cfg.model.epochs = *e;
            }
            let dataset = dataset.clone().unwrap_or_else(|| cfg.dataset_dir.clone());
            let out = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let echo = write_echo(&out, "train.config.json", "train", &dataset, &cfg)?;
            println!("{echo}");
            let samples = load_samples(&dataset, &cfg, Some(&cache), cfg.model.use_pi)?;
            let (train_set, val_set) = split_samples(samples, cfg.seed);
            let (model, report) = fit_and_score(&cfg.model, &cfg, &train_set, &val_set)?;
            write_atomic(
                &out.join("checkpoint.ckpt"),
                write_checkpoint(model.params()).as_bytes(),
            )?;
            write_atomic(&out.join("metrics.json"), report.to_json().as_bytes())?;
            println!(
                "{}",
                Metrics {
                    accuracy: report.accuracy,
                    precision: report.precision,
                    recall: report.recall,
                    f1: report.f1
                }
            );
        }
        Command::Eval {
            checkpoint,
            dataset,
            out,
        } => {
            let dataset = dataset.clone().unwrap_or_else(|| cfg.dataset_dir.clone());
            let out = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let samples = load_samples(&dataset, &cfg, Some(&cache), cfg.model.use_pi)?;
            let mut model = Model::new(&cfg.model, input_dims(&samples, &cfg)?)?;
            model.load_params(read_checkpoint(&read_to_string(checkpoint)?)?)?;
            let metrics = evaluate(&model, &samples)?;
            write_atomic(
                &out.join("eval.json"),
                (serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n")
                    .as_bytes(),
            )?;
            write_echo(
                &out,
                "eval.config.json",
                "eval",
                (checkpoint, &dataset),
                &cfg,
            )?;
            println!("{metrics}");
        }
        Command::Ablate {
            dataset,
            out,
            epochs,
        } => {
            let mut cfg = cfg.clone();
            if let Some(e) = epochs {
                cfg.model.epochs = *e;
            }
            let dataset = dataset.clone().unwrap_or_else(|| cfg.dataset_dir.clone());
            let out = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            write_echo(&out, "ablate.config.json", "ablate", &dataset, &cfg)?;
            let samples = load_samples(&dataset, &cfg, Some(&cache), true)?;
            let (train_set, val_set) = split_samples(samples, cfg.seed);
            let mut rows = Vec::new();
            for (i, (use_pi, use_se)) in ModelConfig::ABLATION_GROUPS.into_iter().enumerate() {
                let model_cfg = cfg.model.with_flags(use_pi, use_se);
                let (_, report) = fit_and_score(&model_cfg, &cfg, &train_set, &val_set)?;
                log::info!("group{} accuracy {:.4}", i + 1, report.accuracy);
                rows.push(AblationRow {
                    group: i + 1,
                    se: use_se,
                    pi: use_pi,
                    metrics: Metrics {
                        accuracy: report.accuracy,
                        precision: report.precision,
                        recall: report.recall,
                        f1: report.f1,
                    },
                });
            }
            let csv = ablation_csv(&rows);
            write_atomic(&out.join("ablation.csv"), csv.as_bytes())?;
            print!("{csv}");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub group: usize,
    pub se: bool,
    pub pi: bool,
    pub metrics: Metrics,
}

/// `group,se,pi,accuracy,precision,recall,f1` with four decimals.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("group,se,pi,accuracy,precision,recall,f1\n");
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "group{},{},{},{:.4},{:.4},{:.4},{:.4}\n",
            r.group, r.se, r.pi, m.accuracy, m.precision, m.recall, m.f1
        ));
    }
    out
}
