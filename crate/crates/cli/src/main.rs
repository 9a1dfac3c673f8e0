//! `seedcheck`: generate data, train, evaluate, classify single kernels and
//! inspect multi-kernel scenes.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seedcheck::data::{load_dataset, load_rgb, preprocess, AugmentationConfig};
use seedcheck::detector::{inspect_scene, InspectConfig, DEFAULT_MIN_AREA};
use seedcheck::model::{OptimizerConfig, OptimizerKind};
use seedcheck::report::ReportRow;
use seedcheck::synth::{
    derive_seed, generate_dataset, generate_scene, write_manifest, DatasetCounts,
    GeneratorSettings, ManifestRecord, SceneSpec, MANIFEST_FILE,
};
use seedcheck::trainer::{evaluate, load_checkpoint, train_with_progress, TrainConfig};
use seedcheck::{Error, Model, ModelConfig};

#[derive(Debug, Parser)]
#[command(name = "seedcheck", version, about = "Corn-kernel quality inspection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic dataset tree, a demo scene and a manifest.
    Generate(GenerateArgs),
    /// Train a classifier; writes the best-validation checkpoint and a metrics CSV.
    Train(TrainArgs),
    /// Score the test split and write a per-image report.
    Eval(EvalArgs),
    /// Classify one kernel image.
    Predict(PredictArgs),
    /// Find and classify every kernel in a scene image.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Output directory.
    #[arg(long, default_value = "data")]
    out: PathBuf,
    /// Images per split and class: train normal, train abnormal, validate
    /// normal, validate abnormal, test normal, test abnormal.
    #[arg(long, default_value = "500,500,300,300,100,100", value_parser = parse_counts)]
    counts: DatasetCounts,
    #[arg(long)]
    seed: u64,
    /// Side length of each kernel image in pixels.
    #[arg(long, default_value_t = 64)]
    size: u32,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset root containing train/, validate/ and test/.
    #[arg(long, default_value = "data")]
    data: PathBuf,
    /// Checkpoint to write.
    #[arg(long, default_value = "model.ckpt")]
    model: PathBuf,
    /// Metrics CSV to write.
    #[arg(long, default_value = "metrics.csv")]
    report: PathBuf,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = OptimizerKind::Adam)]
    optimizer: OptimizerKind,
    /// Square network input size; must be a multiple of 8.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Random flips, quarter turns and ±10% brightness on training images.
    #[arg(long, default_value_t = false)]
    augment: bool,
    /// Drives initialization, shuffling and augmentation.
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, default_value = "model.ckpt")]
    model: PathBuf,
    #[arg(long, default_value = "data")]
    data: PathBuf,
    /// JSON report to write.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, default_value = "model.ckpt")]
    model: PathBuf,
    #[arg(long)]
    image: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long, default_value = "model.ckpt")]
    model: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Annotated PNG to write.
    #[arg(long, default_value = "annotated.png")]
    out: PathBuf,
    /// JSON report to write.
    #[arg(long, default_value = "inspection.json")]
    report: PathBuf,
    /// Smallest connected component, in pixels, treated as a kernel.
    #[arg(long, default_value_t = DEFAULT_MIN_AREA)]
    min_area: usize,
}

fn parse_counts(s: &str) -> Result<DatasetCounts, String> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("{v:?} is not a count"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let array: [usize; 6] = values
        .try_into()
        .map_err(|v: Vec<usize>| format!("expected 6 comma-separated counts, got {}", v.len()))?;
    Ok(DatasetCounts::from_array(array))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Usage(_) => 1,
        _ => 2,
    }
}

fn save_png(image: &image::RgbImage, path: &Path) -> seedcheck::Result<()> {
    image.save(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

fn load_model(path: &Path) -> seedcheck::Result<Model> {
    load_checkpoint(path)?.to_model()
}

fn generate(a: GenerateArgs) -> seedcheck::Result<String> {
    let settings = GeneratorSettings::default();
    let mut records = generate_dataset(&a.counts, a.seed, a.size, &settings, &a.out)?;

    // A 25-kernel demo scene for `inspect`, seeded independently of the images.
    let scene_seed = derive_seed(a.seed, u64::MAX);
    let scene = generate_scene(&SceneSpec::with_counts(14, 11), scene_seed)?;
    save_png(&scene.image, &a.out.join("scene.png"))?;
    records.push(ManifestRecord {
        identifier: "scene.png".into(),
        path: "scene.png".into(),
        seed: scene_seed,
        split: None,
        label: None,
        objects: Some(scene.truth),
    });

    let manifest = a.out.join(MANIFEST_FILE);
    write_manifest(&manifest, &records)?;
    Ok(format!(
        "generate images={} out={} manifest={}",
        a.counts.total(),
        a.out.display(),
        manifest.display()
    ))
}

fn train(a: TrainArgs) -> seedcheck::Result<String> {
    let model_config = ModelConfig {
        seed: a.seed,
        ..ModelConfig::with_size(a.size)
    };
    model_config.validate()?;
    let config = TrainConfig {
        epochs: a.epochs,
        optimizer: OptimizerConfig {
            kind: a.optimizer,
            learning_rate: a.lr,
        },
        batch_size: a.batch,
        augmentation: a.augment.then_some(AugmentationConfig {
            horizontal_flip: true,
            vertical_flip: true,
            rotate90: true,
            brightness: 0.1,
            seed: a.seed,
        }),
        seed: a.seed,
        checkpoint_path: Some(a.model.clone()),
        metrics_path: Some(a.report.clone()),
    };
    config.validate()?;
    let splits = load_dataset(&a.data)?;
    let outcome = train_with_progress(&splits, &model_config, &config, |r| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    })?;
    let best = match outcome.best_record() {
        Some(r) => format!(
            "best_epoch={} val_accuracy={:.4} val_loss={:.4}",
            r.epoch, r.val_accuracy, r.val_loss
        ),
        None => "best_epoch=none".into(),
    };
    Ok(format!(
        "train epochs={} {best} model={} metrics={}",
        a.epochs,
        a.model.display(),
        a.report.display()
    ))
}

fn eval(a: EvalArgs) -> seedcheck::Result<String> {
    let model = load_model(&a.model)?;
    let splits = load_dataset(&a.data)?;
    let evaluation = evaluate(&model, &splits.test)?;
    evaluation.report.write(&a.report)?;
    Ok(format!(
        "eval accuracy={:.4} loss={:.4} images={} report={}",
        evaluation.accuracy,
        evaluation.loss,
        evaluation.report.rows.len(),
        a.report.display()
    ))
}

fn predict(a: PredictArgs) -> seedcheck::Result<String> {
    let model = load_model(&a.model)?;
    let pixels = load_rgb(&a.image)?;
    let [c, h, w] = model.config().input_shape();
    let input = preprocess(&pixels, h, w)?.reshape(&[1, c, h, w])?;
    let probability = model.predict(&input)?.data()[0];
    let row = ReportRow::new(a.image.display().to_string(), None, probability, None)?;
    Ok(format!(
        "{} {:.3} {}",
        row.seed, row.calculation, row.predict
    ))
}

fn inspect(a: InspectArgs) -> seedcheck::Result<String> {
    let model = load_model(&a.model)?;
    let image = load_rgb(&a.image)?;
    let config = InspectConfig {
        min_area: a.min_area,
        ..InspectConfig::default()
    };
    let (report, annotated) = inspect_scene(&image, &model, &config)?;
    save_png(&annotated, &a.out)?;
    report.write(&a.report)?;
    Ok(format!(
        "inspect detections={} normal={} abnormal={} annotated={} report={}",
        report.totals.total,
        report.totals.normal,
        report.totals.abnormal,
        a.out.display(),
        a.report.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn counts_parser() {
        assert_eq!(
            parse_counts("500,500,300,300,100,100").unwrap(),
            DatasetCounts::STANDARD
        );
        assert!(parse_counts("1,2,3").is_err());
        assert!(parse_counts("1,2,3,4,5,x").is_err());
    }
}
