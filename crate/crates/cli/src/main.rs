use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chromatune::emotion::{load_emotion_vectors, write_matches_jsonl, HeuristicProvider};
use chromatune::metrics::EvalOptions;
use chromatune::pipeline::{
    build_dataset, evaluate_cmd, generate_cmd, load_input_features, load_palette,
    load_palette_records, load_train_config, train, write_swatch, BuildOptions, DatasetManifest,
    PaletteVectors, TrainConfig,
};
use chromatune::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chromatune", version, about = "Emotion-aligned color palettes from music")]
struct Cli {
    /// Seed for splits, sampling and weight initialization.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training configuration file (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the feature matrix of one audio file.
    ExtractFeatures {
        audio: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        max_seconds: Option<f64>,
    },
    /// Pair every clip in a directory with its most similar palette.
    BuildDataset {
        #[arg(long)]
        audio_dir: PathBuf,
        /// JSON lines of `{"id": .., "hex": [..]}` or `{"id": .., "colors": [..]}`.
        #[arg(long)]
        palettes: PathBuf,
        /// JSON object mapping clip stems to 8 emotion scores.
        #[arg(long)]
        music_emotions: PathBuf,
        /// JSON object mapping palette ids to 8 emotion scores; the color
        /// heuristic is used when absent.
        #[arg(long)]
        palette_emotions: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long, default_value_t = 0.5)]
        min_similarity: f64,
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Skip writing feature caches next to the audio.
        #[arg(long)]
        no_cache: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train on a manifest; writes checkpoints and loss logs.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short)]
        out_dir: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        max_seconds: Option<f64>,
    },
    /// Generate palettes for an audio file or cached feature matrix.
    Generate {
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(short, default_value_t = 1)]
        k: usize,
        /// Embedding noise; defaults to the checkpoint's setting.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, short)]
        out_dir: PathBuf,
        #[arg(long)]
        max_seconds: Option<f64>,
    },
    /// Score the manifest's test split and write a metrics CSV.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(short, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        hull_samples: usize,
        /// Compare generations with the ground truth for CHO and BC.
        #[arg(long)]
        against_ground_truth: bool,
        #[arg(long)]
        max_seconds: Option<f64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Render a palette JSON file as an SVG or PPM swatch.
    Swatch {
        palette: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn sidecar_path(manifest: &Path) -> PathBuf {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    manifest.with_file_name(format!("{stem}.candidates.jsonl"))
}

fn absolute(p: &Path) -> Result<PathBuf, Error> {
    std::path::absolute(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => load_train_config(path)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.model.seed = seed;
    }
    let seed = config.seed;
    let max = |flag: Option<f64>| flag.unwrap_or(config.max_seconds);

    match cli.command {
        Command::ExtractFeatures { audio, out, max_seconds } => {
            let f = load_input_features(&audio, max(max_seconds))?;
            f.save(&out)?;
            log::info!("{}: {} x {} features", audio.display(), f.rows(), f.cols());
        }
        Command::BuildDataset {
            audio_dir,
            palettes,
            music_emotions,
            palette_emotions,
            top_k,
            min_similarity,
            max_seconds,
            no_cache,
            out,
        } => {
            let records = load_palette_records(&palettes)?;
            let music = load_emotion_vectors(&music_emotions)?;
            let file_vectors = palette_emotions.as_deref().map(load_emotion_vectors).transpose()?;
            let source = match &file_vectors {
                Some(map) => PaletteVectors::File(map),
                None => PaletteVectors::Provider(&HeuristicProvider),
            };
            let opts = BuildOptions {
                top_k,
                min_similarity,
                max_seconds: max(max_seconds),
                cache_features: !no_cache,
            };
            let report = build_dataset(&absolute(&audio_dir)?, records, &music, source, &opts)?;
            report.manifest.save(&out)?;
            let sidecar = sidecar_path(&out);
            let mut buf = Vec::new();
            write_matches_jsonl(&report.candidates, &mut buf)?;
            std::fs::write(&sidecar, buf).map_err(|e| Error::Io { path: sidecar.clone(), source: e })?;
            println!(
                "{} pairs written to {}; {} duplicate palettes removed; {} clips below similarity {}",
                report.manifest.len(),
                out.display(),
                report.duplicates_removed,
                report.below_threshold.len(),
                min_similarity
            );
        }
        Command::Train { manifest, out_dir, epochs, batch_size, lr, max_seconds } => {
            if let Some(e) = epochs {
                config.epochs = e;
            }
            if let Some(b) = batch_size {
                config.batch_size = b;
            }
            if let Some(lr) = lr {
                config.lr = lr;
            }
            config.max_seconds = max(max_seconds);
            let m = DatasetManifest::load(&manifest)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let artifacts = train(&m, base, &config, &out_dir)?;
            println!(
                "best epoch {}: {}\nfinal: {}",
                artifacts.best_epoch,
                artifacts.best_checkpoint.display(),
                artifacts.final_checkpoint.display()
            );
        }
        Command::Generate { input, checkpoint, k, sigma, out_dir, max_seconds } => {
            let sigma = match sigma {
                Some(s) => s,
                None => chromatune::model::ModelState::load(&checkpoint)?.config.noise_sigma,
            };
            for path in generate_cmd(&input, &checkpoint, k, sigma, seed, &out_dir, max(max_seconds))? {
                println!("{}", path.display());
            }
        }
        Command::Evaluate {
            manifest,
            checkpoint,
            k,
            hull_samples,
            against_ground_truth,
            max_seconds,
            out,
        } => {
            let opts = EvalOptions { k, seed, hull_samples, against_ground_truth };
            let eval = evaluate_cmd(&manifest, &checkpoint, &opts, max(max_seconds), &out)?;
            println!("{} clips scored, written to {}", eval.clips.len(), out.display());
        }
        Command::Swatch { palette, out } => {
            write_swatch(&load_palette(&palette)?, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
