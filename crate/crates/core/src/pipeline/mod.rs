//! Dataset construction, training and the command drivers behind the CLI.

mod commands;
mod dataset;
mod manifest;
mod optim;
mod split;
mod train;

pub use commands::{
    evaluate_cmd, generate_cmd, load_input_features, load_palette, load_train_config,
    palette_json, write_swatch, write_text,
};
pub use dataset::{
    build_dataset, dedup_palettes, entry_features, extract_features, list_audio,
    load_palette_records, parse_palette_records, BuildOptions, BuildReport, PaletteVectors,
    DEFAULT_MAX_SECONDS, FEATURE_EXTENSION,
};
pub use manifest::{resolve_path, DatasetEntry, DatasetManifest};
pub use optim::{cosine_lr, AdamW};
pub use split::{split_ids, Split};
pub use train::{
    fit, load_examples, mean_loss, train, EpochLog, FitExample, FitOutcome, StepLog,
    TrainArtifacts, TrainConfig,
};
