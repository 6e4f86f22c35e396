//! Palette evaluation: within-palette diversity, multimodality across
//! generations, hull overlap, histogram overlap and emotion agreement.

mod evaluate;
mod histogram;
mod hull;
mod scores;

pub use evaluate::{
    evaluate, EvalClip, EvalOptions, Evaluation, MetricReport, ModelGenerator, PaletteGenerator,
    AGGREGATE_ID, CSV_HEADER,
};
pub use histogram::{bhattacharyya, histogram_cell, lch_histogram, HIST_BINS};
pub use hull::{
    body_iou, convex_hull_overlap, HullBody, DEFAULT_HULL_SAMPLES, DEGENERATE_RADIUS,
    MIN_HULL_SAMPLES,
};
pub use scores::{emotion_similarity, multimodality, palette_distance, palette_div};
