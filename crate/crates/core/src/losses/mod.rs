//! Multi-objective training loss: assignment-matched CIEDE2000 color
//! distance, hue diversity, emotion consistency and stop supervision.

mod assignment;
mod terms;

pub use assignment::{optimal_assignment, Assignment};
pub use terms::{
    assigned_mean_delta_e, color_distance_generic, color_distance_loss, diversity_generic,
    diversity_loss, emotion_consistency_generic, emotion_consistency_loss, lch_to_lab_generic,
    stop_loss, stop_loss_generic, total_loss, HueMetric, LossParts, LossWeights,
};
