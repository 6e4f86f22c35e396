//! Audio decoding and the 539-channel standardized feature matrix.
//!
//! Every extractor shares one analysis grid: 2048-point periodic Hann
//! frames every 512 samples at 22,050 Hz with reflect-padded centering,
//! so a clip of `n` samples yields `1 + n / 512` frames.

mod clip;
mod features;
mod matrix;
mod rhythm;
mod spectral;

pub use clip::{load_audio, resample, write_wav, MusicClip, SAMPLE_RATE};
pub use features::{align_frames, build_feature_matrix, standardize_rows};
pub use matrix::{FeatureMatrix, FEATURE_ROWS};
pub use rhythm::{onset_envelope, smooth_envelope, tempogram, ONSET_SMOOTHING, TEMPOGRAM_WINDOW};
pub use spectral::{
    bin_frequency, chroma, contrast_band_edges, frame_count, hz_to_mel, mel_filterbank,
    mel_spectrogram, mel_to_hz, pitch, pitch_class, rms, spectral_contrast, tonnetz,
    tonnetz_basis, Stft, HOP, N_BINS, N_CHROMA, N_FFT, N_MELS,
};
