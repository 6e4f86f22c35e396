use super::clip::MusicClip;
use super::matrix::{FeatureMatrix, FEATURE_ROWS};
use super::rhythm::{onset_envelope, tempogram};
use super::spectral::{chroma, mel_spectrogram, pitch, rms, spectral_contrast, tonnetz, Stft};
use crate::autograd::Mat;
use crate::Result;

/// Truncates or edge-pads every row to `frames` columns.
pub fn align_frames(m: &Mat, frames: usize) -> Mat {
    let mut out = Mat::zeros(m.rows, frames);
    for r in 0..m.rows {
        for t in 0..frames {
            let src = t.min(m.cols.saturating_sub(1));
            out.set(r, t, if m.cols == 0 { 0.0 } else { m.get(r, src) });
        }
    }
    out
}

/// Per-row z-score; rows without spread become zeros.
pub fn standardize_rows(m: &mut Mat) {
    let n = m.cols as f64;
    for r in 0..m.rows {
        let row = m.row_mut(r);
        let mean = row.iter().sum::<f64>() / n;
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo <= 1e-12 * mean.abs().max(1.0) {
            row.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / var.sqrt();
        row.iter_mut().for_each(|v| *v = (*v - mean) * inv);
    }
}

/// All feature blocks on the mel frame grid, stacked as mel, chroma,
/// spectral contrast, tonnetz, tempogram, rms and pitch, then z-scored.
pub fn build_feature_matrix(clip: &MusicClip) -> Result<FeatureMatrix> {
    let stft = Stft::new(clip)?;
    let mel = mel_spectrogram(&stft);
    let frames = mel.cols;
    let ch = chroma(&stft);
    let blocks = [
        tonnetz(&ch),
        tempogram(&onset_envelope(&mel)),
        rms(&stft),
        pitch(&stft),
    ];
    let contrast = spectral_contrast(&stft);
    let ordered = [&mel, &ch, &contrast, &blocks[0], &blocks[1], &blocks[2], &blocks[3]];
    let mut stacked = Mat::zeros(FEATURE_ROWS, frames);
    let mut row = 0;
    for block in ordered {
        let aligned = align_frames(block, frames);
        for r in 0..aligned.rows {
            stacked.row_mut(row).copy_from_slice(aligned.row(r));
            row += 1;
        }
    }
    debug_assert_eq!(row, FEATURE_ROWS);
    standardize_rows(&mut stacked);
    FeatureMatrix::new(
        FEATURE_ROWS,
        frames,
        stacked.data.iter().map(|&v| v as f32).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audiofeat::clip::SAMPLE_RATE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_and_standardization() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let noise: Vec<f32> = (0..33_000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let f = build_feature_matrix(&MusicClip::new(noise, SAMPLE_RATE).unwrap()).unwrap();
        assert_eq!(f.rows(), 539);
        assert_eq!(f.cols(), 1 + 33_000 / 512);
        for r in 0..f.rows() {
            let row: Vec<f64> = f.row(r).iter().map(|&v| v as f64).collect();
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / row.len() as f64;
            assert!(mean.abs() < 1e-6, "row {r} mean {mean}");
            if row.iter().any(|&v| v != 0.0) {
                assert!((var - 1.0).abs() < 1e-3, "row {r} var {var}");
            }
        }
        let short: Vec<f32> = (0..5000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let g = build_feature_matrix(&MusicClip::new(short, SAMPLE_RATE).unwrap()).unwrap();
        assert_eq!(g.rows(), 539);
        assert_ne!(g.cols(), f.cols());
    }

    #[test]
    fn silence_is_all_zero() {
        let f = build_feature_matrix(&MusicClip::new(vec![0.0; 10_000], SAMPLE_RATE).unwrap()).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fuzz_corpus_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for i in 0..100 {
            let n = rng.gen_range(2048..12_000);
            let s: Vec<f32> = match i % 4 {
                0 => vec![0.0; n],
                1 => (0..n).map(|j| if j % 997 == 0 { 1.0 } else { 0.0 }).collect(),
                2 => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                _ => (0..n).map(|_| rng.gen_range(-1e-7..1e-7)).collect(),
            };
            let f = build_feature_matrix(&MusicClip::new(s, SAMPLE_RATE).unwrap()).unwrap();
            assert!(f.data().iter().all(|v| v.is_finite()));
            assert_eq!(f.rows(), 539);
        }
    }

    #[test]
    fn alignment_truncates_and_pads() {
        let m = Mat::from_vec(1, 3, vec![1.0, 2.0, 3.0]);
        assert_eq!(align_frames(&m, 2).data, vec![1.0, 2.0]);
        assert_eq!(align_frames(&m, 5).data, vec![1.0, 2.0, 3.0, 3.0, 3.0]);
    }
}
