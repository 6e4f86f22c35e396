use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::clip::{MusicClip, SAMPLE_RATE};
use crate::autograd::Mat;
use crate::{Error, Result};

pub const N_FFT: usize = 2048;
pub const HOP: usize = 512;
pub const N_BINS: usize = N_FFT / 2 + 1;
pub const N_MELS: usize = 128;
pub const N_CHROMA: usize = 12;
pub const N_CONTRAST_BANDS: usize = 6;
pub const CONTRAST_FMIN: f64 = 200.0;
const CONTRAST_QUANTILE: f64 = 0.02;
const PITCH_FLOOR: f64 = 1e-4;
const AMIN: f64 = 1e-10;

/// Frame count for `n` samples on the centered hop grid.
pub fn frame_count(n: usize) -> usize {
    1 + n / HOP
}

pub fn bin_frequency(k: usize) -> f64 {
    k as f64 * SAMPLE_RATE as f64 / N_FFT as f64
}

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Short-time spectrum on the shared analysis grid, `N_BINS × T`.
#[derive(Debug, Clone)]
pub struct Stft {
    /// Squared magnitude.
    pub power: Mat,
    /// Sum of squared windowed samples per frame.
    pub windowed_energy: Vec<f64>,
}

impl Stft {
    /// Hann-windowed STFT with reflect padding of `N_FFT / 2` on each side.
    pub fn new(clip: &MusicClip) -> Result<Self> {
        if clip.sample_rate != SAMPLE_RATE {
            return Err(Error::Audio(format!(
                "clip is at {} Hz, expected {SAMPLE_RATE}",
                clip.sample_rate
            )));
        }
        let n = clip.samples.len();
        if n < N_FFT {
            return Err(Error::Audio(format!(
                "clip has {n} samples, fewer than one {N_FFT}-sample window"
            )));
        }
        let half = N_FFT / 2;
        let x: Vec<f64> = clip.samples.iter().map(|&v| v as f64).collect();
        let reflect = |i: isize| -> f64 {
            let last = n as isize - 1;
            let mut j = i;
            if j < 0 {
                j = -j;
            }
            if j > last {
                j = 2 * last - j;
            }
            x[j as usize]
        };
        let frames = frame_count(n);
        let window = periodic_hann(N_FFT);
        let fft = FftPlanner::<f64>::new().plan_fft_forward(N_FFT);
        let mut power = Mat::zeros(N_BINS, frames);
        let mut windowed_energy = Vec::with_capacity(frames);
        let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
        for t in 0..frames {
            let start = (t * HOP) as isize - half as isize;
            let mut energy = 0.0;
            for (i, b) in buf.iter_mut().enumerate() {
                let v = reflect(start + i as isize) * window[i];
                energy += v * v;
                *b = Complex::new(v, 0.0);
            }
            windowed_energy.push(energy);
            fft.process(&mut buf);
            for k in 0..N_BINS {
                power.set(k, t, buf[k].norm_sqr());
            }
        }
        Ok(Stft {
            power,
            windowed_energy,
        })
    }

    pub fn frames(&self) -> usize {
        self.power.cols
    }

    pub fn magnitude(&self, k: usize, t: usize) -> f64 {
        self.power.get(k, t).sqrt()
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4f64.ln() / 27.0;
    if f >= min_log_hz {
        min_log_mel + (f / min_log_hz).ln() / logstep
    } else {
        f / f_sp
    }
}

pub fn mel_to_hz(m: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4f64.ln() / 27.0;
    if m >= min_log_mel {
        min_log_hz * (logstep * (m - min_log_mel)).exp()
    } else {
        f_sp * m
    }
}

/// Slaney-normalized triangular filters over `[0, sr/2]`, `N_MELS × N_BINS`.
pub fn mel_filterbank() -> Mat {
    let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
    let edges: Vec<f64> = (0..N_MELS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (N_MELS + 1) as f64))
        .collect();
    let mut fb = Mat::zeros(N_MELS, N_BINS);
    for m in 0..N_MELS {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        for k in 0..N_BINS {
            let f = bin_frequency(k);
            let w = ((f - lo) / (mid - lo)).min((hi - f) / (hi - mid)).max(0.0);
            fb.set(m, k, w * norm);
        }
    }
    fb
}

/// Mel-band power, `N_MELS × T`.
pub fn mel_spectrogram(stft: &Stft) -> Mat {
    mel_filterbank().matmul(&stft.power)
}

/// Pitch class of `f` Hz with C = 0 and A440 = 9.
pub fn pitch_class(f: f64) -> usize {
    let midi = 69.0 + 12.0 * (f / 440.0).log2();
    (midi.round() as i64).rem_euclid(12) as usize
}

/// Bin power folded onto pitch classes, each frame scaled to max 1.
pub fn chroma(stft: &Stft) -> Mat {
    let t_len = stft.frames();
    let mut out = Mat::zeros(N_CHROMA, t_len);
    // Bins below A0 carry no usable pitch-class resolution.
    let classes: Vec<Option<usize>> = (0..N_BINS)
        .map(|k| {
            let f = bin_frequency(k);
            (f >= 27.5).then(|| pitch_class(f))
        })
        .collect();
    for t in 0..t_len {
        for (k, class) in classes.iter().enumerate() {
            if let Some(c) = class {
                let v = out.get(*c, t) + stft.power.get(k, t);
                out.set(*c, t, v);
            }
        }
        let max = (0..N_CHROMA).map(|c| out.get(c, t)).fold(0.0, f64::max);
        if max > 0.0 {
            for c in 0..N_CHROMA {
                out.set(c, t, out.get(c, t) / max);
            }
        }
    }
    out
}

/// Octave-band edges in Hz: the sub-band below `CONTRAST_FMIN`, then six
/// octaves, the last one extended to Nyquist.
pub fn contrast_band_edges() -> Vec<f64> {
    let mut edges = vec![0.0];
    for i in 0..=N_CONTRAST_BANDS {
        edges.push(CONTRAST_FMIN * 2f64.powi(i as i32));
    }
    *edges.last_mut().unwrap() = SAMPLE_RATE as f64 / 2.0 + 1.0;
    edges
}

/// Peak-to-valley magnitude contrast in dB per band, `7 × T`.
pub fn spectral_contrast(stft: &Stft) -> Mat {
    let edges = contrast_band_edges();
    let bands = edges.len() - 1;
    let t_len = stft.frames();
    let mut out = Mat::zeros(bands, t_len);
    let band_bins: Vec<Vec<usize>> = (0..bands)
        .map(|b| {
            (0..N_BINS)
                .filter(|&k| {
                    let f = bin_frequency(k);
                    f >= edges[b] && f < edges[b + 1]
                })
                .collect()
        })
        .collect();
    let mut mags = Vec::with_capacity(N_BINS);
    for t in 0..t_len {
        for (b, bins) in band_bins.iter().enumerate() {
            mags.clear();
            mags.extend(bins.iter().map(|&k| stft.magnitude(k, t)));
            mags.sort_by(f64::total_cmp);
            let take = ((CONTRAST_QUANTILE * mags.len() as f64).round() as usize).max(1);
            let valley = mags[..take].iter().sum::<f64>() / take as f64;
            let peak = mags[mags.len() - take..].iter().sum::<f64>() / take as f64;
            let db = |v: f64| 10.0 * v.max(AMIN).log10();
            out.set(b, t, db(peak) - db(valley));
        }
    }
    out
}

/// Tonal-centroid basis (fifths, minor thirds, major thirds), `6 × 12`.
pub fn tonnetz_basis() -> Mat {
    let scales = [7.0 / 6.0, 3.0 / 2.0, 2.0 / 3.0];
    let radii = [1.0, 1.0, 0.5];
    let mut phi = Mat::zeros(6, N_CHROMA);
    for (axis, (&s, &r)) in scales.iter().zip(&radii).enumerate() {
        for n in 0..N_CHROMA {
            let angle = std::f64::consts::PI * s * n as f64;
            phi.set(2 * axis, n, r * angle.sin());
            phi.set(2 * axis + 1, n, r * angle.cos());
        }
    }
    phi
}

/// L1-normalized chroma projected onto the tonal-centroid basis, `6 × T`.
pub fn tonnetz(chroma: &Mat) -> Mat {
    let mut norm = chroma.clone();
    for t in 0..norm.cols {
        let s: f64 = (0..N_CHROMA).map(|c| norm.get(c, t).abs()).sum();
        for c in 0..N_CHROMA {
            let v = if s > 0.0 { norm.get(c, t) / s } else { 0.0 };
            norm.set(c, t, v);
        }
    }
    tonnetz_basis().matmul(&norm)
}

/// RMS of the Hann-windowed frame, normalized by the window energy.
pub fn rms(stft: &Stft) -> Mat {
    let w_energy: f64 = periodic_hann(N_FFT).iter().map(|w| w * w).sum();
    let vals = stft
        .windowed_energy
        .iter()
        .map(|e| (e / w_energy).sqrt())
        .collect();
    Mat::from_vec(1, stft.frames(), vals)
}

/// Frequency of the strongest spectral peak with parabolic refinement on
/// log magnitude; 0 when the peak magnitude is below the floor.
pub fn pitch(stft: &Stft) -> Mat {
    let t_len = stft.frames();
    let mut out = Mat::zeros(1, t_len);
    for t in 0..t_len {
        let (k, mag) = (1..N_BINS)
            .map(|k| (k, stft.magnitude(k, t)))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag < PITCH_FLOOR {
            continue;
        }
        let mut offset = 0.0;
        if k + 1 < N_BINS {
            let a = stft.magnitude(k - 1, t).max(AMIN).ln();
            let b = mag.ln();
            let c = stft.magnitude(k + 1, t).max(AMIN).ln();
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
            }
        }
        out.set(0, t, (k as f64 + offset) * SAMPLE_RATE as f64 / N_FFT as f64);
    }
    out
}
