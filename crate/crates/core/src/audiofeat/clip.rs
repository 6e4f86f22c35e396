use std::path::Path;

use crate::{Error, Result};

/// Canonical analysis rate in Hz.
pub const SAMPLE_RATE: u32 = 22_050;

/// Sinc zero crossings on each side of the resampling kernel.
const SINC_ZEROS: f64 = 32.0;

/// Mono PCM audio.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl MusicClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Audio("audio has zero length".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Audio("sample rate is zero".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Audio("audio contains non-finite samples".into()));
        }
        Ok(MusicClip {
            samples,
            sample_rate,
        })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// The clip at the canonical rate; returned unchanged when already there.
    pub fn to_canonical_rate(self) -> MusicClip {
        if self.sample_rate == SAMPLE_RATE {
            return self;
        }
        let samples = resample(&self.samples, self.sample_rate, SAMPLE_RATE);
        MusicClip {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }

    /// Keeps at most the first `seconds` of audio.
    pub fn truncated(mut self, seconds: f64) -> MusicClip {
        let keep = (seconds * self.sample_rate as f64).floor();
        if keep >= 1.0 && (keep as usize) < self.samples.len() {
            self.samples.truncate(keep as usize);
        }
        self
    }
}

/// Reads a PCM or float WAV file, mixes to mono and resamples to 22,050 Hz.
pub fn load_audio(path: &Path) -> Result<MusicClip> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Audio(format!("{}: no channels", path.display())));
    }
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?,
        hound::SampleFormat::Int => {
            if !(1..=32).contains(&spec.bits_per_sample) {
                return Err(Error::Audio(format!(
                    "{}: unsupported bit depth {}",
                    path.display(),
                    spec.bits_per_sample
                )));
            }
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?
        }
    };
    let mono: Vec<f32> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().map(|&v| v as f64).sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    if mono.is_empty() {
        return Err(Error::Audio(format!("{}: zero-length audio", path.display())));
    }
    Ok(MusicClip::new(mono, spec.sample_rate)?.to_canonical_rate())
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav(path: &Path, clip: &MusicClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let audio_err = |e: hound::Error| Error::Audio(format!("{}: {e}", path.display()));
    let mut w = hound::WavWriter::create(path, spec).map_err(audio_err)?;
    for &s in &clip.samples {
        let v = (s.clamp(-1.0, 1.0) as f64 * 32767.0).round() as i16;
        w.write_sample(v).map_err(audio_err)?;
    }
    w.finalize().map_err(audio_err)
}

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    let t = std::f64::consts::PI * (x + 1.0);
    0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos()
}

/// Band-limited resampling with a Blackman-windowed sinc kernel.
pub fn resample(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to {
        return input.to_vec();
    }
    let ratio = to as f64 / from as f64;
    let out_len = ((input.len() as u64 * to as u64).div_ceil(from as u64)) as usize;
    // Lowpass at the lower Nyquist, in units of input samples.
    let cutoff = ratio.min(1.0);
    let half_width = SINC_ZEROS / cutoff;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let center = n as f64 / ratio;
        let lo = ((center - half_width).ceil().max(0.0)) as usize;
        let hi = ((center + half_width).floor() as usize).min(input.len() - 1);
        let mut acc = 0.0;
        for (k, &x) in input.iter().enumerate().take(hi + 1).skip(lo) {
            let dt = center - k as f64;
            let arg = cutoff * dt;
            let sinc = if arg.abs() < 1e-12 {
                1.0
            } else {
                let p = std::f64::consts::PI * arg;
                p.sin() / p
            };
            acc += x as f64 * cutoff * sinc * blackman(dt / half_width);
        }
        out.push(acc as f32);
    }
    out
}
