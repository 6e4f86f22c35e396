use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::autograd::Mat;

pub const TEMPOGRAM_WINDOW: usize = 384;
const AMIN: f64 = 1e-10;
const TOP_DB: f64 = 80.0;
/// Width in frames of the Gaussian applied to the onset envelope.
pub const ONSET_SMOOTHING: f64 = 1.5;

fn power_to_db(mel: &Mat) -> Mat {
    let mut db = mel.clone();
    db.data
        .iter_mut()
        .for_each(|v| *v = 10.0 * v.max(AMIN).log10());
    let max = db.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - TOP_DB;
    db.data.iter_mut().for_each(|v| *v = v.max(floor));
    db
}

/// Mean positive first difference of dB mel power; frame 0 is 0.
pub fn onset_envelope(mel: &Mat) -> Vec<f64> {
    let db = power_to_db(mel);
    let mut env = vec![0.0; db.cols];
    for (t, e) in env.iter_mut().enumerate().skip(1) {
        let s: f64 = (0..db.rows)
            .map(|b| (db.get(b, t) - db.get(b, t - 1)).max(0.0))
            .sum();
        *e = s / db.rows as f64;
    }
    env
}

/// Gaussian smoothing with zero extension. Spreading single-frame spikes
/// keeps beat periods that fall between two lags from losing to their
/// integer multiples.
pub fn smooth_envelope(onset: &[f64]) -> Vec<f64> {
    let radius = (3.0 * ONSET_SMOOTHING).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * ONSET_SMOOTHING * ONSET_SMOOTHING)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let n = onset.len() as isize;
    (0..n)
        .map(|t| {
            (-radius..=radius)
                .filter(|i| (0..n).contains(&(t + i)))
                .map(|i| onset[(t + i) as usize] * kernel[(i + radius) as usize])
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Local autocorrelation of the smoothed onset envelope under a centered
/// Hann window, one column per frame and one row per lag, each column
/// scaled to a maximum of 1.
pub fn tempogram(onset: &[f64]) -> Mat {
    let onset = smooth_envelope(onset);
    let onset = &onset[..];
    let w = TEMPOGRAM_WINDOW;
    let t_len = onset.len();
    let half = w / 2;
    let window: Vec<f64> = (0..w)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / w as f64).cos())
        .collect();
    let n = (2 * w).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = Mat::zeros(w, t_len);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for t in 0..t_len {
        buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
        for i in 0..w {
            let src = t as isize + i as isize - half as isize;
            if src >= 0 && (src as usize) < t_len {
                buf[i] = Complex::new(onset[src as usize] * window[i], 0.0);
            }
        }
        fwd.process(&mut buf);
        buf.iter_mut()
            .for_each(|b| *b = Complex::new(b.norm_sqr(), 0.0));
        inv.process(&mut buf);
        let ac: Vec<f64> = buf[..w].iter().map(|c| c.re / n as f64).collect();
        let max = ac.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
        if max > 1e-12 {
            for (lag, v) in ac.iter().enumerate() {
                out.set(lag, t, v / max);
            }
        }
    }
    out
}
