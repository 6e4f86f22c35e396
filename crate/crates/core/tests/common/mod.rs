//! Synthetic clips and palettes shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use chromatune::audiofeat::{build_feature_matrix, MusicClip, SAMPLE_RATE};
use chromatune::colorlab::{LchColor, Palette};
use chromatune::emotion::heuristic_palette_emotion;
use chromatune::pipeline::FitExample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLIP_SECONDS: f64 = 1.0;

fn samples() -> usize {
    (CLIP_SECONDS * SAMPLE_RATE as f64) as usize
}

fn t(i: usize) -> f64 {
    i as f64 / SAMPLE_RATE as f64
}

fn clip(s: Vec<f64>) -> MusicClip {
    MusicClip::new(s.into_iter().map(|v| v as f32).collect(), SAMPLE_RATE).unwrap()
}

/// Phase-continuous tone whose frequency and gain follow `f(t)` and `g(t)`.
fn voice(freq: impl Fn(f64) -> f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let dt = 1.0 / SAMPLE_RATE as f64;
    let mut phase = 0.0;
    (0..samples())
        .map(|i| {
            phase += 2.0 * PI * freq(t(i)) * dt;
            gain(t(i)) * phase.sin()
        })
        .collect()
}

fn notes(seq: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |x| seq[((x / CLIP_SECONDS * seq.len() as f64) as usize).min(seq.len() - 1)]
}

/// Eight one-second clips with distinct temporal structure, so that they stay
/// distinguishable after per-row standardization over time: two melodies,
/// a tremolo chord, rhythmic noise bursts, a noise swell, two chirps and
/// alternating tone and noise.
pub fn synthetic_clips() -> Vec<MusicClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise: Vec<f64> = (0..samples()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let up = [261.63, 329.63, 392.0, 523.25];
    let down = [880.0, 659.25, 493.88, 440.0, 329.63, 220.0];
    let chord: Vec<f64> = [220.0, 277.18, 329.63]
        .iter()
        .map(|&f| voice(|_| f, |x| 0.15 * (1.0 + (2.0 * PI * 3.0 * x).sin())))
        .fold(vec![0.0; samples()], |acc, v| acc.iter().zip(v).map(|(a, b)| a + b).collect());
    let bursts = (0..samples())
        .map(|i| if (t(i) * 4.0).fract() < 0.2 { 0.5 * noise[i] } else { 0.0 })
        .collect();
    let swell = (0..samples()).map(|i| 0.6 * t(i) * t(i) * noise[i]).collect();
    let tonal = voice(|_| 600.0, |_| 0.4);
    let alternating = (0..samples())
        .map(|i| if (t(i) * 8.0).fract() < 0.5 { tonal[i] } else { 0.3 * noise[i] })
        .collect();
    vec![
        clip(voice(notes(&up), |_| 0.4)),
        clip(voice(notes(&down), |x| 0.4 * (1.0 - 0.5 * x))),
        clip(chord),
        clip(bursts),
        clip(swell),
        clip(voice(|x| 200.0 + 1800.0 * x, |_| 0.4)),
        clip(voice(|x| 3000.0 - 2700.0 * x, |_| 0.3)),
        clip(alternating),
    ]
}

fn pal(colors: &[(f64, f64, f64)]) -> Palette {
    Palette::new(colors.iter().map(|&(l, c, h)| LchColor::new(l, c, h)).collect()).unwrap()
}

/// Eight fixed palettes with lengths 3, 4, 5, 3, 4, 5, 3, 4.
pub fn fixed_palettes() -> Vec<Palette> {
    vec![
        pal(&[(35.0, 45.0, 30.0), (60.0, 55.0, 70.0), (85.0, 20.0, 95.0)]),
        pal(&[(25.0, 30.0, 260.0), (45.0, 40.0, 230.0), (70.0, 25.0, 200.0), (90.0, 10.0, 180.0)]),
        pal(&[(50.0, 60.0, 10.0), (65.0, 50.0, 60.0), (75.0, 45.0, 110.0), (55.0, 35.0, 160.0), (40.0, 40.0, 300.0)]),
        pal(&[(20.0, 10.0, 280.0), (50.0, 5.0, 0.0), (80.0, 15.0, 45.0)]),
        pal(&[(70.0, 70.0, 140.0), (55.0, 45.0, 170.0), (35.0, 30.0, 210.0), (88.0, 30.0, 100.0)]),
        pal(&[(30.0, 50.0, 320.0), (45.0, 60.0, 350.0), (62.0, 40.0, 20.0), (78.0, 25.0, 60.0), (92.0, 8.0, 90.0)]),
        pal(&[(45.0, 25.0, 120.0), (65.0, 35.0, 250.0), (80.0, 55.0, 85.0)]),
        pal(&[(28.0, 20.0, 40.0), (42.0, 35.0, 50.0), (58.0, 45.0, 65.0), (72.0, 30.0, 75.0)]),
    ]
}

/// The eight clip–palette pairs; both emotion vectors are the palette's
/// heuristic scores.
pub fn overfit_examples() -> Vec<FitExample> {
    synthetic_clips()
        .iter()
        .zip(fixed_palettes())
        .enumerate()
        .map(|(i, (c, palette))| {
            let e = heuristic_palette_emotion(&palette);
            FitExample {
                id: format!("clip{i}"),
                features: build_feature_matrix(c).unwrap(),
                palette,
                emotion_music: e,
                emotion_palette: e,
            }
        })
        .collect()
}
