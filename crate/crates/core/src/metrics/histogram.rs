use crate::colorlab::{LchColor, Palette, CHROMA_CEILING};

pub const HIST_BINS: usize = 8;

fn bin(v: f64, range: f64) -> usize {
    ((v / range * HIST_BINS as f64).floor().max(0.0) as usize).min(HIST_BINS - 1)
}

/// Flat index of the LCh histogram cell holding `c`.
pub fn histogram_cell(c: &LchColor) -> usize {
    let l = bin(c.l, 100.0);
    let ch = bin(c.c, CHROMA_CEILING);
    let h = bin(c.h, 360.0);
    (l * HIST_BINS + ch) * HIST_BINS + h
}

/// Normalized 8×8×8 histogram, each color weighing 1/N.
pub fn lch_histogram(p: &Palette) -> Vec<f64> {
    let mut hist = vec![0.0; HIST_BINS.pow(3)];
    let w = 1.0 / p.len() as f64;
    for c in p.colors() {
        hist[histogram_cell(c)] += w;
    }
    hist
}

/// Bhattacharyya coefficient of the two palettes' histograms.
pub fn bhattacharyya(p1: &Palette, p2: &Palette) -> f64 {
    if p1 == p2 {
        return 1.0;
    }
    let (a, b) = (lch_histogram(p1), lch_histogram(p2));
    let s: f64 = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x * y).sqrt())
        .sum();
    s.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_disjoint() {
        let p = Palette::from_hex(&["#102030", "#A0B0C0", "#FF0000"]).unwrap();
        assert_eq!(bhattacharyya(&p, &p), 1.0);
        let a = Palette::new(vec![LchColor::new(5.0, 5.0, 5.0); 3]).unwrap();
        let b = Palette::new(vec![LchColor::new(95.0, 100.0, 200.0); 3]).unwrap();
        assert_eq!(bhattacharyya(&a, &b), 0.0);
    }

    #[test]
    fn matches_direct_histogram_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let rand_pal = |rng: &mut rand_chacha::ChaCha8Rng| {
            let n = rng.gen_range(3..=5);
            Palette::new(
                (0..n)
                    // Coarse grid so random pairs actually share cells.
                    .map(|_| {
                        LchColor::new(
                            rng.gen_range(0..4) as f64 * 25.0 + 1.0,
                            rng.gen_range(0..3) as f64 * 40.0 + 1.0,
                            rng.gen_range(0..4) as f64 * 90.0 + 1.0,
                        )
                    })
                    .collect(),
            )
            .unwrap()
        };
        for _ in 0..200 {
            let p = rand_pal(&mut rng);
            let q = rand_pal(&mut rng);
            // Oracle: per-color cell keys as tuples, counted in a map.
            let key = |c: &LchColor| {
                (
                    ((c.l / 12.5) as usize).min(7),
                    ((c.c / 18.75) as usize).min(7),
                    ((c.h / 45.0) as usize).min(7),
                )
            };
            let mut hp = std::collections::HashMap::new();
            let mut hq = std::collections::HashMap::new();
            for c in p.colors() {
                *hp.entry(key(c)).or_insert(0.0) += 1.0 / p.len() as f64;
            }
            for c in q.colors() {
                *hq.entry(key(c)).or_insert(0.0) += 1.0 / q.len() as f64;
            }
            let want: f64 = hp
                .iter()
                .filter_map(|(k, v)| hq.get(k).map(|w| (v * w).sqrt()))
                .sum();
            let got = bhattacharyya(&p, &q);
            assert!((got - want.min(1.0)).abs() < 1e-12, "{got} vs {want}");
            assert_eq!(got, bhattacharyya(&q, &p));
        }
    }
}
