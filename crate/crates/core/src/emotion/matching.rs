use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{cosine_similarity, EmotionVector};
use crate::{Error, Result};

/// One ranked palette recommendation for a music clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub music_id: String,
    pub palette_id: String,
    pub similarity: f64,
    /// 1-based rank within the clip's list.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedVector {
    pub id: String,
    pub side: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    /// Per music item, in input order.
    pub ranked: Vec<(String, Vec<MatchCandidate>)>,
    /// Zero-norm vectors that were left out.
    pub skipped: Vec<SkippedVector>,
}

/// Top-`top_k` palettes per music item by cosine similarity, descending,
/// ties broken by ascending palette id.
pub fn match_pairs(
    music: &[(String, EmotionVector)],
    palettes: &[(String, EmotionVector)],
    top_k: usize,
) -> Result<MatchResult> {
    if top_k == 0 {
        return Err(Error::invalid("top_k must be at least 1"));
    }
    if palettes.is_empty() {
        return Err(Error::invalid("palette set is empty"));
    }
    let mut result = MatchResult::default();
    let mut usable: Vec<&(String, EmotionVector)> = Vec::with_capacity(palettes.len());
    for p in palettes {
        if p.1.norm() == 0.0 {
            log::warn!("skipping palette {}: zero-norm emotion vector", p.0);
            result.skipped.push(SkippedVector {
                id: p.0.clone(),
                side: "palette",
                reason: "zero-norm emotion vector".into(),
            });
        } else {
            usable.push(p);
        }
    }
    for (music_id, mv) in music {
        if mv.norm() == 0.0 {
            log::warn!("skipping music {music_id}: zero-norm emotion vector");
            result.skipped.push(SkippedVector {
                id: music_id.clone(),
                side: "music",
                reason: "zero-norm emotion vector".into(),
            });
            continue;
        }
        let mut scored: Vec<(f64, &str)> = usable
            .iter()
            .map(|(pid, pv)| Ok((cosine_similarity(mv, pv)?, pid.as_str())))
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let list = scored
            .into_iter()
            .take(top_k)
            .enumerate()
            .map(|(i, (similarity, pid))| MatchCandidate {
                music_id: music_id.clone(),
                palette_id: pid.to_string(),
                similarity,
                rank: i + 1,
            })
            .collect();
        result.ranked.push((music_id.clone(), list));
    }
    Ok(result)
}

/// One JSON object per candidate, per line.
pub fn write_matches_jsonl<W: Write>(result: &MatchResult, mut out: W) -> Result<()> {
    for (_, list) in &result.ranked {
        for c in list {
            serde_json::to_writer(&mut out, c)?;
            out.write_all(b"\n")
                .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ev(v: [f64; 8]) -> EmotionVector {
        EmotionVector::new(v).unwrap()
    }

    fn random_set(prefix: &str, n: usize, rng: &mut impl Rng) -> Vec<(String, EmotionVector)> {
        (0..n)
            .map(|i| (format!("{prefix}{i:03}"), ev(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))))
            .collect()
    }

    #[test]
    fn identical_vector_ranks_first() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut palettes = random_set("p", 20, &mut rng);
        let m = ev([0.9, 0.1, 0.0, 0.0, 0.3, 0.0, 0.2, 0.8]);
        palettes.push(("target".into(), m));
        let r = match_pairs(&[("m".into(), m)], &palettes, 5).unwrap();
        let top = &r.ranked[0].1[0];
        assert_eq!(top.palette_id, "target");
        assert!((top.similarity - 1.0).abs() < 1e-12);
        assert_eq!(top.rank, 1);
    }

    #[test]
    fn top_k_larger_than_set_returns_everything_sorted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let palettes = random_set("p", 4, &mut rng);
        let music = random_set("m", 1, &mut rng);
        let r = match_pairs(&music, &palettes, 10).unwrap();
        let list = &r.ranked[0].1;
        assert_eq!(list.len(), 4);
        assert!(list.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }

    #[test]
    fn ties_break_by_palette_id() {
        let v = ev([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let palettes = vec![("b".to_string(), v), ("a".to_string(), v.scaled(2.0)), ("c".to_string(), v)];
        let r = match_pairs(&[("m".into(), v)], &palettes, 3).unwrap();
        let ids: Vec<&str> = r.ranked[0].1.iter().map(|c| c.palette_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn zero_norm_vectors_are_skipped_with_record() {
        let zero = ev([0.0; 8]);
        let one = ev([1.0; 8]);
        let r = match_pairs(
            &[("m0".into(), zero), ("m1".into(), one)],
            &[("p0".into(), zero), ("p1".into(), one)],
            5,
        )
        .unwrap();
        assert_eq!(r.skipped.len(), 2);
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.ranked[0].1.len(), 1);
    }

    #[test]
    fn argument_errors() {
        let one = ev([1.0; 8]);
        assert!(match_pairs(&[("m".into(), one)], &[], 5).is_err());
        assert!(match_pairs(&[("m".into(), one)], &[("p".into(), one)], 0).is_err());
    }

    #[test]
    fn ranking_invariant_under_positive_scaling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let palettes = random_set("p", 30, &mut rng);
        let music = random_set("m", 5, &mut rng);
        let scaled: Vec<_> = palettes
            .iter()
            .map(|(id, v)| (id.clone(), v.scaled(rng.gen_range(0.1..10.0))))
            .collect();
        let a = match_pairs(&music, &palettes, 5).unwrap();
        let b = match_pairs(&music, &scaled, 5).unwrap();
        for ((_, la), (_, lb)) in a.ranked.iter().zip(&b.ranked) {
            let ia: Vec<_> = la.iter().map(|c| &c.palette_id).collect();
            let ib: Vec<_> = lb.iter().map(|c| &c.palette_id).collect();
            assert_eq!(ia, ib);
        }
    }

    #[test]
    fn jsonl_lines() {
        let one = ev([1.0; 8]);
        let r = match_pairs(&[("m".into(), one)], &[("p".into(), one), ("q".into(), one)], 5).unwrap();
        let mut buf = Vec::new();
        write_matches_jsonl(&r, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], r#"{"music_id":"m","palette_id":"p","similarity":1.0,"rank":1}"#);
    }
}
