use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::Deserializer;

use super::EmotionVector;
use crate::{Error, Result};

struct RawEntries(Vec<(String, Vec<f64>)>);

impl<'de> serde::Deserialize<'de> for RawEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping ids to arrays of numbers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<RawEntries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<f64>>()? {
                    out.push((k, v));
                }
                Ok(RawEntries(out))
            }
        }
        d.deserialize_map(V)
    }
}

/// Parses `{"<id>": [8 floats], ...}`, rejecting wrong arity, non-finite
/// values and duplicate ids.
pub fn parse_emotion_vectors(text: &str) -> Result<BTreeMap<String, EmotionVector>> {
    let raw: RawEntries = serde_json::from_str(text)?;
    let mut out = BTreeMap::new();
    for (id, values) in raw.0 {
        let v = EmotionVector::from_slice(&values)
            .map_err(|e| Error::invalid(format!("emotion vector `{id}`: {e}")))?;
        if out.insert(id.clone(), v).is_some() {
            return Err(Error::invalid(format!("duplicate emotion vector id `{id}`")));
        }
    }
    Ok(out)
}

pub fn load_emotion_vectors(path: impl AsRef<Path>) -> Result<BTreeMap<String, EmotionVector>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_emotion_vectors(&text)
}

pub fn save_emotion_vectors(
    vectors: &BTreeMap<String, EmotionVector>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(vectors)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_entry() {
        let m = parse_emotion_vectors(r#"{"clip": [1,2,3,4,5,6,7,8]}"#).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["clip"].scores()[0], 1.0);
    }

    #[test]
    fn arity_error_names_the_id() {
        let e = parse_emotion_vectors(r#"{"short_one": [1,2,3,4,5,6,7]}"#).unwrap_err();
        assert!(e.to_string().contains("short_one"), "{e}");
    }

    #[test]
    fn duplicates_and_non_finite_are_rejected() {
        let dup = r#"{"a": [1,2,3,4,5,6,7,8], "a": [1,2,3,4,5,6,7,8]}"#;
        assert!(parse_emotion_vectors(dup).unwrap_err().to_string().contains("duplicate"));
        assert!(parse_emotion_vectors(r#"{"a": [1,2,3,4,5,6,7,1e999]}"#).is_err());
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let vectors: BTreeMap<String, EmotionVector> = (0..100)
            .map(|i| {
                let v = EmotionVector::new(std::array::from_fn(|_| rng.gen_range(-10.0..10.0))).unwrap();
                (format!("id{i}"), v)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.json");
        save_emotion_vectors(&vectors, &path).unwrap();
        assert_eq!(load_emotion_vectors(&path).unwrap(), vectors);
    }
}
