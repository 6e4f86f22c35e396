use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Disjoint id lists, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded 80/10/10 split: `floor(n/10)` test ids, `max(1, floor(n/10))`
/// validation ids, the rest for training. Depends only on the seed and the
/// set of ids.
pub fn split_ids(ids: &[String], seed: u64) -> Split {
    let mut order: Vec<String> = ids.to_vec();
    order.sort();
    order.dedup();
    let n = order.len();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = n / 10;
    let n_val = if n >= 2 { (n / 10).max(1) } else { 0 };
    let mut test = order[..n_test].to_vec();
    let mut val = order[n_test..n_test + n_val].to_vec();
    let mut train = order[n_test + n_val..].to_vec();
    test.sort();
    val.sort();
    train.sort();
    Split { train, val, test }
}
