use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Partition of observation indices into `k` folds.
///
/// Fold indices are zero-based. A single-fold assignment (`k == 1`) means
/// "no sample splitting": nuisances are fit on, and evaluated at, every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
    seed: Option<u64>,
}

/// Balanced random partition of `0..n` into `k` folds.
///
/// Indices are shuffled with a ChaCha20 stream seeded from `seed`, then dealt
/// round-robin, so fold sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::argument(
            "first-stage",
            format!("fold count {k} must satisfy 2 <= K <= n = {n}"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment {
        k,
        fold_of,
        seed: Some(seed),
    })
}

impl FoldAssignment {
    /// Every row in one fold; the nuisance fit uses the full sample.
    pub fn single(n: usize) -> Self {
        FoldAssignment {
            k: 1,
            fold_of: vec![0; n],
            seed: None,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    /// Rows used to fit the nuisances applied to `fold`.
    pub fn training(&self, fold: usize) -> Vec<usize> {
        if self.k == 1 {
            return (0..self.n()).collect();
        }
        (0..self.n()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}
