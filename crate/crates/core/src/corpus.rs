//! Seeded random finite models for oracle checks and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::FiniteModel;
use crate::numeric;

/// Size limits of a random model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusShape {
    pub max_theta: usize,
    pub max_psi: usize,
    pub max_x: usize,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            max_theta: 12,
            max_psi: 6,
            max_x: 8,
        }
    }
}

/// A random model with a surjective `psi_map` and a stochastic likelihood table.
///
/// Some likelihood entries are zeroed and some rows duplicated so that ties and
/// zero-evidence data occur in the corpus.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: CorpusShape) -> Result<FiniteModel> {
    let n_theta = rng.random_range(1..=shape.max_theta);
    let n_psi = rng.random_range(1..=shape.max_psi.min(n_theta));
    let n_x = rng.random_range(2..=shape.max_x);

    let mut psi_map: Vec<usize> = (0..n_theta)
        .map(|i| if i < n_psi { i } else { rng.random_range(0..n_psi) })
        .collect();
    psi_map.shuffle(rng);

    let raw: Vec<f64> = (0..n_theta).map(|_| rng.random_range(0.05..1.0)).collect();
    let (prior, _) = numeric::normalize(&raw)?;

    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n_theta);
    for i in 0..n_theta {
        if i > 0 && rng.random_bool(0.15) {
            let src = rng.random_range(0..i);
            table.push(table[src].clone());
            continue;
        }
        let mut row: Vec<f64> = (0..n_x)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        if row.iter().all(|v| *v == 0.0) {
            row[rng.random_range(0..n_x)] = 1.0;
        }
        table.push(numeric::normalize(&row)?.0);
    }
    for k in 0..n_x {
        if table.iter().all(|r| r[k] == 0.0) {
            let i = rng.random_range(0..n_theta);
            table[i][k] = rng.random_range(0.1..1.0);
            let (row, _) = numeric::normalize(&table[i])?;
            table[i] = row;
        }
    }
    FiniteModel::from_table(prior, table, psi_map)
}

/// `count` models from independent streams of `seed`.
pub fn corpus(seed: u64, count: usize, shape: CorpusShape) -> Result<Vec<FiniteModel>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            random_model(&mut rng, shape)
        })
        .collect()
}
