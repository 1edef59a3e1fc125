//! Seeded train/validation/test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ample_core::Corpus;

use crate::PipelineError;

/// Indices into the corpus, disjoint and covering it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }
}

/// Split sizes: validation and test get `floor(n * r)` items but at least
/// one when their ratio is positive and the corpus is large enough; the
/// remainder goes to training.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> (usize, usize, usize) {
    let mut spare = n.saturating_sub(1);
    let mut take = |r: f64| {
        if r <= 0.0 || spare == 0 {
            return 0;
        }
        let k = ((n as f64 * r + 1e-9).floor() as usize).max(1).min(spare);
        spare -= k;
        k
    };
    let valid = take(ratios[1]);
    let test = take(ratios[2]);
    (n - valid - test, valid, test)
}

pub fn split_corpus(corpus: &Corpus, ratios: [f64; 3], seed: u64) -> Result<Split, PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    if let Some(i) = corpus.graphs.iter().position(|g| g.label().is_none()) {
        return Err(PipelineError::Unlabeled(corpus.names[i].clone()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (tr, va, _) = split_sizes(order.len(), ratios);
    let test = order.split_off(tr + va);
    let valid = order.split_off(tr);
    Ok(Split { train: order, valid, test })
}
