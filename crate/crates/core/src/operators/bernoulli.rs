use rand::Rng;

use crate::rng::seeded;
use crate::Matrix;

/// Random `m × n` sensing matrix with i.i.d. entries in `{0, 1}`, `P(1) = 1/2`.
///
/// Entries are drawn column by column from a ChaCha8 stream keyed by `seed`,
/// so the matrix is a pure function of `(m, n, seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliSensing {
    m: usize,
    n: usize,
    seed: u64,
    entries: Matrix,
}

impl BernoulliSensing {
    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut entries = Matrix::zeros(m, n);
        for j in 0..n {
            for i in 0..m {
                entries[(i, j)] = if rng.random::<bool>() { 1.0 } else { 0.0 };
            }
        }
        BernoulliSensing {
            m,
            n,
            seed,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }
}
