//! Classic two-class Tsetlin Machine.

use rand::Rng;

use super::pool::{PolarPool, Polarity};
use super::{check_width, encode_rows, MachineConfig, MachineKind};
use crate::clause::{Clause, EvalMode, LiteralVector};
use crate::error::{Result, TmError};
use crate::feedback::FeedbackTable;
use crate::num::Scalar;

#[derive(Debug, Clone)]
pub struct ClassicTsetlinMachine<F> {
    config: MachineConfig<F>,
    n_features: usize,
    pool: PolarPool,
    table: FeedbackTable<F>,
}

/// Vote-sum decision: positive wins, ties and negative sums give 0.
#[inline]
pub fn decide(vote_sum: i64) -> bool {
    vote_sum > 0
}

impl<F: Scalar> ClassicTsetlinMachine<F> {
    pub fn new<R: Rng + ?Sized>(config: MachineConfig<F>, n_features: usize, rng: &mut R) -> Result<Self> {
        check_kind(&config, MachineKind::Ctm)?;
        config.validate()?;
        let pool = PolarPool::new(config.clauses, n_features, config.n_states_per_action, rng)?;
        Ok(Self {
            table: FeedbackTable::new(config.specificity)?,
            config,
            n_features,
            pool,
        })
    }

    pub(crate) fn from_clauses(config: MachineConfig<F>, n_features: usize, clauses: Vec<Clause>) -> Result<Self> {
        check_kind(&config, MachineKind::Ctm)?;
        config.validate()?;
        if clauses.len() != config.clauses {
            return Err(TmError::Shape {
                what: "clauses",
                expected: config.clauses,
                actual: clauses.len(),
            });
        }
        Ok(Self {
            table: FeedbackTable::new(config.specificity)?,
            config,
            n_features,
            pool: PolarPool::from_clauses(clauses),
        })
    }

    pub fn config(&self) -> &MachineConfig<F> {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn clauses(&self) -> &[Clause] {
        self.pool.clauses()
    }

    pub fn polarity(&self, j: usize) -> Polarity {
        Polarity::of_index(j)
    }

    /// Positive minus negative votes at inference.
    pub fn vote_sum(&self, x: &[u8]) -> Result<i64> {
        check_width(self.n_features, x)?;
        Ok(self.vote_sum_lits(&LiteralVector::from_bits(x)?))
    }

    pub fn predict(&self, x: &[u8]) -> Result<bool> {
        self.vote_sum(x).map(decide)
    }

    pub fn train_sample<R: Rng + ?Sized>(&mut self, x: &[u8], target: bool, rng: &mut R) -> Result<()> {
        check_width(self.n_features, x)?;
        self.train_lits(&LiteralVector::from_bits(x)?, target, rng)
    }

    /// Trains for `epochs` passes in stored order and returns the training
    /// error rate after each pass.
    pub fn fit<R: Rng + ?Sized>(
        &mut self,
        inputs: &[Vec<u8>],
        labels: &[bool],
        epochs: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let lits = encode_rows(self.n_features, inputs, labels.len())?;
        let mut series = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            for (l, &y) in lits.iter().zip(labels) {
                self.train_lits(l, y, rng)?;
            }
            let wrong = lits
                .iter()
                .zip(labels)
                .filter(|(l, &y)| self.predict_lits(l) != y)
                .count();
            series.push(wrong as f64 / labels.len() as f64);
        }
        Ok(series)
    }

    #[inline]
    pub(crate) fn vote_sum_lits(&self, lits: &LiteralVector) -> i64 {
        self.pool.vote_sum(lits, EvalMode::Inference)
    }

    #[inline]
    pub(crate) fn predict_lits(&self, lits: &LiteralVector) -> bool {
        decide(self.vote_sum_lits(lits))
    }

    pub(crate) fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: bool, rng: &mut R) -> Result<()> {
        self.pool.train(lits, target, self.config.threshold, &self.table, rng)
    }
}

pub(super) fn check_kind<F>(config: &MachineConfig<F>, kind: MachineKind) -> Result<()> {
    if config.kind != kind {
        return Err(TmError::config(format!(
            "config is for {:?}, expected {:?}",
            config.kind, kind
        )));
    }
    Ok(())
}
