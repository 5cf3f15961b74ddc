//! The three machine variants and the training loop shared by every
//! real-valued regressor.

mod config;
mod ctm;
mod mtm;
mod pool;
mod rtm;
pub mod snapshot;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

pub use config::{MachineConfig, MachineKind};
pub use ctm::{decide, ClassicTsetlinMachine};
pub use mtm::{argmax_lowest, MulticlassTsetlinMachine};
pub use pool::{activation_probability as polar_activation_probability, Polarity};
pub use rtm::{activation_probability, normalize_votes, RegressionTsetlinMachine};

use crate::clause::{Clause, ClausePattern, LiteralVector};
use crate::datasets::Dataset;
use crate::error::{Result, TmError};
use crate::num::Scalar;

/// A model mapping binary inputs to a real output.
pub trait Regressor<F: Scalar> {
    fn n_features(&self) -> usize;

    fn predict_lits(&self, lits: &LiteralVector) -> F;

    fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: F, rng: &mut R) -> Result<()>;

    fn clause_patterns(&self) -> Vec<ClausePattern>;

    /// Every clause the model owns, in snapshot order.
    fn clause_list(&self) -> Vec<&Clause>;

    fn predict(&self, x: &[u8]) -> Result<F> {
        check_width(self.n_features(), x)?;
        Ok(self.predict_lits(&LiteralVector::from_bits(x)?))
    }
}

pub(crate) fn check_width(expected: usize, x: &[u8]) -> Result<()> {
    if x.len() != expected {
        return Err(TmError::Shape {
            what: "features",
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn encode_rows(n_features: usize, inputs: &[Vec<u8>], n_labels: usize) -> Result<Vec<LiteralVector>> {
    if inputs.is_empty() {
        return Err(TmError::EmptyDataset);
    }
    if inputs.len() != n_labels {
        return Err(TmError::Shape {
            what: "labels",
            expected: inputs.len(),
            actual: n_labels,
        });
    }
    inputs
        .iter()
        .map(|x| {
            check_width(n_features, x)?;
            LiteralVector::from_bits(x)
        })
        .collect()
}

/// Literal encoding of a dataset, with repeated rows collapsed so that
/// whole-set prediction evaluates each distinct input once.
#[derive(Debug, Clone)]
pub struct EncodedInputs {
    lits: Vec<LiteralVector>,
    unique: Vec<usize>,
    row_to_unique: Vec<usize>,
}

impl EncodedInputs {
    pub fn new<F: Scalar>(data: &Dataset<F>) -> Result<Self> {
        let lits = data
            .rows()
            .map(LiteralVector::from_bits)
            .collect::<Result<Vec<_>>>()?;
        let mut seen: HashMap<&LiteralVector, usize> = HashMap::new();
        let mut unique = Vec::new();
        let mut row_to_unique = Vec::with_capacity(lits.len());
        for (i, l) in lits.iter().enumerate() {
            let slot = *seen.entry(l).or_insert_with(|| {
                unique.push(i);
                unique.len() - 1
            });
            row_to_unique.push(slot);
        }
        Ok(Self {
            lits,
            unique,
            row_to_unique,
        })
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn n_distinct(&self) -> usize {
        self.unique.len()
    }

    pub fn row(&self, i: usize) -> &LiteralVector {
        &self.lits[i]
    }

    pub fn predict_all<F: Scalar, M: Regressor<F>>(&self, model: &M) -> Vec<F> {
        let distinct: Vec<F> = self
            .unique
            .iter()
            .map(|&i| model.predict_lits(&self.lits[i]))
            .collect();
        self.row_to_unique.iter().map(|&u| distinct[u]).collect()
    }

    /// Per-clause count of rows on which the clause fires at inference.
    pub fn fire_counts(&self, clauses: &[&Clause]) -> Vec<usize> {
        let mut multiplicity = vec![0usize; self.unique.len()];
        for &u in &self.row_to_unique {
            multiplicity[u] += 1;
        }
        clauses
            .iter()
            .map(|c| {
                self.unique
                    .iter()
                    .zip(&multiplicity)
                    .filter(|(&i, _)| c.fires(&self.lits[i], crate::clause::EvalMode::Inference))
                    .map(|(_, &n)| n)
                    .sum()
            })
            .collect()
    }
}

/// Mean absolute error of `model` over `data`.
pub fn evaluate_mae<F: Scalar, M: Regressor<F>>(model: &M, encoded: &EncodedInputs, data: &Dataset<F>) -> Result<F> {
    crate::experiments::compute_mae(&encoded.predict_all(model), data.targets())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub epochs: usize,
    pub shuffle: bool,
}

/// Trains `model` for `opts.epochs` passes over `train` and returns the
/// inference-mode training MAE after each pass. `on_epoch` sees the model
/// after every pass.
pub fn fit<F, M, R>(
    model: &mut M,
    train: &Dataset<F>,
    opts: FitOptions,
    rng: &mut R,
    mut on_epoch: impl FnMut(usize, &M) -> Result<()>,
) -> Result<Vec<F>>
where
    F: Scalar,
    M: Regressor<F>,
    R: Rng + ?Sized,
{
    if train.is_empty() {
        return Err(TmError::EmptyDataset);
    }
    check_width(model.n_features(), train.row(0))?;
    let encoded = EncodedInputs::new(train)?;
    let targets = train.targets();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut series = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        if opts.shuffle {
            order.shuffle(rng);
        }
        for &i in &order {
            model.train_lits(encoded.row(i), targets[i], rng)?;
        }
        series.push(evaluate_mae(model, &encoded, train)?);
        on_epoch(epoch, model)?;
    }
    Ok(series)
}
