//! Regression Tsetlin Machine.
//!
//! Clauses carry no polarity. The number of firing clauses, capped at `T`,
//! is scaled by `y_max / T` to give a continuous output. Training compares
//! that output with the target: an undershoot gives Type I feedback, an
//! overshoot Type II, each clause independently with probability
//! `min(1, K·|y − ŷ| / y_max)`.

use rand::Rng;

use super::ctm::check_kind;
use super::{check_width, MachineConfig, MachineKind, Regressor};
use crate::clause::{Clause, ClauseBank, ClausePattern, EvalMode, LiteralVector};
use crate::error::{Result, TmError};
use crate::feedback::{FeedbackKind, FeedbackTable};
use crate::num::{BernoulliRun, Scalar};

#[derive(Debug, Clone)]
pub struct RegressionTsetlinMachine<F> {
    config: MachineConfig<F>,
    n_features: usize,
    bank: ClauseBank,
    table: FeedbackTable<F>,
}

/// Maps a vote count to the output scale: `min(votes, T) · y_max / T`.
#[inline]
pub fn normalize_votes<F: Scalar>(votes: usize, threshold: u32, y_max: F) -> F {
    let capped = votes.min(threshold as usize);
    F::from_usize_exact(capped) * y_max / F::from_usize_exact(threshold as usize)
}

/// Per-clause feedback probability `min(1, K·|y − ŷ| / y_max)`.
pub fn activation_probability<F: Scalar>(y: F, target: F, y_max: F, gain: F) -> Result<F> {
    if !(y_max > F::zero()) {
        return Err(TmError::config(format!("y_max must be positive, got {y_max}")));
    }
    if !(gain > F::zero()) {
        return Err(TmError::config(format!("gain K must be positive, got {gain}")));
    }
    Ok((gain * (y - target).abs() / y_max).min(F::one()))
}

impl<F: Scalar> RegressionTsetlinMachine<F> {
    pub fn new<R: Rng + ?Sized>(config: MachineConfig<F>, n_features: usize, rng: &mut R) -> Result<Self> {
        check_kind(&config, MachineKind::Rtm)?;
        config.validate()?;
        let clauses = (0..config.clauses)
            .map(|_| Clause::new(n_features, config.n_states_per_action, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_clauses(config, n_features, clauses)
    }

    pub fn from_clauses(config: MachineConfig<F>, n_features: usize, clauses: Vec<Clause>) -> Result<Self> {
        check_kind(&config, MachineKind::Rtm)?;
        config.validate()?;
        if clauses.len() != config.clauses {
            return Err(TmError::Shape {
                what: "clauses",
                expected: config.clauses,
                actual: clauses.len(),
            });
        }
        if let Some(c) = clauses.iter().find(|c| c.n_features() != n_features) {
            return Err(TmError::Shape {
                what: "features",
                expected: n_features,
                actual: c.n_features(),
            });
        }
        Ok(Self {
            table: FeedbackTable::new(config.specificity)?,
            config,
            n_features,
            bank: ClauseBank::new(clauses),
        })
    }

    pub fn config(&self) -> &MachineConfig<F> {
        &self.config
    }

    pub fn clauses(&self) -> &[Clause] {
        self.bank.clauses()
    }

    /// Number of clauses firing on `x` at inference.
    pub fn raw_votes(&self, x: &[u8]) -> Result<usize> {
        check_width(self.n_features, x)?;
        Ok(self.votes(&LiteralVector::from_bits(x)?, EvalMode::Inference))
    }

    pub fn train_sample<R: Rng + ?Sized>(&mut self, x: &[u8], target: F, rng: &mut R) -> Result<()> {
        check_width(self.n_features, x)?;
        self.train_lits(&LiteralVector::from_bits(x)?, target, rng)
    }

    #[inline]
    pub(crate) fn votes(&self, lits: &LiteralVector, mode: EvalMode) -> usize {
        self.bank.count_firing(lits, mode)
    }

    fn output(&self, votes: usize) -> F {
        normalize_votes(votes, self.config.threshold, self.config.y_max)
    }
}

impl<F: Scalar> Regressor<F> for RegressionTsetlinMachine<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_lits(&self, lits: &LiteralVector) -> F {
        self.output(self.votes(lits, EvalMode::Inference))
    }

    fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: F, rng: &mut R) -> Result<()> {
        if !target.is_finite() {
            return Err(TmError::config(format!("non-finite target {target}")));
        }
        let y = self.output(self.votes(lits, EvalMode::Learning));
        let kind = if y < target {
            FeedbackKind::TypeI
        } else if y > target {
            FeedbackKind::TypeII
        } else {
            return Ok(());
        };
        let p = activation_probability(y, target, self.config.y_max, self.config.gain)?;
        let mut run = BernoulliRun::new(p, self.bank.len());
        while let Some(j) = run.next_success(rng) {
            self.bank.feed(j, lits, kind, &self.table, rng)?;
        }
        Ok(())
    }

    fn clause_patterns(&self) -> Vec<ClausePattern> {
        self.bank.clauses().iter().map(Clause::pattern).collect()
    }

    fn clause_list(&self) -> Vec<&Clause> {
        self.bank.clauses().iter().collect()
    }
}
