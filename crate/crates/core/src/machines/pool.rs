//! A polarised clause pool: the voting and feedback core shared by the
//! classic machine and each class of the multiclass machine.

use rand::Rng;

use crate::clause::{Clause, ClauseBank, EvalMode, LiteralVector};
use crate::error::Result;
use crate::feedback::{FeedbackKind, FeedbackTable};
use crate::num::{BernoulliRun, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Even (0-based) indices vote for the class, odd indices against it.
    #[inline]
    pub fn of_index(j: usize) -> Self {
        if j % 2 == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PolarPool {
    pub(crate) bank: ClauseBank,
}

impl PolarPool {
    pub(crate) fn new<R: Rng + ?Sized>(m: usize, n_features: usize, n_states: u32, rng: &mut R) -> Result<Self> {
        let clauses = (0..m)
            .map(|_| Clause::new(n_features, n_states, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_clauses(clauses))
    }

    pub(crate) fn from_clauses(clauses: Vec<Clause>) -> Self {
        Self { bank: ClauseBank::new(clauses) }
    }

    #[inline]
    pub(crate) fn clauses(&self) -> &[Clause] {
        self.bank.clauses()
    }

    #[inline]
    pub(crate) fn vote_sum(&self, lits: &LiteralVector, mode: EvalMode) -> i64 {
        self.bank.polar_sum(lits, mode)
    }

    /// One training step towards `target`.
    ///
    /// With `f = clamp(votes, -T, T)` taken in learning mode before any
    /// update, every clause is activated with probability `(T - f) / 2T` when
    /// the target is 1 and `(T + f) / 2T` when it is 0. Activated clauses of
    /// the polarity that agrees with the target get Type I, the others Type II.
    pub(crate) fn train<F: Scalar, R: Rng + ?Sized>(
        &mut self,
        lits: &LiteralVector,
        target: bool,
        threshold: u32,
        table: &FeedbackTable<F>,
        rng: &mut R,
    ) -> Result<()> {
        let t = threshold as i64;
        let f = self.vote_sum(lits, EvalMode::Learning).clamp(-t, t);
        let p = activation_probability::<F>(target, f, threshold);
        let mut run = BernoulliRun::new(p, self.bank.len());
        while let Some(j) = run.next_success(rng) {
            let kind = match (Polarity::of_index(j), target) {
                (Polarity::Positive, true) | (Polarity::Negative, false) => FeedbackKind::TypeI,
                _ => FeedbackKind::TypeII,
            };
            self.bank.feed(j, lits, kind, table, rng)?;
        }
        Ok(())
    }
}

/// Clause activation probability for a clamped vote sum `f`.
pub fn activation_probability<F: Scalar>(target: bool, f: i64, threshold: u32) -> F {
    let t = threshold as i64;
    let f = f.clamp(-t, t);
    let num = if target { t - f } else { t + f };
    F::from_i64(num).unwrap() / F::from_i64(2 * t).unwrap()
}
