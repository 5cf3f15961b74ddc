//! Type I / Type II feedback: the reward, inaction and penalty probabilities
//! for each automaton, and their stochastic application to a clause.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automata::{Action, TsetlinAutomaton};
use crate::clause::{Clause, EvalMode, LiteralVector};
use crate::error::{Result, TmError};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    /// Combats false negatives: reinforces firing clauses, recruits literals.
    TypeI,
    /// Combats false positives: includes literals that would silence the clause.
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackCell<F> {
    pub reward_p: F,
    pub inaction_p: F,
    pub penalty_p: F,
}

impl<F: Scalar> FeedbackCell<F> {
    pub fn new(reward_p: F, inaction_p: F, penalty_p: F) -> Self {
        Self {
            reward_p,
            inaction_p,
            penalty_p,
        }
    }

    fn inaction() -> Self {
        Self::new(F::zero(), F::one(), F::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Reward,
    Inaction,
    Penalty,
}

/// The feedback matrix for one specificity value, with `1/s` and `(s-1)/s`
/// precomputed.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackTable<F> {
    s: F,
    inv_s: F,
    comp_s: F,
}

impl<F: Scalar> FeedbackTable<F> {
    pub fn new(s: F) -> Result<Self> {
        if !(s >= F::one()) || !s.is_finite() {
            return Err(TmError::config(format!("specificity s must be finite and >= 1, got {s}")));
        }
        let inv_s = F::one() / s;
        Ok(Self {
            s,
            inv_s,
            comp_s: F::one() - inv_s,
        })
    }

    pub fn s(&self) -> F {
        self.s
    }

    pub fn cell(
        &self,
        kind: FeedbackKind,
        action: Action,
        clause_output: bool,
        literal: bool,
    ) -> Result<FeedbackCell<F>> {
        let (zero, one) = (F::zero(), F::one());
        let (inv, comp) = (self.inv_s, self.comp_s);
        if action == Action::Include && clause_output && !literal {
            return Err(TmError::Contract(format!(
                "{kind:?} feedback for an included literal of value 0 in a firing clause"
            )));
        }
        Ok(match (kind, action, clause_output, literal) {
            (FeedbackKind::TypeI, Action::Include, true, _) => FeedbackCell::new(comp, inv, zero),
            (FeedbackKind::TypeI, Action::Include, false, _) => FeedbackCell::new(zero, comp, inv),
            (FeedbackKind::TypeI, Action::Exclude, true, true) => FeedbackCell::new(zero, inv, comp),
            (FeedbackKind::TypeI, Action::Exclude, _, _) => FeedbackCell::new(inv, comp, zero),
            (FeedbackKind::TypeII, Action::Exclude, true, false) => FeedbackCell::new(zero, zero, one),
            (FeedbackKind::TypeII, _, _, _) => FeedbackCell::inaction(),
        })
    }
}

/// Looks up a single cell of the feedback matrix.
pub fn lookup_cell<F: Scalar>(
    kind: FeedbackKind,
    action: Action,
    clause_output: bool,
    literal: bool,
    s: F,
) -> Result<FeedbackCell<F>> {
    FeedbackTable::new(s)?.cell(kind, action, clause_output, literal)
}

/// Samples the cell's outcome. Cells with a certain outcome consume no
/// randomness.
#[inline]
pub fn draw_outcome<F: Scalar, R: Rng + ?Sized>(cell: &FeedbackCell<F>, rng: &mut R) -> Outcome {
    let one = F::one();
    let zero = F::zero();
    if cell.reward_p >= one {
        return Outcome::Reward;
    }
    if cell.penalty_p >= one {
        return Outcome::Penalty;
    }
    if cell.reward_p <= zero && cell.penalty_p <= zero {
        return Outcome::Inaction;
    }
    let u = F::sample_unit(rng);
    if u < cell.reward_p {
        Outcome::Reward
    } else if u < cell.reward_p + cell.penalty_p {
        Outcome::Penalty
    } else {
        Outcome::Inaction
    }
}

pub fn update_ta<F: Scalar, R: Rng + ?Sized>(
    ta: TsetlinAutomaton,
    cell: &FeedbackCell<F>,
    rng: &mut R,
) -> TsetlinAutomaton {
    match draw_outcome(cell, rng) {
        Outcome::Reward => ta.rewarded(),
        Outcome::Penalty => ta.penalized(),
        Outcome::Inaction => ta,
    }
}

/// Applies one round of `kind` feedback to every automaton of `clause`.
///
/// The clause output is computed once in learning mode before any automaton
/// moves; all `2o` lookups see that snapshot. Randomness is consumed in
/// literal order.
pub fn feed_clause<F: Scalar, R: Rng + ?Sized>(
    clause: &mut Clause,
    lits: &LiteralVector,
    kind: FeedbackKind,
    table: &FeedbackTable<F>,
    rng: &mut R,
) -> Result<()> {
    if lits.len() != clause.n_literals() {
        return Err(TmError::Shape {
            what: "literals",
            expected: clause.n_literals(),
            actual: lits.len(),
        });
    }
    let output = clause.fires(lits, EvalMode::Learning);
    if kind == FeedbackKind::TypeII && !output {
        return Ok(());
    }
    for k in 0..clause.n_literals() {
        let cell = table.cell(kind, clause.action(k), output, lits.get(k))?;
        match draw_outcome(&cell, rng) {
            Outcome::Reward => clause.reward(k),
            Outcome::Penalty => clause.penalize(k),
            Outcome::Inaction => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const KINDS: [FeedbackKind; 2] = [FeedbackKind::TypeI, FeedbackKind::TypeII];
    const ACTIONS: [Action; 2] = [Action::Include, Action::Exclude];

    fn reachable() -> impl Iterator<Item = (FeedbackKind, Action, bool, bool)> {
        KINDS.into_iter().flat_map(|k| {
            ACTIONS.into_iter().flat_map(move |a| {
                [(true, true), (true, false), (false, true), (false, false)]
                    .into_iter()
                    .filter(move |&(c, l)| !(a == Action::Include && c && !l))
                    .map(move |(c, l)| (k, a, c, l))
            })
        })
    }

    #[test]
    fn type_one_include_firing() {
        let c = lookup_cell(FeedbackKind::TypeI, Action::Include, true, true, 4.0f64).unwrap();
        assert_eq!(c, FeedbackCell::new(0.75, 0.25, 0.0));
    }

    #[test]
    fn type_two_cells() {
        for s in [1.0f64, 2.0, 7.5] {
            let c = lookup_cell(FeedbackKind::TypeII, Action::Exclude, true, false, s).unwrap();
            assert_eq!(c.penalty_p, 1.0);
            let c = lookup_cell(FeedbackKind::TypeII, Action::Include, false, true, s).unwrap();
            assert_eq!(c.inaction_p, 1.0);
        }
    }

    #[test]
    fn s_one_collapses_include_firing_to_inaction() {
        let c = lookup_cell(FeedbackKind::TypeI, Action::Include, true, true, 1.0f64).unwrap();
        assert_eq!(c, FeedbackCell::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn unreachable_cell_is_a_contract_violation() {
        for kind in KINDS {
            assert!(matches!(
                lookup_cell(kind, Action::Include, true, false, 2.0f64),
                Err(TmError::Contract(_))
            ));
        }
    }

    #[test]
    fn invalid_specificity() {
        assert!(FeedbackTable::new(0.5f64).is_err());
        assert!(FeedbackTable::new(f64::NAN).is_err());
    }

    #[test]
    fn cells_sum_to_one() {
        for s in [1.0f64, 1.5, 2.0, 4.0, 10.0] {
            for (k, a, c, l) in reachable() {
                let cell = lookup_cell(k, a, c, l, s).unwrap();
                for p in [cell.reward_p, cell.inaction_p, cell.penalty_p] {
                    assert!((0.0..=1.0).contains(&p));
                }
                assert_eq!(cell.reward_p + cell.inaction_p + cell.penalty_p, 1.0, "s={s} {k:?} {a:?} {c} {l}");
            }
        }
        for s in [1.0f32, 1.5, 2.0, 4.0, 10.0] {
            for (k, a, c, l) in reachable() {
                let cell = lookup_cell(k, a, c, l, s).unwrap();
                assert_eq!(cell.reward_p + cell.inaction_p + cell.penalty_p, 1.0);
            }
        }
    }

    #[test]
    fn type_two_never_rewards() {
        for s in [1.0f64, 2.0, 10.0] {
            for (k, a, c, l) in reachable().filter(|r| r.0 == FeedbackKind::TypeII) {
                assert_eq!(lookup_cell(k, a, c, l, s).unwrap().reward_p, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ta = TsetlinAutomaton::with_state(100, 150).unwrap();
        let always = FeedbackCell::new(1.0f64, 0.0, 0.0);
        let never = FeedbackCell::new(0.0f64, 1.0, 0.0);
        for _ in 0..100 {
            assert_eq!(update_ta(ta, &always, &mut rng).state(), 151);
            assert_eq!(update_ta(ta, &never, &mut rng).state(), 150);
        }
    }

    #[test]
    fn reward_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cell = FeedbackCell::new(0.75f64, 0.25, 0.0);
        let ta = TsetlinAutomaton::with_state(100, 150).unwrap();
        let hits = (0..100_000)
            .filter(|_| update_ta(ta, &cell, &mut rng).state() == 151)
            .count();
        let freq = hits as f64 / 1e5;
        assert!((freq - 0.75).abs() <= 0.01, "{freq}");
    }

    fn clause(mask: &[bool]) -> Clause {
        Clause::from_mask(mask, 100).unwrap()
    }

    #[test]
    fn type_two_on_silent_clause_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let table = FeedbackTable::new(3.0f64).unwrap();
        let lits = LiteralVector::from_bits(&[0, 1]).unwrap();
        let mut c = clause(&[true, false, false, false]);
        let before = c.clone();
        feed_clause(&mut c, &lits, FeedbackKind::TypeII, &table, &mut rng).unwrap();
        assert_eq!(c, before);
    }

    #[test]
    fn type_two_includes_zero_literals_of_firing_clause() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let table = FeedbackTable::new(3.0f64).unwrap();
        // x = [1, 0]: literals [1, 0, 0, 1]
        let lits = LiteralVector::from_bits(&[1, 0]).unwrap();
        let mut c = clause(&[true, false, false, false]);
        feed_clause(&mut c, &lits, FeedbackKind::TypeII, &table, &mut rng).unwrap();
        assert_eq!(c.include_mask(), vec![true, true, true, false]);
        assert!(!c.evaluate(&lits, EvalMode::Inference).unwrap());
    }

    #[test]
    fn type_one_pushes_excluded_true_literal_towards_include() {
        let table = FeedbackTable::new(4.0f64).unwrap();
        let lits = LiteralVector::from_bits(&[1, 1]).unwrap();
        let mut moved = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let mut c = clause(&[true, false, false, false]);
            feed_clause(&mut c, &lits, FeedbackKind::TypeI, &table, &mut rng).unwrap();
            moved += c.action(1).is_include() as usize;
        }
        let freq = moved as f64 / 1e4;
        assert!((freq - 0.75).abs() < 0.02, "{freq}");
    }

    #[test]
    fn feed_uses_output_snapshot() {
        let table = FeedbackTable::new(1.0f64).unwrap();
        let lits = LiteralVector::from_bits(&[1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // The empty clause fires while learning. With s = 1, Type I leaves
        // excluded true literals alone and rewards excluded false literals.
        let mut c = clause(&[false; 4]);
        feed_clause(&mut c, &lits, FeedbackKind::TypeI, &table, &mut rng).unwrap();
        assert_eq!(c.include_mask(), vec![false; 4]);
        assert_eq!(c.automata()[0].state(), 100);
        assert_eq!(c.automata()[2].state(), 99);
        // Type II on a fresh empty clause includes both false literals: the
        // second inclusion still sees the pre-update output of 1.
        let mut c = clause(&[false; 4]);
        feed_clause(&mut c, &lits, FeedbackKind::TypeII, &table, &mut rng).unwrap();
        assert_eq!(c.include_mask(), vec![false, false, true, true]);
    }

    #[test]
    fn feed_rejects_wrong_width() {
        let table = FeedbackTable::new(2.0f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = clause(&[false; 4]);
        let lits = LiteralVector::from_bits(&[1]).unwrap();
        assert!(feed_clause(&mut c, &lits, FeedbackKind::TypeI, &table, &mut rng).is_err());
    }
}
