//! Literals and conjunctive clauses.
//!
//! An `o`-bit input expands into `2o` literals: positions `0..o` hold the
//! features, positions `o..2o` their negations. A clause owns one automaton
//! per literal and fires when every included literal is 1. The include mask
//! is cached as packed words and kept in sync with the automata, so
//! evaluation is a word-wise `include & !literals` test.

use std::fmt;

use rand::Rng;

use crate::automata::{Action, TsetlinAutomaton};
use crate::error::{Result, TmError};

const WORD_BITS: usize = 64;

#[inline]
fn n_words(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Packed `[x_1..x_o, ¬x_1..¬x_o]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralVector {
    words: Vec<u64>,
    n_features: usize,
}

impl LiteralVector {
    /// Builds literals from a 0/1 feature slice.
    pub fn from_bits(x: &[u8]) -> Result<Self> {
        if x.is_empty() {
            return Err(TmError::config("input must have at least one feature"));
        }
        let o = x.len();
        let mut words = vec![0u64; n_words(2 * o)];
        for (k, &bit) in x.iter().enumerate() {
            let lit = match bit {
                0 => o + k,
                1 => k,
                other => {
                    return Err(TmError::config(format!(
                        "feature {k} has non-binary value {other}"
                    )))
                }
            };
            words[lit / WORD_BITS] |= 1 << (lit % WORD_BITS);
        }
        Ok(Self { words, n_features: o })
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn len(&self) -> usize {
        2 * self.n_features
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n_features == 0
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        self.words[k / WORD_BITS] >> (k % WORD_BITS) & 1 == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len()).map(|k| self.get(k) as u8).collect()
    }

    #[inline]
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Clause evaluation regime. Only differs for clauses with no included
/// literal: they fire while learning and stay silent at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Learning,
    Inference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    team: Vec<TsetlinAutomaton>,
    include: Vec<u64>,
    n_included: usize,
}

impl Clause {
    pub fn new<R: Rng + ?Sized>(n_features: usize, n_states_per_action: u32, rng: &mut R) -> Result<Self> {
        if n_features == 0 {
            return Err(TmError::config("clause needs at least one feature"));
        }
        let team = (0..2 * n_features)
            .map(|_| TsetlinAutomaton::new(n_states_per_action, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_automata(team)
    }

    /// Wraps an existing team; the team length must be `2o` for some `o ≥ 1`.
    pub fn from_automata(team: Vec<TsetlinAutomaton>) -> Result<Self> {
        if team.is_empty() || team.len() % 2 != 0 {
            return Err(TmError::config(format!(
                "clause team must hold 2o automata, got {}",
                team.len()
            )));
        }
        let mut include = vec![0u64; n_words(team.len())];
        let mut n_included = 0;
        for (k, ta) in team.iter().enumerate() {
            if ta.action().is_include() {
                include[k / WORD_BITS] |= 1 << (k % WORD_BITS);
                n_included += 1;
            }
        }
        Ok(Self {
            team,
            include,
            n_included,
        })
    }

    /// Builds a clause from an include mask, placing each automaton one step
    /// inside its action.
    pub fn from_mask(mask: &[bool], n_states_per_action: u32) -> Result<Self> {
        let n = n_states_per_action;
        let team = mask
            .iter()
            .map(|&inc| TsetlinAutomaton::with_state(n, if inc { n + 1 } else { n }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_automata(team)
    }

    #[inline]
    pub fn n_literals(&self) -> usize {
        self.team.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.team.len() / 2
    }

    #[inline]
    pub fn n_included(&self) -> usize {
        self.n_included
    }

    pub fn automata(&self) -> &[TsetlinAutomaton] {
        &self.team
    }

    #[inline]
    pub fn action(&self, k: usize) -> Action {
        if self.include[k / WORD_BITS] >> (k % WORD_BITS) & 1 == 1 {
            Action::Include
        } else {
            Action::Exclude
        }
    }

    pub fn include_mask(&self) -> Vec<bool> {
        (0..self.n_literals()).map(|k| self.action(k).is_include()).collect()
    }

    pub fn evaluate(&self, lits: &LiteralVector, mode: EvalMode) -> Result<bool> {
        if lits.len() != self.n_literals() {
            return Err(TmError::Shape {
                what: "literals",
                expected: self.n_literals(),
                actual: lits.len(),
            });
        }
        Ok(self.fires(lits, mode))
    }

    /// Unchecked evaluation for the training and voting loops.
    #[inline]
    pub(crate) fn fires(&self, lits: &LiteralVector, mode: EvalMode) -> bool {
        fires_masked(&self.include, lits.words(), mode)
    }

    #[inline]
    pub(crate) fn reward(&mut self, k: usize) {
        self.team[k].reward();
    }

    #[inline]
    pub(crate) fn penalize(&mut self, k: usize) {
        let before = self.team[k].action();
        self.team[k].penalize();
        if self.team[k].action() != before {
            let bit = 1u64 << (k % WORD_BITS);
            let word = &mut self.include[k / WORD_BITS];
            *word ^= bit;
            if *word & bit != 0 {
                self.n_included += 1;
            } else {
                self.n_included -= 1;
            }
        }
    }

    pub fn pattern(&self) -> ClausePattern {
        let o = self.n_features();
        let cells = (0..o)
            .map(|k| {
                match (
                    self.action(k).is_include(),
                    self.action(k + o).is_include(),
                ) {
                    (true, false) => PatternCell::One,
                    (false, true) => PatternCell::Zero,
                    (false, false) => PatternCell::Any,
                    (true, true) => PatternCell::Contradiction,
                }
            })
            .collect();
        ClausePattern(cells)
    }
}

#[inline]
fn fires_masked(mask: &[u64], lits: &[u64], mode: EvalMode) -> bool {
    let mut any = false;
    for (&m, &l) in mask.iter().zip(lits) {
        if m & !l != 0 {
            return false;
        }
        any |= m != 0;
    }
    any || mode == EvalMode::Learning
}

/// Clauses plus a contiguous copy of their include masks for fast voting.
/// Every update goes through [`ClauseBank::feed`], which keeps the copy in
/// sync.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ClauseBank {
    clauses: Vec<Clause>,
    words: usize,
    masks: Vec<u64>,
}

impl ClauseBank {
    pub(crate) fn new(clauses: Vec<Clause>) -> Self {
        let words = clauses.first().map_or(0, |c| c.include.len());
        debug_assert!(clauses.iter().all(|c| c.include.len() == words));
        let masks = clauses.iter().flat_map(|c| c.include.iter().copied()).collect();
        Self { clauses, words, masks }
    }

    #[inline]
    pub(crate) fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.clauses.len()
    }

    #[inline]
    fn fires(&self, j: usize, lits: &LiteralVector, mode: EvalMode) -> bool {
        fires_masked(&self.masks[j * self.words..(j + 1) * self.words], lits.words(), mode)
    }

    /// Number of firing clauses.
    #[inline]
    pub(crate) fn count_firing(&self, lits: &LiteralVector, mode: EvalMode) -> usize {
        if self.words == 1 {
            let off = !lits.words()[0];
            let learning = mode == EvalMode::Learning;
            return self.masks.iter().filter(|&&m| m & off == 0 && (learning || m != 0)).count();
        }
        (0..self.len()).filter(|&j| self.fires(j, lits, mode)).count()
    }

    /// Firing clauses at even indices minus those at odd indices.
    #[inline]
    pub(crate) fn polar_sum(&self, lits: &LiteralVector, mode: EvalMode) -> i64 {
        if self.words == 1 {
            let off = !lits.words()[0];
            let learning = mode == EvalMode::Learning;
            let fires = |m: u64| (m & off == 0 && (learning || m != 0)) as i64;
            let pairs = self.masks.chunks_exact(2);
            let tail = pairs.remainder().first().map_or(0, |&m| fires(m));
            return pairs.map(|p| fires(p[0]) - fires(p[1])).sum::<i64>() + tail;
        }
        (0..self.len())
            .filter(|&j| self.fires(j, lits, mode))
            .map(|j| if j % 2 == 0 { 1 } else { -1 })
            .sum()
    }

    pub(crate) fn feed<F: crate::num::Scalar, R: Rng + ?Sized>(
        &mut self,
        j: usize,
        lits: &LiteralVector,
        kind: crate::feedback::FeedbackKind,
        table: &crate::feedback::FeedbackTable<F>,
        rng: &mut R,
    ) -> Result<()> {
        crate::feedback::feed_clause(&mut self.clauses[j], lits, kind, table, rng)?;
        let w = self.words;
        self.masks[j * w..(j + 1) * w].copy_from_slice(&self.clauses[j].include);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternCell {
    One,
    Zero,
    /// Both literals excluded: the feature may take any value.
    Any,
    /// Both the feature and its negation included.
    Contradiction,
}

impl PatternCell {
    pub fn symbol(self) -> char {
        match self {
            PatternCell::One => '1',
            PatternCell::Zero => '0',
            PatternCell::Any => '✦',
            PatternCell::Contradiction => '⊥',
        }
    }
}

/// Human-readable clause rendering over `{0, 1, ✦, ⊥}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClausePattern(pub Vec<PatternCell>);

impl ClausePattern {
    pub fn is_contradictory(&self) -> bool {
        self.0.contains(&PatternCell::Contradiction)
    }
}

impl fmt::Display for ClausePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{}", c.symbol()))
    }
}
