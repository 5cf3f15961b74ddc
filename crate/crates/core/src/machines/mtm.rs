//! Multiclass Tsetlin Machine: one polarised pool per class, argmax decision.

use rand::Rng;

use super::ctm::check_kind;
use super::pool::PolarPool;
use super::{check_width, encode_rows, MachineConfig, MachineKind};
use crate::clause::{Clause, EvalMode, LiteralVector};
use crate::error::{Result, TmError};
use crate::feedback::FeedbackTable;
use crate::num::Scalar;

#[derive(Debug, Clone)]
pub struct MulticlassTsetlinMachine<F> {
    config: MachineConfig<F>,
    n_features: usize,
    pools: Vec<PolarPool>,
    table: FeedbackTable<F>,
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax_lowest(scores: &[i64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl<F: Scalar> MulticlassTsetlinMachine<F> {
    pub fn new<R: Rng + ?Sized>(config: MachineConfig<F>, n_features: usize, rng: &mut R) -> Result<Self> {
        check_kind(&config, MachineKind::Mtm)?;
        config.validate()?;
        let pools = (0..config.n_classes)
            .map(|_| PolarPool::new(config.pool_size(), n_features, config.n_states_per_action, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            table: FeedbackTable::new(config.specificity)?,
            config,
            n_features,
            pools,
        })
    }

    /// Rebuilds a machine from clauses laid out class by class.
    pub(crate) fn from_clauses(config: MachineConfig<F>, n_features: usize, clauses: Vec<Clause>) -> Result<Self> {
        check_kind(&config, MachineKind::Mtm)?;
        config.validate()?;
        if clauses.len() != config.clauses {
            return Err(TmError::Shape {
                what: "clauses",
                expected: config.clauses,
                actual: clauses.len(),
            });
        }
        let pools = clauses
            .chunks(config.pool_size())
            .map(|c| PolarPool::from_clauses(c.to_vec()))
            .collect();
        Ok(Self {
            table: FeedbackTable::new(config.specificity)?,
            config,
            n_features,
            pools,
        })
    }

    pub fn config(&self) -> &MachineConfig<F> {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.pools.len()
    }

    pub fn class_clauses(&self, class: usize) -> &[Clause] {
        self.pools[class].clauses()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.pools.iter().flat_map(|p| p.clauses().iter())
    }

    pub fn scores(&self, x: &[u8]) -> Result<Vec<i64>> {
        check_width(self.n_features, x)?;
        Ok(self.scores_lits(&LiteralVector::from_bits(x)?))
    }

    pub fn predict(&self, x: &[u8]) -> Result<usize> {
        self.scores(x).map(|s| argmax_lowest(&s))
    }

    pub fn train_sample<R: Rng + ?Sized>(&mut self, x: &[u8], class: usize, rng: &mut R) -> Result<()> {
        check_width(self.n_features, x)?;
        self.train_lits(&LiteralVector::from_bits(x)?, class, rng)?;
        Ok(())
    }

    /// Trains for `epochs` passes and returns the training error rate after
    /// each pass.
    pub fn fit<R: Rng + ?Sized>(
        &mut self,
        inputs: &[Vec<u8>],
        classes: &[usize],
        epochs: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let lits = encode_rows(self.n_features, inputs, classes.len())?;
        let mut series = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            for (l, &c) in lits.iter().zip(classes) {
                self.train_lits(l, c, rng)?;
            }
            let wrong = lits
                .iter()
                .zip(classes)
                .filter(|(l, &c)| self.predict_lits(l) != c)
                .count();
            series.push(wrong as f64 / classes.len() as f64);
        }
        Ok(series)
    }

    pub(crate) fn scores_lits(&self, lits: &LiteralVector) -> Vec<i64> {
        self.pools
            .iter()
            .map(|p| p.vote_sum(lits, EvalMode::Inference))
            .collect()
    }

    pub(crate) fn predict_lits(&self, lits: &LiteralVector) -> usize {
        argmax_lowest(&self.scores_lits(lits))
    }

    /// Updates the target pool as a positive example and one other class,
    /// drawn uniformly, as a negative example. Returns the negative class.
    pub(crate) fn train_lits<R: Rng + ?Sized>(
        &mut self,
        lits: &LiteralVector,
        class: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let n = self.pools.len();
        if class >= n {
            return Err(TmError::config(format!("class {class} out of range for {n} classes")));
        }
        let mut negative = rng.gen_range(0..n - 1);
        if negative >= class {
            negative += 1;
        }
        let t = self.config.threshold;
        self.pools[class].train(lits, true, t, &self.table, rng)?;
        self.pools[negative].train(lits, false, t, &self.table, rng)?;
        Ok(negative)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_lowest(&[0, 5, 3]), 1);
        assert_eq!(argmax_lowest(&[2, 2]), 0);
        assert_eq!(argmax_lowest(&[-1, -1, -1]), 0);
    }

    #[test]
    fn fresh_machine_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = MulticlassTsetlinMachine::<f64>::new(MachineConfig::mtm(3, 12, 6), 2, &mut rng).unwrap();
        assert_eq!(m.scores(&[1, 0]).unwrap(), vec![0, 0, 0]);
        assert_eq!(m.predict(&[1, 0]).unwrap(), 0);
    }

    #[test]
    fn scores_follow_pool_votes() {
        let x1 = Clause::from_mask(&[true, false, false, false], 100).unwrap();
        let silent = Clause::from_mask(&[true, false, true, false], 100).unwrap();
        // class 0: positive x1, negative silent, positive x1, negative silent
        // class 1: all silent
        let clauses = vec![
            x1.clone(), silent.clone(), x1, silent.clone(),
            silent.clone(), silent.clone(), silent.clone(), silent,
        ];
        let m = MulticlassTsetlinMachine::<f64>::from_clauses(MachineConfig::mtm(2, 8, 4), 2, clauses).unwrap();
        assert_eq!(m.scores(&[1, 0]).unwrap(), vec![2, 0]);
        assert_eq!(m.predict(&[1, 0]).unwrap(), 0);
    }

    fn oracle_scores(m: &MulticlassTsetlinMachine<f64>, x: &[u8]) -> Vec<i64> {
        let lits = LiteralVector::from_bits(x).unwrap();
        (0..m.n_classes())
            .map(|c| {
                m.class_clauses(c)
                    .iter()
                    .enumerate()
                    .map(|(j, cl)| {
                        let on = cl.evaluate(&lits, EvalMode::Inference).unwrap() as i64;
                        if j % 2 == 0 { on } else { -on }
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn negative_class_is_never_target_and_others_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = MulticlassTsetlinMachine::<f64>::new(MachineConfig::mtm(4, 16, 4), 2, &mut rng).unwrap();
        let lits = LiteralVector::from_bits(&[1, 0]).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..10_000 {
            let target = i % 4;
            let before = m.clone();
            let neg = m.train_lits(&lits, target, &mut rng).unwrap();
            assert_ne!(neg, target);
            counts[neg] += 1;
            for c in (0..4).filter(|&c| c != target && c != neg) {
                assert_eq!(m.class_clauses(c), before.class_clauses(c));
            }
        }
        assert!(counts.iter().all(|&c| c > 2000));
    }

    #[test]
    fn two_classes_always_pick_the_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = MulticlassTsetlinMachine::<f64>::new(MachineConfig::mtm(2, 4, 2), 1, &mut rng).unwrap();
        let lits = LiteralVector::from_bits(&[1]).unwrap();
        for _ in 0..100 {
            assert_eq!(m.train_lits(&lits, 0, &mut rng).unwrap(), 1);
            assert_eq!(m.train_lits(&lits, 1, &mut rng).unwrap(), 0);
        }
        assert!(m.train_lits(&lits, 2, &mut rng).is_err());
    }

    #[test]
    fn learns_three_classes_and_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = MulticlassTsetlinMachine::<f64>::new(MachineConfig::mtm(3, 30, 5), 2, &mut rng).unwrap();
        let inputs: Vec<Vec<u8>> = (0..300).map(|i| vec![(i % 2) as u8, (i / 2 % 2) as u8]).collect();
        // class = number of set bits
        let classes: Vec<usize> = inputs.iter().map(|x| (x[0] + x[1]) as usize).collect();
        let series = m.fit(&inputs, &classes, 60, &mut rng).unwrap();
        assert_eq!(*series.last().unwrap(), 0.0, "{series:?}");
        for x in &inputs[..4] {
            assert_eq!(m.scores(x).unwrap(), oracle_scores(&m, x));
        }
    }
}
