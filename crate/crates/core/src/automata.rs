//! Two-action Tsetlin Automaton with finite memory depth.
//!
//! States `1..=N` select [`Action::Exclude`], states `N+1..=2N` select
//! [`Action::Include`]. Rewards move the state away from the decision
//! boundary, penalties move it towards (and across) it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};

/// Default number of states per action.
pub const DEFAULT_STATES_PER_ACTION: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Exclude,
    Include,
}

impl Action {
    #[inline]
    pub fn is_include(self) -> bool {
        matches!(self, Action::Include)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TsetlinAutomaton {
    state: u32,
    n_states_per_action: u32,
}

impl TsetlinAutomaton {
    /// Creates an automaton on one of the two boundary states `{N, N+1}`,
    /// chosen uniformly.
    pub fn new<R: Rng + ?Sized>(n_states_per_action: u32, rng: &mut R) -> Result<Self> {
        check_depth(n_states_per_action)?;
        let state = if rng.gen::<bool>() {
            n_states_per_action + 1
        } else {
            n_states_per_action
        };
        Ok(Self {
            state,
            n_states_per_action,
        })
    }

    pub fn with_state(n_states_per_action: u32, state: u32) -> Result<Self> {
        check_depth(n_states_per_action)?;
        let max = n_states_per_action
            .checked_mul(2)
            .ok_or_else(|| TmError::config("memory depth overflows u32"))?;
        if !(1..=max).contains(&state) {
            return Err(TmError::config(format!(
                "automaton state {state} outside [1, {max}]"
            )));
        }
        Ok(Self {
            state,
            n_states_per_action,
        })
    }

    #[inline]
    pub fn state(&self) -> u32 {
        self.state
    }

    #[inline]
    pub fn n_states_per_action(&self) -> u32 {
        self.n_states_per_action
    }

    #[inline]
    pub fn action(&self) -> Action {
        if self.state > self.n_states_per_action {
            Action::Include
        } else {
            Action::Exclude
        }
    }

    /// One step deeper into the current action, saturating at `1` and `2N`.
    #[inline]
    pub fn reward(&mut self) {
        if self.state > self.n_states_per_action {
            if self.state < 2 * self.n_states_per_action {
                self.state += 1;
            }
        } else if self.state > 1 {
            self.state -= 1;
        }
    }

    /// One step towards the boundary; crosses it from `N` to `N+1` and back.
    #[inline]
    pub fn penalize(&mut self) {
        if self.state > self.n_states_per_action {
            self.state -= 1;
        } else {
            self.state += 1;
        }
    }

    #[must_use]
    pub fn rewarded(mut self) -> Self {
        self.reward();
        self
    }

    #[must_use]
    pub fn penalized(mut self) -> Self {
        self.penalize();
        self
    }
}

fn check_depth(n: u32) -> Result<()> {
    if n == 0 {
        return Err(TmError::config("memory depth must be at least 1"));
    }
    if n > u32::MAX / 2 {
        return Err(TmError::config("memory depth overflows u32"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ta(n: u32, s: u32) -> TsetlinAutomaton {
        TsetlinAutomaton::with_state(n, s).unwrap()
    }

    #[test]
    fn depth_one_covers_whole_state_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let a = TsetlinAutomaton::new(1, &mut rng).unwrap();
            assert!((1..=2).contains(&a.state()));
            seen[a.action().is_include() as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn zero_depth_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            TsetlinAutomaton::new(0, &mut rng),
            Err(TmError::Config(_))
        ));
    }

    #[test]
    fn initial_state_is_a_fair_boundary_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut upper = 0usize;
        for _ in 0..10_000 {
            let a = TsetlinAutomaton::new(100, &mut rng).unwrap();
            assert!(a.state() == 100 || a.state() == 101);
            upper += (a.state() == 101) as usize;
        }
        let freq = upper as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let a = TsetlinAutomaton::new(100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = TsetlinAutomaton::new(100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn action_boundary() {
        assert_eq!(ta(100, 100).action(), Action::Exclude);
        assert_eq!(ta(100, 101).action(), Action::Include);
        assert_eq!(ta(100, 1).action(), Action::Exclude);
    }

    #[test]
    fn reward_steps() {
        assert_eq!(ta(100, 150).rewarded().state(), 151);
        assert_eq!(ta(100, 200).rewarded().state(), 200);
        assert_eq!(ta(100, 50).rewarded().state(), 49);
        assert_eq!(ta(100, 1).rewarded().state(), 1);
    }

    #[test]
    fn penalty_steps() {
        let crossed = ta(100, 100).penalized();
        assert_eq!(crossed.state(), 101);
        assert_eq!(crossed.action(), Action::Include);
        assert_eq!(ta(100, 101).penalized().state(), 100);
        assert_eq!(ta(100, 150).penalized().state(), 149);
        assert_eq!(ta(100, 1).penalized().state(), 2);
    }

    #[test]
    fn with_state_rejects_out_of_range() {
        assert!(TsetlinAutomaton::with_state(3, 0).is_err());
        assert!(TsetlinAutomaton::with_state(3, 7).is_err());
        assert!(TsetlinAutomaton::with_state(3, 6).is_ok());
    }

    /// A single automaton in a stationary environment settles on the action
    /// with the higher reward probability.
    #[test]
    fn converges_to_better_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut wins = 0;
        for _ in 0..100 {
            let mut a = TsetlinAutomaton::new(100, &mut rng).unwrap();
            for _ in 0..100_000 {
                let p_reward = if a.action().is_include() { 0.9 } else { 0.1 };
                if rand::Rng::gen::<f64>(&mut rng) < p_reward {
                    a.reward();
                } else {
                    a.penalize();
                }
            }
            wins += a.action().is_include() as usize;
        }
        assert!(wins >= 99, "include chosen in {wins}/100 trials");
    }

    proptest! {
        #[test]
        fn state_stays_in_range(n in 1u32..20, start in 0u32..40, ops in prop::collection::vec(any::<bool>(), 0..200)) {
            let start = 1 + start % (2 * n);
            let mut a = ta(n, start);
            for r in ops {
                if r { a.reward() } else { a.penalize() }
                prop_assert!((1..=2 * n).contains(&a.state()));
            }
        }

        #[test]
        fn reward_then_penalty_is_identity(n in 2u32..50, s in 0u32..100) {
            let s = 1 + s % (2 * n);
            prop_assume!(s != 1 && s != 2 * n);
            prop_assert_eq!(ta(n, s).rewarded().penalized().state(), s);
        }

        #[test]
        fn long_penalty_run_flips_action(n in 1u32..50, s in 0u32..100) {
            let s = 1 + s % (2 * n);
            let mut a = ta(n, s);
            let first = a.action();
            let mut flipped = false;
            for _ in 0..2 * n {
                a.penalize();
                flipped |= a.action() != first;
            }
            prop_assert!(flipped);
        }
    }
}
