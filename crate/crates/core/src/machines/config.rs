use serde::{Deserialize, Serialize};

use crate::automata::DEFAULT_STATES_PER_ACTION;
use crate::error::{Result, TmError};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineKind {
    Ctm,
    Mtm,
    Rtm,
}

impl MachineKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            MachineKind::Ctm => 0,
            MachineKind::Mtm => 1,
            MachineKind::Rtm => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(MachineKind::Ctm),
            1 => Some(MachineKind::Mtm),
            2 => Some(MachineKind::Rtm),
            _ => None,
        }
    }
}

/// Hyperparameters shared by the three machine variants.
///
/// `gain` and `y_max` only matter for the regression machine, `n_classes`
/// only for the multiclass machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig<F> {
    pub kind: MachineKind,
    /// Total clause count `m`.
    pub clauses: usize,
    /// Threshold `T`.
    pub threshold: u32,
    /// Specificity `s`.
    pub specificity: F,
    /// Activation gain `K`.
    pub gain: F,
    pub n_classes: usize,
    pub y_max: F,
    pub n_states_per_action: u32,
    pub epochs: usize,
    pub seed: u64,
    /// Shuffle the training order every epoch.
    #[serde(default)]
    pub shuffle: bool,
}

impl<F: Scalar> MachineConfig<F> {
    fn base(kind: MachineKind, clauses: usize, threshold: u32) -> Self {
        Self {
            kind,
            clauses,
            threshold,
            specificity: F::from_f64_lossy(2.0),
            gain: F::one(),
            n_classes: 2,
            y_max: F::one(),
            n_states_per_action: DEFAULT_STATES_PER_ACTION,
            epochs: 200,
            seed: 0,
            shuffle: false,
        }
    }

    pub fn ctm(clauses: usize, threshold: u32) -> Self {
        Self::base(MachineKind::Ctm, clauses, threshold)
    }

    pub fn mtm(n_classes: usize, clauses: usize, threshold: u32) -> Self {
        Self {
            n_classes,
            ..Self::base(MachineKind::Mtm, clauses, threshold)
        }
    }

    /// Regression machine with `m = T` clauses.
    pub fn rtm(threshold: u32, y_max: F) -> Self {
        Self {
            y_max,
            ..Self::base(MachineKind::Rtm, threshold as usize, threshold)
        }
    }

    pub fn with_specificity(mut self, s: F) -> Self {
        self.specificity = s;
        self
    }

    pub fn with_gain(mut self, k: F) -> Self {
        self.gain = k;
        self
    }

    pub fn with_clauses(mut self, m: usize) -> Self {
        self.clauses = m;
        self
    }

    pub fn with_states(mut self, n: u32) -> Self {
        self.n_states_per_action = n;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shuffle(mut self, shuffle: bool) -> Self {
        self.shuffle = shuffle;
        self
    }

    /// Clauses per class pool for the multiclass machine, the whole clause
    /// set otherwise.
    pub fn pool_size(&self) -> usize {
        match self.kind {
            MachineKind::Mtm => self.clauses / self.n_classes.max(1),
            _ => self.clauses,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold == 0 {
            return Err(TmError::config("threshold T must be positive"));
        }
        if self.clauses == 0 {
            return Err(TmError::config("clause count m must be positive"));
        }
        if !(self.specificity >= F::one()) || !self.specificity.is_finite() {
            return Err(TmError::config(format!(
                "specificity s must be finite and >= 1, got {}",
                self.specificity
            )));
        }
        if self.n_states_per_action == 0 || self.n_states_per_action > u32::MAX / 2 {
            return Err(TmError::config("memory depth must be in [1, 2^31)"));
        }
        match self.kind {
            MachineKind::Ctm => {
                if self.clauses % 2 != 0 {
                    return Err(TmError::config(format!(
                        "CTM clause count must be even, got {}",
                        self.clauses
                    )));
                }
            }
            MachineKind::Mtm => {
                if self.n_classes < 2 {
                    return Err(TmError::config(format!(
                        "MTM needs at least 2 classes, got {}",
                        self.n_classes
                    )));
                }
                if self.clauses % self.n_classes != 0 || (self.clauses / self.n_classes) % 2 != 0 {
                    return Err(TmError::config(format!(
                        "MTM clause count {} must split into even pools over {} classes",
                        self.clauses, self.n_classes
                    )));
                }
            }
            MachineKind::Rtm => {
                if !(self.gain > F::zero()) || !self.gain.is_finite() {
                    return Err(TmError::config(format!("gain K must be positive, got {}", self.gain)));
                }
                if !(self.y_max > F::zero()) || !self.y_max.is_finite() {
                    return Err(TmError::config(format!("y_max must be positive, got {}", self.y_max)));
                }
            }
        }
        Ok(())
    }
}
