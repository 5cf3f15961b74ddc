//! Baseline regressors built from the classification machines.
//!
//! [`BitwiseCtmRegressor`] quantises the target to `round(y / step)` and
//! trains one classic machine per binary digit. [`MtmRegressor`] treats
//! every quantised value as its own class. Both expose the same
//! [`Regressor`] contract as the regression machine.

use rand::Rng;

use crate::clause::{Clause, ClausePattern, LiteralVector};
use crate::error::{Result, TmError};
use crate::machines::snapshot::{Payload, Reader, Snapshot, Writer};
use crate::machines::{ClassicTsetlinMachine, MachineConfig, MachineKind, MulticlassTsetlinMachine, Regressor};
use crate::num::Scalar;

/// Number of grid points `0, step, …, y_max`.
pub fn grid_levels<F: Scalar>(y_max: F, step: F) -> Result<usize> {
    if !(step > F::zero()) || !step.is_finite() {
        return Err(TmError::config(format!("output step must be positive, got {step}")));
    }
    if !(y_max >= F::zero()) || !y_max.is_finite() {
        return Err(TmError::config(format!("y_max must be non-negative, got {y_max}")));
    }
    let top = (y_max / step).round().to_usize().ok_or_else(|| TmError::config("grid too large"))?;
    Ok(top + 1)
}

/// Bits needed for `levels` grid points; at least one.
pub fn bits_for_levels(levels: usize) -> usize {
    let top = levels.saturating_sub(1);
    ((usize::BITS - top.leading_zeros()) as usize).max(1)
}

fn quantize<F: Scalar>(y: F, step: F, max_index: usize) -> usize {
    let q = (y / step).round();
    if !(q > F::zero()) {
        0
    } else {
        q.to_usize().unwrap_or(usize::MAX).min(max_index)
    }
}

/// Quantised target as binary digits, least significant first.
pub fn encode_target<F: Scalar>(y: F, step: F, n_bits: usize) -> Vec<bool> {
    let max_index = if n_bits >= usize::BITS as usize { usize::MAX } else { (1usize << n_bits) - 1 };
    let q = quantize(y, step, max_index);
    (0..n_bits).map(|b| q >> b & 1 == 1).collect()
}

pub fn decode_target<F: Scalar>(bits: &[bool], step: F) -> F {
    let q = bits.iter().rev().fold(0usize, |acc, &b| acc << 1 | b as usize);
    F::from_usize_exact(q) * step
}

#[derive(Debug, Clone)]
pub struct BitwiseCtmRegressor<F> {
    step: F,
    y_max: F,
    machines: Vec<ClassicTsetlinMachine<F>>,
}

impl<F: Scalar> BitwiseCtmRegressor<F> {
    /// One classic machine per bit, each built from `config`.
    pub fn new<R: Rng + ?Sized>(
        config: MachineConfig<F>,
        n_features: usize,
        y_max: F,
        step: F,
        rng: &mut R,
    ) -> Result<Self> {
        let n_bits = bits_for_levels(grid_levels(y_max, step)?);
        let machines = (0..n_bits)
            .map(|_| ClassicTsetlinMachine::new(config, n_features, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, y_max, machines })
    }

    pub fn n_bits(&self) -> usize {
        self.machines.len()
    }

    pub fn step(&self) -> F {
        self.step
    }

    pub fn machines(&self) -> &[ClassicTsetlinMachine<F>] {
        &self.machines
    }

    pub fn config(&self) -> &MachineConfig<F> {
        self.machines[0].config()
    }
}

impl<F: Scalar> Regressor<F> for BitwiseCtmRegressor<F> {
    fn n_features(&self) -> usize {
        self.machines[0].n_features()
    }

    fn predict_lits(&self, lits: &LiteralVector) -> F {
        let bits: Vec<bool> = self.machines.iter().map(|m| m.predict_lits(lits)).collect();
        decode_target(&bits, self.step)
    }

    fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: F, rng: &mut R) -> Result<()> {
        let bits = encode_target(target, self.step, self.machines.len());
        for (m, bit) in self.machines.iter_mut().zip(bits) {
            m.train_lits(lits, bit, rng)?;
        }
        Ok(())
    }

    fn clause_patterns(&self) -> Vec<ClausePattern> {
        self.clause_list().into_iter().map(Clause::pattern).collect()
    }

    fn clause_list(&self) -> Vec<&Clause> {
        self.machines.iter().flat_map(|m| m.clauses()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MtmRegressor<F> {
    step: F,
    y_max: F,
    machine: MulticlassTsetlinMachine<F>,
}

impl<F: Scalar> MtmRegressor<F> {
    /// Multiclass machine with one class per grid value and
    /// `clauses_per_class` clauses in every class pool. The threshold comes
    /// from `config`.
    pub fn new<R: Rng + ?Sized>(
        config: MachineConfig<F>,
        clauses_per_class: usize,
        n_features: usize,
        y_max: F,
        step: F,
        rng: &mut R,
    ) -> Result<Self> {
        let n_classes = grid_levels(y_max, step)?;
        if n_classes < 2 {
            return Err(TmError::config("class grid needs at least two values"));
        }
        let config = MachineConfig {
            kind: MachineKind::Mtm,
            n_classes,
            clauses: n_classes * clauses_per_class,
            ..config
        };
        Ok(Self {
            step,
            y_max,
            machine: MulticlassTsetlinMachine::new(config, n_features, rng)?,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.machine.n_classes()
    }

    pub fn class_of(&self, y: F) -> usize {
        quantize(y, self.step, self.n_classes() - 1)
    }

    pub fn value_of(&self, class: usize) -> F {
        F::from_usize_exact(class) * self.step
    }

    pub fn machine(&self) -> &MulticlassTsetlinMachine<F> {
        &self.machine
    }

    pub fn config(&self) -> &MachineConfig<F> {
        self.machine.config()
    }
}

impl<F: Scalar> Regressor<F> for MtmRegressor<F> {
    fn n_features(&self) -> usize {
        self.machine.n_features()
    }

    fn predict_lits(&self, lits: &LiteralVector) -> F {
        self.value_of(self.machine.predict_lits(lits))
    }

    fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: F, rng: &mut R) -> Result<()> {
        let class = self.class_of(target);
        self.machine.train_lits(lits, class, rng).map(|_| ())
    }

    fn clause_patterns(&self) -> Vec<ClausePattern> {
        self.machine.clauses().map(Clause::pattern).collect()
    }

    fn clause_list(&self) -> Vec<&Clause> {
        self.machine.clauses().collect()
    }
}

fn write_adapter<F: Scalar>(payload: Payload, step: F, y_max: F, parts: &[Vec<u8>]) -> Vec<u8> {
    let mut w = Writer::new::<F>(payload);
    w.f64(step.to_f64_lossless());
    w.f64(y_max.to_f64_lossless());
    w.usize32(parts.len());
    for p in parts {
        w.blob(p);
    }
    w.finish()
}

fn read_adapter<F: Scalar>(bytes: &[u8], expected: Payload) -> Result<(F, F, Vec<&[u8]>)> {
    let (mut r, payload) = Reader::open(bytes)?;
    if payload != expected {
        return Err(TmError::Snapshot(format!("payload is {payload:?}, expected {expected:?}")));
    }
    let step = F::from_f64_lossy(r.f64()?);
    let y_max = F::from_f64_lossy(r.f64()?);
    let n = r.u32()? as usize;
    let parts = (0..n).map(|_| r.blob()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok((step, y_max, parts))
}

impl<F: Scalar> Snapshot for BitwiseCtmRegressor<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        let parts: Vec<Vec<u8>> = self.machines.iter().map(Snapshot::to_snapshot).collect();
        write_adapter(Payload::BitwiseAdapter, self.step, self.y_max, &parts)
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let (step, y_max, parts) = read_adapter::<F>(bytes, Payload::BitwiseAdapter)?;
        let expected = bits_for_levels(grid_levels(y_max, step)?);
        if parts.len() != expected {
            return Err(TmError::Snapshot(format!("expected {expected} bit machines, found {}", parts.len())));
        }
        let machines = parts
            .into_iter()
            .map(ClassicTsetlinMachine::from_snapshot)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, y_max, machines })
    }
}

impl<F: Scalar> Snapshot for MtmRegressor<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        write_adapter(Payload::MtmAdapter, self.step, self.y_max, &[self.machine.to_snapshot()])
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let (step, y_max, parts) = read_adapter::<F>(bytes, Payload::MtmAdapter)?;
        let [part] = parts[..] else {
            return Err(TmError::Snapshot("expected exactly one multiclass machine".into()));
        };
        let machine = MulticlassTsetlinMachine::from_snapshot(part)?;
        if machine.n_classes() != grid_levels(y_max, step)? {
            return Err(TmError::Snapshot("class count does not match the output grid".into()));
        }
        Ok(Self { step, y_max, machine })
    }
}
