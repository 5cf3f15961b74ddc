//! Tsetlin Machines for classification and regression.
//!
//! The crate provides the classic two-class machine, the multiclass machine
//! and the regression machine, built on a bit-packed clause kernel, plus
//! synthetic dataset generators and an experiment harness for train/test
//! MAE studies. All real-valued quantities are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common choices.

pub mod automata;
pub mod clause;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod feedback;
pub mod machines;
pub mod num;
pub mod regression_adapters;

pub use automata::{Action, TsetlinAutomaton};
pub use clause::{Clause, ClausePattern, EvalMode, LiteralVector};
pub use datasets::{Dataset, DatasetPair, Manifest, NoiseSpec, Preset};
pub use error::{Result, TmError};
pub use feedback::{FeedbackCell, FeedbackKind};
pub use machines::snapshot::Snapshot;
pub use machines::{
    fit, ClassicTsetlinMachine, FitOptions, MachineConfig, MachineKind, MulticlassTsetlinMachine,
    RegressionTsetlinMachine, Regressor,
};
pub use num::Scalar;
pub use regression_adapters::{BitwiseCtmRegressor, MtmRegressor};

pub type Rtm = RegressionTsetlinMachine<f64>;
pub type Rtm32 = RegressionTsetlinMachine<f32>;
pub type Ctm = ClassicTsetlinMachine<f64>;
pub type Ctm32 = ClassicTsetlinMachine<f32>;
pub type Mtm = MulticlassTsetlinMachine<f64>;
pub type Mtm32 = MulticlassTsetlinMachine<f32>;
pub type Config = MachineConfig<f64>;
pub type Config32 = MachineConfig<f32>;
pub type Data = Dataset<f64>;
pub type Data32 = Dataset<f32>;
