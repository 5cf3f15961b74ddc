//! Experiment harness: single training runs, T and s sweeps, the three-way
//! method comparison, result tables, and the reproduction checks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clause::{Clause, ClausePattern, LiteralVector};
use crate::datasets::{DatasetPair, Manifest, Preset, TARGET_STEP};
use crate::error::{Result, TmError};
use crate::machines::snapshot::{peek_payload, Payload, Snapshot};
use crate::machines::{fit, EncodedInputs, FitOptions, MachineConfig, MachineKind, RegressionTsetlinMachine, Regressor};
use crate::num::Scalar;
use crate::regression_adapters::{BitwiseCtmRegressor, MtmRegressor};

pub fn compute_mae<F: Scalar>(predictions: &[F], targets: &[F]) -> Result<F> {
    if predictions.is_empty() {
        return Err(TmError::EmptyDataset);
    }
    if predictions.len() != targets.len() {
        return Err(TmError::Shape { what: "targets", expected: predictions.len(), actual: targets.len() });
    }
    let sum = predictions.iter().zip(targets).fold(F::zero(), |acc, (&p, &t)| acc + (p - t).abs());
    Ok(sum / F::from_usize_exact(predictions.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rtm,
    CtmBitwise,
    MtmClasses,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rtm, Method::CtmBitwise, Method::MtmClasses];

    pub fn label(self) -> &'static str {
        match self {
            Method::Rtm => "RTM",
            Method::CtmBitwise => "CTM-bitwise",
            Method::MtmClasses => "MTM-classes",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = TmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rtm" => Ok(Method::Rtm),
            "ctm" | "ctm-bitwise" => Ok(Method::CtmBitwise),
            "mtm" | "mtm-classes" => Ok(Method::MtmClasses),
            _ => Err(TmError::config(format!("unknown machine {s:?}, expected rtm, ctm or mtm"))),
        }
    }
}

/// One training run, minus the data.
///
/// `clauses` is the total count for RTM, the count per output bit for
/// CTM-bitwise and the count per class for MTM-classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub method: Method,
    pub threshold: u32,
    pub clauses: usize,
    pub specificity: f64,
    pub gain: f64,
    pub n_states_per_action: u32,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Target granularity of the CTM bit code and the MTM class grid.
    pub step: f64,
}

impl CellSpec {
    /// `m = T`, s = 2, K = 1, N = 100, 200 epochs.
    pub fn new(method: Method, threshold: u32) -> Self {
        Self {
            method,
            threshold,
            clauses: threshold as usize,
            specificity: 2.0,
            gain: 1.0,
            n_states_per_action: crate::automata::DEFAULT_STATES_PER_ACTION,
            epochs: 200,
            seed: 0,
            shuffle: false,
            step: TARGET_STEP,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_specificity(mut self, s: f64) -> Self {
        self.specificity = s;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_clauses(mut self, clauses: usize) -> Self {
        self.clauses = clauses;
        self
    }

    pub fn interpretation(&self) -> String {
        match self.method {
            Method::Rtm => format!("RTM with m={} clauses and threshold T={}", self.clauses, self.threshold),
            Method::CtmBitwise => format!(
                "one CTM per output bit of the step-{} target code, each with m={} clauses and T={}",
                self.step, self.clauses, self.threshold
            ),
            Method::MtmClasses => format!(
                "MTM with one class per step-{} target value, {} clauses per class and T={} per class",
                self.step, self.clauses, self.threshold
            ),
        }
    }

    fn base_config<F: Scalar>(&self, y_max: F) -> MachineConfig<F> {
        let kind = match self.method {
            Method::Rtm => MachineKind::Rtm,
            Method::CtmBitwise => MachineKind::Ctm,
            Method::MtmClasses => MachineKind::Mtm,
        };
        let mut c = MachineConfig::rtm(self.threshold, y_max)
            .with_clauses(self.clauses)
            .with_specificity(F::from_f64_lossy(self.specificity))
            .with_gain(F::from_f64_lossy(self.gain))
            .with_states(self.n_states_per_action)
            .with_epochs(self.epochs)
            .with_seed(self.seed)
            .with_shuffle(self.shuffle);
        c.kind = kind;
        c
    }
}

/// Any of the three regressors, so that runs, snapshots and inspection can
/// be handled uniformly.
#[derive(Debug, Clone)]
pub enum AnyModel<F> {
    Rtm(RegressionTsetlinMachine<F>),
    CtmBitwise(BitwiseCtmRegressor<F>),
    MtmClasses(MtmRegressor<F>),
}

macro_rules! each {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Rtm($m) => $body,
            AnyModel::CtmBitwise($m) => $body,
            AnyModel::MtmClasses($m) => $body,
        }
    };
}

impl<F: Scalar> AnyModel<F> {
    pub fn build<R: Rng + ?Sized>(spec: &CellSpec, n_features: usize, y_max: F, rng: &mut R) -> Result<Self> {
        let config = spec.base_config(y_max);
        let step = F::from_f64_lossy(spec.step);
        Ok(match spec.method {
            Method::Rtm => AnyModel::Rtm(RegressionTsetlinMachine::new(config, n_features, rng)?),
            Method::CtmBitwise => AnyModel::CtmBitwise(BitwiseCtmRegressor::new(config, n_features, y_max, step, rng)?),
            Method::MtmClasses => {
                AnyModel::MtmClasses(MtmRegressor::new(config, spec.clauses, n_features, y_max, step, rng)?)
            }
        })
    }

    pub fn method(&self) -> Method {
        match self {
            AnyModel::Rtm(_) => Method::Rtm,
            AnyModel::CtmBitwise(_) => Method::CtmBitwise,
            AnyModel::MtmClasses(_) => Method::MtmClasses,
        }
    }

    pub fn config(&self) -> &MachineConfig<F> {
        each!(self, m => m.config())
    }

    /// Number of clauses carrying each pattern string.
    pub fn census(&self) -> BTreeMap<String, usize> {
        census(&self.clause_patterns())
    }
}

impl<F: Scalar> Regressor<F> for AnyModel<F> {
    fn n_features(&self) -> usize {
        each!(self, m => m.n_features())
    }

    fn predict_lits(&self, lits: &LiteralVector) -> F {
        each!(self, m => m.predict_lits(lits))
    }

    fn train_lits<R: Rng + ?Sized>(&mut self, lits: &LiteralVector, target: F, rng: &mut R) -> Result<()> {
        each!(self, m => m.train_lits(lits, target, rng))
    }

    fn clause_patterns(&self) -> Vec<ClausePattern> {
        each!(self, m => m.clause_patterns())
    }

    fn clause_list(&self) -> Vec<&Clause> {
        each!(self, m => m.clause_list())
    }
}

impl<F: Scalar> Snapshot for AnyModel<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        each!(self, m => m.to_snapshot())
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        match peek_payload(bytes)? {
            Payload::Rtm => Ok(AnyModel::Rtm(Snapshot::from_snapshot(bytes)?)),
            Payload::BitwiseAdapter => Ok(AnyModel::CtmBitwise(Snapshot::from_snapshot(bytes)?)),
            Payload::MtmAdapter => Ok(AnyModel::MtmClasses(Snapshot::from_snapshot(bytes)?)),
            p => Err(TmError::Snapshot(format!("{p:?} snapshot is a classifier, not a regressor"))),
        }
    }
}

pub fn census(patterns: &[ClausePattern]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for p in patterns {
        *out.entry(p.to_string()).or_insert(0) += 1;
    }
    out
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub manifest: Manifest,
    pub spec: CellSpec,
    pub config: MachineConfig<f64>,
    pub interpretation: String,
    /// Inference-mode training MAE after every epoch.
    pub train_mae: Vec<f64>,
    pub test_mae: Vec<f64>,
    pub final_train_mae: f64,
    pub final_test_mae: f64,
    pub census: BTreeMap<String, usize>,
    /// Whether the training split contains every possible input.
    pub train_covers_input_space: bool,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn config_to_f64<F: Scalar>(c: &MachineConfig<F>) -> MachineConfig<f64> {
    MachineConfig {
        kind: c.kind,
        clauses: c.clauses,
        threshold: c.threshold,
        specificity: c.specificity.to_f64_lossless(),
        gain: c.gain.to_f64_lossless(),
        n_classes: c.n_classes,
        y_max: c.y_max.to_f64_lossless(),
        n_states_per_action: c.n_states_per_action,
        epochs: c.epochs,
        seed: c.seed,
        shuffle: c.shuffle,
    }
}

fn dataset_name(m: &Manifest) -> String {
    m.preset.clone().unwrap_or_else(|| "custom".to_string())
}

/// Trains a fresh model per `spec` on `data` and scores it after every epoch.
/// All machine randomness flows from `spec.seed`.
pub fn run_cell<F: Scalar>(spec: &CellSpec, data: &DatasetPair<F>) -> Result<(EvalReport, AnyModel<F>)> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let y_max = data.train.y_max();
    let mut model = AnyModel::build(spec, data.train.n_features(), y_max, &mut rng)?;
    let test_enc = EncodedInputs::new(&data.test)?;
    let mut test_mae = Vec::with_capacity(spec.epochs);
    let opts = FitOptions { epochs: spec.epochs, shuffle: spec.shuffle };
    let train_mae = fit(&mut model, &data.train, opts, &mut rng, |_, m| {
        let mae = compute_mae(&test_enc.predict_all(m), data.test.targets())?;
        test_mae.push(mae.to_f64_lossless());
        Ok(())
    })?;
    let train_mae: Vec<f64> = train_mae.into_iter().map(|v| v.to_f64_lossless()).collect();
    let (final_train_mae, final_test_mae) = if spec.epochs == 0 {
        let train_enc = EncodedInputs::new(&data.train)?;
        (
            compute_mae(&train_enc.predict_all(&model), data.train.targets())?.to_f64_lossless(),
            compute_mae(&test_enc.predict_all(&model), data.test.targets())?.to_f64_lossless(),
        )
    } else {
        (train_mae[train_mae.len() - 1], test_mae[test_mae.len() - 1])
    };
    let report = EvalReport {
        dataset: dataset_name(&data.manifest),
        manifest: data.manifest.clone(),
        spec: *spec,
        config: config_to_f64(model.config()),
        interpretation: spec.interpretation(),
        train_mae,
        test_mae,
        final_train_mae,
        final_test_mae,
        census: model.census(),
        train_covers_input_space: data.train.covers_input_space(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, model))
}

/// A training run together with the data it runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRequest {
    pub manifest: Manifest,
    pub spec: CellSpec,
}

impl CellRequest {
    /// Preset data and machine both seeded with `seed`.
    pub fn preset(preset: Preset, spec: CellSpec, seed: u64) -> Self {
        Self { manifest: preset.manifest(seed), spec: spec.with_seed(seed) }
    }

    fn key(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

/// Runs every request on a pool of `jobs` threads. Results come back in
/// request order whatever the scheduling.
pub fn run_cells(requests: &[CellRequest], jobs: usize) -> Result<Vec<EvalReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| TmError::config(format!("thread pool: {e}")))?;
    pool.install(|| {
        requests
            .par_iter()
            .map(|r| {
                let data = DatasetPair::<f64>::from_manifest(r.manifest.clone())?;
                run_cell(&r.spec, &data).map(|(report, _)| report)
            })
            .collect()
    })
}

/// Settings shared by the sweep drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub jobs: usize,
    pub full: bool,
    /// Unit-step classes and bit codes instead of step-100 ones.
    pub unit_classes: bool,
    pub gain: f64,
    pub n_states_per_action: u32,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            epochs: 200,
            jobs: 1,
            full: false,
            unit_classes: false,
            gain: 1.0,
            n_states_per_action: crate::automata::DEFAULT_STATES_PER_ACTION,
        }
    }
}

impl SweepOptions {
    fn spec(&self, method: Method, threshold: u32) -> CellSpec {
        let mut s = CellSpec::new(method, threshold).with_epochs(self.epochs);
        s.gain = self.gain;
        s.n_states_per_action = self.n_states_per_action;
        if self.unit_classes {
            s.step = 1.0;
        }
        s
    }

    fn requests(&self, preset: Preset, specs: &[CellSpec]) -> Vec<CellRequest> {
        specs
            .iter()
            .flat_map(|s| self.seeds.iter().map(move |&seed| CellRequest::preset(preset, *s, seed)))
            .collect()
    }
}

/// RTM threshold grid of the T sweep; `full` adds the largest values.
pub fn t_grid(preset: Preset, full: bool) -> Vec<u32> {
    let (desk, extra): (&[u32], &[u32]) = match preset {
        Preset::I | Preset::II => (&[3, 10, 30, 100, 500, 1000], &[4000]),
        Preset::III | Preset::IV => (&[7, 20, 70, 300, 700], &[2000, 5000]),
        Preset::V | Preset::VI => (&[7, 15, 70, 150, 700], &[1500, 4000]),
    };
    let mut g = desk.to_vec();
    if full {
        g.extend_from_slice(extra);
    }
    g
}

pub const S_GRID: [f64; 7] = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 10.0];

/// Fixed threshold used by the s sweep.
pub fn s_sweep_threshold(preset: Preset) -> u32 {
    match preset {
        Preset::I | Preset::II => 100,
        Preset::III | Preset::IV => 300,
        Preset::V | Preset::VI => 150,
    }
}

/// Thresholds of the noisy-regime check: the smallest grid value that is
/// not a multiple of the minimal clause count `2^o - 1`, the mid value and
/// the large value.
pub fn noisy_t_set(preset: Preset) -> [u32; 3] {
    let minimal = (1u32 << preset.n_bits()) - 1;
    let small = t_grid(preset, false).into_iter().find(|t| t % minimal != 0).expect("grid has a mismatched value");
    let (mid, large) = match preset {
        Preset::I | Preset::II => (100, 500),
        Preset::III | Preset::IV => (300, 700),
        Preset::V | Preset::VI => (150, 700),
    };
    [small, mid, large]
}

/// CTM-bitwise grid, each value used as both m and T per bit.
pub fn ctm_grid(preset: Preset, full: bool) -> Vec<u32> {
    let small = match preset {
        Preset::I | Preset::II => 6,
        Preset::III | Preset::IV => 14,
        Preset::V | Preset::VI => 30,
    };
    vec![small, if full { 8000 } else { 100 }]
}

/// MTM-classes grid as clauses per class (T equals the per-class count).
/// The full grid spreads the total clause budgets over `n_classes` and rounds
/// down to an even pool.
pub fn mtm_grid(preset: Preset, full: bool, n_classes: usize) -> Vec<usize> {
    if !full {
        return vec![4, 10, 40];
    }
    let first = match preset {
        Preset::I | Preset::II => 1000,
        Preset::III | Preset::IV => 2000,
        Preset::V | Preset::VI => 4000,
    };
    [first, 10000, 16000]
        .iter()
        .map(|total| ((total / n_classes.max(1)) & !1).max(2))
        .collect()
}

fn class_count(preset: Preset, step: f64) -> usize {
    (preset.y_max() / step).round() as usize + 1
}

/// Experiment I: RTM over a list of thresholds with m = T.
pub fn run_t_sweep(preset: Preset, thresholds: &[u32], s: f64, opts: &SweepOptions) -> Result<Vec<EvalReport>> {
    let specs: Vec<CellSpec> = thresholds.iter().map(|&t| opts.spec(Method::Rtm, t).with_specificity(s)).collect();
    run_cells(&opts.requests(preset, &specs), opts.jobs)
}

/// Experiment II: RTM over a list of specificities at a fixed threshold.
pub fn run_s_sweep(preset: Preset, specificities: &[f64], threshold: u32, opts: &SweepOptions) -> Result<Vec<EvalReport>> {
    let specs: Vec<CellSpec> =
        specificities.iter().map(|&s| opts.spec(Method::Rtm, threshold).with_specificity(s)).collect();
    run_cells(&opts.requests(preset, &specs), opts.jobs)
}

/// Cells of the three-way comparison for one dataset.
pub fn comparison_specs(preset: Preset, opts: &SweepOptions) -> Vec<CellSpec> {
    let mut specs: Vec<CellSpec> = t_grid(preset, opts.full).into_iter().map(|t| opts.spec(Method::Rtm, t)).collect();
    specs.extend(ctm_grid(preset, opts.full).into_iter().map(|t| opts.spec(Method::CtmBitwise, t)));
    let probe = opts.spec(Method::MtmClasses, 2);
    for per_class in mtm_grid(preset, opts.full, class_count(preset, probe.step)) {
        specs.push(opts.spec(Method::MtmClasses, per_class as u32));
    }
    specs
}

/// Experiment III: RTM, CTM-bitwise and MTM-classes on each dataset.
pub fn run_comparison(presets: &[Preset], opts: &SweepOptions) -> Result<Vec<EvalReport>> {
    let requests: Vec<CellRequest> =
        presets.iter().flat_map(|&p| opts.requests(p, &comparison_specs(p, opts))).collect();
    run_cells(&requests, opts.jobs)
}

/// Median of a non-empty slice; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Seed-aggregated view of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub threshold: u32,
    pub clauses: usize,
    pub specificity: f64,
    pub gain: f64,
    pub seeds: usize,
    pub median_train_mae: f64,
    pub median_test_mae: f64,
    pub mean_train_mae: f64,
    pub mean_test_mae: f64,
}

/// Groups reports by everything but the seed. Rows come out sorted, so the
/// result does not depend on report order.
pub fn summarize(reports: &[EvalReport]) -> Vec<SummaryRow> {
    type Key = (String, Method, u32, usize, u64, u64);
    let mut groups: BTreeMap<Key, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        let s = &r.spec;
        let key = (r.dataset.clone(), s.method, s.threshold, s.clauses, s.specificity.to_bits(), s.gain.to_bits());
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, method, threshold, clauses, s, k), rs)| {
            let train: Vec<f64> = rs.iter().map(|r| r.final_train_mae).collect();
            let test: Vec<f64> = rs.iter().map(|r| r.final_test_mae).collect();
            SummaryRow {
                dataset,
                method,
                threshold,
                clauses,
                specificity: f64::from_bits(s),
                gain: f64::from_bits(k),
                seeds: rs.len(),
                median_train_mae: median(&train),
                median_test_mae: median(&test),
                mean_train_mae: train.iter().sum::<f64>() / train.len() as f64,
                mean_test_mae: test.iter().sum::<f64>() / test.len() as f64,
            }
        })
        .collect()
}

/// Long-form curve table: one row per (cell, seed, epoch).
pub fn write_long_table(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["dataset", "method", "T", "m", "s", "K", "seed", "epoch", "train_mae", "test_mae"])
        .map_err(|e| csv_err(path, e))?;
    for r in reports {
        let s = &r.spec;
        for (epoch, (tr, te)) in r.train_mae.iter().zip(&r.test_mae).enumerate() {
            w.write_record([
                r.dataset.clone(),
                s.method.label().to_string(),
                s.threshold.to_string(),
                s.clauses.to_string(),
                s.specificity.to_string(),
                s.gain.to_string(),
                s.seed.to_string(),
                (epoch + 1).to_string(),
                tr.to_string(),
                te.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| TmError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> TmError {
    TmError::io(path, std::io::Error::other(e))
}

/// Human-readable summary: per dataset, one column per grid cell with the
/// median training and testing MAE over seeds.
pub fn markdown_summary(rows: &[SummaryRow]) -> String {
    let mut by_dataset: BTreeMap<&str, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_dataset.entry(&r.dataset).or_default().push(r);
    }
    let mut out = String::new();
    for (dataset, rs) in by_dataset {
        out.push_str(&format!("### {dataset}\n\n"));
        out.push_str("| method | T | m | s | K | seeds | train MAE | test MAE |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in rs {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {:.2} | {:.2} |\n",
                r.method, r.threshold, r.clauses, r.specificity, r.gain, r.seeds, r.median_train_mae, r.median_test_mae
            ));
        }
        out.push('\n');
    }
    out
}

/// Writes `results.csv`, `summary.csv`, `summary.md` and one JSON report
/// per run under `dir`.
pub fn write_results(reports: &[EvalReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| TmError::io(dir, e))?;
    write_long_table(reports, &dir.join("results.csv"))?;
    let rows = summarize(reports);
    let spath = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&spath).map_err(|e| csv_err(&spath, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| csv_err(&spath, e))?;
    }
    w.flush().map_err(|e| TmError::io(&spath, e))?;
    let mpath = dir.join("summary.md");
    fs::write(&mpath, markdown_summary(&rows)).map_err(|e| TmError::io(&mpath, e))?;
    let rdir = dir.join("reports");
    fs::create_dir_all(&rdir).map_err(|e| TmError::io(&rdir, e))?;
    for r in reports {
        let s = &r.spec;
        let name = format!(
            "{}_{}_T{}_m{}_s{}_K{}_seed{}.json",
            r.dataset,
            s.method.label(),
            s.threshold,
            s.clauses,
            s.specificity,
            s.gain,
            s.seed
        );
        let p = rdir.join(name);
        fs::write(&p, r.to_json()).map_err(|e| TmError::io(&p, e))?;
    }
    Ok(())
}

/// The property checks behind `reproduce` and the acceptance suite.
pub mod reproduce {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct Check {
        pub id: u32,
        pub name: String,
        pub passed: bool,
        pub detail: String,
    }

    impl Check {
        fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
            Self { id, name: name.to_string(), passed, detail }
        }

        pub fn line(&self) -> String {
            format!("{} criterion {}: {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
        }
    }

    const NOISY: [Preset; 3] = [Preset::II, Preset::IV, Preset::VI];

    /// Reports indexed by request, filled by one parallel batch.
    struct Results {
        opts: SweepOptions,
        by_key: HashMap<String, EvalReport>,
    }

    impl Results {
        fn get(&self, preset: Preset, spec: CellSpec, seed: u64) -> &EvalReport {
            &self.by_key[&CellRequest::preset(preset, spec, seed).key()]
        }

        fn across_seeds(&self, preset: Preset, spec: CellSpec) -> Vec<&EvalReport> {
            self.opts.seeds.iter().map(|&s| self.get(preset, spec, s)).collect()
        }

        fn median_test(&self, preset: Preset, spec: CellSpec) -> f64 {
            median(&self.across_seeds(preset, spec).iter().map(|r| r.final_test_mae).collect::<Vec<_>>())
        }

        fn median_train(&self, preset: Preset, spec: CellSpec) -> f64 {
            median(&self.across_seeds(preset, spec).iter().map(|r| r.final_train_mae).collect::<Vec<_>>())
        }
    }

    fn rtm(opts: &SweepOptions, t: u32) -> CellSpec {
        opts.spec(Method::Rtm, t)
    }

    fn exact_cells(opts: &SweepOptions) -> Vec<(Preset, CellSpec)> {
        [(Preset::I, 3), (Preset::III, 7), (Preset::V, 15)].iter().map(|&(p, t)| (p, rtm(opts, t))).collect()
    }

    fn requests(opts: &SweepOptions) -> Vec<CellRequest> {
        let mut cells: Vec<(Preset, CellSpec)> = exact_cells(opts);
        for t in [3, 10, 30] {
            cells.push((Preset::I, rtm(opts, t)));
        }
        for p in NOISY {
            for s in S_GRID {
                cells.push((p, rtm(opts, s_sweep_threshold(p)).with_specificity(s)));
            }
            for t in noisy_t_set(p) {
                cells.push((p, rtm(opts, t)));
            }
            for spec in comparison_specs(p, opts) {
                cells.push((p, spec));
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (p, spec) in cells {
            for &seed in &opts.seeds {
                let r = CellRequest::preset(p, spec, seed);
                if seen.insert(r.key()) {
                    out.push(r);
                }
            }
        }
        out
    }

    fn need(n: usize) -> usize {
        (4 * n).div_ceil(5)
    }

    /// Runs the grid behind criteria 1 to 6 and evaluates them. With
    /// `opts.full` the comparison uses the full grids.
    pub fn run(opts: &SweepOptions) -> Result<(Vec<Check>, Vec<EvalReport>)> {
        if opts.seeds.is_empty() {
            return Err(TmError::config("at least one seed is required"));
        }
        let reqs = requests(opts);
        let reports = run_cells(&reqs, opts.jobs)?;
        let by_key = reqs.iter().map(|r| r.key()).zip(reports.iter().cloned()).collect();
        let res = Results { opts: opts.clone(), by_key };
        let checks = vec![
            exact_reproduction(&res),
            clause_structure(&res),
            t_multiplicity(&res),
            s_sweep_shape(&res),
            noisy_regime(&res),
            method_ranking(&res),
        ];
        Ok((checks, reports))
    }

    fn exact_reproduction(res: &Results) -> Check {
        let need = need(res.opts.seeds.len());
        let mut ok = true;
        let mut parts = Vec::new();
        for (p, spec) in exact_cells(&res.opts) {
            let rs = res.across_seeds(p, spec);
            let hits = rs.iter().filter(|r| r.final_train_mae == 0.0 && r.final_test_mae == 0.0).count();
            let covered = rs.iter().all(|r| r.train_covers_input_space);
            ok &= hits >= need && covered;
            parts.push(format!("{p} T={}: {hits}/{} seeds at 0/0{}", spec.threshold, rs.len(), if covered { "" } else { " (input space not covered)" }));
        }
        Check::new(1, "noise-free exact reproduction", ok, parts.join("; "))
    }

    fn clause_structure(res: &Results) -> Check {
        let expected: [(Preset, u32, &[(&str, usize)]); 2] = [
            (Preset::I, 3, &[("1✦", 2), ("✦1", 1)]),
            (Preset::III, 7, &[("1✦✦", 4), ("✦1✦", 2), ("✦✦1", 1)]),
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for (p, t, want) in expected {
            let want: BTreeMap<String, usize> = want.iter().map(|&(k, v)| (k.to_string(), v)).collect();
            let converged: Vec<&EvalReport> =
                res.across_seeds(p, rtm(&res.opts, t)).into_iter().filter(|r| r.final_train_mae == 0.0).collect();
            let matching = converged.iter().filter(|r| r.census == want).count();
            ok &= !converged.is_empty() && matching == converged.len();
            parts.push(format!("{p} T={t}: {matching}/{} converged machines match {want:?}", converged.len()));
        }
        Check::new(2, "clause-structure census", ok, parts.join("; "))
    }

    fn t_multiplicity(res: &Results) -> Check {
        let m: Vec<f64> = [3, 30, 10].iter().map(|&t| res.median_train(Preset::I, rtm(&res.opts, t))).collect();
        let ok = m[0] == 0.0 && m[1] == 0.0 && m[2] > 1.0;
        Check::new(
            3,
            "T-multiplicity",
            ok,
            format!("dataset1 median train MAE: T=3 {:.3}, T=30 {:.3}, T=10 {:.3}", m[0], m[1], m[2]),
        )
    }

    fn s_sweep_shape(res: &Results) -> Check {
        let mut ok = true;
        let mut parts = Vec::new();
        for p in NOISY {
            let t = s_sweep_threshold(p);
            let curve: Vec<f64> =
                S_GRID.iter().map(|&s| res.median_test(p, rtm(&res.opts, t).with_specificity(s))).collect();
            let argmin = S_GRID[(0..curve.len()).min_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap()];
            let at = |s: f64| curve[S_GRID.iter().position(|&g| g == s).unwrap()];
            let good = argmin == 2.0 && at(1.0) > at(2.0) && at(2.0) < at(4.0);
            ok &= good;
            let pts: Vec<String> = S_GRID.iter().zip(&curve).map(|(s, v)| format!("{s}:{v:.2}")).collect();
            parts.push(format!("{p} T={t} argmin s={argmin} [{}]", pts.join(" ")));
        }
        Check::new(4, "s-sweep shape", ok, parts.join("; "))
    }

    fn noisy_regime(res: &Results) -> Check {
        let mut ok = true;
        let mut parts = Vec::new();
        for p in NOISY {
            let ts = noisy_t_set(p);
            let m: Vec<f64> = ts.iter().map(|&t| res.median_test(p, rtm(&res.opts, t))).collect();
            let bound = 0.05 * p.y_max();
            let large_ok = ts.iter().zip(&m).filter(|(&t, _)| t >= 500).all(|(_, &v)| v < bound);
            let inversions = m.windows(2).filter(|w| w[1] > w[0]).count();
            let good = large_ok && inversions <= 1 && m[2] < m[0];
            ok &= good;
            parts.push(format!(
                "{p} test MAE T={}:{:.2} T={}:{:.2} T={}:{:.2} (bound {bound}, {inversions} inversions)",
                ts[0], m[0], ts[1], m[1], ts[2], m[2]
            ));
        }
        Check::new(5, "noisy-regime", ok, parts.join("; "))
    }

    fn method_ranking(res: &Results) -> Check {
        let need = need(res.opts.seeds.len());
        let mut ok = true;
        let mut parts = Vec::new();
        for p in NOISY {
            let specs = comparison_specs(p, &res.opts);
            let mut wins = 0;
            let mut detail = Vec::new();
            for &seed in &res.opts.seeds {
                let best = |m: Method| {
                    specs
                        .iter()
                        .filter(|s| s.method == m)
                        .map(|s| res.get(p, *s, seed).final_test_mae)
                        .fold(f64::INFINITY, f64::min)
                };
                let (r, c, t) = (best(Method::Rtm), best(Method::MtmClasses), best(Method::CtmBitwise));
                if r <= c && c <= t {
                    wins += 1;
                }
                detail.push(format!("seed {seed}: {r:.2}/{c:.2}/{t:.2}"));
            }
            ok &= wins >= need;
            parts.push(format!("{p} RTM/MTM/CTM best test MAE {wins}/{} seeds ordered [{}]", res.opts.seeds.len(), detail.join(", ")));
        }
        Check::new(6, "method ranking", ok, parts.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        assert_eq!(compute_mae(&[100.0, 200.0], &[100.0, 200.0]).unwrap(), 0.0);
        assert_eq!(compute_mae(&[0.0], &[300.0]).unwrap(), 300.0);
        assert_eq!(compute_mae(&[0.0f32], &[300.0]).unwrap(), 300.0);
    }

    #[test]
    fn mae_errors() {
        assert!(matches!(compute_mae::<f64>(&[], &[]), Err(TmError::EmptyDataset)));
        assert!(matches!(compute_mae(&[1.0], &[1.0, 2.0]), Err(TmError::Shape { .. })));
    }

    fn pairwise(v: &[f64]) -> f64 {
        match v.len() {
            0 => 0.0,
            1 => v[0],
            n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
        }
    }

    proptest! {
        #[test]
        fn mae_matches_reassociated_sum(pairs in prop::collection::vec((0.0..1e4f64, 0.0..1e4f64), 1..500)) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let diffs: Vec<f64> = p.iter().zip(&t).rev().map(|(a, b)| (a - b).abs()).collect();
            let oracle = pairwise(&diffs) / diffs.len() as f64;
            prop_assert!((compute_mae(&p, &t).unwrap() - oracle).abs() <= 1e-9);
        }

        #[test]
        fn median_is_order_free(mut v in prop::collection::vec(-1e3..1e3f64, 1..40), seed in any::<u64>()) {
            let m = median(&v);
            use rand::seq::SliceRandom;
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(median(&v), m);
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn noisy_sets_start_mismatched() {
        assert_eq!(noisy_t_set(Preset::II), [10, 100, 500]);
        assert_eq!(noisy_t_set(Preset::IV), [20, 300, 700]);
        assert_eq!(noisy_t_set(Preset::VI), [7, 150, 700]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("RTM".parse::<Method>().unwrap(), Method::Rtm);
        assert_eq!("ctm".parse::<Method>().unwrap(), Method::CtmBitwise);
        assert_eq!("mtm-classes".parse::<Method>().unwrap(), Method::MtmClasses);
        assert!("svm".parse::<Method>().is_err());
    }

    fn small_pair() -> DatasetPair<f64> {
        let mut m = Preset::I.manifest(3);
        m.n_train = 300;
        m.n_test = 50;
        DatasetPair::from_manifest(m).unwrap()
    }

    #[test]
    fn run_cell_is_deterministic() {
        let data = small_pair();
        for method in Method::ALL {
            let spec = CellSpec::new(method, 6).with_epochs(3).with_seed(11);
            let (a, ma) = run_cell(&spec, &data).unwrap();
            let (b, mb) = run_cell(&spec, &data).unwrap();
            assert_eq!(a.to_json(), b.to_json());
            assert_eq!(ma.to_snapshot(), mb.to_snapshot());
            assert_eq!(a.train_mae.len(), 3);
            assert_eq!(a.test_mae.len(), 3);
            assert_eq!(a.census.values().sum::<usize>(), ma.clause_list().len());
        }
    }

    #[test]
    fn report_json_omits_wall_clock() {
        let (r, _) = run_cell(&CellSpec::new(Method::Rtm, 3).with_epochs(1), &small_pair()).unwrap();
        let json = r.to_json();
        assert!(!json.contains("wall_clock"));
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.final_train_mae, r.final_train_mae);
    }

    #[test]
    fn zero_epoch_cell_still_scores() {
        let (r, _) = run_cell(&CellSpec::new(Method::Rtm, 3).with_epochs(0), &small_pair()).unwrap();
        assert!(r.train_mae.is_empty());
        assert!(r.final_train_mae.is_finite());
    }

    #[test]
    fn any_model_snapshot_round_trip() {
        let data = small_pair();
        for method in Method::ALL {
            let (_, m) = run_cell(&CellSpec::new(method, 4).with_epochs(2), &data).unwrap();
            let back = AnyModel::<f64>::from_snapshot(&m.to_snapshot()).unwrap();
            assert_eq!(back.method(), method);
            assert_eq!(back.to_snapshot(), m.to_snapshot());
        }
    }

    #[test]
    fn run_cells_keeps_request_order() {
        let mut reqs = Vec::new();
        for t in [3, 10, 30] {
            let mut r = CellRequest::preset(Preset::I, CellSpec::new(Method::Rtm, t).with_epochs(1), 1);
            r.manifest.n_train = 200;
            r.manifest.n_test = 20;
            reqs.push(r);
        }
        let a = run_cells(&reqs, 1).unwrap();
        let b = run_cells(&reqs, 3).unwrap();
        let json = |rs: &[EvalReport]| rs.iter().map(EvalReport::to_json).collect::<Vec<_>>();
        assert_eq!(json(&a), json(&b));
        assert_eq!(a.iter().map(|r| r.spec.threshold).collect::<Vec<_>>(), vec![3, 10, 30]);
    }

    #[test]
    fn summary_ignores_report_order() {
        let data = small_pair();
        let mut reports: Vec<EvalReport> = (0..3)
            .map(|seed| run_cell(&CellSpec::new(Method::Rtm, 3).with_epochs(2).with_seed(seed), &data).unwrap().0)
            .collect();
        let a = summarize(&reports);
        reports.reverse();
        assert_eq!(summarize(&reports), a);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].seeds, 3);
    }

    #[test]
    fn grids_follow_the_even_pool_rule() {
        for p in Preset::ALL {
            for full in [false, true] {
                for c in ctm_grid(p, full) {
                    assert_eq!(c % 2, 0);
                }
                for c in mtm_grid(p, full, class_count(p, 1.0)) {
                    assert_eq!(c % 2, 0);
                }
            }
        }
        assert_eq!(mtm_grid(Preset::I, true, 301), vec![2, 32, 52]);
    }

    #[test]
    fn tables_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _) = run_cell(&CellSpec::new(Method::Rtm, 3).with_epochs(2), &small_pair()).unwrap();
        write_results(&[r], dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("dataset,method,T,m,s,K,seed,epoch,train_mae,test_mae"));
        assert!(fs::read_to_string(dir.path().join("summary.md")).unwrap().contains("| RTM | 3 |"));
    }
}
