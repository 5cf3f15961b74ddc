//! The `tsetlin` command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::datasets::{DatasetPair, Preset, PAPER_TEST_SIZE, PAPER_TRAIN_SIZE};
use crate::error::{Result, TmError};
use crate::experiments::{self, reproduce, run_cell, AnyModel, CellSpec, EvalReport, Method, SweepOptions, S_GRID};
use crate::machines::snapshot::Snapshot;
use crate::machines::{EncodedInputs, Regressor};

pub const EXIT_OK: i32 = 0;
/// Some reproduction criterion failed.
pub const EXIT_CRITERIA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_SNAPSHOT: i32 = 6;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Parser)]
#[command(name = "tsetlin", version, about = "Tsetlin Machine regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Write a train/test dataset pair and its manifest.
    Gen(GenArgs),
    /// Fit one machine, writing a snapshot and a report.
    Train(TrainArgs),
    /// Score a snapshot on a dataset.
    Eval(EvalArgs),
    /// RTM over a list of thresholds.
    SweepT(SweepTArgs),
    /// RTM over a list of specificities.
    SweepS(SweepSArgs),
    /// RTM against CTM-bitwise and MTM-classes.
    Compare(CompareArgs),
    /// Print the clause pattern census and per-clause fire counts.
    Inspect(InspectArgs),
    /// Run the default property grid and check every property.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    #[arg(long, default_value = "dataset1")]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = PAPER_TRAIN_SIZE)]
    n_train: usize,
    #[arg(long, default_value_t = PAPER_TEST_SIZE)]
    n_test: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MachineArgs {
    /// rtm, ctm (one machine per output bit) or mtm (one class per target value).
    #[arg(long, default_value = "rtm")]
    machine: Method,
    /// Threshold T.
    #[arg(long = "T", default_value_t = 3)]
    threshold: u32,
    /// Clause count m (per bit for ctm, per class for mtm); defaults to T.
    #[arg(long)]
    m: Option<usize>,
    /// Specificity s.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Activation gain K.
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// States per action N.
    #[arg(long, default_value_t = crate::automata::DEFAULT_STATES_PER_ACTION)]
    n_states: u32,
    /// Shuffle the training order every epoch.
    #[arg(long)]
    shuffle: bool,
    /// Unit-step classes and bit codes instead of step-100 ones.
    #[arg(long)]
    unit_classes: bool,
}

impl MachineArgs {
    fn spec(&self, seed: u64) -> CellSpec {
        let mut s = CellSpec::new(self.machine, self.threshold)
            .with_clauses(self.m.unwrap_or(self.threshold as usize))
            .with_specificity(self.s)
            .with_epochs(self.epochs)
            .with_seed(seed);
        s.gain = self.k;
        s.n_states_per_action = self.n_states;
        s.shuffle = self.shuffle;
        if self.unit_classes {
            s.step = 1.0;
        }
        s
    }
}

#[derive(Debug, Args, Serialize)]
struct DataArgs {
    /// Directory written by `gen`.
    #[arg(long, conflicts_with = "preset")]
    data: Option<PathBuf>,
    /// Generate the preset in memory, seeded with --seed.
    #[arg(long)]
    preset: Option<Preset>,
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<DatasetPair<f64>> {
        match (&self.data, self.preset) {
            (Some(dir), _) => DatasetPair::load_dir(dir),
            (None, Some(p)) => DatasetPair::from_preset(p, seed),
            (None, None) => Err(TmError::config("either --data or --preset is required")),
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    machine: MachineArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Write eval.json here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Activation gain K.
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = crate::automata::DEFAULT_STATES_PER_ACTION)]
    n_states: u32,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Use the full grids, including the largest thresholds.
    #[arg(long)]
    full: bool,
    /// Unit-step classes and bit codes instead of step-100 ones.
    #[arg(long)]
    unit_classes: bool,
    #[arg(long)]
    out: PathBuf,
}

impl SweepArgs {
    fn options(&self) -> SweepOptions {
        SweepOptions {
            seeds: self.seeds.clone(),
            epochs: self.epochs,
            jobs: self.jobs,
            full: self.full,
            unit_classes: self.unit_classes,
            gain: self.k,
            n_states_per_action: self.n_states,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SweepTArgs {
    #[arg(long)]
    preset: Preset,
    /// Thresholds; defaults to the preset's grid.
    #[arg(long = "T", value_delimiter = ',')]
    thresholds: Vec<u32>,
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Debug, Args, Serialize)]
struct SweepSArgs {
    #[arg(long)]
    preset: Preset,
    /// Specificities; defaults to 1,1.5,2,3,4,6,10.
    #[arg(long, value_delimiter = ',')]
    s: Vec<f64>,
    /// Threshold; defaults to the preset's sweep value.
    #[arg(long = "T")]
    threshold: Option<u32>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    /// Datasets; defaults to all six.
    #[arg(long, value_delimiter = ',')]
    preset: Vec<Preset>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Debug, Args, Serialize)]
struct InspectArgs {
    #[arg(long)]
    snapshot: PathBuf,
    /// Count clause firings over this dataset's training split.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReproduceArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Full grids for the method comparison.
    #[arg(long)]
    full: bool,
    /// Also write every run's tables here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &TmError) -> i32 {
    match e {
        TmError::Io { .. } => EXIT_IO,
        TmError::Parse { .. } | TmError::EmptyDataset | TmError::Json(_) => EXIT_DATA,
        TmError::Config(_) | TmError::Shape { .. } => EXIT_CONFIG,
        TmError::Snapshot(_) | TmError::SnapshotVersion { .. } => EXIT_SNAPSHOT,
        TmError::Contract(_) => EXIT_INTERNAL,
    }
}

fn run(cmd: Command) -> Result<i32> {
    if let Some(out) = cmd.out_dir() {
        write_file(&out.join("runspec.json"), serde_json::to_string_pretty(&cmd)?.as_bytes())?;
    }
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::SweepT(a) => sweep_t(a),
        Command::SweepS(a) => sweep_s(a),
        Command::Compare(a) => compare(a),
        Command::Inspect(a) => inspect(a),
        Command::Reproduce(a) => reproduce_cmd(a),
    }
}

impl Command {
    fn out_dir(&self) -> Option<PathBuf> {
        match self {
            Command::Gen(a) => Some(a.out.clone()),
            Command::Train(a) => Some(a.out.clone()),
            Command::Eval(a) => a.out.clone(),
            Command::SweepT(a) => Some(a.sweep.out.clone()),
            Command::SweepS(a) => Some(a.sweep.out.clone()),
            Command::Compare(a) => Some(a.sweep.out.clone()),
            Command::Inspect(_) => None,
            Command::Reproduce(a) => a.out.clone(),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| TmError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| TmError::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| TmError::io(path, e))
}

fn gen(a: GenArgs) -> Result<i32> {
    let mut manifest = a.preset.manifest(a.seed);
    manifest.n_train = a.n_train;
    manifest.n_test = a.n_test;
    let pair = DatasetPair::<f64>::from_manifest(manifest)?;
    pair.save_dir(&a.out)?;
    println!("wrote {} train and {} test rows to {}", pair.train.len(), pair.test.len(), a.out.display());
    Ok(EXIT_OK)
}

fn train(a: TrainArgs) -> Result<i32> {
    let data = a.data.load(a.seed)?;
    let spec = a.machine.spec(a.seed);
    let (report, model) = run_cell(&spec, &data)?;
    write_file(&a.out.join("model.bin"), &model.to_snapshot())?;
    write_file(&a.out.join("report.json"), report.to_json().as_bytes())?;
    write_timing(&a.out, &[&report])?;
    println!(
        "{} on {}: train MAE {} test MAE {}",
        spec.method, report.dataset, report.final_train_mae, report.final_test_mae
    );
    Ok(EXIT_OK)
}

fn write_timing(dir: &Path, reports: &[&EvalReport]) -> Result<()> {
    let secs: Vec<f64> = reports.iter().map(|r| r.wall_clock_secs).collect();
    let json = serde_json::json!({ "wall_clock_secs": secs, "total_secs": secs.iter().sum::<f64>() });
    write_file(&dir.join("timing.json"), serde_json::to_string_pretty(&json)?.as_bytes())
}

#[derive(Serialize)]
struct EvalOutput {
    snapshot: PathBuf,
    data: PathBuf,
    method: Method,
    train_mae: f64,
    test_mae: f64,
}

fn load_model(path: &Path) -> Result<AnyModel<f64>> {
    AnyModel::from_snapshot(&read_file(path)?)
}

fn eval(a: EvalArgs) -> Result<i32> {
    let model = load_model(&a.snapshot)?;
    let data = DatasetPair::<f64>::load_dir(&a.data)?;
    let score = |d: &crate::Data| -> Result<f64> {
        let enc = EncodedInputs::new(d)?;
        experiments::compute_mae(&enc.predict_all(&model), d.targets())
    };
    if data.train.n_features() != model.n_features() {
        return Err(TmError::Shape { what: "features", expected: model.n_features(), actual: data.train.n_features() });
    }
    let out = EvalOutput {
        snapshot: a.snapshot.clone(),
        data: a.data.clone(),
        method: model.method(),
        train_mae: score(&data.train)?,
        test_mae: score(&data.test)?,
    };
    println!("{}: train MAE {} test MAE {}", out.method, out.train_mae, out.test_mae);
    if let Some(dir) = &a.out {
        write_file(&dir.join("eval.json"), serde_json::to_string_pretty(&out)?.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn finish_sweep(reports: &[EvalReport], out: &Path) -> Result<i32> {
    experiments::write_results(reports, out)?;
    write_timing(out, &reports.iter().collect::<Vec<_>>())?;
    print!("{}", experiments::markdown_summary(&experiments::summarize(reports)));
    Ok(EXIT_OK)
}

fn sweep_t(a: SweepTArgs) -> Result<i32> {
    let opts = a.sweep.options();
    let ts = if a.thresholds.is_empty() { experiments::t_grid(a.preset, opts.full) } else { a.thresholds.clone() };
    finish_sweep(&experiments::run_t_sweep(a.preset, &ts, a.s, &opts)?, &a.sweep.out)
}

fn sweep_s(a: SweepSArgs) -> Result<i32> {
    let opts = a.sweep.options();
    let ss = if a.s.is_empty() { S_GRID.to_vec() } else { a.s.clone() };
    let t = a.threshold.unwrap_or_else(|| experiments::s_sweep_threshold(a.preset));
    finish_sweep(&experiments::run_s_sweep(a.preset, &ss, t, &opts)?, &a.sweep.out)
}

fn compare(a: CompareArgs) -> Result<i32> {
    let presets = if a.preset.is_empty() { Preset::ALL.to_vec() } else { a.preset.clone() };
    finish_sweep(&experiments::run_comparison(&presets, &a.sweep.options())?, &a.sweep.out)
}

fn inspect(a: InspectArgs) -> Result<i32> {
    let model = load_model(&a.snapshot)?;
    let clauses = model.clause_list();
    let counts = match &a.data {
        Some(dir) => {
            let data = DatasetPair::<f64>::load_dir(dir)?;
            if data.train.n_features() != model.n_features() {
                return Err(TmError::Shape {
                    what: "features",
                    expected: model.n_features(),
                    actual: data.train.n_features(),
                });
            }
            Some(EncodedInputs::new(&data.train)?.fire_counts(&clauses))
        }
        None => None,
    };
    println!("{} with {} clauses", model.method(), clauses.len());
    println!("census: {}", serde_json::to_string(&model.census())?);
    for (i, c) in clauses.iter().enumerate() {
        match &counts {
            Some(n) => println!("{i}\t{}\t{}", c.pattern(), n[i]),
            None => println!("{i}\t{}", c.pattern()),
        }
    }
    Ok(EXIT_OK)
}

fn reproduce_cmd(a: ReproduceArgs) -> Result<i32> {
    let opts = SweepOptions { seeds: a.seeds.clone(), epochs: a.epochs, jobs: a.jobs, full: a.full, ..Default::default() };
    let (checks, reports) = reproduce::run(&opts)?;
    if let Some(dir) = &a.out {
        experiments::write_results(&reports, dir)?;
        write_file(&dir.join("checks.json"), serde_json::to_string_pretty(&checks)?.as_bytes())?;
    }
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_CRITERIA })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("tsetlin".to_string()).chain(s.split_whitespace().map(str::to_string)).collect()
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(dispatch(argv("train --bogus 1")), EXIT_USAGE);
        assert_eq!(dispatch(argv("frobnicate")), EXIT_USAGE);
    }

    #[test]
    fn help_succeeds() {
        assert_eq!(dispatch(argv("--help")), EXIT_OK);
        assert_eq!(dispatch(argv("train --help")), EXIT_OK);
    }

    #[test]
    fn missing_snapshot_is_io() {
        assert_eq!(dispatch(argv("inspect --snapshot /nonexistent/m.bin")), EXIT_IO);
    }

    #[test]
    fn error_classes_have_distinct_codes() {
        let codes = [
            exit_code(&TmError::io("x", std::io::Error::other("x"))),
            exit_code(&TmError::EmptyDataset),
            exit_code(&TmError::config("x")),
            exit_code(&TmError::Snapshot("x".into())),
            exit_code(&TmError::Contract("x".into())),
        ];
        let set: std::collections::HashSet<_> = codes.iter().collect();
        assert_eq!(set.len(), codes.len());
        assert!(codes.iter().all(|&c| c != EXIT_OK && c != EXIT_USAGE && c != EXIT_CRITERIA));
    }

    #[test]
    fn help_lists_defaults() {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        let help = cmd.find_subcommand_mut("train").unwrap().render_long_help().to_string();
        for flag in ["--machine", "--T", "--m", "--s", "--K", "--epochs", "--n-states", "--shuffle", "--data", "--preset", "--seed", "--out"] {
            assert!(help.contains(flag), "missing {flag}");
        }
        assert!(help.contains("[default: 200]"));
        assert!(help.contains("[default: rtm]"));
    }
}
