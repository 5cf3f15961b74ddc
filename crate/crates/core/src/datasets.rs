//! Synthetic binary-to-integer datasets and their on-disk format.
//!
//! Every preset maps an `o`-bit input to `100 × decimal(x)`, with the first
//! feature as the most significant bit. Noisy presets add zero-mean Gaussian
//! noise to the training targets only.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::num::Scalar;

pub const PAPER_TRAIN_SIZE: usize = 8000;
pub const PAPER_TEST_SIZE: usize = 2000;
/// Output quantum of the synthetic targets.
pub const TARGET_STEP: f64 = 100.0;
/// Default noise level as a fraction of `y_max`.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.05;

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    None,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            model: NoiseModel::None,
            sigma: 0.0,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            model: NoiseModel::Gaussian,
            sigma,
        }
    }

    pub fn is_noisy(&self) -> bool {
        self.model == NoiseModel::Gaussian && self.sigma > 0.0
    }
}

/// Everything needed to regenerate a train/test pair bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub n_bits: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub y_max: f64,
}

impl Manifest {
    pub fn regenerate<F: Scalar>(&self) -> Result<(Dataset<F>, Dataset<F>)> {
        let (mut train, mut test) = generate(self.n_bits, self.n_train, self.n_test, self.noise, self.seed)?;
        train.manifest = Some(self.clone());
        test.manifest = Some(self.clone());
        Ok((train, test))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| TmError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }
}

/// The six paper datasets: 2, 3 and 4 bits, each clean and noisy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::I, Preset::II, Preset::III, Preset::IV, Preset::V, Preset::VI];

    pub fn n_bits(self) -> usize {
        match self {
            Preset::I | Preset::II => 2,
            Preset::III | Preset::IV => 3,
            Preset::V | Preset::VI => 4,
        }
    }

    pub fn is_noisy(self) -> bool {
        matches!(self, Preset::II | Preset::IV | Preset::VI)
    }

    pub fn y_max(self) -> f64 {
        y_max_for_bits(self.n_bits())
    }

    pub fn noise(self) -> NoiseSpec {
        if self.is_noisy() {
            NoiseSpec::gaussian(DEFAULT_NOISE_FRACTION * self.y_max())
        } else {
            NoiseSpec::none()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::I => "dataset1",
            Preset::II => "dataset2",
            Preset::III => "dataset3",
            Preset::IV => "dataset4",
            Preset::V => "dataset5",
            Preset::VI => "dataset6",
        }
    }

    pub fn manifest(self, seed: u64) -> Manifest {
        Manifest {
            preset: Some(self.name().to_string()),
            n_bits: self.n_bits(),
            n_train: PAPER_TRAIN_SIZE,
            n_test: PAPER_TEST_SIZE,
            noise: self.noise(),
            seed,
            y_max: self.y_max(),
        }
    }

    pub fn generate<F: Scalar>(self, seed: u64) -> Result<(Dataset<F>, Dataset<F>)> {
        self.manifest(seed).regenerate()
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = TmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.trim_start_matches("dataset").trim_start_matches('-').trim_start_matches('_');
        Ok(match key {
            "1" | "i" => Preset::I,
            "2" | "ii" => Preset::II,
            "3" | "iii" => Preset::III,
            "4" | "iv" => Preset::IV,
            "5" | "v" => Preset::V,
            "6" | "vi" => Preset::VI,
            _ => return Err(TmError::config(format!("unknown dataset preset {s:?}"))),
        })
    }
}

pub fn y_max_for_bits(n_bits: usize) -> f64 {
    TARGET_STEP * ((1u64 << n_bits) - 1) as f64
}

/// Noise-free target of an input, most significant bit first.
pub fn clean_target(x: &[u8]) -> f64 {
    TARGET_STEP * x.iter().fold(0u64, |acc, &b| acc << 1 | b as u64) as f64
}

/// Binary input matrix with real targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    n_features: usize,
    inputs: Vec<u8>,
    targets: Vec<F>,
    y_max: F,
    manifest: Option<Manifest>,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset from explicit rows. `y_max` defaults to the largest
    /// target when not given.
    pub fn from_rows(rows: &[Vec<u8>], targets: Vec<F>, y_max: Option<F>) -> Result<Self> {
        let n_features = rows.first().map(Vec::len).unwrap_or(0);
        if rows.len() != targets.len() {
            return Err(TmError::Shape {
                what: "targets",
                expected: rows.len(),
                actual: targets.len(),
            });
        }
        let mut inputs = Vec::with_capacity(rows.len() * n_features);
        for r in rows {
            if r.len() != n_features {
                return Err(TmError::Shape {
                    what: "features",
                    expected: n_features,
                    actual: r.len(),
                });
            }
            if let Some(b) = r.iter().find(|&&b| b > 1) {
                return Err(TmError::config(format!("non-binary feature value {b}")));
            }
            inputs.extend_from_slice(r);
        }
        let y_max = y_max.unwrap_or_else(|| targets.iter().copied().fold(F::zero(), F::max));
        Ok(Self {
            n_features,
            inputs,
            targets,
            y_max,
            manifest: None,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.inputs[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        // chunks_exact on an empty feature width would panic
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn targets(&self) -> &[F] {
        &self.targets
    }

    pub fn y_max(&self) -> F {
        self.y_max
    }

    pub fn manifest(&self) -> Option<&Manifest> {
        self.manifest.as_ref()
    }

    /// True when every one of the `2^o` inputs occurs at least once.
    pub fn covers_input_space(&self) -> bool {
        if self.n_features >= 24 {
            return false;
        }
        let mut seen = vec![false; 1 << self.n_features];
        for r in self.rows() {
            let v = r.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
            seen[v] = true;
        }
        seen.into_iter().all(|s| s)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header: Vec<String> = (1..=self.n_features).map(|k| format!("x{k}")).collect();
        header.push("y".into());
        w.write_record(&header).map_err(|e| csv_io(path, e))?;
        let mut record: Vec<String> = Vec::with_capacity(self.n_features + 1);
        for (row, t) in self.rows().zip(&self.targets) {
            record.clear();
            record.extend(row.iter().map(|b| b.to_string()));
            record.push(format!("{t:?}"));
            w.write_record(&record).map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| TmError::io(path, e))
    }

    /// Reads a `x1..xo,y` file. Without a manifest, `y_max` is the largest
    /// target in the file.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_io(path, e))?;
        let parse_err = |line: u64, message: String| TmError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let header = r.headers().map_err(|e| csv_io(path, e))?.clone();
        if header.len() < 2 {
            return Err(parse_err(1, "header needs at least one feature column and y".into()));
        }
        let o = header.len() - 1;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_io(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != o + 1 {
                return Err(parse_err(line, format!("expected {} fields, found {}", o + 1, rec.len())));
            }
            for (k, field) in rec.iter().take(o).enumerate() {
                match field.trim() {
                    "0" => inputs.push(0),
                    "1" => inputs.push(1),
                    other => return Err(parse_err(line, format!("feature x{} is not a bit: {other:?}", k + 1))),
                }
            }
            let t = rec[o]
                .trim()
                .parse::<F>()
                .map_err(|_| parse_err(line, format!("target is not a number: {:?}", &rec[o])))?;
            if !t.is_finite() {
                return Err(parse_err(line, format!("target is not finite: {:?}", &rec[o])));
            }
            targets.push(t);
        }
        let y_max = targets.iter().copied().fold(F::zero(), F::max);
        Ok(Self {
            n_features: o,
            inputs,
            targets,
            y_max,
            manifest: None,
        })
    }
}

fn csv_io(path: &Path, e: csv::Error) -> TmError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TmError::io(path, io),
        other => TmError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Generates a train/test pair: i.i.d. fair bits, `100 × decimal(x)`
/// targets, noise on training targets only. Train and test come from
/// independent streams of one seed.
pub fn generate<F: Scalar>(
    n_bits: usize,
    n_train: usize,
    n_test: usize,
    noise: NoiseSpec,
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>)> {
    if n_bits == 0 || n_bits > 62 {
        return Err(TmError::config(format!("bit width must be in [1, 62], got {n_bits}")));
    }
    if noise.model == NoiseModel::Gaussian && !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(TmError::config(format!("noise sigma must be finite and >= 0, got {}", noise.sigma)));
    }
    let manifest = Manifest {
        preset: None,
        n_bits,
        n_train,
        n_test,
        noise,
        seed,
        y_max: y_max_for_bits(n_bits),
    };
    let train = sample_split(&manifest, n_train, TRAIN_STREAM, Some(noise))?;
    let test = sample_split(&manifest, n_test, TEST_STREAM, None)?;
    Ok((train, test))
}

fn sample_split<F: Scalar>(manifest: &Manifest, n: usize, stream: u64, noise: Option<NoiseSpec>) -> Result<Dataset<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
    rng.set_stream(stream);
    let normal = match noise {
        Some(spec) if spec.is_noisy() => {
            Some(Normal::new(0.0, spec.sigma).map_err(|e| TmError::config(e.to_string()))?)
        }
        _ => None,
    };
    let o = manifest.n_bits;
    let mut inputs = Vec::with_capacity(n * o);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let start = inputs.len();
        inputs.extend((0..o).map(|_| rng.gen::<bool>() as u8));
        let mut y = clean_target(&inputs[start..]);
        if let Some(normal) = &normal {
            y += normal.sample(&mut rng);
        }
        targets.push(F::from_f64_lossy(y));
    }
    Ok(Dataset {
        n_features: o,
        inputs,
        targets,
        y_max: F::from_f64_lossy(manifest.y_max),
        manifest: Some(manifest.clone()),
    })
}

/// A generated train/test pair with its manifest, as laid out on disk.
#[derive(Debug, Clone)]
pub struct DatasetPair<F> {
    pub train: Dataset<F>,
    pub test: Dataset<F>,
    pub manifest: Manifest,
}

impl<F: Scalar> DatasetPair<F> {
    pub const TRAIN_FILE: &'static str = "train.csv";
    pub const TEST_FILE: &'static str = "test.csv";
    pub const MANIFEST_FILE: &'static str = "manifest.toml";

    pub fn from_preset(preset: Preset, seed: u64) -> Result<Self> {
        let manifest = preset.manifest(seed);
        let (train, test) = manifest.regenerate()?;
        Ok(Self { train, test, manifest })
    }

    pub fn from_manifest(manifest: Manifest) -> Result<Self> {
        let (train, test) = manifest.regenerate()?;
        Ok(Self { train, test, manifest })
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| TmError::io(dir, e))?;
        self.train.save_csv(&dir.join(Self::TRAIN_FILE))?;
        self.test.save_csv(&dir.join(Self::TEST_FILE))?;
        let path = dir.join(Self::MANIFEST_FILE);
        fs::write(&path, self.manifest.to_toml()).map_err(|e| TmError::io(&path, e))
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mpath: PathBuf = dir.join(Self::MANIFEST_FILE);
        let text = fs::read_to_string(&mpath).map_err(|e| TmError::io(&mpath, e))?;
        let manifest = Manifest::from_toml(&text, &mpath)?;
        let mut train = Dataset::<F>::load_csv(&dir.join(Self::TRAIN_FILE))?;
        let mut test = Dataset::<F>::load_csv(&dir.join(Self::TEST_FILE))?;
        for d in [&mut train, &mut test] {
            if d.n_features != manifest.n_bits {
                return Err(TmError::Shape {
                    what: "features",
                    expected: manifest.n_bits,
                    actual: d.n_features,
                });
            }
            d.y_max = F::from_f64_lossy(manifest.y_max);
            d.manifest = Some(manifest.clone());
        }
        Ok(Self { train, test, manifest })
    }
}
