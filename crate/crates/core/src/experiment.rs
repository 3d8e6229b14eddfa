//! End-to-end accuracy experiments and their reports.
//!
//! One experiment draws a stratified training set and a test set for a
//! benchmark, then fits three surrogates on the identical training set:
//! the first-order ANOVA model, ALS from random initial tensors (averaged over
//! several seeds), and ALS initialized with the ANOVA tensor train.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::als::{self, AlsConfig, AlsReport, MinRowsPolicy};
use crate::anova::{AnovaModel, DEFAULT_PADDING_NOISE};
use crate::benchmarks::{self, Benchmark, PDE_VOI};
use crate::error::{Error, Result};
use crate::pde::PdeConfig;
use crate::sampling::{add_noise, build_dataset, lhs_indices, uniform_indices, Dataset, Grid};
use crate::tt::{relative_error, TtTensor};

/// Which ALS initializations to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    #[default]
    Both,
    Random,
    Anova,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSampling {
    #[default]
    Uniform,
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub benchmark: String,
    /// Defaults to 7 for analytical functions, 9 for `pde-voi`.
    pub dim: Option<usize>,
    pub grid: usize,
    pub rank: usize,
    pub sweeps: usize,
    pub train: usize,
    pub test: usize,
    pub init: InitMode,
    /// Multiplicative noise level applied to the training values.
    pub noise: f64,
    /// Number of random-initialization ALS runs.
    pub repeats: usize,
    pub seed: u64,
    /// Padding noise of the ANOVA tensor train, relative to each core's scale.
    pub padding_noise: f64,
    pub stop_delta: f64,
    pub ls_cutoff: f64,
    pub orthogonalize: bool,
    pub test_sampling: TestSampling,
    /// Interior mesh points per axis for `pde-voi`.
    pub pde_mesh: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            benchmark: "ackley".into(),
            dim: None,
            grid: 10,
            rank: 5,
            sweeps: 50,
            train: 10_000,
            test: 10_000,
            init: InitMode::Both,
            noise: 0.0,
            repeats: 10,
            seed: 0,
            padding_noise: DEFAULT_PADDING_NOISE,
            stop_delta: 0.0,
            ls_cutoff: 1e-12,
            orthogonalize: false,
            test_sampling: TestSampling::Uniform,
            pde_mesh: PdeConfig::default().n,
        }
    }
}

impl ExperimentSpec {
    pub fn for_benchmark(name: &str) -> Self {
        ExperimentSpec {
            benchmark: name.into(),
            ..ExperimentSpec::default()
        }
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        if self.benchmark == PDE_VOI {
            if let Some(d) = self.dim.filter(|&d| d != 9) {
                return Err(Error::invalid(format!(
                    "pde-voi is 9-dimensional, got d = {d}"
                )));
            }
            return Ok(Benchmark::pde_voi(PdeConfig::with_mesh(self.pde_mesh)));
        }
        match self.dim {
            Some(d) => Benchmark::new(&self.benchmark, d),
            None => Benchmark::with_default_dim(&self.benchmark),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.benchmark()?;
        let positive = [
            ("grid", self.grid),
            ("rank", self.rank),
            ("sweeps", self.sweeps),
            ("train", self.train),
            ("test", self.test),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if self.grid < 2 {
            return Err(Error::invalid("grid needs at least 2 nodes"));
        }
        if self.train < self.grid {
            return Err(Error::invalid(format!(
                "train size {} cannot cover {} grid nodes",
                self.train, self.grid
            )));
        }
        if self.init != InitMode::Anova && self.repeats == 0 {
            return Err(Error::invalid("repeats must be positive"));
        }
        if self.init != InitMode::Random && self.rank < 2 {
            return Err(Error::invalid("ANOVA initialization needs rank >= 2"));
        }
        if !(self.noise >= 0.0) || !(self.padding_noise >= 0.0) {
            return Err(Error::invalid("noise levels must be non-negative"));
        }
        self.als_config().validate()
    }

    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            sweeps: self.sweeps,
            stop_delta: self.stop_delta,
            ls_cutoff: self.ls_cutoff,
            min_rows_policy: MinRowsPolicy::Error,
            orthogonalize: self.orthogonalize,
        }
    }
}

/// Independent seeds derived from the base seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub train: u64,
    pub test: u64,
    pub noise: u64,
    pub padding: u64,
    pub random_init: Vec<u64>,
}

impl Seeds {
    pub fn derive(base: u64, repeats: usize) -> Self {
        // splitmix64 finalizer over (base, stream)
        let mix = |stream: u64| {
            let mut z = base
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        Seeds {
            train: mix(1),
            test: mix(2),
            noise: mix(3),
            padding: mix(4),
            random_init: (0..repeats as u64).map(|r| mix(100 + r)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ANOVA")]
    Anova,
    #[serde(rename = "ALS")]
    Als,
    #[serde(rename = "ANOVA-ALS")]
    AnovaAls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Anova, Method::Als, Method::AnovaAls];

    pub fn label(self) -> &'static str {
        match self {
            Method::Anova => "ANOVA",
            Method::Als => "ALS",
            Method::AnovaAls => "ANOVA-ALS",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub benchmark: String,
    pub method: Method,
    pub train_error: f64,
    pub test_error: f64,
    pub wall_time_seconds: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub spec: ExperimentSpec,
    pub seeds: Seeds,
    pub train_hash: String,
    pub test_hash: String,
    /// Hash of the training set as seen by each fitted method, in fit order.
    pub train_hash_by_method: Vec<(Method, String)>,
    pub wall_times: Vec<(Method, f64)>,
    pub sampling_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub metadata: RunMetadata,
    /// ALS reports: one per random repeat, then the ANOVA-initialized run.
    pub reports: Vec<(Method, AlsReport)>,
    pub anova: AnovaModel,
    pub anova_als_model: Option<TtTensor>,
    pub test: Dataset,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs the three-method comparison on one benchmark.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    let bench = spec.benchmark()?;
    let seeds = Seeds::derive(spec.seed, spec.repeats);
    let grid = Grid::uniform(&bench.bounds, spec.grid)?;
    let dims = grid.dims();
    let eval = |x: &[f64]| bench.evaluate(x);

    let clock = Instant::now();
    let clean = build_dataset(eval, &grid, lhs_indices(&dims, spec.train, seeds.train)?)?;
    let mut train = add_noise(&clean, spec.noise, seeds.noise)?;
    train.meta.benchmark = bench.name.clone();
    train.meta.seed = seeds.train;
    let test_idxs = match spec.test_sampling {
        TestSampling::Uniform => uniform_indices(&dims, spec.test, seeds.test)?,
        TestSampling::Stratified => lhs_indices(&dims, spec.test, seeds.test)?,
    };
    let mut test = build_dataset(eval, &grid, test_idxs)?;
    test.meta.benchmark = bench.name.clone();
    test.meta.seed = seeds.test;
    let sampling_seconds = clock.elapsed().as_secs_f64();

    let cfg = spec.als_config();
    let train = &train;
    let mut rows = Vec::with_capacity(3);
    let mut reports = Vec::new();
    let mut hashes = Vec::new();
    let mut wall_times = Vec::new();

    let tt_errors = |t: &TtTensor| -> Result<(f64, f64)> {
        Ok((
            relative_error(&t.get_many(&train.idxs)?, &train.ys)?,
            relative_error(&t.get_many(&test.idxs)?, &test.ys)?,
        ))
    };

    let clock = Instant::now();
    hashes.push((Method::Anova, train.hash()));
    let anova = AnovaModel::fit(&train.idxs, &train.ys, &dims)?;
    let anova_time = clock.elapsed().as_secs_f64();
    rows.push(ResultRow {
        benchmark: bench.name.clone(),
        method: Method::Anova,
        train_error: relative_error(&anova.eval_many(&train.idxs)?, &train.ys)?,
        test_error: relative_error(&anova.eval_many(&test.idxs)?, &test.ys)?,
        wall_time_seconds: anova_time,
        repeats: 1,
    });
    wall_times.push((Method::Anova, anova_time));

    if spec.init != InitMode::Anova {
        hashes.push((Method::Als, train.hash()));
        let clock = Instant::now();
        let mut train_errs = Vec::with_capacity(spec.repeats);
        let mut test_errs = Vec::with_capacity(spec.repeats);
        for &seed in &seeds.random_init {
            let init = TtTensor::random(&dims, spec.rank, seed)?;
            let (t, report) = als::run(&init, &train.idxs, &train.ys, &cfg)?;
            let (tr, te) = tt_errors(&t)?;
            train_errs.push(tr);
            test_errs.push(te);
            reports.push((Method::Als, report));
        }
        let secs = clock.elapsed().as_secs_f64() / spec.repeats as f64;
        rows.push(ResultRow {
            benchmark: bench.name.clone(),
            method: Method::Als,
            train_error: mean(&train_errs),
            test_error: mean(&test_errs),
            wall_time_seconds: secs,
            repeats: spec.repeats,
        });
        wall_times.push((Method::Als, secs));
    }

    let mut anova_als_model = None;
    if spec.init != InitMode::Random {
        hashes.push((Method::AnovaAls, train.hash()));
        let clock = Instant::now();
        let init = anova.to_tt(spec.rank, spec.padding_noise, seeds.padding)?;
        let (t, report) = als::run(&init, &train.idxs, &train.ys, &cfg)?;
        let secs = clock.elapsed().as_secs_f64();
        let (tr, te) = tt_errors(&t)?;
        rows.push(ResultRow {
            benchmark: bench.name.clone(),
            method: Method::AnovaAls,
            train_error: tr,
            test_error: te,
            wall_time_seconds: secs,
            repeats: 1,
        });
        reports.push((Method::AnovaAls, report));
        wall_times.push((Method::AnovaAls, secs));
        anova_als_model = Some(t);
    }

    let metadata = RunMetadata {
        spec: spec.clone(),
        seeds,
        train_hash: train.hash(),
        test_hash: test.hash(),
        train_hash_by_method: hashes,
        wall_times,
        sampling_seconds,
    };
    Ok(Outcome {
        rows,
        metadata,
        reports,
        anova,
        anova_als_model,
        test,
    })
}

/// Runs `base` for every benchmark in report order (optionally only the analytical ones).
pub fn run_suite(base: &ExperimentSpec, include_pde: bool) -> Result<Vec<Outcome>> {
    benchmarks::names()
        .into_iter()
        .filter(|&n| include_pde || n != PDE_VOI)
        .map(|name| {
            run_experiment(&ExperimentSpec {
                benchmark: name.into(),
                dim: None,
                ..base.clone()
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Two significant digits with a signed two-digit exponent, e.g. `1.3e-02`.
pub fn sci2(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.1e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

fn display_name(name: &str) -> String {
    if name == PDE_VOI {
        return "PDE-VOI".into();
    }
    let mut c = name.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// Renders rows as CSV or as a markdown table with train/test lines per benchmark.
///
/// Wall times are not part of the report so that identical runs produce
/// identical text; they go to the run metadata instead.
pub fn emit_report(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to report"));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("benchmark,method,train_error,test_error,train_error_full,test_error_full,repeats\n");
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{:.16e},{:.16e},{}",
                    r.benchmark,
                    r.method.label(),
                    sci2(r.train_error),
                    sci2(r.test_error),
                    r.train_error,
                    r.test_error,
                    r.repeats
                )
                .unwrap();
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Benchmark | | ANOVA | ALS | ANOVA-ALS |\n");
            out.push_str("|---|---|---|---|---|\n");
            let mut order: Vec<&str> = Vec::new();
            for r in rows {
                if !order.contains(&r.benchmark.as_str()) {
                    order.push(&r.benchmark);
                }
            }
            for name in order {
                let cell = |m: Method, train: bool| {
                    rows.iter()
                        .find(|r| r.benchmark == name && r.method == m)
                        .map_or("-".to_string(), |r| {
                            sci2(if train { r.train_error } else { r.test_error })
                        })
                };
                for (label, train) in [("Train", true), ("Test", false)] {
                    let first = if train {
                        display_name(name)
                    } else {
                        String::new()
                    };
                    let cells: Vec<String> = Method::ALL.iter().map(|&m| cell(m, train)).collect();
                    writeln!(out, "| {first} | {label} | {} |", cells.join(" | ")).unwrap();
                }
            }
        }
    }
    Ok(out)
}

/// Writes a tensor train as JSON with round-trip exact numbers.
pub fn save_model(t: &TtTensor, path: &Path) -> Result<()> {
    std::fs::write(path, t.to_json())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TtTensor> {
    TtTensor::from_json(&std::fs::read_to_string(path)?)
}
