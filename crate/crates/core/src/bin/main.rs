use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ttsurrogate::benchmarks::{self, Benchmark};
use ttsurrogate::experiment::{
    emit_report, load_model, run_experiment, save_model, ExperimentSpec, InitMode, Outcome,
    ReportFormat,
};
use ttsurrogate::{relative_error, Dataset};

#[derive(Parser)]
#[command(
    name = "ttsurrogate",
    version,
    about = "Tensor-train surrogates for black-box functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit ANOVA, ALS and ANOVA-ALS surrogates and report their errors.
    Run(RunArgs),
    /// Print every benchmark with its default dimension and bounds.
    ListBenchmarks,
    /// Evaluate a saved model on a saved dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Both,
    Random,
    Anova,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment spec; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark name, or `all` for the full suite.
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<Init>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pde_mesh: Option<usize>,
    /// Report destination; stdout if omitted. Metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    /// Save the ANOVA-ALS tensor train (single benchmark only).
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Save the test set as CSV (single benchmark only).
    #[arg(long)]
    save_test: Option<PathBuf>,
    /// Metadata path when writing to stdout.
    #[arg(long)]
    metadata: Option<PathBuf>,
}

impl RunArgs {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentSpec::default(),
        };
        if let Some(b) = &self.benchmark {
            spec.benchmark = b.clone();
        }
        if self.dim.is_some() {
            spec.dim = self.dim;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { spec.$f = v; })*};
        }
        set!(grid, rank, sweeps, train, test, noise, repeats, seed, pde_mesh);
        if let Some(i) = self.init {
            spec.init = match i {
                Init::Both => InitMode::Both,
                Init::Random => InitMode::Random,
                Init::Anova => InitMode::Anova,
            };
        }
        Ok(spec)
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let spec = args.spec()?;
    let specs: Vec<ExperimentSpec> = if spec.benchmark == "all" {
        benchmarks::names()
            .into_iter()
            .map(|n| ExperimentSpec {
                benchmark: n.into(),
                dim: None,
                ..spec.clone()
            })
            .collect()
    } else {
        vec![spec]
    };
    if specs.len() > 1 && (args.save_model.is_some() || args.save_test.is_some()) {
        bail!("--save-model and --save-test need a single benchmark");
    }
    for s in &specs {
        s.validate()
            .with_context(|| format!("benchmark {}", s.benchmark))?;
    }

    let mut outcomes: Vec<Outcome> = Vec::with_capacity(specs.len());
    for s in &specs {
        outcomes.push(run_experiment(s).with_context(|| format!("benchmark {}", s.benchmark))?);
    }
    let rows: Vec<_> = outcomes.iter().flat_map(|o| o.rows.clone()).collect();
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Markdown => ReportFormat::Markdown,
    };
    let report = emit_report(&rows, format)?;

    if let [only] = outcomes.as_slice() {
        if let Some(p) = &args.save_model {
            let Some(model) = &only.anova_als_model else {
                bail!("--save-model needs an ANOVA-initialized run");
            };
            save_model(model, p)?;
        }
        if let Some(p) = &args.save_test {
            only.test.save(p)?;
        }
    }

    let metadata = json!({
        "runs": outcomes.iter().map(|o| json!({
            "metadata": o.metadata,
            "rows": o.rows,
            "als_reports": o.reports,
        })).collect::<Vec<_>>(),
    });
    let meta_path = match (&args.out, &args.metadata) {
        (_, Some(p)) => Some(p.clone()),
        (Some(out), None) => Some(sidecar(out)),
        (None, None) => None,
    };
    match &args.out {
        Some(p) => fs::write(p, &report).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{report}"),
    }
    if let Some(p) = meta_path {
        fs::write(&p, serde_json::to_string_pretty(&metadata)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn list_benchmarks() -> anyhow::Result<()> {
    println!("name\td\tbounds");
    for name in benchmarks::names() {
        let b = Benchmark::with_default_dim(name)?;
        let mut bounds: Vec<String> = b
            .bounds
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect();
        bounds.dedup();
        println!("{}\t{}\t{}", b.name, b.dim(), bounds.join(" x "));
    }
    Ok(())
}

fn eval(model: &Path, data: &Path) -> anyhow::Result<()> {
    let t = load_model(model).with_context(|| format!("loading {}", model.display()))?;
    let ds = Dataset::load(data).with_context(|| format!("loading {}", data.display()))?;
    let pred = t.get_many(&ds.idxs)?;
    println!("{:.16e}", relative_error(&pred, &ds.ys)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ListBenchmarks => list_benchmarks(),
        Command::Eval { model, data } => eval(&model, &data),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
