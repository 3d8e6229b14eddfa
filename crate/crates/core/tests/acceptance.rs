//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the full-size experiments, so it takes several minutes. The process
//! exits with status 0 even when a criterion fails, so that `cargo test`
//! reports the other targets normally; set `TTS_ACCEPTANCE_STRICT=1` to turn
//! failures into a nonzero exit.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttsurrogate::als::{self, AlsConfig, AlsReport};
use ttsurrogate::benchmarks::{ANALYTIC, PDE_VOI};
use ttsurrogate::experiment::{
    emit_report, run_experiment, ExperimentSpec, Method, Outcome, ReportFormat, ResultRow,
};
use ttsurrogate::pde::{pde_voi, PdeConfig};
use ttsurrogate::sampling::{lhs_indices, uniform_indices};
use ttsurrogate::{relative_error, AnovaModel, TtTensor};

const NESTED: &str = "TTS_ACCEPTANCE_NESTED";
const SEED: u64 = 2022;

/// ANOVA test errors of the reference table, in `ANALYTIC` order.
const ANOVA_REFERENCE: [(&str, f64); 12] = [
    ("ackley", 1.1e-2),
    ("alpine", 2.1e-2),
    ("dixon", 4.7e-2),
    ("exponential", 1.3e-1),
    ("grienwank", 2.0e-2),
    ("michalewicz", 4.0e-2),
    ("piston", 9.4e-2),
    ("qing", 1.4e1),
    ("rastrigin", 8.1e-3),
    ("rosenbrock", 2.0e-1),
    ("schaffer", 4.0e-2),
    ("schwefel", 1.3e-2),
];

struct Suite {
    results: Vec<(String, bool)>,
    reports: Vec<(String, AlsReport)>,
}

impl Suite {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn row(out: &Outcome, m: Method) -> &ResultRow {
    out.rows.iter().find(|r| r.method == m).expect("method row")
}

fn theorem_exactness(s: &mut Suite) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(2..=5);
        let dims: Vec<usize> = (0..d).map(|_| rng.random_range(3..=6)).collect();
        // the full grid with unit-scale values
        let total: usize = dims.iter().product();
        let mut idxs = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            idxs.push(idx.clone());
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        let ys: Vec<f64> = (0..total).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = AnovaModel::fit(&idxs, &ys, &dims).unwrap();
        let rank = rng.random_range(2..=5);
        let t = model.to_tt(rank, 0.0, rng.random()).unwrap();
        for idx in &idxs {
            worst = worst.max((t.get(idx).unwrap() - model.eval(idx).unwrap()).abs());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    s.record(
        "Theorem exactness",
        worst <= 1e-12 && secs < 1.0,
        format!("50 models, max |tt - anova| = {worst:.1e} (<= 1e-12), {secs:.2} s (< 1 s)"),
    );
}

fn exact_recovery(s: &mut Suite) {
    let clock = Instant::now();
    let dims = [8; 5];
    let truth = TtTensor::random(&dims, 3, SEED).unwrap();
    let train = lhs_indices(&dims, 5000, SEED + 1).unwrap();
    let ys = truth.get_many(&train).unwrap();
    let init = TtTensor::random(&dims, 3, SEED + 2).unwrap();
    let (fit, report) = als::run(&init, &train, &ys, &AlsConfig::default()).unwrap();
    let test = uniform_indices(&dims, 10_000, SEED + 3).unwrap();
    let err = relative_error(
        &fit.get_many(&test).unwrap(),
        &truth.get_many(&test).unwrap(),
    )
    .unwrap();
    let secs = clock.elapsed().as_secs_f64();
    s.reports.push(("exact recovery".into(), report));
    s.record(
        "ALS exact recovery",
        err < 1e-8 && secs < 30.0,
        format!("d=5 N=8 rank 3, test error {err:.1e} (< 1e-8), {secs:.1} s (< 30 s)"),
    );
}

fn table_spec(name: &str, noise: f64) -> ExperimentSpec {
    ExperimentSpec {
        benchmark: name.into(),
        noise,
        seed: SEED,
        ..ExperimentSpec::default()
    }
}

fn run_table(s: &mut Suite, noise: f64) -> (Vec<Outcome>, f64) {
    let clock = Instant::now();
    let mut outcomes = Vec::new();
    for name in ANALYTIC {
        let out = run_experiment(&table_spec(name, noise)).unwrap();
        for (m, r) in &out.reports {
            s.reports
                .push((format!("{name} {} noise={noise}", m.label()), r.clone()));
        }
        outcomes.push(out);
    }
    let rows: Vec<ResultRow> = outcomes.iter().flat_map(|o| o.rows.clone()).collect();
    print!("{}", emit_report(&rows, ReportFormat::Markdown).unwrap());
    (outcomes, clock.elapsed().as_secs_f64())
}

fn table3(s: &mut Suite) -> Vec<Outcome> {
    let (outcomes, secs) = run_table(s, 0.0);
    let mut within = Vec::new();
    let mut beats = 0;
    let mut le_1e2 = 0;
    let mut le_1e4 = 0;
    for (out, (name, reference)) in outcomes.iter().zip(ANOVA_REFERENCE) {
        let anova = row(out, Method::Anova).test_error;
        let als = row(out, Method::Als).test_error;
        let ours = row(out, Method::AnovaAls).test_error;
        let ratio = anova / reference;
        if !(1.0 / 3.0..=3.0).contains(&ratio) {
            within.push(format!("{name} {anova:.1e} vs {reference:.1e}"));
        }
        beats += usize::from(ours * 10.0 <= als);
        le_1e2 += usize::from(ours <= 1e-2);
        le_1e4 += usize::from(ours <= 1e-4);
    }
    let a = within.is_empty();
    let b = beats >= 11;
    let c = le_1e2 == 12 && le_1e4 >= 8;
    let misses = if a {
        String::new()
    } else {
        format!(" [outside: {}]", within.join(", "))
    };
    s.record(
        "Table 3 regime",
        a && b && c && secs < 900.0,
        format!(
            "(a) ANOVA within 3x of reference on {}/12{misses}; (b) ANOVA-ALS >= 10x better than ALS on {beats}/12 (>= 11); \
             (c) ANOVA-ALS <= 1e-2 on {le_1e2}/12 (12), <= 1e-4 on {le_1e4}/12 (>= 8); {secs:.0} s (< 900 s)",
            12 - within.len()
        ),
    );
    outcomes
}

fn table4(s: &mut Suite) {
    let (outcomes, _) = run_table(s, 1e-2);
    let mut in_band = 0;
    let mut beats = 0;
    let mut outside = Vec::new();
    for out in &outcomes {
        let als = row(out, Method::Als).test_error;
        let ours = row(out, Method::AnovaAls).test_error;
        if (1e-3..=1e-1).contains(&ours) {
            in_band += 1;
        } else {
            outside.push(format!("{} {ours:.1e}", out.metadata.spec.benchmark));
        }
        beats += usize::from(ours * 10.0 <= als);
    }
    let misses = if outside.is_empty() {
        String::new()
    } else {
        format!(" [outside: {}]", outside.join(", "))
    };
    s.record(
        "Table 4 noise regime",
        in_band == 12 && beats >= 10,
        format!("ANOVA-ALS test error in [1e-3, 1e-1] on {in_band}/12{misses}; >= 10x better than ALS on {beats}/12 (>= 10)"),
    );
}

fn series_voi() -> f64 {
    let mut s = 0.0;
    for m in (1..200).step_by(2) {
        for n in (1..200).step_by(2) {
            let (m, n) = (m as f64, n as f64);
            s += 64.0 / (PI.powi(6) * m * m * n * n * (m * m + n * n));
        }
    }
    s
}

fn pde(s: &mut Suite) {
    let clock = Instant::now();
    let fine = PdeConfig::default();
    let oracle = series_voi();
    let voi = pde_voi(&[1.0; 9], &fine).unwrap();
    let rel = (voi - oracle).abs() / oracle;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut transpose_gap = 0.0f64;
    for _ in 0..3 {
        let p: Vec<f64> = (0..9).map(|_| rng.random_range(0.01..1.0)).collect();
        let pt: Vec<f64> = (0..9).map(|mu| p[(mu % 3) * 3 + mu / 3]).collect();
        let (a, b) = (pde_voi(&p, &fine).unwrap(), pde_voi(&pt, &fine).unwrap());
        transpose_gap = transpose_gap.max((a - b).abs() / a);
    }
    let half = pde_voi(&[0.5; 9], &fine).unwrap();

    let spec = ExperimentSpec {
        benchmark: PDE_VOI.into(),
        pde_mesh: 63,
        test: 2000,
        seed: SEED,
        ..ExperimentSpec::default()
    };
    let out = run_experiment(&spec).unwrap();
    for (m, r) in &out.reports {
        s.reports
            .push((format!("pde-voi {}", m.label()), r.clone()));
    }
    print!(
        "{}",
        emit_report(&out.rows, ReportFormat::Markdown).unwrap()
    );
    let als = row(&out, Method::Als).test_error;
    let ours = row(&out, Method::AnovaAls).test_error;
    let secs = clock.elapsed().as_secs_f64();
    s.record(
        "PDE oracle and surrogate",
        rel <= 1e-2 && transpose_gap <= 1e-9 && voi < half && ours <= 1e-3 && ours * 10.0 <= als && secs < 1200.0,
        format!(
            "VOI(1) = {voi:.6} vs series {oracle:.6} (rel {rel:.1e} <= 1e-2); transpose gap {transpose_gap:.1e} (<= 1e-9, CG tolerance); \
             VOI(0.5) = {half:.6} > VOI(1); n=63 surrogate: ANOVA-ALS {ours:.1e} (<= 1e-3) vs ALS {als:.1e} (>= 10x); {secs:.0} s (< 1200 s)"
        ),
    );
}

fn monotonicity(s: &mut Suite) {
    let mut bad = Vec::new();
    for (name, r) in &s.reports {
        let e = &r.train_error_per_sweep;
        if e.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-10)) {
            bad.push(name.clone());
        }
    }
    let n = s.reports.len();
    s.record(
        "ALS monotonicity",
        bad.is_empty() && n > 0,
        format!(
            "{} of {n} ALS runs non-increasing per sweep (1e-10 relative slack){}",
            n - bad.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!(" [violations: {}]", bad.join(", "))
            }
        ),
    );
}

fn determinism(s: &mut Suite, first: &Outcome) {
    let again = run_experiment(&first.metadata.spec).unwrap();
    let same = [ReportFormat::Csv, ReportFormat::Markdown]
        .iter()
        .all(|&f| emit_report(&first.rows, f).unwrap() == emit_report(&again.rows, f).unwrap());
    let models = first.anova_als_model == again.anova_als_model;
    s.record(
        "Determinism",
        same && models,
        format!(
            "re-run of {} gives byte-identical CSV and markdown reports: {same}; identical ANOVA-ALS model: {models}",
            first.metadata.spec.benchmark
        ),
    );
}

/// `count("test result: ok. 8 passed; 0 failed; ...", "passed") == 8`
fn count(line: &str, key: &str) -> usize {
    line.split([';', '.'])
        .filter_map(|p| p.trim().strip_suffix(key))
        .filter_map(|n| n.trim().parse::<usize>().ok())
        .sum()
}

fn property_suites(s: &mut Suite) {
    let out = Command::new(env!("CARGO"))
        .args(["test", "--workspace", "--offline", "--quiet"])
        .env(NESTED, "1")
        .output();
    let (pass, detail) = match out {
        Ok(out) => {
            let text = String::from_utf8_lossy(&out.stdout);
            let results: Vec<&str> = text
                .lines()
                .filter(|l| l.starts_with("test result:"))
                .collect();
            let passed: usize = results.iter().map(|l| count(l, "passed")).sum();
            let failed: usize = results.iter().map(|l| count(l, "failed")).sum();
            (
                out.status.success() && failed == 0 && passed > 0,
                format!("{passed} unit, property and integration tests passed, {failed} failed"),
            )
        }
        Err(e) => (false, format!("could not run cargo: {e}")),
    };
    s.record("Property suites", pass, detail);
}

fn main() {
    if std::env::var_os(NESTED).is_some() {
        return;
    }
    let mut s = Suite {
        results: Vec::new(),
        reports: Vec::new(),
    };
    theorem_exactness(&mut s);
    exact_recovery(&mut s);
    let t3 = table3(&mut s);
    table4(&mut s);
    pde(&mut s);
    monotonicity(&mut s);
    determinism(&mut s, &t3[0]);
    property_suites(&mut s);

    let failed: Vec<&str> = s
        .results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        s.results.len() - failed.len(),
        s.results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (failed: {})", failed.join(", "))
        }
    );
    if !failed.is_empty() && std::env::var_os("TTS_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
