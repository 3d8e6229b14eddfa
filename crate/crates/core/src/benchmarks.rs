//! Analytical benchmark functions and the PDE black box.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::pde::{pde_voi, PdeConfig};

/// The analytical benchmarks in report order.
pub const ANALYTIC: [&str; 12] = [
    "ackley",
    "alpine",
    "dixon",
    "exponential",
    "grienwank",
    "michalewicz",
    "piston",
    "qing",
    "rastrigin",
    "rosenbrock",
    "schaffer",
    "schwefel",
];

pub const PDE_VOI: &str = "pde-voi";

/// Every registered benchmark name in report order.
pub fn names() -> Vec<&'static str> {
    ANALYTIC
        .iter()
        .copied()
        .chain(std::iter::once(PDE_VOI))
        .collect()
}

pub const DEFAULT_DIM: usize = 7;
pub const MICHALEWICZ_M: u32 = 10;

/// Piston parameter ranges, in the order M, S, V_0, k, P_0, T_a, T_0.
pub const PISTON_BOUNDS: [(f64, f64); 7] = [
    (30.0, 60.0),
    (0.005, 0.020),
    (0.002, 0.010),
    (1000.0, 5000.0),
    (90000.0, 110000.0),
    (290.0, 296.0),
    (340.0, 360.0),
];

#[derive(Clone, Debug, PartialEq)]
pub enum Function {
    Ackley,
    Alpine,
    Dixon,
    Exponential,
    Grienwank,
    Michalewicz { m: u32 },
    Piston,
    Qing,
    Rastrigin,
    Rosenbrock,
    Schaffer,
    Schwefel,
    PdeVoi(PdeConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub bounds: Vec<(f64, f64)>,
    pub function: Function,
}

impl Benchmark {
    /// Looks a benchmark up by name. `piston` requires `d == 7` and
    /// `pde-voi` requires `d == 9`; the others accept any `d >= 2`.
    pub fn new(name: &str, d: usize) -> Result<Self> {
        let fixed = |want: usize| {
            if d == want {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} is {want}-dimensional, got d = {d}"
                )))
            }
        };
        if d < 2 {
            return Err(Error::invalid(format!("d must be at least 2, got {d}")));
        }
        let (function, bound) = match name {
            "ackley" => (Function::Ackley, (-32.768, 32.768)),
            "alpine" => (Function::Alpine, (-10.0, 10.0)),
            "dixon" => (Function::Dixon, (-10.0, 10.0)),
            "exponential" => (Function::Exponential, (-1.0, 1.0)),
            "grienwank" => (Function::Grienwank, (-600.0, 600.0)),
            "michalewicz" => (Function::Michalewicz { m: MICHALEWICZ_M }, (0.0, PI)),
            "qing" => (Function::Qing, (0.0, 500.0)),
            "rastrigin" => (Function::Rastrigin, (-5.12, 5.12)),
            "rosenbrock" => (Function::Rosenbrock, (-2.048, 2.048)),
            "schaffer" => (Function::Schaffer, (-100.0, 100.0)),
            "schwefel" => (Function::Schwefel, (-500.0, 500.0)),
            "piston" => {
                fixed(7)?;
                return Ok(Benchmark {
                    name: name.into(),
                    bounds: PISTON_BOUNDS.to_vec(),
                    function: Function::Piston,
                });
            }
            PDE_VOI => {
                fixed(9)?;
                return Ok(Benchmark::pde_voi(PdeConfig::default()));
            }
            _ => return Err(Error::invalid(format!("unknown benchmark {name:?}"))),
        };
        Ok(Benchmark {
            name: name.into(),
            bounds: vec![bound; d],
            function,
        })
    }

    /// Natural dimension: 7 for the analytical functions, 9 for `pde-voi`.
    pub fn with_default_dim(name: &str) -> Result<Self> {
        let d = if name == PDE_VOI { 9 } else { DEFAULT_DIM };
        Benchmark::new(name, d)
    }

    /// The 3 x 3 disk diffusion problem with conductivities in `[0.01, 1]`.
    pub fn pde_voi(cfg: PdeConfig) -> Self {
        Benchmark {
            name: PDE_VOI.into(),
            bounds: vec![(0.01, 1.0); 9],
            function: Function::PdeVoi(cfg),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{} expects {} inputs, got {}",
                self.name,
                self.dim(),
                x.len()
            )));
        }
        Ok(match &self.function {
            Function::Ackley => ackley(x),
            Function::Alpine => alpine(x),
            Function::Dixon => dixon(x),
            Function::Exponential => exponential(x),
            Function::Grienwank => grienwank(x),
            Function::Michalewicz { m } => michalewicz(x, *m),
            Function::Piston => piston(x),
            Function::Qing => qing(x),
            Function::Rastrigin => rastrigin(x),
            Function::Rosenbrock => rosenbrock(x),
            Function::Schaffer => schaffer(x),
            Function::Schwefel => schwefel(x),
            Function::PdeVoi(cfg) => return pde_voi(x, cfg),
        })
    }
}

pub fn ackley(x: &[f64]) -> f64 {
    let (a, b, c) = (20.0, 0.2, 2.0 * PI);
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
    -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
}

pub fn alpine(x: &[f64]) -> f64 {
    x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum()
}

pub fn dixon(x: &[f64]) -> f64 {
    let head = (x[0] - 1.0).powi(2);
    head + x
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k + 2) as f64 * (2.0 * w[1] * w[1] - w[0]).powi(2))
        .sum::<f64>()
}

pub fn exponential(x: &[f64]) -> f64 {
    -(-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
}

pub fn grienwank(x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p = x
        .iter()
        .enumerate()
        .map(|(k, v)| (v / ((k + 1) as f64).sqrt()).cos())
        .product::<f64>();
    s - p + 1.0
}

pub fn michalewicz(x: &[f64], m: u32) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(k, v)| v.sin() * ((k + 1) as f64 * v * v / PI).sin().powi(2 * m as i32))
        .sum::<f64>()
}

/// Cycle time of a piston; inputs `(M, S, V_0, k, P_0, T_a, T_0)`.
pub fn piston(x: &[f64]) -> f64 {
    let [m, s, v0, k, p0, ta, t0] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6]];
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let v = s / (2.0 * k) * ((a * a + 4.0 * k * p0 * v0 / t0 * ta).sqrt() - a);
    2.0 * PI * (m / (k + s * s * p0 * v0 / t0 * ta / (v * v))).sqrt()
}

pub fn qing(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(k, v)| (v * v - (k + 1) as f64).powi(2))
        .sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    let a = 10.0;
    a * x.len() as f64
        + x.iter()
            .map(|v| v * v - a * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn schaffer(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let r2 = w[0] * w[0] + w[1] * w[1];
            0.5 + (r2.sqrt().sin().powi(2) - 0.5) / (1.0 + 0.001 * r2).powi(2)
        })
        .sum()
}

pub fn schwefel(x: &[f64]) -> f64 {
    418.9829 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}
