//! Parametric diffusion benchmark on the unit square.
//!
//! Solves `-div(k(x, p) grad u) = 1` with `u = 0` on the boundary, where the
//! conductivity is `p_mu` inside the `mu`-th disk of an `m x m` disk array
//! and 1 elsewhere. The value of interest is the integral of `u` over the
//! square.
//!
//! Discretization: vertex-centred 5-point finite differences on an
//! `(n + 2) x (n + 2)` uniform mesh, edge conductivities from the harmonic
//! mean of the two end nodes, Jacobi-preconditioned conjugate gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centres and radius of the `m x m` disk array.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskLayout {
    pub m: usize,
    pub rho: f64,
    /// Centre of disk `mu = i * m + j` (0-based `i`, `j`).
    pub centers: Vec<(f64, f64)>,
}

impl DiskLayout {
    pub fn new(m: usize) -> Self {
        let rho = 1.0 / (4 * m + 2) as f64;
        let q = (1.0 - 2.0 * m as f64 * rho) / (m + 1) as f64;
        let coord = |i: usize| {
            let i = (i + 1) as f64;
            i * q + (2.0 * i - 1.0) * rho
        };
        let centers = (0..m)
            .flat_map(|i| (0..m).map(move |j| (coord(i), coord(j))))
            .collect();
        DiskLayout { m, rho, centers }
    }

    /// Index of the disk containing `x` (boundary circle included).
    pub fn disk_at(&self, x: (f64, f64)) -> Option<usize> {
        let r2 = self.rho * self.rho;
        self.centers.iter().position(|&(cx, cy)| {
            let (dx, dy) = (x.0 - cx, x.1 - cy);
            dx * dx + dy * dy <= r2
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    /// Interior mesh points per axis.
    pub n: usize,
    /// Relative residual target of the CG solve.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            n: 127,
            cg_tol: 1e-10,
            cg_max_iter: 20_000,
        }
    }
}

impl PdeConfig {
    pub fn with_mesh(n: usize) -> Self {
        PdeConfig {
            n,
            ..PdeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::invalid(format!("mesh size {} is below 16", self.n)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::invalid("cg_tol must be positive"));
        }
        Ok(())
    }
}

fn layout_for(p: &[f64]) -> Result<DiskLayout> {
    let m = (p.len() as f64).sqrt().round() as usize;
    if m == 0 || m * m != p.len() {
        return Err(Error::invalid(format!(
            "{} parameters do not form an m x m disk array",
            p.len()
        )));
    }
    Ok(DiskLayout::new(m))
}

/// Conductivity at `x`: `p[mu]` inside disk `mu`, 1 outside all disks.
pub fn coefficient(p: &[f64], x: (f64, f64)) -> Result<f64> {
    let layout = layout_for(p)?;
    Ok(layout.disk_at(x).map_or(1.0, |mu| p[mu]))
}

/// Discrete field on the `n x n` interior nodes; `values[i * n + j]` sits at
/// `((i + 1) h, (j + 1) h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn spacing(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Assembled 5-point operator, scaled by `h^2`.
#[derive(Clone, Debug)]
pub struct DiffusionOperator {
    n: usize,
    /// `east[i * n + j]`: conductance between mesh columns `i` and `i + 1`
    /// (mesh column 0 is the boundary), row `j + 1`. Shape `(n + 1) x n`.
    east: Vec<f64>,
    /// Same along the second axis: `north[i * (n + 1) + j]`, shape `n x (n + 1)`.
    north: Vec<f64>,
    diag: Vec<f64>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl DiffusionOperator {
    pub fn assemble(p: &[f64], n: usize) -> Result<Self> {
        let layout = layout_for(p)?;
        let h = 1.0 / (n + 1) as f64;
        // conductivity on the full (n + 2)^2 mesh including boundary nodes
        let full = n + 2;
        let mut k = vec![1.0; full * full];
        for i in 0..full {
            for j in 0..full {
                let x = (i as f64 * h, j as f64 * h);
                if let Some(mu) = layout.disk_at(x) {
                    k[i * full + j] = p[mu];
                }
            }
        }
        let kat = |i: usize, j: usize| k[i * full + j];

        let mut east = vec![0.0; (n + 1) * n];
        for i in 0..=n {
            for j in 0..n {
                east[i * n + j] = harmonic(kat(i, j + 1), kat(i + 1, j + 1));
            }
        }
        let mut north = vec![0.0; n * (n + 1)];
        for i in 0..n {
            for j in 0..=n {
                north[i * (n + 1) + j] = harmonic(kat(i + 1, j), kat(i + 1, j + 1));
            }
        }
        let mut diag = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                diag[i * n + j] = east[i * n + j]
                    + east[(i + 1) * n + j]
                    + north[i * (n + 1) + j]
                    + north[i * (n + 1) + j + 1];
            }
        }
        Ok(DiffusionOperator {
            n,
            east,
            north,
            diag,
        })
    }

    pub fn size(&self) -> usize {
        self.n * self.n
    }

    /// `out = A u` for the `h^2`-scaled operator.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let c = i * n + j;
                let mut acc = self.diag[c] * u[c];
                if i > 0 {
                    acc -= self.east[i * n + j] * u[c - n];
                }
                if i + 1 < n {
                    acc -= self.east[(i + 1) * n + j] * u[c + n];
                }
                if j > 0 {
                    acc -= self.north[i * (n + 1) + j] * u[c - 1];
                }
                if j + 1 < n {
                    acc -= self.north[i * (n + 1) + j + 1] * u[c + 1];
                }
                out[c] = acc;
            }
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG for `A u = b` from a zero initial guess.
fn pcg(op: &DiffusionOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let size = op.size();
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut u = vec![0.0; size];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; size];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(u);
    }
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for _ in 0..max_iter {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for ((ui, ri), (pi, api)) in u.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *ui += alpha * pi;
            *ri -= alpha * api;
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return Ok(u);
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: res,
    })
}

fn check_params(p: &[f64]) -> Result<()> {
    if let Some(mu) = p.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!(
            "conductivity {mu} must be positive and finite, got {}",
            p[mu]
        )));
    }
    Ok(())
}

pub fn solve_diffusion(p: &[f64], cfg: &PdeConfig) -> Result<Field> {
    cfg.validate()?;
    check_params(p)?;
    let op = DiffusionOperator::assemble(p, cfg.n)?;
    let h = 1.0 / (cfg.n + 1) as f64;
    let b = vec![h * h; op.size()];
    let values = pcg(&op, &b, cfg.cg_tol, cfg.cg_max_iter)?;
    Ok(Field { n: cfg.n, values })
}

/// Composite trapezoidal integral of the field over the square (boundary values are zero).
pub fn integrate(field: &Field) -> f64 {
    let h = field.spacing();
    h * h * field.values.iter().sum::<f64>()
}

/// Mean temperature over the unit square.
pub fn pde_voi(p: &[f64], cfg: &PdeConfig) -> Result<f64> {
    Ok(integrate(&solve_diffusion(p, cfg)?))
}
