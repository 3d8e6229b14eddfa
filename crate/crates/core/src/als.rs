//! Tensor-train completion by alternating least squares.
//!
//! Each core update fixes every other core and, for every slice
//! `G_i(n)` independently, solves the overdetermined system built from the
//! training samples whose `i`-th index equals `n`. For such a sample the
//! tensor element is the bilinear form `g_l^T G_i(n) g_r`, where `g_l` and
//! `g_r` are the products of the cores to the left and right of `i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstsq::solve_min_norm;
use crate::tt::{check_index, relative_error, TtTensor};

/// What to do with a slice that has fewer samples than unknowns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinRowsPolicy {
    #[default]
    Error,
    SkipSlice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlsConfig {
    /// Maximum number of sweeps; one sweep updates cores `1..=d` then `d..=1`.
    pub sweeps: usize,
    /// Stop once a sweep changes the iterate by less than this, relative.
    /// The change is measured per core, or on the whole tensor when
    /// `orthogonalize` is set. Zero disables early stopping.
    pub stop_delta: f64,
    /// Relative singular-value cutoff of the slice least-squares solves.
    pub ls_cutoff: f64,
    pub min_rows_policy: MinRowsPolicy,
    /// QR/LQ gauge moves between updates so the interface matrices stay
    /// well conditioned. The represented tensors are the same in exact
    /// arithmetic; `false` gives the plain update sequence.
    pub orthogonalize: bool,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            sweeps: 50,
            stop_delta: 0.0,
            ls_cutoff: 1e-12,
            min_rows_policy: MinRowsPolicy::Error,
            orthogonalize: false,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::invalid("sweeps must be at least 1"));
        }
        if !(self.stop_delta >= 0.0) {
            return Err(Error::invalid("stop_delta must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.ls_cutoff) {
            return Err(Error::invalid("ls_cutoff must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlsReport {
    pub sweeps_run: usize,
    /// Relative training error after each sweep.
    pub train_error_per_sweep: Vec<f64>,
    pub converged: bool,
}

fn check_mode(t: &TtTensor, i: usize) -> Result<()> {
    if i >= t.ndim() {
        return Err(Error::invalid(format!(
            "mode {i} out of range for a {}-mode tensor",
            t.ndim()
        )));
    }
    Ok(())
}

/// `g_l^T = G_1(n_1) ... G_{i-1}(n_{i-1})`, of length `R_{i-1}`; `[1]` for the first mode.
pub fn interface_left(t: &TtTensor, idx: &[usize], i: usize) -> Result<Vec<f64>> {
    check_mode(t, i)?;
    t.check_index(idx)?;
    let mut v = vec![1.0];
    for (k, &n) in idx.iter().enumerate().take(i) {
        let mut next = vec![0.0; t.ranks()[k + 1]];
        t.row_times_slice(k, n, &v, &mut next);
        v = next;
    }
    Ok(v)
}

/// `g_r = G_{i+1}(n_{i+1}) ... G_d(n_d)`, of length `R_i`; `[1]` for the last mode.
///
/// Accumulated right to left.
pub fn interface_right(t: &TtTensor, idx: &[usize], i: usize) -> Result<Vec<f64>> {
    check_mode(t, i)?;
    t.check_index(idx)?;
    let mut w = vec![1.0];
    for k in (i + 1..t.ndim()).rev() {
        let mut next = vec![0.0; t.ranks()[k]];
        t.slice_times_col(k, idx[k], &w, &mut next);
        w = next;
    }
    Ok(w)
}

/// Row of the slice system: `a[p * R_i + q] = g_l[p] * g_r[q]`, so that
/// `<a, vec(G)> = g_l^T G g_r` for `G` vectorized row by row.
pub fn build_ls_row(g_l: &[f64], g_r: &[f64]) -> Vec<f64> {
    g_l.iter()
        .flat_map(|&l| g_r.iter().map(move |&r| l * r))
        .collect()
}

/// Sample positions grouped by the value of each mode.
struct Buckets(Vec<Vec<Vec<usize>>>);

impl Buckets {
    fn new<I: AsRef<[usize]>>(idxs: &[I], dims: &[usize]) -> Self {
        let mut b: Vec<Vec<Vec<usize>>> = dims.iter().map(|&n| vec![Vec::new(); n]).collect();
        for (s, idx) in idxs.iter().enumerate() {
            for (mode, &j) in idx.as_ref().iter().enumerate() {
                b[mode][j].push(s);
            }
        }
        Buckets(b)
    }
}

/// Re-solves every slice of core `i` given flattened per-sample interface
/// vectors (`left`: samples x `R_{i-1}`, `right`: samples x `R_i`).
fn solve_core(
    t: &mut TtTensor,
    i: usize,
    samples_by_value: &[Vec<usize>],
    ys: &[f64],
    left: &[f64],
    right: &[f64],
    cfg: &AlsConfig,
) -> Result<()> {
    let (rl, n_i, rr) = (t.ranks()[i], t.dims()[i], t.ranks()[i + 1]);
    let unknowns = rl * rr;
    for (value, samples) in samples_by_value.iter().enumerate() {
        let k = samples.len();
        if k == 0 {
            return Err(Error::Coverage { mode: i, value });
        }
        if k < unknowns {
            match cfg.min_rows_policy {
                MinRowsPolicy::Error => {
                    return Err(Error::InsufficientRows {
                        mode: i,
                        value,
                        rows: k,
                        unknowns,
                    })
                }
                MinRowsPolicy::SkipSlice => continue,
            }
        }
        let mut a = DMatrix::<f64>::zeros(k, unknowns);
        let mut b = DVector::<f64>::zeros(k);
        for (row, &s) in samples.iter().enumerate() {
            let gl = &left[s * rl..(s + 1) * rl];
            let gr = &right[s * rr..(s + 1) * rr];
            for (p, &l) in gl.iter().enumerate() {
                for (q, &r) in gr.iter().enumerate() {
                    a[(row, p * rr + q)] = l * r;
                }
            }
            b[row] = ys[s];
        }
        let g = solve_min_norm(a, b, cfg.ls_cutoff)?;
        let core = t.core_mut(i);
        for p in 0..rl {
            for q in 0..rr {
                core[(p * n_i + value) * rr + q] = g[p * rr + q];
            }
        }
    }
    Ok(())
}

fn check_dataset<I: AsRef<[usize]>>(t: &TtTensor, idxs: &[I], ys: &[f64]) -> Result<()> {
    if idxs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} indices but {} values",
            idxs.len(),
            ys.len()
        )));
    }
    for (row, idx) in idxs.iter().enumerate() {
        check_index(t.dims(), idx.as_ref()).map_err(|e| e.at_row(row))?;
    }
    Ok(())
}

/// Updates core `i` in place from the training data, recomputing every
/// interface vector from scratch.
pub fn update_core<I: AsRef<[usize]>>(
    t: &mut TtTensor,
    i: usize,
    idxs: &[I],
    ys: &[f64],
    cfg: &AlsConfig,
) -> Result<()> {
    check_mode(t, i)?;
    check_dataset(t, idxs, ys)?;
    let mut left = Vec::with_capacity(idxs.len() * t.ranks()[i]);
    let mut right = Vec::with_capacity(idxs.len() * t.ranks()[i + 1]);
    for idx in idxs {
        left.extend(interface_left(t, idx.as_ref(), i)?);
        right.extend(interface_right(t, idx.as_ref(), i)?);
    }
    let buckets = Buckets::new(idxs, t.dims());
    solve_core(t, i, &buckets.0[i], ys, &left, &right, cfg)
}

/// Cached interface vectors for every core position.
///
/// `left[i]` holds `g_l` for core `i` (samples x `R_{i-1}`), `right[i]`
/// holds `g_r` (samples x `R_i`). The accumulation order matches
/// [`interface_left`] / [`interface_right`], so cached values are
/// bit-identical to recomputing them.
struct Interfaces {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl Interfaces {
    fn new<I: AsRef<[usize]>>(t: &TtTensor, idxs: &[I]) -> Self {
        let d = t.ndim();
        let m = idxs.len();
        let mut iface = Interfaces {
            left: vec![Vec::new(); d],
            right: vec![Vec::new(); d],
        };
        iface.left[0] = vec![1.0; m];
        iface.right[d - 1] = vec![1.0; m];
        for k in 0..d - 1 {
            iface.refresh_left(t, idxs, k);
        }
        for k in (1..d).rev() {
            iface.refresh_right(t, idxs, k);
        }
        iface
    }

    /// Recomputes `left[k + 1]` after core `k` changed.
    fn refresh_left<I: AsRef<[usize]>>(&mut self, t: &TtTensor, idxs: &[I], k: usize) {
        let (rl, rr) = (t.ranks()[k], t.ranks()[k + 1]);
        let mut next = vec![0.0; idxs.len() * rr];
        let cur = &self.left[k];
        for (s, idx) in idxs.iter().enumerate() {
            t.row_times_slice(
                k,
                idx.as_ref()[k],
                &cur[s * rl..(s + 1) * rl],
                &mut next[s * rr..(s + 1) * rr],
            );
        }
        self.left[k + 1] = next;
    }

    /// Recomputes `right[k - 1]` after core `k` changed.
    fn refresh_right<I: AsRef<[usize]>>(&mut self, t: &TtTensor, idxs: &[I], k: usize) {
        let (rl, rr) = (t.ranks()[k], t.ranks()[k + 1]);
        let mut next = vec![0.0; idxs.len() * rl];
        let cur = &self.right[k];
        for (s, idx) in idxs.iter().enumerate() {
            t.slice_times_col(
                k,
                idx.as_ref()[k],
                &cur[s * rr..(s + 1) * rr],
                &mut next[s * rl..(s + 1) * rl],
            );
        }
        self.right[k - 1] = next;
    }
}

fn train_error<I: AsRef<[usize]>>(t: &TtTensor, idxs: &[I], ys: &[f64]) -> f64 {
    let pred: Vec<f64> = idxs.iter().map(|i| t.get_unchecked(i.as_ref())).collect();
    match relative_error(&pred, ys) {
        Ok(e) => e,
        // all-zero targets: fall back to the absolute residual norm
        Err(_) => pred.iter().map(|p| p * p).sum::<f64>().sqrt(),
    }
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let diff = old
        .iter()
        .zip(new)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm = old.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Runs ALS from `init` with fixed ranks.
pub fn run<I: AsRef<[usize]>>(
    init: &TtTensor,
    idxs: &[I],
    ys: &[f64],
    cfg: &AlsConfig,
) -> Result<(TtTensor, AlsReport)> {
    cfg.validate()?;
    check_dataset(init, idxs, ys)?;
    if idxs.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let d = init.ndim();
    let mut t = init.clone();
    if cfg.orthogonalize {
        for k in (1..d).rev() {
            t.right_orthogonalize(k);
        }
    }
    let buckets = Buckets::new(idxs, t.dims());
    let mut iface = Interfaces::new(&t, idxs);
    let mut report = AlsReport {
        sweeps_run: 0,
        train_error_per_sweep: Vec::with_capacity(cfg.sweeps),
        converged: false,
    };

    for _ in 0..cfg.sweeps {
        let before = t.clone();
        for i in 0..d {
            solve_core(
                &mut t,
                i,
                &buckets.0[i],
                ys,
                &iface.left[i],
                &iface.right[i],
                cfg,
            )?;
            if i + 1 < d {
                if cfg.orthogonalize {
                    t.left_orthogonalize(i);
                }
                iface.refresh_left(&t, idxs, i);
            }
        }
        for i in (0..d).rev() {
            solve_core(
                &mut t,
                i,
                &buckets.0[i],
                ys,
                &iface.left[i],
                &iface.right[i],
                cfg,
            )?;
            if i > 0 {
                if cfg.orthogonalize {
                    t.right_orthogonalize(i);
                }
                iface.refresh_right(&t, idxs, i);
            }
        }

        report.sweeps_run += 1;
        report.train_error_per_sweep.push(train_error(&t, idxs, ys));

        if cfg.stop_delta > 0.0 {
            let change = if cfg.orthogonalize {
                // cores move with the gauge, so compare the tensors instead
                let norm = before.norm();
                let diff = before.distance(&t)?;
                if norm > 0.0 {
                    diff / norm
                } else if diff > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                before
                    .cores()
                    .iter()
                    .zip(t.cores())
                    .map(|(a, b)| relative_change(a, b))
                    .fold(0.0f64, f64::max)
            };
            if change < cfg.stop_delta {
                report.converged = true;
                break;
            }
        }
    }
    Ok((t, report))
}
