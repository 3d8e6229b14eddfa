//! Tensor-train representation.
//!
//! A `d`-dimensional tensor of shape `N_1 x ... x N_d` is stored as `d`
//! three-dimensional cores, core `k` shaped `(R_{k-1}, N_k, R_k)` with
//! `R_0 = R_d = 1`. An element is the product of the per-mode slice matrices
//! `G_1(n_1) G_2(n_2) ... G_d(n_d)`.
//!
//! Cores are stored flattened in row-major `(left rank, mode index, right rank)`
//! order, which is also the on-disk JSON layout. Library indices are 0-based.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Default cap on the number of entries [`TtTensor::to_full`] will materialize.
pub const DEFAULT_FULL_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TtTensorRepr", into = "TtTensorRepr")]
pub struct TtTensor {
    dims: Vec<usize>,
    ranks: Vec<usize>,
    cores: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TtTensorRepr {
    dims: Vec<usize>,
    ranks: Vec<usize>,
    cores: Vec<Vec<f64>>,
}

impl TryFrom<TtTensorRepr> for TtTensor {
    type Error = Error;

    fn try_from(r: TtTensorRepr) -> Result<Self> {
        TtTensor::new(r.dims, r.ranks, r.cores)
    }
}

impl From<TtTensor> for TtTensorRepr {
    fn from(t: TtTensor) -> Self {
        TtTensorRepr {
            dims: t.dims,
            ranks: t.ranks,
            cores: t.cores,
        }
    }
}

impl TtTensor {
    /// Builds a tensor from flattened row-major cores, checking every shape
    /// invariant and that all entries are finite.
    pub fn new(dims: Vec<usize>, ranks: Vec<usize>, cores: Vec<Vec<f64>>) -> Result<Self> {
        let d = dims.len();
        if d == 0 {
            return Err(Error::invalid("tensor must have at least one mode"));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("mode {k} has size 0")));
        }
        if ranks.len() != d + 1 {
            return Err(Error::invalid(format!(
                "expected {} ranks for {d} modes, got {}",
                d + 1,
                ranks.len()
            )));
        }
        if ranks[0] != 1 || ranks[d] != 1 {
            return Err(Error::invalid("boundary ranks must be 1"));
        }
        if let Some(k) = ranks.iter().position(|&r| r == 0) {
            return Err(Error::invalid(format!("rank {k} is 0")));
        }
        if cores.len() != d {
            return Err(Error::invalid(format!(
                "expected {d} cores, got {}",
                cores.len()
            )));
        }
        for (k, core) in cores.iter().enumerate() {
            let want = ranks[k] * dims[k] * ranks[k + 1];
            if core.len() != want {
                return Err(Error::invalid(format!(
                    "core {k} has {} entries, shape ({}, {}, {}) needs {want}",
                    core.len(),
                    ranks[k],
                    dims[k],
                    ranks[k + 1]
                )));
            }
            if let Some(pos) = core.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "core {k} entry {pos} is not finite"
                )));
            }
        }
        Ok(TtTensor { dims, ranks, cores })
    }

    /// Random tensor with i.i.d. standard normal core entries and every
    /// interior rank equal to `rank`.
    pub fn random(dims: &[usize], rank: usize, seed: u64) -> Result<Self> {
        if rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        let ranks = interior_ranks(dims.len(), rank);
        let mut rng = seeded(seed);
        let cores = (0..dims.len())
            .map(|k| {
                (0..ranks[k] * dims[k] * ranks[k + 1])
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect()
            })
            .collect();
        TtTensor::new(dims.to_vec(), ranks, cores)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Flattened core `k` in `(R_{k-1}, N_k, R_k)` row-major order.
    pub fn core(&self, k: usize) -> &[f64] {
        &self.cores[k]
    }

    pub fn cores(&self) -> &[Vec<f64>] {
        &self.cores
    }

    pub(crate) fn core_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.cores[k]
    }

    /// Total number of stored core parameters.
    pub fn num_params(&self) -> usize {
        self.cores.iter().map(Vec::len).sum()
    }

    /// Entry `G_k[a, n, b]`.
    #[inline]
    pub fn core_entry(&self, k: usize, a: usize, n: usize, b: usize) -> f64 {
        let (nk, rr) = (self.dims[k], self.ranks[k + 1]);
        self.cores[k][(a * nk + n) * rr + b]
    }

    /// Writes `v^T G_k(n)` into `out` (`v` has length `R_{k-1}`, `out` length `R_k`).
    #[inline]
    pub(crate) fn row_times_slice(&self, k: usize, n: usize, v: &[f64], out: &mut [f64]) {
        let (nk, rr) = (self.dims[k], self.ranks[k + 1]);
        let core = &self.cores[k];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (a, &va) in v.iter().enumerate() {
            let row = &core[(a * nk + n) * rr..(a * nk + n + 1) * rr];
            for (o, &g) in out.iter_mut().zip(row) {
                *o += va * g;
            }
        }
    }

    /// Writes `G_k(n) w` into `out` (`w` has length `R_k`, `out` length `R_{k-1}`).
    #[inline]
    pub(crate) fn slice_times_col(&self, k: usize, n: usize, w: &[f64], out: &mut [f64]) {
        let (nk, rr) = (self.dims[k], self.ranks[k + 1]);
        let core = &self.cores[k];
        for (a, o) in out.iter_mut().enumerate() {
            let row = &core[(a * nk + n) * rr..(a * nk + n + 1) * rr];
            *o = row.iter().zip(w).map(|(g, x)| g * x).sum();
        }
    }

    pub fn check_index(&self, idx: &[usize]) -> Result<()> {
        check_index(&self.dims, idx)
    }

    /// Element at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        self.check_index(idx)?;
        Ok(self.get_unchecked(idx))
    }

    pub(crate) fn get_unchecked(&self, idx: &[usize]) -> f64 {
        let max_rank = self.ranks.iter().copied().max().unwrap_or(1);
        let mut v = vec![0.0; max_rank];
        let mut next = vec![0.0; max_rank];
        v[0] = 1.0;
        for (k, &n) in idx.iter().enumerate() {
            let (rl, rr) = (self.ranks[k], self.ranks[k + 1]);
            self.row_times_slice(k, n, &v[..rl], &mut next[..rr]);
            std::mem::swap(&mut v, &mut next);
        }
        v[0]
    }

    /// Evaluates many elements; errors carry the offending row number.
    pub fn get_many<I: AsRef<[usize]>>(&self, idxs: &[I]) -> Result<Vec<f64>> {
        idxs.iter()
            .enumerate()
            .map(|(row, idx)| self.get(idx.as_ref()).map_err(|e| e.at_row(row)))
            .collect()
    }

    pub fn to_full(&self) -> Result<FullTensor> {
        self.to_full_capped(DEFAULT_FULL_CAP)
    }

    pub fn to_full_capped(&self, cap: usize) -> Result<FullTensor> {
        let requested = self.dims.iter().map(|&n| n as u128).product::<u128>();
        if requested > cap as u128 {
            return Err(Error::SizeLimit { requested, cap });
        }
        let total = requested as usize;
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.ndim()];
        for _ in 0..total {
            values.push(self.get_unchecked(&idx));
            increment(&mut idx, &self.dims);
        }
        Ok(FullTensor {
            dims: self.dims.clone(),
            values,
        })
    }

    /// Gauge move to the right: core `k` becomes the Q factor of its
    /// `(R_{k-1} N_k) x R_k` unfolding and R is multiplied into core `k + 1`.
    ///
    /// Elements are unchanged up to rounding. Returns `false` without
    /// touching anything for the last core or when the unfolding is wide.
    pub fn left_orthogonalize(&mut self, k: usize) -> bool {
        let (rl, n, rr) = (self.ranks[k], self.dims[k], self.ranks[k + 1]);
        if k + 1 >= self.ndim() || rl * n < rr {
            return false;
        }
        let qr = DMatrix::from_row_slice(rl * n, rr, &self.cores[k]).qr();
        write_row_major(&qr.q(), &mut self.cores[k]);
        let cols = self.dims[k + 1] * self.ranks[k + 2];
        let next = qr.r() * DMatrix::from_row_slice(rr, cols, &self.cores[k + 1]);
        write_row_major(&next, &mut self.cores[k + 1]);
        true
    }

    /// Gauge move to the left: core `k` gets orthonormal rows in its
    /// `R_{k-1} x (N_k R_k)` unfolding and the triangular factor is
    /// multiplied into core `k - 1`. Returns `false` for the first core or
    /// when the unfolding is tall.
    pub fn right_orthogonalize(&mut self, k: usize) -> bool {
        let (rl, n, rr) = (self.ranks[k], self.dims[k], self.ranks[k + 1]);
        if k == 0 || n * rr < rl {
            return false;
        }
        // M = L Q from the QR factorization of M^T
        let qr = DMatrix::from_row_slice(rl, n * rr, &self.cores[k])
            .transpose()
            .qr();
        write_row_major(&qr.q().transpose(), &mut self.cores[k]);
        let rows = self.ranks[k - 1] * self.dims[k - 1];
        let prev = DMatrix::from_row_slice(rows, rl, &self.cores[k - 1]) * qr.r().transpose();
        write_row_major(&prev, &mut self.cores[k - 1]);
        true
    }

    /// Frobenius norm, by a left-to-right QR sweep over the cores.
    pub fn norm(&self) -> f64 {
        let mut r = DMatrix::from_element(1, 1, 1.0);
        for k in 0..self.ndim() {
            let (rl, n, rr) = (self.ranks[k], self.dims[k], self.ranks[k + 1]);
            let core = DMatrix::from_row_slice(rl, n * rr, &self.cores[k]);
            let carried = &r * core;
            // regroup (r', n * rr) into (r' * n, rr)
            let rows = carried.nrows();
            let m = DMatrix::from_fn(rows * n, rr, |i, b| carried[(i / n, (i % n) * rr + b)]);
            r = m.qr().r();
        }
        r.norm()
    }

    /// Frobenius norm of `self - other`, without forming either tensor.
    pub fn distance(&self, other: &TtTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::invalid("tensors have different mode sizes"));
        }
        let d = self.ndim();
        let mut ranks = vec![1];
        ranks.extend((1..d).map(|k| self.ranks[k] + other.ranks[k]));
        ranks.push(1);
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let (ra, rb) = (self.ranks[k], other.ranks[k]);
            let (sa, sb) = (self.ranks[k + 1], other.ranks[k + 1]);
            let (rl, rr, n) = (ranks[k], ranks[k + 1], self.dims[k]);
            let mut core = vec![0.0; rl * n * rr];
            // block diagonal, except the first core is [A B] and the last [A; -B]
            let (b_row, b_col) = (if k == 0 { 0 } else { ra }, if k + 1 == d { 0 } else { sa });
            let sign = if k + 1 == d { -1.0 } else { 1.0 };
            for i in 0..n {
                for a in 0..ra {
                    for b in 0..sa {
                        core[(a * n + i) * rr + b] = self.core_entry(k, a, i, b);
                    }
                }
                for a in 0..rb {
                    for b in 0..sb {
                        core[((b_row + a) * n + i) * rr + b_col + b] =
                            sign * other.core_entry(k, a, i, b);
                    }
                }
            }
            cores.push(core);
        }
        Ok(TtTensor::new(self.dims.clone(), ranks, cores)?.norm())
    }

    /// JSON document `{"dims", "ranks", "cores"}`; numbers round-trip exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn write_row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let cols = m.ncols();
    for (i, row) in out.chunks_exact_mut(cols).enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
}

/// Ranks `(1, rank, ..., rank, 1)` for `d` modes.
pub(crate) fn interior_ranks(d: usize, rank: usize) -> Vec<usize> {
    (0..=d)
        .map(|k| if k == 0 || k == d { 1 } else { rank })
        .collect()
}

pub(crate) fn check_index(dims: &[usize], idx: &[usize]) -> Result<()> {
    if idx.len() != dims.len() {
        return Err(Error::invalid(format!(
            "multi-index has {} entries, tensor has {} modes",
            idx.len(),
            dims.len()
        )));
    }
    for (mode, (&i, &n)) in idx.iter().zip(dims).enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange {
                mode,
                index: i,
                size: n,
            });
        }
    }
    Ok(())
}

/// Advances a row-major multi-index odometer; wraps to all zeros at the end.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Dense tensor in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct FullTensor {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl FullTensor {
    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        check_index(&self.dims, idx)?;
        let flat = idx
            .iter()
            .zip(&self.dims)
            .fold(0usize, |acc, (&i, &n)| acc * n + i);
        Ok(self.values[flat])
    }
}

/// `||pred - truth||_2 / ||truth||_2`.
pub fn relative_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} reference values",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("empty input"));
    }
    let norm = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let resid = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    Ok(resid / norm)
}
