//! Grids, stratified index sampling, datasets and the multiplicative noise model.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tt::check_index;

/// Per-mode strictly increasing node values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    values: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid must have at least one mode"));
        }
        for (mode, v) in values.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::invalid(format!("mode {mode} has no nodes")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("mode {mode} has non-finite nodes")));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "mode {mode} nodes are not strictly increasing"
                )));
            }
        }
        Ok(Grid { values })
    }

    /// `n` equispaced nodes per mode, endpoints included.
    pub fn uniform(bounds: &[(f64, f64)], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 nodes, got {n}")));
        }
        let values = bounds
            .iter()
            .enumerate()
            .map(|(mode, &(lo, hi))| {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::invalid(format!(
                        "mode {mode}: bounds ({lo}, {hi}) are not a finite increasing pair"
                    )));
                }
                let step = (hi - lo) / (n - 1) as f64;
                Ok((0..n)
                    .map(|j| if j + 1 == n { hi } else { lo + j as f64 * step })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Grid::new(values)
    }

    pub fn ndim(&self) -> usize {
        self.values.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn values(&self, mode: usize) -> &[f64] {
        &self.values[mode]
    }

    /// Maps a 0-based multi-index to its grid point.
    pub fn point(&self, idx: &[usize]) -> Result<Vec<f64>> {
        check_index(&self.dims(), idx)?;
        Ok(idx.iter().zip(&self.values).map(|(&j, v)| v[j]).collect())
    }
}

/// Balanced stratified indices: in every mode each value appears
/// `floor(m / N)` or `ceil(m / N)` times, in an independently shuffled order.
pub fn lhs_indices(dims: &[usize], m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::invalid("dims must be non-empty and positive"));
    }
    let max = *dims.iter().max().unwrap();
    if m < max {
        return Err(Error::invalid(format!(
            "{m} samples cannot cover a mode of size {max}"
        )));
    }
    let mut rng = seeded(seed);
    let mut columns = Vec::with_capacity(dims.len());
    for &n in dims {
        // which values receive the extra sample when n does not divide m
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut col = Vec::with_capacity(m);
        for (rank, &value) in order.iter().enumerate() {
            let count = m / n + usize::from(rank < m % n);
            col.extend(std::iter::repeat_n(value, count));
        }
        col.shuffle(&mut rng);
        columns.push(col);
    }
    Ok((0..m)
        .map(|k| columns.iter().map(|c| c[k]).collect())
        .collect())
}

/// I.i.d. uniform indices.
pub fn uniform_indices(dims: &[usize], m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::invalid("dims must be non-empty and positive"));
    }
    let mut rng = seeded(seed);
    Ok((0..m)
        .map(|_| dims.iter().map(|&n| rng.random_range(0..n)).collect())
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub benchmark: String,
    pub seed: u64,
    pub noise: f64,
}

/// Multi-indices (0-based) paired with observed values.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub idxs: Vec<Vec<usize>>,
    pub ys: Vec<f64>,
    pub meta: DatasetMeta,
}

/// Evaluates `f` at the grid point of every index.
pub fn build_dataset<F>(f: F, grid: &Grid, idxs: Vec<Vec<usize>>) -> Result<Dataset>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut ys = Vec::with_capacity(idxs.len());
    for (row, idx) in idxs.iter().enumerate() {
        let x = grid.point(idx).map_err(|e| e.at_row(row))?;
        let y = f(&x)?;
        if !y.is_finite() {
            return Err(Error::NonFinite {
                index: idx.clone(),
                value: y,
            });
        }
        ys.push(y);
    }
    Ok(Dataset {
        idxs,
        ys,
        meta: DatasetMeta::default(),
    })
}

/// Replaces every value `y` by `(1 + sigma z) y`, `z ~ N(0, 1)`.
pub fn add_noise(ds: &Dataset, sigma: f64, seed: u64) -> Result<Dataset> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let mut out = ds.clone();
    out.meta.noise = sigma;
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = seeded(seed);
    for y in &mut out.ys {
        let z: f64 = StandardNormal.sample(&mut rng);
        *y *= 1.0 + sigma * z;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(flatten)]
    meta: DatasetMeta,
    dims: usize,
    count: usize,
    sha256: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// SHA-256 over the indices and the bit patterns of the values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (idx, y) in self.idxs.iter().zip(&self.ys) {
            for &i in idx {
                h.update((i as u64).to_le_bytes());
            }
            h.update(y.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// CSV with 1-based columns `i_1..i_d` and `y` in 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.idxs.first().map_or(0, Vec::len);
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=d).map(|k| format!("i_{k}")).collect();
        header.push("y".into());
        wr.write_record(&header)?;
        for (idx, y) in self.idxs.iter().zip(&self.ys) {
            let mut rec: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            rec.push(format!("{y:.16e}"));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let d = headers
            .len()
            .checked_sub(1)
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse("csv header must be i_1..i_d,y".into()))?;
        if headers.get(d) != Some("y") {
            return Err(Error::Parse("last csv column must be y".into()));
        }
        let mut idxs = Vec::new();
        let mut ys = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let mut idx = Vec::with_capacity(d);
            for field in rec.iter().take(d) {
                let i: usize = field
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("csv line {line}: index {field:?}: {e}")))?;
                if i == 0 {
                    return Err(Error::Parse(format!(
                        "csv line {line}: indices are 1-based"
                    )));
                }
                idx.push(i - 1);
            }
            let field = &rec[d];
            let y: f64 = field
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("csv line {line}: value {field:?}: {e}")))?;
            idxs.push(idx);
            ys.push(y);
        }
        Ok(Dataset {
            idxs,
            ys,
            meta: DatasetMeta::default(),
        })
    }

    /// Writes `<path>` as CSV and `<path>.json` as the metadata sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        let sidecar = Sidecar {
            meta: self.meta.clone(),
            dims: self.idxs.first().map_or(0, Vec::len),
            count: self.len(),
            sha256: self.hash(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut ds = Dataset::read_csv(std::fs::File::open(path)?)?;
        let side = sidecar_path(path);
        if side.exists() {
            let sc: Sidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
            if sc.sha256 != ds.hash() {
                return Err(Error::Parse(
                    "dataset hash does not match its sidecar".into(),
                ));
            }
            ds.meta = sc.meta;
        }
        Ok(ds)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
