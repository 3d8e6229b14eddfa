//! First-order ANOVA model estimated from grid samples, and its exact
//! rank-2 tensor-train representation.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tt::{check_index, interior_ranks, TtTensor};

/// Default relative padding noise for [`AnovaModel::to_tt`].
pub const DEFAULT_PADDING_NOISE: f64 = 1e-3;

/// Zero-order term plus per-mode first-order term tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaModel {
    pub f0: f64,
    /// `terms[i][j]`: first-order effect of value `j` in mode `i`.
    pub terms: Vec<Vec<f64>>,
    /// `counts[i][j]`: number of samples whose mode-`i` index is `j`.
    pub counts: Vec<Vec<usize>>,
}

/// Order-independent sum: sort, then compensated accumulation.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values.iter() {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl AnovaModel {
    /// Estimates the model from samples on a grid of shape `dims`.
    ///
    /// Every grid value of every mode must be observed at least once.
    /// The result does not depend on the order of the samples.
    pub fn fit<I: AsRef<[usize]>>(idxs: &[I], ys: &[f64], dims: &[usize]) -> Result<Self> {
        if idxs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "{} indices but {} values",
                idxs.len(),
                ys.len()
            )));
        }
        if ys.is_empty() {
            return Err(Error::invalid("empty dataset"));
        }
        if dims.is_empty() {
            return Err(Error::invalid("no modes"));
        }

        let mut buckets: Vec<Vec<Vec<f64>>> = dims.iter().map(|&n| vec![Vec::new(); n]).collect();
        for (row, (idx, &y)) in idxs.iter().zip(ys).enumerate() {
            let idx = idx.as_ref();
            check_index(dims, idx).map_err(|e| e.at_row(row))?;
            for (mode, &j) in idx.iter().enumerate() {
                buckets[mode][j].push(y);
            }
        }

        let mut all = ys.to_vec();
        let f0 = stable_sum(&mut all) / ys.len() as f64;

        let mut terms = Vec::with_capacity(dims.len());
        let mut counts = Vec::with_capacity(dims.len());
        for (mode, mode_buckets) in buckets.iter_mut().enumerate() {
            let mut t = Vec::with_capacity(mode_buckets.len());
            let mut c = Vec::with_capacity(mode_buckets.len());
            for (value, bucket) in mode_buckets.iter_mut().enumerate() {
                if bucket.is_empty() {
                    return Err(Error::Coverage { mode, value });
                }
                c.push(bucket.len());
                t.push(stable_sum(bucket) / bucket.len() as f64 - f0);
            }
            terms.push(t);
            counts.push(c);
        }
        Ok(AnovaModel { f0, terms, counts })
    }

    pub fn ndim(&self) -> usize {
        self.terms.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.terms.iter().map(Vec::len).collect()
    }

    /// `f0 + sum_i terms[i][idx[i]]`.
    pub fn eval(&self, idx: &[usize]) -> Result<f64> {
        check_index(&self.dims(), idx)?;
        Ok(self.eval_unchecked(idx))
    }

    pub(crate) fn eval_unchecked(&self, idx: &[usize]) -> f64 {
        self.f0 + idx.iter().zip(&self.terms).map(|(&j, t)| t[j]).sum::<f64>()
    }

    pub fn eval_many<I: AsRef<[usize]>>(&self, idxs: &[I]) -> Result<Vec<f64>> {
        let dims = self.dims();
        idxs.iter()
            .enumerate()
            .map(|(row, idx)| {
                check_index(&dims, idx.as_ref()).map_err(|e| e.at_row(row))?;
                Ok(self.eval_unchecked(idx.as_ref()))
            })
            .collect()
    }

    /// Power of two nearest to the largest `|term|` (1 for a constant model).
    ///
    /// The term channel of the first `d - 1` cores is divided by this factor
    /// and the last core's unit entry multiplied by it. The gauge changes no
    /// tensor element, keeps every core near unit scale, and stops padding
    /// noise from being amplified by large function values.
    pub fn gauge(&self) -> f64 {
        let m = self
            .terms
            .iter()
            .flatten()
            .fold(0.0f64, |m, t| m.max(t.abs()));
        if m > 0.0 && m.is_finite() {
            2f64.powi(m.log2().round() as i32)
        } else {
            1.0
        }
    }

    /// Tensor-train form of the model with ranks `(1, rank, ..., rank, 1)`.
    ///
    /// The leading 2x2 block of every slice holds the exact construction
    /// `[1, t/s]`, `[[1, t/s], [0, 1]]`, `[t + f0, s]^T` with `s = gauge()`.
    /// The remaining entries of core `k` are i.i.d. normal with standard
    /// deviation `noise_scale * m_k`, where `m_k` is the largest magnitude in
    /// the exact part of core `k`. With `noise_scale == 0` the tensor
    /// reproduces [`AnovaModel::eval`] up to rounding.
    pub fn to_tt(&self, rank: usize, noise_scale: f64, seed: u64) -> Result<TtTensor> {
        if rank < 2 {
            return Err(Error::invalid(format!(
                "rank {rank} is below 2, the rank of the exact construction"
            )));
        }
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "noise scale must be finite and non-negative, got {noise_scale}"
            )));
        }
        let d = self.ndim();
        let dims = self.dims();
        if d == 1 {
            let core = self.terms[0].iter().map(|t| t + self.f0).collect();
            return TtTensor::new(dims, vec![1, 1], vec![core]);
        }

        let ranks = interior_ranks(d, rank);
        let s = self.gauge();
        let mut rng = seeded(seed);
        let mut noise = move |std: f64| {
            if std == 0.0 {
                0.0
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                std * z
            }
        };

        let mut cores = Vec::with_capacity(d);
        for (i, terms) in self.terms.iter().enumerate() {
            let (rl, n, rr) = (ranks[i], dims[i], ranks[i + 1]);
            let last = i + 1 == d;
            let scale = if last {
                terms.iter().fold(s, |m, t| m.max((t + self.f0).abs()))
            } else {
                terms.iter().fold(1.0f64, |m, t| m.max((t / s).abs()))
            };
            let std = noise_scale * scale;
            let mut core = vec![0.0; rl * n * rr];
            for a in 0..rl {
                for (j, &t) in terms.iter().enumerate() {
                    for b in 0..rr {
                        let exact = if i == 0 {
                            match b {
                                0 => Some(1.0),
                                1 => Some(t / s),
                                _ => None,
                            }
                        } else if last {
                            match a {
                                0 => Some(t + self.f0),
                                1 => Some(s),
                                _ => None,
                            }
                        } else {
                            match (a, b) {
                                (0, 0) | (1, 1) => Some(1.0),
                                (0, 1) => Some(t / s),
                                (1, 0) => Some(0.0),
                                _ => None,
                            }
                        };
                        core[(a * n + j) * rr + b] = exact.unwrap_or_else(|| noise(std));
                    }
                }
            }
            cores.push(core);
        }
        TtTensor::new(dims, ranks, cores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::increment;
    use proptest::prelude::*;
    use rand::Rng;

    fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
        let total: usize = dims.iter().product();
        let mut idx = vec![0; dims.len()];
        (0..total)
            .map(|_| {
                let cur = idx.clone();
                increment(&mut idx, dims);
                cur
            })
            .collect()
    }

    fn random_model(dims: &[usize], seed: u64) -> AnovaModel {
        let mut rng = seeded(seed);
        AnovaModel {
            f0: rng.random_range(-1.0..1.0),
            terms: dims
                .iter()
                .map(|&n| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            counts: dims.iter().map(|&n| vec![1; n]).collect(),
        }
    }

    #[test]
    fn gauge_keeps_padding_relative() {
        let dims = [5, 4, 6, 3, 5];
        let mut m = random_model(&dims, 21);
        m.f0 *= 3e5;
        m.terms.iter_mut().flatten().for_each(|t| *t *= 1e5);
        assert_eq!(m.gauge().log2().fract(), 0.0);
        assert!((m.gauge() / 1e5 - 1.0).abs() < 0.5);

        let exact = m.to_tt(5, 0.0, 0).unwrap();
        let noisy = m.to_tt(5, 1e-3, 4).unwrap();
        let scale = m.f0.abs() + m.terms.iter().flatten().fold(0.0f64, |a, t| a.max(t.abs()));
        let mut worst = 0.0f64;
        for idx in all_indices(&dims) {
            let e = m.eval(&idx).unwrap();
            assert!((exact.get(&idx).unwrap() - e).abs() <= 1e-12 * scale);
            worst = worst.max((noisy.get(&idx).unwrap() - e).abs() / scale);
        }
        assert!(worst > 0.0 && worst < 1e-4, "worst {worst}");
        let constant = AnovaModel {
            f0: 2.0,
            terms: vec![vec![0.0; 3]; 2],
            counts: vec![vec![1; 3]; 2],
        };
        assert_eq!(constant.gauge(), 1.0);
    }

    #[test]
    fn constant_data() {
        let dims = [3, 2];
        let idxs = all_indices(&dims);
        let ys = vec![4.25; idxs.len()];
        let m = AnovaModel::fit(&idxs, &ys, &dims).unwrap();
        assert_eq!(m.f0, 4.25);
        assert!(m.terms.iter().flatten().all(|&t| t == 0.0));
        assert_eq!(m.counts, vec![vec![2, 2, 2], vec![3, 3]]);
    }

    #[test]
    fn one_dimensional_means() {
        let m = AnovaModel::fit(&[[0], [1]], &[0.0, 2.0], &[2]).unwrap();
        assert_eq!(m.f0, 1.0);
        assert_eq!(m.terms, vec![vec![-1.0, 1.0]]);
        assert_eq!(m.eval(&[1]).unwrap(), 2.0);
    }

    #[test]
    fn additive_function_on_full_grid() {
        let v1 = [0.0, 0.5, 2.0, 3.0];
        let v2 = [-1.0, 1.0, 4.0];
        let idxs = all_indices(&[4, 3]);
        let ys: Vec<f64> = idxs.iter().map(|i| v1[i[0]] + v2[i[1]]).collect();
        let m = AnovaModel::fit(&idxs, &ys, &[4, 3]).unwrap();
        let mean1 = v1.iter().sum::<f64>() / 4.0;
        let mean2 = v2.iter().sum::<f64>() / 3.0;
        for j in 0..4 {
            assert!((m.terms[0][j] - (v1[j] - mean1)).abs() < 1e-14);
        }
        for j in 0..3 {
            assert!((m.terms[1][j] - (v2[j] - mean2)).abs() < 1e-14);
        }
        for (idx, y) in idxs.iter().zip(&ys) {
            assert!((m.eval(idx).unwrap() - y).abs() < 1e-14);
        }
    }

    #[test]
    fn coverage_and_length_errors() {
        match AnovaModel::fit(&[[0, 0], [1, 0]], &[1.0, 2.0], &[2, 2]) {
            Err(Error::Coverage { mode, value }) => assert_eq!((mode, value), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            AnovaModel::fit(&[[0]], &[1.0, 2.0], &[1]),
            Err(Error::InvalidArgument(_))
        ));
        let m = AnovaModel::fit(&[[0], [1]], &[0.0, 2.0], &[2]).unwrap();
        assert!(m.eval(&[2]).is_err());
    }

    #[test]
    fn zero_model_is_zero_tensor() {
        let m = AnovaModel {
            f0: 0.0,
            terms: vec![vec![0.0; 3]; 3],
            counts: vec![vec![1; 3]; 3],
        };
        let t = m.to_tt(4, 0.0, 1).unwrap();
        assert!(t.to_full().unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_construction_matches_eval() {
        let dims = [4, 4, 4];
        let m = random_model(&dims, 3);
        let t = m.to_tt(2, 0.0, 0).unwrap();
        assert_eq!(t.ranks(), &[1, 2, 2, 1]);
        for idx in all_indices(&dims) {
            assert!((t.get(&idx).unwrap() - m.eval(&idx).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn padded_construction() {
        let dims = [4, 4, 4];
        let m = random_model(&dims, 8);
        let exact = m.to_tt(5, 0.0, 0).unwrap();
        assert_eq!(exact.ranks(), &[1, 5, 5, 1]);
        let noisy = m.to_tt(5, 1e-3, 0).unwrap();
        let mut worst = 0.0f64;
        for idx in all_indices(&dims) {
            let e = m.eval(&idx).unwrap();
            assert!((exact.get(&idx).unwrap() - e).abs() <= 1e-12);
            worst = worst.max((noisy.get(&idx).unwrap() - e).abs());
        }
        assert!(worst > 0.0 && worst < 1e-4, "worst {worst}");
        assert_eq!(noisy, m.to_tt(5, 1e-3, 0).unwrap());
    }

    #[test]
    fn to_tt_edge_cases() {
        let m = random_model(&[3], 1);
        let t = m.to_tt(5, 1.0, 0).unwrap();
        assert_eq!(t.ranks(), &[1, 1]);
        for j in 0..3 {
            assert_eq!(t.get(&[j]).unwrap(), m.eval(&[j]).unwrap());
        }
        let m = random_model(&[3, 3], 1);
        assert!(m.to_tt(1, 0.0, 0).is_err());
        assert!(m.to_tt(2, -1.0, 0).is_err());
    }

    #[test]
    fn json_shape() {
        let m = AnovaModel::fit(&[[0], [1]], &[0.0, 2.0], &[2]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["f0"], 1.0);
        assert_eq!(v["counts"][0][1], 1);
        let back: AnovaModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    fn dataset() -> impl Strategy<Value = (Vec<usize>, Vec<(Vec<usize>, f64)>)> {
        prop::collection::vec(1usize..5, 1..4).prop_flat_map(|dims| {
            let row = (dims.iter().map(|&k| 0..k).collect::<Vec<_>>(), -1e3f64..1e3);
            (Just(dims.clone()), prop::collection::vec(row, 0..40)).prop_map(
                move |(dims, mut rows)| {
                    // guarantee coverage
                    let max = *dims.iter().max().unwrap();
                    for j in 0..max {
                        let idx: Vec<usize> = dims.iter().map(|&k| j.min(k - 1)).collect();
                        rows.push((idx, j as f64 - 1.5));
                    }
                    (dims, rows)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn weighted_centering((dims, rows) in dataset()) {
            let (idxs, ys): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let m = AnovaModel::fit(&idxs, &ys, &dims).unwrap();
            let total = ys.len();
            let scale = m.f0.abs() + m.terms.iter().flatten().fold(0.0f64, |a, t| a.max(t.abs()));
            for (c, t) in m.counts.iter().zip(&m.terms) {
                prop_assert_eq!(c.iter().sum::<usize>(), total);
                prop_assert!(c.iter().all(|&k| k >= 1));
                let s: f64 = c.iter().zip(t).map(|(&k, &v)| k as f64 * v).sum();
                prop_assert!(s.abs() <= 1e-9 * total as f64 * scale.max(1.0));
            }
            // mean of the model over the training multiset equals mean of ys
            let pred = m.eval_many(&idxs).unwrap();
            let mp = pred.iter().sum::<f64>() / total as f64;
            let my = ys.iter().sum::<f64>() / total as f64;
            prop_assert!((mp - my).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn permutation_invariant((dims, rows) in dataset(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let (idxs, ys): (Vec<_>, Vec<_>) = rows.iter().cloned().unzip();
            let mut shuffled = rows;
            shuffled.shuffle(&mut seeded(seed));
            let (idxs2, ys2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(
                AnovaModel::fit(&idxs, &ys, &dims).unwrap(),
                AnovaModel::fit(&idxs2, &ys2, &dims).unwrap()
            );
        }

        #[test]
        fn theorem_fidelity(dims in prop::collection::vec(1usize..6, 1..5), seed in any::<u64>(), rank in 2usize..5) {
            let m = random_model(&dims, seed);
            let t = m.to_tt(rank, 0.0, seed).unwrap();
            for idx in all_indices(&dims) {
                prop_assert!((t.get(&idx).unwrap() - m.eval(&idx).unwrap()).abs() <= 1e-12);
            }
        }
    }
}
