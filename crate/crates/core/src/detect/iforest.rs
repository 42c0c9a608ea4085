use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnomalyDetector, Contamination};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::RngHandle;
use crate::scalar::Scalar;

const EULER_GAMMA: f64 = 0.577_215_664_9;

/// `c(m) = 2 H(m - 1) - 2 (m - 1) / m` with `H(i) = ln i + 0.5772156649`;
/// zero for `m <= 1`.
pub fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let m1 = (m - 1) as f64;
    2.0 * (m1.ln() + EULER_GAMMA) - 2.0 * m1 / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub n_trees: usize,
    /// Subsample size per tree; clamped to the training size.
    pub psi: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            psi: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum ITreeNode<T> {
    Internal {
        split_feature: usize,
        split_value: T,
        left: usize,
        right: usize,
    },
    External {
        size: usize,
    },
}

/// Arena-allocated isolation tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ITree<T> {
    nodes: Vec<ITreeNode<T>>,
}

impl<T: Scalar> ITree<T> {
    fn build<R: Rng + ?Sized>(x: &Matrix<T>, rows: Vec<usize>, height_limit: usize, rng: &mut R) -> Self {
        let mut tree = ITree { nodes: Vec::new() };
        tree.grow(x, rows, 0, height_limit, rng);
        tree
    }

    fn grow<R: Rng + ?Sized>(
        &mut self,
        x: &Matrix<T>,
        rows: Vec<usize>,
        depth: usize,
        limit: usize,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(ITreeNode::External { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        // features that still vary inside this partition
        let ranges: Vec<(usize, T, T)> = (0..x.cols())
            .filter_map(|f| {
                let (lo, hi) = rows.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &r| {
                    let v = x.get(r, f);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let split = lo + T::unit(rng) * (hi - lo);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| x.get(r, feature) < split);
        let left = self.grow(x, left_rows, depth + 1, limit, rng);
        let right = self.grow(x, right_rows, depth + 1, limit, rng);
        self.nodes[id] = ITreeNode::Internal {
            split_feature: feature,
            split_value: split,
            left,
            right,
        };
        id
    }

    /// Edges from the root to the external node plus `c(size)` there.
    pub fn path_length(&self, point: &[T]) -> f64 {
        let mut node = 0;
        let mut depth = 0usize;
        loop {
            match &self.nodes[node] {
                ITreeNode::Internal {
                    split_feature,
                    split_value,
                    left,
                    right,
                } => {
                    node = if point[*split_feature] < *split_value { *left } else { *right };
                    depth += 1;
                }
                ITreeNode::External { size } => return depth as f64 + average_path_length(*size),
            }
        }
    }

    pub fn nodes(&self) -> &[ITreeNode<T>] {
        &self.nodes
    }
}

/// Ensemble of isolation trees plus the sorted training scores used for
/// contamination thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IsolationForest<T> {
    trees: Vec<ITree<T>>,
    psi: usize,
    height_limit: usize,
    dim: usize,
    train_scores: Vec<f64>,
}

impl<T: Scalar> IsolationForest<T> {
    /// Each tree sees `psi` rows sampled without replacement and grows to
    /// depth `ceil(log2 psi)`. Tree `i` draws from its own substream of a seed
    /// taken from `rng`.
    pub fn fit<R: Rng + ?Sized>(x: &Matrix<T>, n_trees: usize, psi: usize, rng: &mut R) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::InvalidConfig(format!(
                "isolation forest needs >= 2 rows (got {})",
                x.rows()
            )));
        }
        if n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if psi < 2 {
            return Err(Error::InvalidConfig(format!("psi must be >= 2 (got {psi})")));
        }
        let psi = if psi > x.rows() {
            log::warn!("psi {psi} exceeds {} training rows; clamping", x.rows());
            x.rows()
        } else {
            psi
        };
        let height_limit = (psi as f64).log2().ceil() as usize;
        let base = RngHandle::new(rng.random());
        let trees = (0..n_trees)
            .map(|t| {
                let mut tree_rng = base.substream(t as u64);
                let rows = index::sample(&mut tree_rng, x.rows(), psi).into_vec();
                ITree::build(x, rows, height_limit, &mut tree_rng)
            })
            .collect();
        let mut forest = Self {
            trees,
            psi,
            height_limit,
            dim: x.cols(),
            train_scores: Vec::new(),
        };
        let mut scores = forest.score_samples(x)?;
        scores.sort_by(f64::total_cmp);
        forest.train_scores = scores;
        Ok(forest)
    }

    pub fn fit_with<R: Rng + ?Sized>(x: &Matrix<T>, cfg: &DetectorConfig, rng: &mut R) -> Result<Self> {
        Self::fit(x, cfg.n_trees, cfg.psi, rng)
    }

    pub fn psi(&self) -> usize {
        self.psi
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn height_limit(&self) -> usize {
        self.height_limit
    }

    pub fn trees(&self) -> &[ITree<T>] {
        &self.trees
    }

    /// Ascending anomaly scores of the training rows.
    pub fn train_scores(&self) -> &[f64] {
        &self.train_scores
    }

    pub fn mean_path_length(&self, point: &[T]) -> f64 {
        self.trees.iter().map(|t| t.path_length(point)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[h(x)] / c(psi))`
    pub fn score(&self, point: &[T]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::dims("IsolationForest::score", self.dim, point.len()));
        }
        Ok(score_from_path_length(self.mean_path_length(point), self.psi))
    }

    /// `(1 - contamination)` quantile of the training scores, linearly
    /// interpolated between order statistics.
    pub fn threshold(&self, contamination: Contamination) -> f64 {
        let s = &self.train_scores;
        let pos = (1.0 - contamination.value()) * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
    }
}

pub(crate) fn score_from_path_length(mean_path: f64, psi: usize) -> f64 {
    2f64.powf(-mean_path / average_path_length(psi))
}

impl<T: Scalar> AnomalyDetector<T> for IsolationForest<T> {
    fn score_samples(&self, x: &Matrix<T>) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.score(r)).collect()
    }

    fn predict(&self, x: &Matrix<T>, contamination: Contamination) -> Result<Vec<u8>> {
        let t = self.threshold(contamination);
        Ok(self
            .score_samples(x)?
            .into_iter()
            .map(|s| u8::from(s > t))
            .collect())
    }

    fn predict_sweep(&self, x: &Matrix<T>, levels: &[Contamination]) -> Result<Vec<Vec<u8>>> {
        let scores = self.score_samples(x)?;
        Ok(levels
            .iter()
            .map(|&c| {
                let t = self.threshold(c);
                scores.iter().map(|&s| u8::from(s > t)).collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> Matrix<f64> {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn c_of_m() {
        assert_eq!(average_path_length(0), 0.0);
        assert_eq!(average_path_length(1), 0.0);
        assert!((average_path_length(2) - 0.154_431_329_8).abs() < 1e-9);
        // 2 (ln 255 + gamma) - 2 * 255/256
        let c256 = 2.0 * (255f64.ln() + 0.5772156649) - 2.0 * 255.0 / 256.0;
        assert!((average_path_length(256) - c256).abs() < 1e-12);
    }

    #[test]
    fn score_formula_limits() {
        let c = average_path_length(256);
        assert_eq!(score_from_path_length(c, 256), 0.5);
        assert!(score_from_path_length(1e-9, 256) > 0.999_999);
    }

    #[test]
    fn two_points_split_once() {
        let x = col(&[0.0, 1.0]);
        let f = IsolationForest::fit(&x, 10, 2, &mut RngHandle::new(0).rng()).unwrap();
        assert_eq!(f.height_limit(), 1);
        for tree in f.trees() {
            assert_eq!(tree.nodes().len(), 3);
            assert_eq!(tree.path_length(&[0.0]), 1.0);
            assert_eq!(tree.path_length(&[1.0]), 1.0);
        }
    }

    #[test]
    fn constant_data_is_all_external() {
        let x = Matrix::new(6, 2, vec![3.0; 12]).unwrap();
        let f = IsolationForest::fit(&x, 5, 4, &mut RngHandle::new(1).rng()).unwrap();
        assert!(f.trees().iter().all(|t| t.nodes().len() == 1));
        let s = f.score_samples(&x).unwrap();
        assert!(s.iter().all(|&v| v == s[0]));
        assert_eq!(s[0], 0.5);
    }

    #[test]
    fn far_point_scores_highest() {
        // brute-force oracle: the expected isolation depth of 100 in {0..9, 100}
        // is 1 whenever the first split lands in (9, 100), probability 91/100,
        // so it must be isolated faster than any inner point on average.
        let mut v: Vec<f64> = (0..10).map(f64::from).collect();
        v.push(100.0);
        let x = col(&v);
        let f = IsolationForest::fit(&x, 100, 11, &mut RngHandle::new(2).rng()).unwrap();
        let s = f.score_samples(&x).unwrap();
        let top = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(top, 10);
        assert!(f.mean_path_length(&[100.0]) < 1.5);
    }

    #[test]
    fn errors_and_clamping() {
        assert!(IsolationForest::fit(&col(&[1.0]), 10, 2, &mut RngHandle::new(0).rng()).is_err());
        let f = IsolationForest::fit(&col(&[1.0, 2.0, 3.0]), 3, 256, &mut RngHandle::new(0).rng()).unwrap();
        assert_eq!(f.psi(), 3);
        assert!(f.score(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn half_contamination_flags_half_of_training() {
        let mut rng = RngHandle::new(3).rng();
        let data: Vec<f64> = (0..400).map(|_| f64::standard_normal(&mut rng)).collect();
        let x = Matrix::new(200, 2, data).unwrap();
        let f = IsolationForest::fit(&x, 50, 64, &mut rng).unwrap();
        let flagged: usize = f.predict(&x, Contamination::new(0.5).unwrap()).unwrap().iter().map(|&v| v as usize).sum();
        assert!((99..=101).contains(&flagged), "{flagged}");
        let few: usize = f.predict(&x, Contamination::new(1e-6).unwrap()).unwrap().iter().map(|&v| v as usize).sum();
        assert!(few <= 1);
    }


    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn scores_in_unit_interval_and_flags_nested(
            data in prop::collection::vec(-50.0f64..50.0, 40..120),
            seed in any::<u64>(),
        ) {
            let n = data.len() / 2;
            let x = Matrix::new(n, 2, data[..2 * n].to_vec()).unwrap();
            let f = IsolationForest::fit(&x, 20, 16, &mut RngHandle::new(seed).rng()).unwrap();
            let s = f.score_samples(&x).unwrap();
            prop_assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
            let ties = f.train_scores().windows(2).any(|w| w[0] == w[1]);
            let mut prev = vec![0u8; n];
            let mut c = 0.01;
            while c < 0.7 {
                let flags = f.predict(&x, Contamination::new(c).unwrap()).unwrap();
                for (p, q) in prev.iter().zip(&flags) {
                    prop_assert!(*q >= *p);
                }
                let count = flags.iter().map(|&v| v as usize).sum::<usize>() as f64;
                prop_assert!(ties || (count - c * n as f64).abs() <= 1.0 + 1e-9, "{} flagged at c={}", count, c);
                prev = flags;
                c += 0.04;
            }
        }

        #[test]
        fn ranking_invariant_under_increasing_affine_map(
            data in prop::collection::vec(-10.0f64..10.0, 10..60),
            seed in any::<u64>(),
        ) {
            let x = col(&data);
            let mapped = col(&data.iter().map(|v| 4.0 * v + 3.0).collect::<Vec<_>>());
            let f1 = IsolationForest::fit(&x, 30, 8, &mut RngHandle::new(seed).rng()).unwrap();
            let f2 = IsolationForest::fit(&mapped, 30, 8, &mut RngHandle::new(seed).rng()).unwrap();
            let s1 = f1.score_samples(&x).unwrap();
            let s2 = f2.score_samples(&mapped).unwrap();
            for i in 0..s1.len() {
                for j in 0..s1.len() {
                    if (s1[i] - s1[j]).abs() > 1e-9 {
                        prop_assert_eq!(s1[i] < s1[j], s2[i] < s2[j]);
                    }
                }
            }
        }
    }
}
