use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Open norm band `(alpha, beta)` selecting latent codes near the tail of the
/// encoded distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EdgeParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> EdgeParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha < beta) {
            return Err(Error::InvalidConfig(format!(
                "edge band needs 0 <= alpha < beta (alpha={alpha}, beta={beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn contains(&self, norm: T) -> bool {
        self.alpha < norm && norm < self.beta
    }
}

/// Nearest-rank percentile of an ascending slice; `p` in `(0, 100]`.
pub fn nearest_rank_percentile<T: Scalar>(sorted: &[T], p: f64) -> T {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Band statistics on the row norms of `z`:
///
/// * `beta` = mean + 3 * (population) std of all norms;
/// * norms `>= beta` are dropped as outliers;
/// * `alpha` = 90th nearest-rank percentile of the remaining norms.
///
/// Returns the indices with `alpha < ||z|| < beta`, ascending.
pub fn compute_edge_set<T: Scalar>(z: &Matrix<T>) -> Result<(Vec<usize>, EdgeParams<T>)> {
    if z.rows() == 0 {
        return Err(Error::InvalidConfig("edge set of an empty latent matrix".into()));
    }
    let norms = z.row_norms();
    let n = T::from_count(norms.len());
    let mean = norms.iter().copied().sum::<T>() / n;
    let var = norms.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let beta = mean + T::of(3.0) * var.sqrt();

    let mut kept: Vec<T> = norms.iter().copied().filter(|&v| v < beta).collect();
    if kept.is_empty() {
        return Err(Error::EmptyEdgeSet {
            alpha: beta.as_f64(),
            beta: beta.as_f64(),
        });
    }
    kept.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    let alpha = nearest_rank_percentile(&kept, 90.0);
    let params = EdgeParams { alpha, beta };

    let idx: Vec<usize> = (0..norms.len()).filter(|&i| params.contains(norms[i])).collect();
    if idx.is_empty() {
        return Err(Error::EmptyEdgeSet {
            alpha: alpha.as_f64(),
            beta: beta.as_f64(),
        });
    }
    Ok((idx, params))
}
