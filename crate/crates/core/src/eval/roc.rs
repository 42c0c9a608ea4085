use serde::{Deserialize, Serialize};

use super::metrics::{confusion, Confusion};
use crate::data::Dataset;
use crate::detect::{AnomalyDetector, Contamination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Contamination levels `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    /// 0.01 to 0.69 in steps of 0.04.
    pub fn synthetic() -> Self {
        Self {
            start: 0.01,
            stop: 0.69,
            step: 0.04,
        }
    }

    /// 0.01 to 0.69 in steps of 0.02.
    pub fn real_world() -> Self {
        Self {
            step: 0.02,
            ..Self::synthetic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.start <= self.stop && self.stop < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sweep grid needs 0 < start <= stop < 1 (got {}..{})",
                self.start, self.stop
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig(format!("sweep step must be > 0 (got {})", self.step)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn levels(&self) -> Result<Vec<Contamination>> {
        self.validate()?;
        self.values().into_iter().map(Contamination::new).collect()
    }
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self::synthetic()
    }
}

/// ROC points sorted by `(fpr, tpr)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    points: Vec<(f64, f64)>,
    grid: Option<SweepGrid>,
}

impl RocCurve {
    /// Takes the points as given, sorted.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("ROC curve needs at least one point".into()));
        }
        if let Some(p) = points
            .iter()
            .find(|(f, t)| !(0.0..=1.0).contains(f) || !(0.0..=1.0).contains(t))
        {
            return Err(Error::InvalidConfig(format!("ROC point {p:?} outside the unit square")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(Self { points, grid: None })
    }

    /// Swept points plus the `(0, 0)` and `(1, 1)` endpoints.
    pub fn from_swept(swept: &[(f64, f64)], grid: Option<SweepGrid>) -> Result<Self> {
        let mut points = Vec::with_capacity(swept.len() + 2);
        points.push((0.0, 0.0));
        points.extend_from_slice(swept);
        points.push((1.0, 1.0));
        let mut curve = Self::new(points)?;
        curve.grid = grid;
        Ok(curve)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn grid(&self) -> Option<&SweepGrid> {
        self.grid.as_ref()
    }
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Smallest false-positive rate at which the curve reaches `tpr_target`,
/// linearly interpolated between the bracketing points.
pub fn fpr_at_tpr(curve: &RocCurve, tpr_target: f64) -> Result<f64> {
    let pts = &curve.points;
    let Some(j) = pts.iter().position(|&(_, t)| t >= tpr_target) else {
        return Err(Error::TprUnreachable {
            target: tpr_target,
            max: pts.iter().map(|p| p.1).fold(0.0, f64::max),
        });
    };
    if j == 0 {
        return Ok(pts[0].0);
    }
    let (f0, t0) = pts[j - 1];
    let (f1, t1) = pts[j];
    Ok(f0 + (tpr_target - t0) / (t1 - t0) * (f1 - f0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub contamination: f64,
    #[serde(flatten)]
    pub counts: Confusion,
}

/// Everything measured from one contamination sweep on a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc: f64,
    pub best_f1: f64,
    /// G-measure at the best-F1 contamination.
    pub g_measure: f64,
    pub best_contamination: f64,
    pub fpr_at_tpr: Option<(f64, f64)>,
    pub sweep: Vec<SweepRow>,
    pub roc: RocCurve,
}

/// Sweeps an already fitted detector over `grid` on the labeled `test` set.
pub fn evaluate_detector<T: Scalar, D: AnomalyDetector<T>>(
    detector: &D,
    test: &Dataset<T>,
    grid: &SweepGrid,
    tpr_target: Option<f64>,
) -> Result<MetricReport> {
    let truth = test.labels()?;
    let positives = truth.iter().filter(|&&l| l == 1).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateTestClass { positives, negatives });
    }
    let values = grid.values();
    let flags = detector.predict_sweep(&test.x, &grid.levels()?)?;
    let mut sweep = Vec::with_capacity(values.len());
    for (&c, pred) in values.iter().zip(&flags) {
        sweep.push(SweepRow {
            contamination: c,
            counts: confusion(pred, truth)?,
        });
    }
    let swept: Vec<(f64, f64)> = sweep.iter().map(|r| (r.counts.fpr(), r.counts.tpr())).collect();
    let roc = RocCurve::from_swept(&swept, Some(*grid))?;
    // first grid point wins ties
    let best = sweep
        .iter()
        .fold(&sweep[0], |b, r| if r.counts.f1() > b.counts.f1() { r } else { b });
    let fpr_at_tpr = match tpr_target {
        Some(t) => Some((t, fpr_at_tpr(&roc, t)?)),
        None => None,
    };
    Ok(MetricReport {
        auc: auc(&roc),
        best_f1: best.counts.f1(),
        g_measure: best.counts.g_measure(),
        best_contamination: best.contamination,
        fpr_at_tpr,
        sweep,
        roc,
    })
}

/// Fits a detector once on `train` with `fit`, then sweeps it on `test`.
pub fn roc_from_sweep<T, D, F>(fit: F, train: &Dataset<T>, test: &Dataset<T>, grid: &SweepGrid) -> Result<RocCurve>
where
    T: Scalar,
    D: AnomalyDetector<T>,
    F: FnOnce(&Dataset<T>) -> Result<D>,
{
    Ok(report_from_sweep(fit, train, test, grid, None)?.roc)
}

pub fn report_from_sweep<T, D, F>(
    fit: F,
    train: &Dataset<T>,
    test: &Dataset<T>,
    grid: &SweepGrid,
    tpr_target: Option<f64>,
) -> Result<MetricReport>
where
    T: Scalar,
    D: AnomalyDetector<T>,
    F: FnOnce(&Dataset<T>) -> Result<D>,
{
    let truth = test.labels()?;
    let positives = truth.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == truth.len() {
        return Err(Error::DegenerateTestClass {
            positives,
            negatives: truth.len() - positives,
        });
    }
    let detector = fit(train)?;
    evaluate_detector(&detector, test, grid, tpr_target)
}
