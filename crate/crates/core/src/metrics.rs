//! Evaluation against ground truth: confusion counts, rates, ROC/AUC.
//!
//! False-positive and false-negative rates are fractions of all pixels, so
//! `fp_rate + fn_rate = 1 - oa` holds as an identity.

use serde::Serialize;

use crate::di::FusedDI;
use crate::error::{Error, Result};
use crate::raster::Mask;

/// Exact threshold sweep is used up to this many unique DI values; beyond,
/// evenly spaced quantiles.
pub const ROC_MAX_THRESHOLDS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

/// Pixel-exact confusion counts of a predicted mask against ground truth.
pub fn confusion(predicted: &Mask, truth: &Mask) -> Result<ConfusionCounts> {
    if predicted.width != truth.width || predicted.height != truth.height {
        return Err(Error::DimensionMismatch(format!(
            "map {}x{} vs truth {}x{}",
            predicted.width, predicted.height, truth.width, truth.height
        )));
    }
    let mut c = ConfusionCounts {
        true_positive: 0,
        false_positive: 0,
        true_negative: 0,
        false_negative: 0,
    };
    for (&p, &t) in predicted.data.iter().zip(truth.data.iter()) {
        match (p, t) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub oa: f64,
    pub kappa: f64,
}

/// Overall accuracy and Cohen's kappa; rates are fractions of all pixels.
pub fn rates(c: &ConfusionCounts) -> Rates {
    let n = c.total() as f64;
    let tp = c.true_positive as f64;
    let fp = c.false_positive as f64;
    let tn = c.true_negative as f64;
    let fnn = c.false_negative as f64;
    let oa = (tp + tn) / n;
    let p_e = ((tp + fp) * (tp + fnn) + (tn + fnn) * (tn + fp)) / (n * n);
    let kappa = if (1.0 - p_e).abs() == 0.0 {
        0.0
    } else {
        (oa - p_e) / (1.0 - p_e)
    };
    Rates {
        fp_rate: fp / n,
        fn_rate: fnn / n,
        oa,
        kappa,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Ordered by ascending threshold: (1,1) down to (0,0).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// CSV rendering: `threshold,fpr,tpr` header plus one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

/// ROC curve of a DI against ground truth. A pixel is predicted changed at
/// threshold `t` when its value is strictly above `t`; the sweep starts at
/// negative infinity so both endpoints appear.
pub fn roc(di: &FusedDI, truth: &Mask) -> Result<RocCurve> {
    if di.width != truth.width || di.height != truth.height {
        return Err(Error::DimensionMismatch(format!(
            "di {}x{} vs truth {}x{}",
            di.width, di.height, truth.width, truth.height
        )));
    }
    let n_pos = truth.changed_count();
    let n_neg = truth.data.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassTruth);
    }

    let mut pos: Vec<f64> = Vec::with_capacity(n_pos);
    let mut neg: Vec<f64> = Vec::with_capacity(n_neg);
    for (&v, &t) in di.values.iter().zip(truth.data.iter()) {
        if t {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    neg.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut unique = di.values.clone();
    unique.sort_by(|a, b| a.partial_cmp(b).unwrap());
    unique.dedup();
    let thresholds: Vec<f64> = if unique.len() <= ROC_MAX_THRESHOLDS {
        unique
    } else {
        let m = unique.len();
        let mut picked: Vec<f64> = (0..ROC_MAX_THRESHOLDS)
            .map(|i| unique[i * (m - 1) / (ROC_MAX_THRESHOLDS - 1)])
            .collect();
        picked.dedup();
        picked
    };

    // Count of entries in a sorted slice strictly above t.
    let above = |sorted: &[f64], t: f64| -> usize {
        let mut lo = 0usize;
        let mut hi = sorted.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if sorted[mid] <= t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        sorted.len() - lo
    };

    let mut points = Vec::with_capacity(thresholds.len() + 1);
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    for &t in &thresholds {
        points.push(RocPoint {
            threshold: t,
            fpr: above(&neg, t) as f64 / n_neg as f64,
            tpr: above(&pos, t) as f64 / n_pos as f64,
        });
    }

    // Trapezoid over ascending fpr, i.e. the points in reverse.
    let mut auc = 0.0;
    for w in points.windows(2) {
        let (right, left) = (&w[0], &w[1]);
        auc += (right.fpr - left.fpr) * (right.tpr + left.tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}
