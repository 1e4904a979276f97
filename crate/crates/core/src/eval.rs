//! Precision/recall curves, F-measure and ROC area against binary ground truth.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, SaliencyMap};

/// β² of the F-measure.
pub const F_BETA_SQ: f64 = 0.3;
/// Number of uniformly spaced thresholds in `[0, 1]`.
pub const THRESHOLDS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

impl PrCurve {
    /// F-measure at every threshold.
    pub fn f_measures(&self) -> Vec<f64> {
        self.precision.iter().zip(&self.recall).map(|(&p, &r)| f_measure(p, r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Confusion {
    tp: usize,
    fp: usize,
    positives: usize,
    negatives: usize,
}

impl Confusion {
    fn precision(&self) -> f64 {
        let predicted = self.tp + self.fp;
        if predicted == 0 { 1.0 } else { self.tp as f64 / predicted as f64 }
    }

    fn recall(&self) -> f64 {
        if self.positives == 0 { 0.0 } else { self.tp as f64 / self.positives as f64 }
    }

    fn fpr(&self) -> f64 {
        if self.negatives == 0 { 0.0 } else { self.fp as f64 / self.negatives as f64 }
    }
}

fn check_sizes(map: &SaliencyMap, gt: &BinaryMask) -> Result<()> {
    if map.width() != gt.width() || map.height() != gt.height() {
        return Err(Error::invalid(alloc::format!(
            "map is {}x{} but ground truth is {}x{}",
            map.width(),
            map.height(),
            gt.width(),
            gt.height()
        )));
    }
    if gt.count() == 0 {
        return Err(Error::invalid("ground truth has no salient pixels"));
    }
    Ok(())
}

fn confusion_at(map: &SaliencyMap, gt: &BinaryMask, tau: f64) -> Confusion {
    let positives = gt.count();
    let mut c = Confusion { tp: 0, fp: 0, positives, negatives: gt.bits().len() - positives };
    for (&s, &g) in map.values().iter().zip(gt.bits()) {
        if s >= tau {
            if g { c.tp += 1 } else { c.fp += 1 }
        }
    }
    c
}

/// Threshold `k` of the uniform grid, `k / 255`.
pub fn threshold(k: usize) -> f64 {
    k as f64 / (THRESHOLDS - 1) as f64
}

/// Confusion counts for all thresholds in one pass over the pixels: each
/// pixel is predicted at every threshold up to its bucket.
fn sweep(map: &SaliencyMap, gt: &BinaryMask) -> Vec<Confusion> {
    let positives = gt.count();
    let negatives = gt.bits().len() - positives;
    let mut pos_hist = [0usize; THRESHOLDS];
    let mut neg_hist = [0usize; THRESHOLDS];
    for (&s, &g) in map.values().iter().zip(gt.bits()) {
        // highest k with k/255 <= s
        let mut k = (libm::floor(s * (THRESHOLDS - 1) as f64) as usize).min(THRESHOLDS - 1);
        while k + 1 < THRESHOLDS && threshold(k + 1) <= s {
            k += 1;
        }
        while k > 0 && threshold(k) > s {
            k -= 1;
        }
        if g { pos_hist[k] += 1 } else { neg_hist[k] += 1 }
    }
    let mut out = Vec::with_capacity(THRESHOLDS);
    let (mut tp, mut fp) = (positives, negatives);
    for k in 0..THRESHOLDS {
        out.push(Confusion { tp, fp, positives, negatives });
        tp -= pos_hist[k];
        fp -= neg_hist[k];
    }
    out
}

/// Precision, recall and ROC points at 256 thresholds with the rule `s ≥ τ`.
/// Precision is 1 when nothing is predicted salient.
pub fn pr_curve(map: &SaliencyMap, gt: &BinaryMask) -> Result<PrCurve> {
    check_sizes(map, gt)?;
    let sweep = sweep(map, gt);
    Ok(PrCurve {
        thresholds: (0..THRESHOLDS).map(threshold).collect(),
        precision: sweep.iter().map(Confusion::precision).collect(),
        recall: sweep.iter().map(Confusion::recall).collect(),
        tpr: sweep.iter().map(Confusion::recall).collect(),
        fpr: sweep.iter().map(Confusion::fpr).collect(),
    })
}

/// `(1+β²)PR / (β²P + R)` with β² = 0.3; zero when the denominator vanishes.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    let den = F_BETA_SQ * precision + recall;
    if den <= 0.0 {
        return 0.0;
    }
    (1.0 + F_BETA_SQ) * precision * recall / den
}

/// F-measure of the map binarized at `min(2·mean, 1)`.
pub fn adaptive_f_measure(map: &SaliencyMap, gt: &BinaryMask) -> Result<f64> {
    check_sizes(map, gt)?;
    let tau = (2.0 * map.mean()).min(1.0);
    let c = confusion_at(map, gt, tau);
    Ok(f_measure(c.precision(), c.recall()))
}

/// Trapezoidal area under the ROC polyline through the 256 threshold points
/// plus `(0, 0)` and `(1, 1)`.
pub fn auc(map: &SaliencyMap, gt: &BinaryMask) -> Result<f64> {
    check_sizes(map, gt)?;
    if gt.count() == gt.bits().len() {
        return Err(Error::invalid("ground truth has no background pixels"));
    }
    let curve = pr_curve(map, gt)?;
    let mut pts: Vec<(f64, f64)> = curve.fpr.iter().copied().zip(curve.tpr.iter().copied()).collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum())
}
