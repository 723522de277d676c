//! Overlap and area agreement between predicted and reference segmentations.

use crate::error::{Error, Result};
use crate::image::{rasterize_contour, Contour, Mask};
use crate::tracker::TrackingRecord;

/// Frames where both predicted and reference area fall below this many square
/// pixels count as a correctly detected collapse.
pub const EMPTY_AREA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub per_frame_dice: Vec<f64>,
    pub mean_dice: f64,
    pub csa_pred: Vec<f64>,
    pub csa_truth: Vec<f64>,
    pub pearson_r: f64,
    /// Set when either CSA series has zero variance and `pearson_r` was
    /// reported as 0.
    pub pearson_undefined: bool,
    pub frames_evaluated: usize,
}

/// `2 |a & m| / (|a| + |m|)`.
pub fn dice(a: &Mask, m: &Mask) -> Result<f64> {
    if !a.same_dims(m) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            m.width(),
            m.height()
        )));
    }
    let (mut na, mut nm, mut both) = (0usize, 0usize, 0usize);
    for (&p, &q) in a.bits().iter().zip(m.bits()) {
        na += p as usize;
        nm += q as usize;
        both += (p && q) as usize;
    }
    if na + nm == 0 {
        return Err(Error::BothMasksEmpty);
    }
    Ok(2.0 * both as f64 / (na + nm) as f64)
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Score one frame. `pred` is `None` for frames without a contour.
pub fn frame_dice(pred: Option<&Contour>, pred_area: f64, truth: &Mask, truth_area: f64) -> Result<f64> {
    if pred_area < EMPTY_AREA && truth_area < EMPTY_AREA {
        return Ok(1.0);
    }
    let predicted = match pred {
        Some(c) => rasterize_contour(c, truth.width(), truth.height())?,
        None => Mask::empty(truth.width(), truth.height()),
    };
    match dice(&predicted, truth) {
        // both rasterize to nothing although one area is slightly larger
        Err(Error::BothMasksEmpty) => Ok(1.0),
        other => other,
    }
}

/// Per-frame predictions: contour (if any) and its CSA.
pub type Prediction = (Option<Contour>, f64);

pub fn summarize_predictions(preds: &[Prediction], truth_masks: &[Mask], truth_csa: &[f64]) -> Result<EvalSummary> {
    if preds.len() != truth_masks.len() || preds.len() != truth_csa.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions, {} truth masks, {} truth areas",
            preds.len(),
            truth_masks.len(),
            truth_csa.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("nothing to evaluate".into()));
    }
    let per_frame_dice = preds
        .iter()
        .zip(truth_masks)
        .zip(truth_csa)
        .map(|(((c, a), m), &ta)| frame_dice(c.as_ref(), *a, m, ta))
        .collect::<Result<Vec<f64>>>()?;
    let mean_dice = per_frame_dice.iter().sum::<f64>() / per_frame_dice.len() as f64;
    let csa_pred: Vec<f64> = preds.iter().map(|p| p.1).collect();
    let r = pearson(&csa_pred, truth_csa);
    Ok(EvalSummary {
        frames_evaluated: per_frame_dice.len(),
        per_frame_dice,
        mean_dice,
        csa_pred,
        csa_truth: truth_csa.to_vec(),
        pearson_r: r.unwrap_or(0.0),
        pearson_undefined: r.is_none(),
    })
}

pub fn summarize(record: &TrackingRecord, truth_masks: &[Mask], truth_csa: &[f64]) -> Result<EvalSummary> {
    let preds: Vec<Prediction> = record
        .results
        .iter()
        .map(|r| (r.contour.clone(), r.csa))
        .collect();
    summarize_predictions(&preds, truth_masks, truth_csa)
}

/// `frame,dice,csa_pred,csa_truth`
pub fn eval_csv(summary: &EvalSummary) -> String {
    let mut out = String::from("frame,dice,csa_pred,csa_truth\n");
    for (k, d) in summary.per_frame_dice.iter().enumerate() {
        out.push_str(&format!(
            "{k},{d:.17},{:.6},{:.6}\n",
            summary.csa_pred[k], summary.csa_truth[k]
        ));
    }
    out
}

pub fn summary_line(summary: &EvalSummary) -> String {
    let flag = if summary.pearson_undefined {
        " pearson_undefined=true"
    } else {
        ""
    };
    format!(
        "mean_dice={:.6} pearson_r={:.6} frames={}{flag}\n",
        summary.mean_dice, summary.pearson_r, summary.frames_evaluated
    )
}
