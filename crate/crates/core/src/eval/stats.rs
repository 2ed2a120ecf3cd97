use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box-plot summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Most extreme samples inside `[q25 − 1.5·IQR, q75 + 1.5·IQR]`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outlier_count: usize,
}

/// Quantile of sorted data by linear interpolation between closest ranks.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn summarize_box_stats(samples: &[f64]) -> Result<EvalSummary> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "cannot summarise an empty sample"));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample {x}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let q25 = quantile_sorted(&sorted, 0.25);
    let q75 = quantile_sorted(&sorted, 0.75);
    let iqr = q75 - q25;
    let (fence_lo, fence_hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let mut inside = sorted.iter().copied().filter(|&x| x >= fence_lo && x <= fence_hi);
    let whisker_low = inside.clone().next().unwrap_or(q25).min(q25);
    let whisker_high = inside.next_back().unwrap_or(q75).max(q75);
    Ok(EvalSummary {
        n,
        mean: sorted.iter().sum::<f64>() / n as f64,
        median: quantile_sorted(&sorted, 0.5),
        q25,
        q75,
        whisker_low,
        whisker_high,
        outlier_count: sorted.iter().filter(|&&x| x < fence_lo || x > fence_hi).count(),
    })
}
