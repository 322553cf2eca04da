//! Winner-take-all disparity selection and error metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::EvalMask;
use crate::volume::{CostVolume, DisparityMap};

/// Per pixel, the smallest label attaining the minimum cost.
pub fn wta(vol: &CostVolume) -> DisparityMap {
    let levels = vol.levels();
    let data: Vec<f32> = vol
        .data()
        .par_chunks(levels)
        .map(|costs| {
            let mut best = 0;
            for (l, &c) in costs.iter().enumerate().skip(1) {
                if c < costs[best] {
                    best = l;
                }
            }
            best as f32
        })
        .collect();
    DisparityMap::new(vol.width(), vol.height(), data).expect("labels are finite and non-negative")
}

fn check(d: &DisparityMap, gt: &DisparityMap, mask: &EvalMask) -> Result<usize> {
    let dims = (d.width(), d.height());
    if dims != (gt.width(), gt.height()) || dims != (mask.width(), mask.height()) {
        return Err(Error::Dimension(format!(
            "disparity {}x{}, ground truth {}x{}, mask {}x{}",
            d.width(),
            d.height(),
            gt.width(),
            gt.height(),
            mask.width(),
            mask.height()
        )));
    }
    match mask.count() {
        0 => Err(Error::EmptyMask),
        n => Ok(n),
    }
}

fn masked_errors<'a>(
    d: &'a DisparityMap,
    gt: &'a DisparityMap,
    mask: &'a EvalMask,
) -> impl Iterator<Item = f64> + 'a {
    d.data()
        .iter()
        .zip(gt.data())
        .zip(mask.data())
        .filter(|(_, &m)| m)
        .map(|((&a, &b), _)| (a as f64 - b as f64).abs())
}

/// Percentage of masked pixels with `|d - gt| > t`.
pub fn error_rate(d: &DisparityMap, gt: &DisparityMap, mask: &EvalMask, t: f64) -> Result<f64> {
    let n = check(d, gt, mask)?;
    let bad = masked_errors(d, gt, mask).filter(|&e| e > t).count();
    Ok(100.0 * bad as f64 / n as f64)
}

/// Mean `|d - gt|` over the mask.
pub fn avg_abs_error(d: &DisparityMap, gt: &DisparityMap, mask: &EvalMask) -> Result<f64> {
    let n = check(d, gt, mask)?;
    Ok(masked_errors(d, gt, mask).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub method: String,
    pub cross_scale: bool,
    pub error_rate: f64,
    pub avg_err: f64,
    pub threshold: f64,
    pub evaluated_pixels: usize,
    pub runtime_ms: f64,
}

impl EvalReport {
    /// Evaluates `d` against `gt` and fills in the metrics.
    pub fn evaluate(
        name: &str,
        method: &str,
        cross_scale: bool,
        d: &DisparityMap,
        gt: &DisparityMap,
        mask: &EvalMask,
        threshold: f64,
    ) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            method: method.to_string(),
            cross_scale,
            error_rate: error_rate(d, gt, mask, threshold)?,
            avg_err: avg_abs_error(d, gt, mask)?,
            threshold,
            evaluated_pixels: mask.count(),
            runtime_ms: 0.0,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields serialize")
    }
}
