//! End-to-end runs: pyramid, per-scale cost and aggregation, fusion, WTA and
//! evaluation, plus the benchmark and lambda-sweep drivers built on them.

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::aggregators::{aggregate, AggregatorKind};
use crate::config::{PipelineParams, RunConfig};
use crate::cost::{build_cost_volume, levels_at_scale};
use crate::crossscale::{fuse_with, row0_inverse_weights, CostPyramid};
use crate::error::{Error, Result};
use crate::eval::{wta, EvalReport};
use crate::image::ColorImage;
use crate::imageio::{load_gt_disparity, load_image, save_disparity, DatasetEntry, EvalMask};
use crate::pyramid::{build_pyramid, level_dims};
use crate::volume::{CostVolume, DisparityMap};

/// A loaded stereo pair with its ground truth.
#[derive(Debug, Clone)]
pub struct StereoPair {
    pub name: String,
    pub left: ColorImage,
    pub right: ColorImage,
    pub gt: DisparityMap,
    pub mask: EvalMask,
    pub levels: usize,
}

pub fn load_pair(entry: &DatasetEntry) -> Result<StereoPair> {
    let stage = |e: Error| e.in_stage("load");
    entry.validate().map_err(stage)?;
    let left = load_image(&entry.left_path).map_err(stage)?;
    let right = load_image(&entry.right_path).map_err(stage)?;
    let (gt, mask) = load_gt_disparity(entry).map_err(stage)?;
    let dims = (left.width(), left.height());
    if dims != (right.width(), right.height()) || dims != (gt.width(), gt.height()) {
        return Err(stage(Error::Dimension(format!(
            "left {}x{}, right {}x{}, ground truth {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height(),
            gt.width(),
            gt.height()
        ))));
    }
    Ok(StereoPair {
        name: entry.name.clone(),
        left,
        right,
        gt,
        mask,
        levels: entry.max_disparity,
    })
}

/// Work of the multi-scale cost volumes, `sum_s W_s H_s L_s`, next to the
/// geometric-series bound `(8/7) W H L` with 5% slack for rounded-up sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexity {
    pub units: u64,
    pub bound: f64,
}

impl Complexity {
    pub fn new(width: usize, height: usize, levels: usize, scales: usize) -> Self {
        let units = level_dims(width, height, scales)
            .iter()
            .enumerate()
            .map(|(s, &(w, h))| (w * h * levels_at_scale(levels, s)) as u64)
            .sum();
        let bound = 8.0 / 7.0 * (width * height * levels) as f64 * 1.05;
        Self { units, bound }
    }

    pub fn holds(&self) -> bool {
        self.units as f64 <= self.bound
    }
}

/// Per-scale aggregated cost volumes `C~^s` for `s = 0..=S` (only `s = 0`
/// when cross-scale is off).
pub fn aggregated_pyramid(
    left: &ColorImage,
    right: &ColorImage,
    levels: usize,
    params: &PipelineParams,
) -> Result<CostPyramid> {
    let scales = if params.cross_scale { params.scales } else { 0 };
    let lp = build_pyramid(left, scales).map_err(|e| e.in_stage("pyramid"))?;
    let rp = build_pyramid(right, scales).map_err(|e| e.in_stage("pyramid"))?;
    aggregate_levels(lp.levels(), rp.levels(), levels, params)
}

fn aggregate_levels(
    lefts: &[ColorImage],
    rights: &[ColorImage],
    levels: usize,
    params: &PipelineParams,
) -> Result<CostPyramid> {
    let mut vols = Vec::with_capacity(lefts.len());
    for (s, (l, r)) in lefts.iter().zip(rights).enumerate() {
        let cost = build_cost_volume(l, r, levels_at_scale(levels, s), &params.cost)
            .map_err(|e| e.in_stage("cost"))?;
        vols.push(aggregate(&cost, l, &params.aggregator).map_err(|e| e.in_stage("aggregate"))?);
    }
    CostPyramid::new(vols).map_err(|e| e.in_stage("fuse"))
}

fn fuse_pyramid(pyr: &CostPyramid, params: &PipelineParams) -> Result<CostVolume> {
    if pyr.scales() == 0 {
        return Ok(pyr.finest().clone());
    }
    let w = row0_inverse_weights(pyr.scales(), params.lambda).map_err(|e| e.in_stage("fuse"))?;
    fuse_with(pyr, &w, params.sampling).map_err(|e| e.in_stage("fuse"))
}

/// Final cost volume `C^^0` and the milliseconds spent on cost computation,
/// aggregation and fusion.
pub fn final_cost_volume(
    left: &ColorImage,
    right: &ColorImage,
    levels: usize,
    params: &PipelineParams,
) -> Result<(CostVolume, f64)> {
    params.validate().map_err(|e| e.in_stage("config"))?;
    let scales = if params.cross_scale { params.scales } else { 0 };
    let lp = build_pyramid(left, scales).map_err(|e| e.in_stage("pyramid"))?;
    let rp = build_pyramid(right, scales).map_err(|e| e.in_stage("pyramid"))?;
    let c = Complexity::new(left.width(), left.height(), levels, scales);
    if !c.holds() {
        warn!("cost volume work {} exceeds the bound {:.0}", c.units, c.bound);
    }
    let start = Instant::now();
    let pyr = aggregate_levels(lp.levels(), rp.levels(), levels, params)?;
    let fused = fuse_pyramid(&pyr, params)?;
    Ok((fused, start.elapsed().as_secs_f64() * 1e3))
}

/// Disparity map and report for an already loaded pair.
pub fn run_on_pair(pair: &StereoPair, params: &PipelineParams) -> Result<(DisparityMap, EvalReport)> {
    let (vol, ms) = final_cost_volume(&pair.left, &pair.right, pair.levels, params)?;
    let d = wta(&vol);
    let mut report = EvalReport::evaluate(
        &pair.name,
        &params.method_label(),
        params.cross_scale,
        &d,
        &pair.gt,
        &pair.mask,
        params.threshold,
    )
    .map_err(|e| e.in_stage("evaluate"))?;
    report.runtime_ms = ms;
    Ok((d, report))
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<(DisparityMap, EvalReport)> {
    let pair = load_pair(&cfg.entry)?;
    let (d, report) = run_on_pair(&pair, &cfg.params)?;
    if let Some(path) = &cfg.out_disp {
        save_disparity(&d, cfg.disp_scale, path).map_err(|e| e.in_stage("output"))?;
    }
    Ok((d, report))
}

/// Mean metrics of one method configuration over the entries that ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub summary: bool,
    pub method: String,
    pub cross_scale: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    pub entries: usize,
    pub mean_error_rate: f64,
    pub mean_avg_err: f64,
    pub mean_runtime_ms: f64,
}

impl SummaryRow {
    fn from_reports(method: String, cross_scale: bool, lambda: Option<f64>, reports: &[&EvalReport]) -> Self {
        let n = reports.len();
        let mean = |f: fn(&EvalReport) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                reports.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        Self {
            summary: true,
            method,
            cross_scale,
            lambda,
            entries: n,
            mean_error_rate: mean(|r| r.error_rate),
            mean_avg_err: mean(|r| r.avg_err),
            mean_runtime_ms: mean(|r| r.runtime_ms),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary fields serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub name: String,
    pub method: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub reports: Vec<EvalReport>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
}

/// Runs every (entry, method, cross-scale flag) combination. `on_report` sees
/// each report and its disparity map as soon as they exist; a failing entry
/// is recorded and skipped.
pub fn run_benchmark(
    entries: &[DatasetEntry],
    methods: &[AggregatorKind],
    flags: &[bool],
    base: &PipelineParams,
    mut on_report: impl FnMut(&EvalReport, &DisparityMap),
) -> BenchOutcome {
    let mut out = BenchOutcome::default();
    let combos: Vec<PipelineParams> = methods
        .iter()
        .flat_map(|m| {
            flags.iter().map(move |&cross_scale| PipelineParams {
                aggregator: *m,
                cross_scale,
                ..base.clone()
            })
        })
        .collect();
    // validate everything before computing anything
    let checked: Vec<Result<()>> = entries
        .iter()
        .map(|e| e.validate().map_err(|err| err.in_stage("load")))
        .collect();
    for (entry, check) in entries.iter().zip(checked) {
        let pair = match check.and_then(|_| load_pair(entry)) {
            Ok(pair) => pair,
            Err(e) => {
                for params in &combos {
                    out.failures.push(Failure {
                        name: entry.name.clone(),
                        method: params.method_label(),
                        error: e.to_string(),
                    });
                }
                continue;
            }
        };
        for params in &combos {
            info!("{} {}", pair.name, params.method_label());
            match run_on_pair(&pair, params) {
                Ok((d, report)) => {
                    on_report(&report, &d);
                    out.reports.push(report);
                }
                Err(e) => out.failures.push(Failure {
                    name: pair.name.clone(),
                    method: params.method_label(),
                    error: e.to_string(),
                }),
            }
        }
    }
    for params in &combos {
        let label = params.method_label();
        let rows: Vec<&EvalReport> = out.reports.iter().filter(|r| r.method == label).collect();
        out.summary
            .push(SummaryRow::from_reports(label, params.cross_scale, None, &rows));
    }
    out
}

/// Error as a function of lambda for one aggregator with cross-scale on.
/// Per-scale aggregation does not depend on lambda, so it runs once per
/// entry and only the fusion is repeated.
pub fn run_lambda_sweep(
    entries: &[DatasetEntry],
    base: &PipelineParams,
    lambdas: &[f64],
    mut on_report: impl FnMut(f64, &EvalReport),
) -> BenchOutcome {
    let params = PipelineParams {
        cross_scale: true,
        ..base.clone()
    };
    let mut out = BenchOutcome::default();
    let mut per_lambda: Vec<Vec<EvalReport>> = vec![Vec::new(); lambdas.len()];
    let label = params.method_label();
    for entry in entries {
        let fail = |e: Error| Failure {
            name: entry.name.clone(),
            method: label.clone(),
            error: e.to_string(),
        };
        let pair = match load_pair(entry) {
            Ok(p) => p,
            Err(e) => {
                out.failures.push(fail(e));
                continue;
            }
        };
        let start = Instant::now();
        let pyr = match aggregated_pyramid(&pair.left, &pair.right, pair.levels, &params) {
            Ok(p) => p,
            Err(e) => {
                out.failures.push(fail(e));
                continue;
            }
        };
        let shared_ms = start.elapsed().as_secs_f64() * 1e3;
        for (k, &lambda) in lambdas.iter().enumerate() {
            let p = PipelineParams { lambda, ..params.clone() };
            let t = Instant::now();
            let result = p
                .validate()
                .map_err(|e| e.in_stage("config"))
                .and_then(|_| fuse_pyramid(&pyr, &p))
                .and_then(|vol| {
                    let d = wta(&vol);
                    EvalReport::evaluate(&pair.name, &label, true, &d, &pair.gt, &pair.mask, p.threshold)
                        .map_err(|e| e.in_stage("evaluate"))
                });
            match result {
                Ok(mut r) => {
                    r.runtime_ms = shared_ms + t.elapsed().as_secs_f64() * 1e3;
                    on_report(lambda, &r);
                    per_lambda[k].push(r.clone());
                    out.reports.push(r);
                }
                Err(e) => out.failures.push(fail(e)),
            }
        }
    }
    for (k, &lambda) in lambdas.iter().enumerate() {
        let rows: Vec<&EvalReport> = per_lambda[k].iter().collect();
        out.summary
            .push(SummaryRow::from_reports(label.clone(), true, Some(lambda), &rows));
    }
    out
}
