//! Flat `key = value` run configuration.
//!
//! Settings are collected as strings (from a file, then from command-line
//! overrides) and only typed and checked by [`Settings::params`] and
//! [`Settings::run_config`], so every source shares one set of rules.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::aggregators::{
    AggregatorKind, BilateralParams, BoxParams, GuidedParams, SegmentTreeParams, TreeParams,
};
use crate::cost::{CensusParams, CostMethod, GradCostParams};
use crate::crossscale::{DisparityMapping, Sampling, SpatialMapping};
use crate::error::{Error, Result};
use crate::imageio::DatasetEntry;

/// Every accepted key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("name", "stem of left", "entry identifier used in reports"),
    ("left", "", "left image (PPM/PGM)"),
    ("right", "", "right image (PPM/PGM)"),
    ("gt", "", "ground-truth disparity PGM"),
    ("mask", "none", "non-occlusion mask PGM, nonzero = evaluate"),
    ("max_disparity", "", "number of disparity levels L"),
    ("gt_scale", "1", "divisor from stored gray value to disparity"),
    ("manifest", "", "dataset manifest for bench and sweep-lambda"),
    ("method", "nl", "aggregator: box|bf|gf|nl|st"),
    ("cost", "grad", "matching cost: grad|census"),
    ("cross_scale", "true", "fuse scales 0..S (false uses scale 0 only)"),
    ("scales", "4", "coarsest pyramid scale S"),
    ("lambda", "0.3", "inter-scale regularization, >= 0"),
    ("threshold", "1 (grad), 3 (census)", "bad-pixel threshold in pixels"),
    ("out_disp", "none", "write the disparity map to this PGM"),
    ("disp_scale", "gt_scale", "gray value per disparity in out_disp"),
    ("alpha", "0.89", "gradient weight of the grad cost (color gets 1 - alpha)"),
    ("tau1", "0.027", "color truncation of the grad cost"),
    ("tau2", "0.008", "gradient truncation of the grad cost"),
    ("census_w", "9", "census window width (odd)"),
    ("census_h", "7", "census window height (odd)"),
    ("box_radius", "3", "BOX window radius"),
    ("bf_radius", "17", "BF window radius"),
    ("bf_sigma_s", "17.5", "BF spatial sigma in pixels"),
    ("bf_sigma_c", "0.1", "BF color sigma"),
    ("gf_radius", "9", "GF window radius"),
    ("gf_eps", "0.0001", "GF regularization epsilon"),
    ("nl_sigma", "0.1", "NL falloff sigma"),
    ("st_sigma", "0.1", "ST falloff sigma"),
    ("st_k", "4.70588", "ST segmentation threshold k (1200/255)"),
    ("spatial_mapping", "nearest", "fine-to-coarse pixel mapping: nearest|bilinear"),
    ("disparity_mapping", "linear", "fine-to-coarse disparity mapping: linear|nearest"),
];

/// Raw key/value settings; later writes win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Pipeline parameters shared by every entry of a run or benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub cost: CostMethod,
    pub aggregator: AggregatorKind,
    pub cross_scale: bool,
    pub scales: usize,
    pub lambda: f64,
    pub threshold: f64,
    pub sampling: Sampling,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            cost: CostMethod::Grad(GradCostParams::default()),
            aggregator: AggregatorKind::NonLocal(TreeParams::default()),
            cross_scale: true,
            scales: 4,
            lambda: 0.3,
            threshold: 1.0,
            sampling: Sampling::default(),
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        self.aggregator.validate()?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must satisfy lambda >= 0, got {}", self.lambda)));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must satisfy threshold >= 0, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Report label, e.g. `S+NL` or `NL`.
    pub fn method_label(&self) -> String {
        if self.cross_scale {
            format!("S+{}", self.aggregator.name())
        } else {
            self.aggregator.name().to_string()
        }
    }
}

/// A single pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub entry: DatasetEntry,
    pub params: PipelineParams,
    pub out_disp: Option<PathBuf>,
    /// Gray value per disparity unit when writing `out_disp`.
    pub disp_scale: f32,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

impl Settings {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            s.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip(e))))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        if !known(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: expected {what}, got {v:?}")))
            })
            .transpose()
    }

    fn or<T: std::str::FromStr>(&self, key: &str, what: &str, default: T) -> Result<T> {
        Ok(self.typed(key, what)?.unwrap_or(default))
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "1" | "yes" | "on") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn params(&self) -> Result<PipelineParams> {
        let cost = match self.get("cost").unwrap_or("grad") {
            "grad" => {
                let d = GradCostParams::default();
                CostMethod::Grad(GradCostParams {
                    alpha: self.or("alpha", "a number", d.alpha)?,
                    tau1: self.or("tau1", "a number", d.tau1)?,
                    tau2: self.or("tau2", "a number", d.tau2)?,
                })
            }
            "census" => {
                let d = CensusParams::default();
                CostMethod::Census(CensusParams {
                    win_w: self.or("census_w", "an integer", d.win_w)?,
                    win_h: self.or("census_h", "an integer", d.win_h)?,
                })
            }
            other => return Err(Error::Config(format!("cost: expected grad|census, got {other:?}"))),
        };
        let aggregator = match AggregatorKind::from_name(self.get("method").unwrap_or("nl"))
            .map_err(|e| Error::Config(format!("method: {}", strip(e))))?
        {
            AggregatorKind::Box(d) => AggregatorKind::Box(BoxParams {
                radius: self.or("box_radius", "an integer", d.radius)?,
            }),
            AggregatorKind::Bilateral(d) => AggregatorKind::Bilateral(BilateralParams {
                radius: self.or("bf_radius", "an integer", d.radius)?,
                sigma_s: self.or("bf_sigma_s", "a number", d.sigma_s)?,
                sigma_c: self.or("bf_sigma_c", "a number", d.sigma_c)?,
            }),
            AggregatorKind::Guided(d) => AggregatorKind::Guided(GuidedParams {
                radius: self.or("gf_radius", "an integer", d.radius)?,
                eps: self.or("gf_eps", "a number", d.eps)?,
            }),
            AggregatorKind::NonLocal(d) => AggregatorKind::NonLocal(TreeParams {
                sigma: self.or("nl_sigma", "a number", d.sigma)?,
            }),
            AggregatorKind::SegmentTree(d) => AggregatorKind::SegmentTree(SegmentTreeParams {
                sigma: self.or("st_sigma", "a number", d.sigma)?,
                k: self.or("st_k", "a number", d.k)?,
            }),
        };
        let default_threshold = match cost {
            CostMethod::Grad(_) => 1.0,
            CostMethod::Census(_) => 3.0,
        };
        let spatial = match self.get("spatial_mapping").unwrap_or("nearest") {
            "nearest" => SpatialMapping::Nearest,
            "bilinear" => SpatialMapping::Bilinear,
            v => return Err(Error::Config(format!("spatial_mapping: expected nearest|bilinear, got {v:?}"))),
        };
        let disparity = match self.get("disparity_mapping").unwrap_or("linear") {
            "linear" => DisparityMapping::Linear,
            "nearest" => DisparityMapping::Nearest,
            v => return Err(Error::Config(format!("disparity_mapping: expected linear|nearest, got {v:?}"))),
        };
        let p = PipelineParams {
            cost,
            aggregator,
            cross_scale: self.boolean("cross_scale", true)?,
            scales: self.or("scales", "a non-negative integer", 4)?,
            lambda: self.or("lambda", "a number", 0.3)?,
            threshold: self.or("threshold", "a number", default_threshold)?,
            sampling: Sampling { spatial, disparity },
        };
        p.validate().map_err(|e| Error::Config(strip(e)))?;
        Ok(p)
    }

    /// Entry described by `left`, `right`, `gt`, `mask`, `max_disparity`, `gt_scale`.
    pub fn entry(&self) -> Result<DatasetEntry> {
        let need = |k: &str| {
            self.path(k)
                .ok_or_else(|| Error::Config(format!("missing required key {k:?}")))
        };
        let left = need("left")?;
        let max_disparity: usize = self
            .typed("max_disparity", "a positive integer")?
            .ok_or_else(|| Error::Config("missing required key \"max_disparity\"".into()))?;
        let entry = DatasetEntry {
            name: self.get("name").map(str::to_string).unwrap_or_else(|| {
                left.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }),
            right_path: need("right")?,
            gt_path: need("gt")?,
            nonocc_mask_path: self.path("mask"),
            max_disparity,
            gt_scale: self.or("gt_scale", "a number", 1.0)?,
            left_path: left,
        };
        if entry.max_disparity < 1 {
            return Err(Error::Config("max_disparity must satisfy max_disparity >= 1".into()));
        }
        if !(entry.gt_scale > 0.0 && entry.gt_scale.is_finite()) {
            return Err(Error::Config(format!("gt_scale must satisfy gt_scale > 0, got {}", entry.gt_scale)));
        }
        Ok(entry)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let entry = self.entry()?;
        let disp_scale = self.or("disp_scale", "a number", entry.gt_scale)?;
        if !(disp_scale > 0.0 && disp_scale.is_finite()) {
            return Err(Error::Config(format!("disp_scale must satisfy disp_scale > 0, got {disp_scale}")));
        }
        Ok(RunConfig {
            params: self.params()?,
            out_disp: self.path("out_disp"),
            disp_scale,
            entry,
        })
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidParameter(m) => m,
        other => other.to_string(),
    }
}
