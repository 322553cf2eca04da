//! Intra-scale cost aggregation. Every kernel realizes
//! `C~(i,l) = (1/Z_i) sum_j K(i,j) C(j,l)`; `Z_i` is obtained by running the
//! same kernel over an all-ones volume.

mod bilateral;
mod boxfilter;
mod guided;
mod tree;

use rayon::prelude::*;

pub use tree::{build_mst, build_segment_tree, SpanningTree};

use crate::error::{Error, Result};
use crate::image::ColorImage;
use crate::volume::CostVolume;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxParams {
    pub radius: usize,
}

impl Default for BoxParams {
    fn default() -> Self {
        // 7x7 window
        Self { radius: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    pub radius: usize,
    pub sigma_s: f64,
    pub sigma_c: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        // 35x35 window
        Self {
            radius: 17,
            sigma_s: 17.5,
            sigma_c: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedParams {
    pub radius: usize,
    pub eps: f64,
}

impl Default for GuidedParams {
    fn default() -> Self {
        Self {
            radius: 9,
            eps: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Falloff of `exp(-D/sigma)` on `[0, 1]` edge weights.
    pub sigma: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { sigma: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTreeParams {
    pub sigma: f64,
    /// Segmentation threshold `k` of the merge criterion, in `[0, 1]` color units.
    pub k: f64,
}

impl Default for SegmentTreeParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            k: 1200.0 / 255.0,
        }
    }
}

/// Similarity kernel used for aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregatorKind {
    Box(BoxParams),
    Bilateral(BilateralParams),
    Guided(GuidedParams),
    NonLocal(TreeParams),
    SegmentTree(SegmentTreeParams),
}

impl AggregatorKind {
    /// Kind with default parameters from its selector (`box|bf|gf|nl|st`).
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "box" => AggregatorKind::Box(BoxParams::default()),
            "bf" => AggregatorKind::Bilateral(BilateralParams::default()),
            "gf" => AggregatorKind::Guided(GuidedParams::default()),
            "nl" => AggregatorKind::NonLocal(TreeParams::default()),
            "st" => AggregatorKind::SegmentTree(SegmentTreeParams::default()),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown aggregator {other:?}, expected box|bf|gf|nl|st"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggregatorKind::Box(_) => "BOX",
            AggregatorKind::Bilateral(_) => "BF",
            AggregatorKind::Guided(_) => "GF",
            AggregatorKind::NonLocal(_) => "NL",
            AggregatorKind::SegmentTree(_) => "ST",
        }
    }

    /// Whether every kernel weight is nonnegative (false only for the guided filter).
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, AggregatorKind::Guided(_))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        let radius = |r: usize| {
            if r >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidParameter("radius must be >= 1".into()))
            }
        };
        match *self {
            AggregatorKind::Box(p) => radius(p.radius),
            AggregatorKind::Bilateral(p) => {
                radius(p.radius)?;
                positive("sigma_s", p.sigma_s)?;
                positive("sigma_c", p.sigma_c)
            }
            AggregatorKind::Guided(p) => {
                radius(p.radius)?;
                positive("eps", p.eps)
            }
            AggregatorKind::NonLocal(p) => positive("sigma", p.sigma),
            AggregatorKind::SegmentTree(p) => {
                positive("sigma", p.sigma)?;
                // k = inf is allowed and degenerates to the MST
                if p.k > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("k must be > 0, got {}", p.k)))
                }
            }
        }
    }
}

fn check_guide(vol: &CostVolume, guide: &ColorImage) -> Result<()> {
    if (vol.width(), vol.height()) != (guide.width(), guide.height()) {
        return Err(Error::Dimension(format!(
            "cost volume is {}x{} but guide is {}x{}",
            vol.width(),
            vol.height(),
            guide.width(),
            guide.height()
        )));
    }
    Ok(())
}

/// Applies `f` to every disparity slice and re-interleaves the results.
fn map_planes(vol: &CostVolume, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Vec<f64> {
    let levels = vol.levels();
    let planes: Vec<Vec<f64>> = (0..levels)
        .into_par_iter()
        .map(|l| f(&vol.level_plane(l)))
        .collect();
    let n = vol.width() * vol.height();
    let mut out = vec![0.0; n * levels];
    for (l, plane) in planes.iter().enumerate() {
        for (i, &v) in plane.iter().enumerate() {
            out[i * levels + l] = v;
        }
    }
    out
}

fn ones_like(vol: &CostVolume) -> CostVolume {
    CostVolume::from_raw(vol.width(), vol.height(), 1, vec![1.0; vol.width() * vol.height()])
}

/// Divides every pixel's sums by its normalizer.
fn normalize(mut sums: Vec<f64>, z: &[f64], levels: usize) -> Vec<f64> {
    for (px, &zi) in sums.chunks_exact_mut(levels).zip(z) {
        for v in px {
            *v /= zi;
        }
    }
    sums
}

/// Kernel-weighted sums without normalization, one output per input value.
fn weighted_sums(vol: &CostVolume, guide: &ColorImage, kind: &AggregatorKind) -> Vec<f64> {
    let (w, h) = (vol.width(), vol.height());
    match *kind {
        AggregatorKind::Box(p) => map_planes(vol, |plane| boxfilter::box_sum(plane, w, h, p.radius)),
        AggregatorKind::Bilateral(p) => {
            bilateral::bilateral_sums(vol.data(), vol.levels(), guide, p.sigma_s, p.sigma_c, p.radius)
        }
        AggregatorKind::Guided(p) => {
            let stats = guided::GuideStats::new(guide, p.radius, p.eps);
            map_planes(vol, |plane| stats.filter(plane))
        }
        AggregatorKind::NonLocal(p) => {
            tree::tree_sums(&build_mst(guide), vol.data(), vol.levels(), p.sigma)
        }
        AggregatorKind::SegmentTree(p) => {
            tree::tree_sums(&build_segment_tree(guide, p.k), vol.data(), vol.levels(), p.sigma)
        }
    }
}

/// Aggregation in double precision, before rounding to the volume's `f32`.
pub fn aggregate_f64(vol: &CostVolume, guide: &ColorImage, kind: &AggregatorKind) -> Result<Vec<f64>> {
    check_guide(vol, guide)?;
    kind.validate()?;
    let sums = weighted_sums(vol, guide, kind);
    let z = weighted_sums(&ones_like(vol), guide, kind);
    Ok(normalize(sums, &z, vol.levels()))
}

/// Aggregates `vol` with the kernel `kind`, guided by `guide` (the left image
/// at the volume's scale).
pub fn aggregate(vol: &CostVolume, guide: &ColorImage, kind: &AggregatorKind) -> Result<CostVolume> {
    let out = aggregate_f64(vol, guide, kind)?;
    Ok(CostVolume::from_f64(vol.width(), vol.height(), vol.levels(), &out))
}

/// Mean over the clamped `(2r+1)^2` window of every slice.
pub fn box_aggregate(vol: &CostVolume, radius: usize) -> Result<CostVolume> {
    let kind = AggregatorKind::Box(BoxParams { radius });
    kind.validate()?;
    let (w, h) = (vol.width(), vol.height());
    let sums = map_planes(vol, |plane| boxfilter::box_sum(plane, w, h, radius));
    let z = map_planes(&ones_like(vol), |plane| boxfilter::box_sum(plane, w, h, radius));
    Ok(CostVolume::from_f64(w, h, vol.levels(), &normalize(sums, &z, vol.levels())))
}

pub fn bilateral_aggregate(
    vol: &CostVolume,
    guide: &ColorImage,
    sigma_s: f64,
    sigma_c: f64,
    radius: usize,
) -> Result<CostVolume> {
    aggregate(
        vol,
        guide,
        &AggregatorKind::Bilateral(BilateralParams { radius, sigma_s, sigma_c }),
    )
}

pub fn guided_aggregate(vol: &CostVolume, guide: &ColorImage, radius: usize, eps: f64) -> Result<CostVolume> {
    aggregate(vol, guide, &AggregatorKind::Guided(GuidedParams { radius, eps }))
}

/// Normalized geodesic aggregation on a prebuilt tree with
/// `K(i,j) = exp(-D(i,j)/sigma)`.
pub fn tree_aggregate(vol: &CostVolume, tree: &SpanningTree, sigma: f64) -> Result<CostVolume> {
    Ok(CostVolume::from_f64(
        vol.width(),
        vol.height(),
        vol.levels(),
        &tree_aggregate_f64(vol, tree, sigma)?,
    ))
}

pub fn tree_aggregate_f64(vol: &CostVolume, tree: &SpanningTree, sigma: f64) -> Result<Vec<f64>> {
    if (tree.width(), tree.height()) != (vol.width(), vol.height()) {
        return Err(Error::Dimension(format!(
            "tree spans {}x{} pixels but volume is {}x{}",
            tree.width(),
            tree.height(),
            vol.width(),
            vol.height()
        )));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let sums = tree::tree_sums(tree, vol.data(), vol.levels(), sigma);
    let z = tree::tree_sums(tree, &vec![1.0; tree.node_count()], 1, sigma);
    Ok(normalize(sums, &z, vol.levels()))
}
