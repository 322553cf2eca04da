//! Cost volumes and disparity maps.

use crate::error::{Error, Result};

/// `width x height x levels` matching costs. Row-major over pixels with the
/// disparity axis fastest, so all costs of one pixel are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<f32>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, levels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || levels == 0 {
            return Err(Error::Dimension(format!(
                "cost volume dims must be positive, got {width}x{height}x{levels}"
            )));
        }
        if data.len() != width * height * levels {
            return Err(Error::Dimension(format!(
                "cost volume {width}x{height}x{levels} needs {} values, got {}",
                width * height * levels,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite cost {v}")));
        }
        Ok(Self {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, levels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, levels, vec![value; width * height * levels])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        levels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * levels);
        for y in 0..height {
            for x in 0..width {
                for l in 0..levels {
                    data.push(f(x, y, l));
                }
            }
        }
        Self::new(width, height, levels, data)
    }

    /// Crate-internal constructor; `data` is trusted to satisfy the invariants.
    pub(crate) fn from_raw(width: usize, height: usize, levels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * levels);
        Self {
            width,
            height,
            levels,
            data,
        }
    }

    pub(crate) fn from_f64(width: usize, height: usize, levels: usize, data: &[f64]) -> Self {
        Self::from_raw(width, height, levels, data.iter().map(|&v| v as f32).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, l: usize) -> f32 {
        self.data[(y * self.width + x) * self.levels + l]
    }

    /// All `levels` costs of one pixel.
    #[inline]
    pub fn costs_at(&self, x: usize, y: usize) -> &[f32] {
        let o = (y * self.width + x) * self.levels;
        &self.data[o..o + self.levels]
    }

    /// Copy of one disparity slice as a `width x height` plane.
    pub fn level_plane(&self, l: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(l)
            .step_by(self.levels)
            .map(|&v| v as f64)
            .collect()
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Per-pixel disparities. Winner-take-all output holds integer labels;
/// ground truth loaded from scaled PGMs may hold fractional values.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "disparity map must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "disparity map {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid disparity {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}
