//! Inter-scale regularized fusion of per-scale aggregated cost volumes.
//!
//! For one fine-scale pixel and disparity, the aggregated costs of all
//! scales form `v~ = [C~^0, ..., C~^S]`. Minimizing
//! `sum_s |z^s - C~^s|^2 + lambda sum_{s>=1} |z^s - z^{s-1}|^2` gives the
//! tridiagonal system `A v^ = v~`. Only `C^^0` feeds disparity selection, so
//! the production path needs just row 0 of `A^-1`, which is the same for
//! every pixel and is computed once.

use crate::cost::levels_at_scale;
use crate::error::{Error, Result};
use crate::image::PixelCoord;
use crate::pyramid::level_dims;
use crate::volume::CostVolume;

/// `(S+1) x (S+1)` tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `sub[i]` is entry `(i+1, i)`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// `sup[i]` is entry `(i, i+1)`.
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.sup[i];
                m[i + 1][i] = self.sub[i];
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            sub: self.sup.clone(),
            diag: self.diag.clone(),
            sup: self.sub.clone(),
        }
    }

    /// Thomas elimination. The matrices built here are strictly diagonally
    /// dominant, so no pivoting is needed.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.size();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = if n > 1 { self.sup[0] / self.diag[0] } else { 0.0 };
        d[0] = rhs[0] / self.diag[0];
        for i in 1..n {
            let denom = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.sup[i] / denom;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must satisfy lambda >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// System matrix of the stationarity conditions. Interior rows are
/// `(-lambda, 1 + 2 lambda, -lambda)`; the end rows only touch one
/// regularizer term, giving `(1 + lambda, -lambda)` and `(-lambda, 1 + lambda)`.
pub fn build_tridiagonal(scales: usize, lambda: f64) -> Result<Tridiagonal> {
    check_lambda(lambda)?;
    let n = scales + 1;
    let mut diag = vec![1.0 + 2.0 * lambda; n];
    if n == 1 {
        diag[0] = 1.0;
    } else {
        diag[0] = 1.0 + lambda;
        diag[n - 1] = 1.0 + lambda;
    }
    Ok(Tridiagonal {
        sub: vec![-lambda; n - 1],
        diag,
        sup: vec![-lambda; n - 1],
    })
}

/// Row 0 of `A^-1`: the fusion coefficient of each scale.
#[derive(Debug, Clone, PartialEq)]
pub struct InterScaleWeights {
    pub scales: usize,
    pub lambda: f64,
    pub weights: Vec<f64>,
}

/// Solves `A^T x = e_0`, whose solution is row 0 of `A^-1`.
pub fn row0_inverse_weights(scales: usize, lambda: f64) -> Result<InterScaleWeights> {
    let a = build_tridiagonal(scales, lambda)?;
    let mut e0 = vec![0.0; scales + 1];
    e0[0] = 1.0;
    Ok(InterScaleWeights {
        scales,
        lambda,
        weights: a.transpose().solve(&e0),
    })
}

/// Full inverse, one column solve per unit vector.
pub fn inverse_matrix(scales: usize, lambda: f64) -> Result<Vec<Vec<f64>>> {
    let a = build_tridiagonal(scales, lambda)?;
    let at = a.transpose();
    let n = scales + 1;
    // row k of A^-1 solves A^T x = e_k
    Ok((0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            at.solve(&e)
        })
        .collect())
}

/// `v^ = A^-1 v~` for one vector of per-scale aggregated costs.
pub fn solve_scale_vector(v_tilde: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if v_tilde.is_empty() {
        return Err(Error::Dimension("need at least one scale".into()));
    }
    Ok(build_tridiagonal(v_tilde.len() - 1, lambda)?.solve(v_tilde))
}

/// How fine-scale pixels map onto a coarser grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialMapping {
    /// `floor(x / 2^s)`, clamped.
    #[default]
    Nearest,
    /// Bilinear interpolation at `x / 2^s`.
    Bilinear,
}

/// How fine-scale disparities map onto a coarser disparity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisparityMapping {
    /// Linear interpolation at `l / 2^s`.
    #[default]
    Linear,
    /// `floor(l / 2^s)`.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Sampling {
    pub spatial: SpatialMapping,
    pub disparity: DisparityMapping,
}

/// `(floor(x / 2^s), floor(y / 2^s))` clamped into a `width x height` level.
pub fn map_coord(i: PixelCoord, s: usize, width: usize, height: usize) -> PixelCoord {
    let shift = |v: usize| if s >= usize::BITS as usize { 0 } else { v >> s };
    PixelCoord::new(shift(i.x).min(width - 1), shift(i.y).min(height - 1))
}

/// Cost of fine disparity `l` read from `vol_s` at coarse pixel `i_s`, linearly
/// interpolated between `floor(l / 2^s)` and `ceil(l / 2^s)` within the
/// coarse range.
pub fn sample_coarse_cost(vol_s: &CostVolume, i_s: PixelCoord, l: usize, s: usize) -> f64 {
    sample_levels(vol_s.costs_at(i_s.x, i_s.y), l, s, DisparityMapping::Linear)
}

#[inline]
fn sample_levels(costs: &[f32], l: usize, s: usize, mapping: DisparityMapping) -> f64 {
    if s == 0 {
        return costs[l.min(costs.len() - 1)] as f64;
    }
    let top = costs.len() - 1;
    let scale = (1u64 << s.min(63)) as f64;
    let pos = l as f64 / scale;
    let lo = (pos.floor() as usize).min(top);
    match mapping {
        DisparityMapping::Nearest => costs[lo] as f64,
        DisparityMapping::Linear => {
            let hi = (lo + 1).min(top);
            let t = (pos - lo as f64).clamp(0.0, 1.0);
            let (a, b) = (costs[lo] as f64, costs[hi] as f64);
            if t == 0.0 || lo == hi {
                a
            } else {
                a + t * (b - a)
            }
        }
    }
}

/// Per-scale cost volumes `C^s`, `s = 0..=S`.
#[derive(Debug, Clone)]
pub struct CostPyramid {
    volumes: Vec<CostVolume>,
}

impl CostPyramid {
    /// Checks that volume `s` has the pyramid dimensions of level `s` and
    /// `levels_at_scale(L, s)` disparities, relative to volume 0.
    pub fn new(volumes: Vec<CostVolume>) -> Result<Self> {
        let first = volumes
            .first()
            .ok_or_else(|| Error::Dimension("cost pyramid needs at least one volume".into()))?;
        let dims = level_dims(first.width(), first.height(), volumes.len() - 1);
        for (s, (vol, &(w, h))) in volumes.iter().zip(&dims).enumerate() {
            let levels = levels_at_scale(first.levels(), s);
            if (vol.width(), vol.height(), vol.levels()) != (w, h, levels) {
                return Err(Error::Dimension(format!(
                    "scale {s} volume is {}x{}x{}, expected {w}x{h}x{levels}",
                    vol.width(),
                    vol.height(),
                    vol.levels()
                )));
            }
        }
        Ok(Self { volumes })
    }

    pub fn scales(&self) -> usize {
        self.volumes.len() - 1
    }

    pub fn volumes(&self) -> &[CostVolume] {
        &self.volumes
    }

    pub fn finest(&self) -> &CostVolume {
        &self.volumes[0]
    }
}

/// Per-scale aggregated costs `v~` seen by fine pixel `(x, y)`, for all `L`
/// disparities, written to `out[l * (S+1) + s]`.
fn gather(pyr: &CostPyramid, x: usize, y: usize, sampling: Sampling, out: &mut [f64]) {
    let n = pyr.volumes.len();
    let levels = pyr.finest().levels();
    for (s, vol) in pyr.volumes.iter().enumerate() {
        match sampling.spatial {
            SpatialMapping::Nearest => {
                let c = map_coord(PixelCoord::new(x, y), s, vol.width(), vol.height());
                let costs = vol.costs_at(c.x, c.y);
                for l in 0..levels {
                    out[l * n + s] = sample_levels(costs, l, s, sampling.disparity);
                }
            }
            SpatialMapping::Bilinear => {
                let scale = (1u64 << s.min(63)) as f64;
                let axis = |v: usize, len: usize| {
                    let p = v as f64 / scale;
                    let lo = (p.floor() as usize).min(len - 1);
                    let hi = (lo + 1).min(len - 1);
                    (lo, hi, (p - lo as f64).clamp(0.0, 1.0))
                };
                let (x0, x1, tx) = axis(x, vol.width());
                let (y0, y1, ty) = axis(y, vol.height());
                let corners = [
                    (x0, y0, (1.0 - tx) * (1.0 - ty)),
                    (x1, y0, tx * (1.0 - ty)),
                    (x0, y1, (1.0 - tx) * ty),
                    (x1, y1, tx * ty),
                ];
                for l in 0..levels {
                    out[l * n + s] = corners
                        .iter()
                        .filter(|c| c.2 > 0.0)
                        .map(|&(cx, cy, wgt)| wgt * sample_levels(vol.costs_at(cx, cy), l, s, sampling.disparity))
                        .sum();
                }
            }
        }
    }
}

/// `C^^0(i, l) = sum_s w_s C~^s(i^s, l^s)` over the finest grid.
pub fn fuse(pyr: &CostPyramid, w: &InterScaleWeights) -> Result<CostVolume> {
    fuse_with(pyr, w, Sampling::default())
}

pub fn fuse_with(pyr: &CostPyramid, w: &InterScaleWeights, sampling: Sampling) -> Result<CostVolume> {
    use rayon::prelude::*;

    if w.weights.len() != pyr.volumes.len() {
        return Err(Error::Dimension(format!(
            "weights cover {} scales but the pyramid has {}",
            w.weights.len(),
            pyr.volumes.len()
        )));
    }
    let fine = pyr.finest();
    let (width, levels) = (fine.width(), fine.levels());
    let n = pyr.volumes.len();
    let mut data = vec![0.0f32; fine.data().len()];
    data.par_chunks_mut(width * levels).enumerate().for_each(|(y, row)| {
        let mut v = vec![0.0f64; levels * n];
        for x in 0..width {
            gather(pyr, x, y, sampling, &mut v);
            for (l, out) in row[x * levels..(x + 1) * levels].iter_mut().enumerate() {
                let mut acc = 0.0f64;
                for (wt, c) in w.weights.iter().zip(&v[l * n..(l + 1) * n]) {
                    acc += wt * c;
                }
                *out = acc as f32;
            }
        }
    });
    Ok(CostVolume::from_raw(width, fine.height(), levels, data))
}

/// All components of `v^ = A^-1 v~` for every fine pixel and disparity.
/// Component `s` is returned on the finest grid (one value per fine
/// `(i, l)`); component 0 equals [`fuse`]. Meant as a test oracle.
pub fn solve_full_system(pyr: &CostPyramid, lambda: f64) -> Result<Vec<CostVolume>> {
    let inv = inverse_matrix(pyr.scales(), lambda)?;
    let fine = pyr.finest();
    let (width, height, levels) = (fine.width(), fine.height(), fine.levels());
    let n = pyr.volumes.len();
    let mut comps = vec![vec![0.0f32; fine.data().len()]; n];
    let mut v = vec![0.0f64; levels * n];
    for y in 0..height {
        for x in 0..width {
            gather(pyr, x, y, Sampling::default(), &mut v);
            for l in 0..levels {
                let vt = &v[l * n..(l + 1) * n];
                for (s, row) in inv.iter().enumerate() {
                    let mut acc = 0.0f64;
                    for (a, c) in row.iter().zip(vt) {
                        acc += a * c;
                    }
                    comps[s][(y * width + x) * levels + l] = acc as f32;
                }
            }
        }
    }
    Ok(comps
        .into_iter()
        .map(|d| CostVolume::from_raw(width, height, levels, d))
        .collect())
}
