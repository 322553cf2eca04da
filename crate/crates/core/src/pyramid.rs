//! Gaussian image pyramid with a factor-2 reduction per level.

use crate::error::{Error, Result};
use crate::image::{reflect101, ColorImage};

const BINOMIAL: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Levels from finest (index 0, the input) to coarsest.
#[derive(Debug, Clone)]
pub struct ImagePyramid {
    levels: Vec<ColorImage>,
}

impl ImagePyramid {
    pub const ETA: usize = 2;

    pub fn levels(&self) -> &[ColorImage] {
        &self.levels
    }

    pub fn level(&self, s: usize) -> &ColorImage {
        &self.levels[s]
    }

    /// Number of reductions `S`; there are `S + 1` levels.
    pub fn scales(&self) -> usize {
        self.levels.len() - 1
    }
}

/// `ceil(n / 2)`, the size of a downsampled axis.
pub fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Dimensions of every pyramid level for a `width x height` input.
pub fn level_dims(width: usize, height: usize, scales: usize) -> Vec<(usize, usize)> {
    std::iter::successors(Some((width, height)), |&(w, h)| Some((half(w), half(h))))
        .take(scales + 1)
        .collect()
}

/// Smooths each channel with the separable `[1 4 6 4 1] / 16` kernel
/// (reflect-101 borders) and keeps even rows and columns.
pub fn gaussian_downsample(img: &ColorImage) -> Result<ColorImage> {
    let (w, h) = (img.width(), img.height());
    if w < 2 && h < 2 {
        return Err(Error::Dimension("cannot downsample a 1x1 image".into()));
    }
    let (ow, oh) = (half(w), half(h));
    let src = img.data();

    // horizontal pass, evaluated only at even columns
    let mut tmp = vec![0.0f32; ow * h * 3];
    for y in 0..h {
        for ox in 0..ow {
            let cx = (2 * ox) as isize;
            let mut acc = [0.0f32; 3];
            for (k, &wk) in BINOMIAL.iter().enumerate() {
                let sx = reflect101(cx + k as isize - 2, w);
                let o = (y * w + sx) * 3;
                for c in 0..3 {
                    acc[c] += wk * src[o + c];
                }
            }
            tmp[(y * ow + ox) * 3..][..3].copy_from_slice(&acc);
        }
    }

    // vertical pass, evaluated only at even rows
    let mut out = vec![0.0f32; ow * oh * 3];
    for oy in 0..oh {
        let cy = (2 * oy) as isize;
        for ox in 0..ow {
            let mut acc = [0.0f32; 3];
            for (k, &wk) in BINOMIAL.iter().enumerate() {
                let sy = reflect101(cy + k as isize - 2, h);
                let o = (sy * ow + ox) * 3;
                for c in 0..3 {
                    acc[c] += wk * tmp[o + c];
                }
            }
            for c in 0..3 {
                // rounding can push a convex combination a hair outside [0, 1]
                out[(oy * ow + ox) * 3 + c] = acc[c].clamp(0.0, 1.0);
            }
        }
    }
    Ok(ColorImage::from_raw(ow, oh, out))
}

/// Builds `S + 1` levels; level 0 is the input unchanged. Every level must
/// stay at least 2x2.
pub fn build_pyramid(img: &ColorImage, scales: usize) -> Result<ImagePyramid> {
    let dims = level_dims(img.width(), img.height(), scales);
    if let Some((s, &(w, h))) = dims.iter().enumerate().find(|(_, &(w, h))| w < 2 || h < 2) {
        return Err(Error::Dimension(format!(
            "{} scales are too many for a {}x{} image: level {s} would be {w}x{h}",
            scales,
            img.width(),
            img.height()
        )));
    }
    let mut levels = Vec::with_capacity(scales + 1);
    levels.push(img.clone());
    for _ in 0..scales {
        let next = gaussian_downsample(levels.last().unwrap())?;
        levels.push(next);
    }
    Ok(ImagePyramid { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_stays_constant() {
        let img = ColorImage::filled(7, 5, [0.25, 0.5, 0.75]).unwrap();
        let down = gaussian_downsample(&img).unwrap();
        assert_eq!((down.width(), down.height()), (4, 3));
        for p in down.data().chunks(3) {
            assert!((p[0] - 0.25).abs() < 1e-7 && (p[1] - 0.5).abs() < 1e-7 && (p[2] - 0.75).abs() < 1e-7);
        }
    }

    #[test]
    fn corner_impulse_under_reflection() {
        let img = ColorImage::from_fn(4, 4, |x, y| if x == 0 && y == 0 { [1.0; 3] } else { [0.0; 3] })
            .unwrap();
        let down = gaussian_downsample(&img).unwrap();
        assert!((down.pixel(0, 0)[0] - 0.140625).abs() < 1e-7);
    }

    #[test]
    fn odd_dims_round_up() {
        let img = ColorImage::filled(5, 3, [0.0; 3]).unwrap();
        let down = gaussian_downsample(&img).unwrap();
        assert_eq!((down.width(), down.height()), (3, 2));
        assert!(gaussian_downsample(&ColorImage::filled(1, 1, [0.0; 3]).unwrap()).is_err());
        // a single row still reduces horizontally
        let row = gaussian_downsample(&ColorImage::filled(4, 1, [0.5; 3]).unwrap()).unwrap();
        assert_eq!((row.width(), row.height()), (2, 1));
    }

    #[test]
    fn pyramid_dims() {
        let img = ColorImage::filled(450, 375, [0.5; 3]).unwrap();
        let pyr = build_pyramid(&img, 4).unwrap();
        let dims: Vec<_> = pyr.levels().iter().map(|l| (l.width(), l.height())).collect();
        assert_eq!(dims, vec![(450, 375), (225, 188), (113, 94), (57, 47), (29, 24)]);
        assert_eq!(pyr.level(0), &img);
        assert_eq!(build_pyramid(&img, 0).unwrap().levels().len(), 1);
    }

    #[test]
    fn too_many_scales() {
        let img = ColorImage::filled(8, 8, [0.5; 3]).unwrap();
        assert!(matches!(build_pyramid(&img, 4), Err(Error::Dimension(_))));
        assert!(build_pyramid(&img, 2).is_ok());
    }

    proptest! {
        #[test]
        fn levels_stay_within_input_range(vals in proptest::collection::vec(0.0f32..=1.0, 9 * 7 * 3)) {
            let img = ColorImage::new(9, 7, vals.clone()).unwrap();
            let lo = vals.iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = vals.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let pyr = build_pyramid(&img, 2).unwrap();
            for level in pyr.levels() {
                for &v in level.data() {
                    prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
                }
            }
        }
    }
}
