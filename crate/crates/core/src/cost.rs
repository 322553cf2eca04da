//! Matching-cost computation: truncated color + gradient cost and the
//! Census transform with Hamming distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{luma, luminance, reflect101, x_gradient, ColorImage, GrayImage, PixelCoord};
use crate::volume::CostVolume;

/// Parameters of the truncated color + gradient cost. Colors are in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCostParams {
    /// Weight of the gradient term; the color term gets `1 - alpha`.
    pub alpha: f32,
    /// Truncation of the color term.
    pub tau1: f32,
    /// Truncation of the gradient term.
    pub tau2: f32,
}

impl Default for GradCostParams {
    fn default() -> Self {
        // gradient-dominated blend, 0.11 left on color
        Self {
            alpha: 0.89,
            tau1: 0.027,
            tau2: 0.008,
        }
    }
}

impl GradCostParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must satisfy 0 <= alpha <= 1, got {}",
                self.alpha
            )));
        }
        if !(self.tau1 > 0.0 && self.tau2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau1 > 0 and tau2 > 0 required, got {} and {}",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }

    /// Cost assigned when the matching pixel falls outside the right image.
    pub fn border_cost(&self) -> f32 {
        (1.0 - self.alpha) * self.tau1 + self.alpha * self.tau2
    }

    #[inline]
    fn combine(&self, left: [f32; 3], right: [f32; 3], grad_left: f32, grad_right: f32) -> f32 {
        let color = ((left[0] - right[0]).abs() + (left[1] - right[1]).abs() + (left[2] - right[2]).abs())
            / 3.0;
        let grad = (grad_left - grad_right).abs();
        (1.0 - self.alpha) * color.min(self.tau1) + self.alpha * grad.min(self.tau2)
    }
}

/// Census window size; both sides odd and at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusParams {
    pub win_w: usize,
    pub win_h: usize,
}

impl Default for CensusParams {
    fn default() -> Self {
        Self { win_w: 9, win_h: 7 }
    }
}

impl CensusParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("census width", self.win_w), ("census height", self.win_h)] {
            if v < 3 || v % 2 == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be odd and >= 3, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Bits per signature: every window cell except the center.
    pub fn signature_len(&self) -> usize {
        self.win_w * self.win_h - 1
    }

    fn words(&self) -> usize {
        self.signature_len().div_ceil(64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostMethod {
    Grad(GradCostParams),
    Census(CensusParams),
}

impl CostMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CostMethod::Grad(_) => "grad",
            CostMethod::Census(_) => "census",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostMethod::Grad(p) => p.validate(),
            CostMethod::Census(p) => p.validate(),
        }
    }
}

/// Census signature packed into 64-bit words, bit `k` of the row-major
/// neighbor sequence stored at word `k / 64`, bit `k % 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusSignature {
    pub bits: Vec<u64>,
    pub len: usize,
}

impl CensusSignature {
    pub fn bit(&self, k: usize) -> bool {
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

fn check_pixel(img_w: usize, img_h: usize, i: PixelCoord) -> Result<()> {
    if i.x >= img_w || i.y >= img_h {
        return Err(Error::Dimension(format!(
            "pixel ({}, {}) outside {img_w}x{img_h} image",
            i.x, i.y
        )));
    }
    Ok(())
}

fn check_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "stereo images differ in size: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Luminance x-gradient at one pixel, identical to `x_gradient(luminance(img))`.
fn gradient_at(img: &ColorImage, x: usize, y: usize) -> f32 {
    let w = img.width();
    let g = |x| luma(img.pixel(x, y));
    if x == 0 {
        g(1) - g(0)
    } else if x == w - 1 {
        g(w - 1) - g(w - 2)
    } else {
        (g(x + 1) - g(x - 1)) * 0.5
    }
}

/// Truncated color + gradient cost of matching left pixel `i` at disparity `l`.
pub fn grad_cost(
    left: &ColorImage,
    right: &ColorImage,
    i: PixelCoord,
    l: usize,
    params: &GradCostParams,
) -> Result<f32> {
    check_same_dims((left.width(), left.height()), (right.width(), right.height()))?;
    check_pixel(left.width(), left.height(), i)?;
    if left.width() < 2 {
        return Err(Error::Dimension("gradient cost needs width >= 2".into()));
    }
    if i.x < l {
        return Ok(params.border_cost());
    }
    let xr = i.x - l;
    Ok(params.combine(
        left.pixel(i.x, i.y),
        right.pixel(xr, i.y),
        gradient_at(left, i.x, i.y),
        gradient_at(right, xr, i.y),
    ))
}

/// Census signature of pixel `i`: bit set iff the neighbor is strictly darker
/// than the center. Neighbors outside the image are reflected.
pub fn census_signature(g: &GrayImage, i: PixelCoord, p: &CensusParams) -> CensusSignature {
    let mut bits = vec![0u64; p.words()];
    let (rx, ry) = ((p.win_w / 2) as isize, (p.win_h / 2) as isize);
    let center = g.get(i.x, i.y);
    let mut k = 0usize;
    for dy in -ry..=ry {
        let sy = reflect101(i.y as isize + dy, g.height());
        for dx in -rx..=rx {
            if dx == 0 && dy == 0 {
                continue;
            }
            let sx = reflect101(i.x as isize + dx, g.width());
            if g.get(sx, sy) < center {
                bits[k / 64] |= 1 << (k % 64);
            }
            k += 1;
        }
    }
    CensusSignature {
        bits,
        len: p.signature_len(),
    }
}

/// Normalized Hamming distance between the Census signatures of `i` and `i - l`.
pub fn census_cost(
    left: &GrayImage,
    right: &GrayImage,
    i: PixelCoord,
    l: usize,
    p: &CensusParams,
) -> Result<f32> {
    check_same_dims((left.width(), left.height()), (right.width(), right.height()))?;
    check_pixel(left.width(), left.height(), i)?;
    if i.x < l {
        return Ok(1.0);
    }
    let a = census_signature(left, i, p);
    let b = census_signature(right, PixelCoord::new(i.x - l, i.y), p);
    Ok(normalized_hamming(a.hamming(&b), p.signature_len()))
}

#[inline]
fn normalized_hamming(d: u32, len: usize) -> f32 {
    d as f32 / len as f32
}

/// Number of disparity levels searched at scale `s`: `max(1, ceil(L / 2^s))`.
pub fn levels_at_scale(levels: usize, s: usize) -> usize {
    if s >= usize::BITS as usize {
        return 1;
    }
    levels.div_ceil(1 << s).max(1)
}

/// Fills `C(i, l)` for every pixel and `l < levels`.
pub fn build_cost_volume(
    left: &ColorImage,
    right: &ColorImage,
    levels: usize,
    method: &CostMethod,
) -> Result<CostVolume> {
    check_same_dims((left.width(), left.height()), (right.width(), right.height()))?;
    if levels < 1 {
        return Err(Error::InvalidParameter("need at least one disparity level".into()));
    }
    method.validate()?;
    let (w, h) = (left.width(), left.height());
    let mut data = vec![0.0f32; w * h * levels];
    match method {
        CostMethod::Grad(p) => {
            let gl = x_gradient(&luminance(left))?;
            let gr = x_gradient(&luminance(right))?;
            let border = p.border_cost();
            data.par_chunks_mut(w * levels).enumerate().for_each(|(y, row)| {
                for x in 0..w {
                    let out = &mut row[x * levels..(x + 1) * levels];
                    let cl = left.pixel(x, y);
                    let gx = gl.get(x, y);
                    for (l, c) in out.iter_mut().enumerate() {
                        *c = if x < l {
                            border
                        } else {
                            p.combine(cl, right.pixel(x - l, y), gx, gr.get(x - l, y))
                        };
                    }
                }
            });
        }
        CostMethod::Census(p) => {
            let sig_l = census_image(&luminance(left), p);
            let sig_r = census_image(&luminance(right), p);
            let words = p.words();
            let len = p.signature_len();
            data.par_chunks_mut(w * levels).enumerate().for_each(|(y, row)| {
                for x in 0..w {
                    let a = &sig_l[(y * w + x) * words..][..words];
                    let out = &mut row[x * levels..(x + 1) * levels];
                    for (l, c) in out.iter_mut().enumerate() {
                        *c = if x < l {
                            1.0
                        } else {
                            let b = &sig_r[(y * w + x - l) * words..][..words];
                            let d = a.iter().zip(b).map(|(u, v)| (u ^ v).count_ones()).sum();
                            normalized_hamming(d, len)
                        };
                    }
                }
            });
        }
    }
    Ok(CostVolume::from_raw(w, h, levels, data))
}

/// Signatures of every pixel, `words` u64 per pixel.
fn census_image(g: &GrayImage, p: &CensusParams) -> Vec<u64> {
    let (w, h) = (g.width(), g.height());
    let words = p.words();
    let mut out = vec![0u64; w * h * words];
    out.par_chunks_mut(w * words).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let sig = census_signature(g, PixelCoord::new(x, y), p);
            row[x * words..(x + 1) * words].copy_from_slice(&sig.bits);
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_color(w: usize, h: usize, seed: u64) -> ColorImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ColorImage::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()]).unwrap()
    }

    #[test]
    fn identical_images_cost_zero_at_l0() {
        let img = random_color(6, 4, 1);
        let p = GradCostParams::default();
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(grad_cost(&img, &img, PixelCoord::new(x, y), 0, &p).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn white_vs_black_with_equal_gradients() {
        let white = ColorImage::filled(3, 1, [1.0; 3]).unwrap();
        let black = ColorImage::filled(3, 1, [0.0; 3]).unwrap();
        let p = GradCostParams { alpha: 0.11, ..GradCostParams::default() };
        let c = grad_cost(&white, &black, PixelCoord::new(1, 0), 0, &p).unwrap();
        assert!((c - 0.02403).abs() < 1e-7, "{c}");
        let c = grad_cost(&white, &black, PixelCoord::new(1, 0), 0, &GradCostParams::default()).unwrap();
        assert!((c - 0.11 * 0.027).abs() < 1e-7, "{c}");
    }

    #[test]
    fn out_of_frame_gets_border_cost() {
        let img = random_color(5, 2, 2);
        let p = GradCostParams::default();
        let c = grad_cost(&img, &img, PixelCoord::new(2, 1), 3, &p).unwrap();
        assert_eq!(c, (1.0 - 0.89) * 0.027 + 0.89 * 0.008);
        assert!(grad_cost(&img, &img, PixelCoord::new(5, 0), 0, &p).is_err());
    }

    #[test]
    fn census_of_constant_image_is_zero() {
        let g = GrayImage::new(5, 5, vec![0.5; 25]).unwrap();
        let sig = census_signature(&g, PixelCoord::new(0, 0), &CensusParams::default());
        assert_eq!(sig.count_ones(), 0);
        assert_eq!(sig.len, 62);
    }

    #[test]
    fn census_3x3_darker_neighbors() {
        let g = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 0.5 } else { 0.4 }).unwrap();
        let sig = census_signature(&g, PixelCoord::new(1, 1), &CensusParams { win_w: 3, win_h: 3 });
        assert_eq!(sig.count_ones(), 8);
        assert_eq!(sig.len, 8);
    }

    #[test]
    fn census_bit_order_is_row_major() {
        // only the top-right neighbor is darker
        let g = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (2, 0) { 0.1 } else { 0.5 }).unwrap();
        let sig = census_signature(&g, PixelCoord::new(1, 1), &CensusParams { win_w: 3, win_h: 3 });
        assert!(sig.bit(2));
        assert_eq!(sig.count_ones(), 1);
    }

    #[test]
    fn census_cost_normalization() {
        let p = CensusParams::default();
        // left: center brighter than all neighbors; right: center darker than all
        let left = GrayImage::from_fn(9, 7, |x, y| if (x, y) == (4, 3) { 1.0 } else { 0.5 }).unwrap();
        let right = GrayImage::from_fn(9, 7, |x, y| if (x, y) == (4, 3) { 0.0 } else { 0.5 }).unwrap();
        let c = census_cost(&left, &right, PixelCoord::new(4, 3), 0, &p).unwrap();
        assert_eq!(c, 1.0);

        let flat = GrayImage::new(9, 7, vec![0.5; 63]).unwrap();
        let one_dark = GrayImage::from_fn(9, 7, |x, y| if (x, y) == (0, 0) { 0.2 } else { 0.5 }).unwrap();
        let c = census_cost(&flat, &one_dark, PixelCoord::new(4, 3), 0, &p).unwrap();
        assert_eq!(c, 1.0 / 62.0);

        assert_eq!(census_cost(&flat, &flat, PixelCoord::new(1, 0), 2, &p).unwrap(), 1.0);
    }

    #[test]
    fn census_params_validation() {
        assert!(CensusParams { win_w: 4, win_h: 3 }.validate().is_err());
        assert!(CensusParams { win_w: 1, win_h: 3 }.validate().is_err());
        assert_eq!(CensusParams { win_w: 11, win_h: 9 }.signature_len(), 98);
    }

    #[test]
    fn levels_per_scale() {
        assert_eq!(levels_at_scale(60, 0), 60);
        assert_eq!(levels_at_scale(60, 4), 4);
        assert_eq!(levels_at_scale(1, 7), 1);
        assert_eq!(levels_at_scale(16, 4), 1);
        assert_eq!(levels_at_scale(5, 100), 1);
    }

    #[test]
    fn volume_shape_and_zero_diagonal() {
        let img = random_color(7, 5, 3);
        for method in [
            CostMethod::Grad(GradCostParams::default()),
            CostMethod::Census(CensusParams::default()),
        ] {
            let vol = build_cost_volume(&img, &img, 4, &method).unwrap();
            assert_eq!((vol.width(), vol.height(), vol.levels()), (7, 5, 4));
            for y in 0..5 {
                for x in 0..7 {
                    assert_eq!(vol.get(x, y, 0), 0.0);
                }
            }
        }
    }

    #[test]
    fn volume_equals_scalar_oracle() {
        let left = random_color(8, 8, 10);
        let right = random_color(8, 8, 11);
        let gp = GradCostParams::default();
        let cp = CensusParams { win_w: 5, win_h: 3 };
        let vg = build_cost_volume(&left, &right, 5, &CostMethod::Grad(gp)).unwrap();
        let vc = build_cost_volume(&left, &right, 5, &CostMethod::Census(cp)).unwrap();
        let (gl, gr) = (luminance(&left), luminance(&right));
        for y in 0..8 {
            for x in 0..8 {
                for l in 0..5 {
                    let i = PixelCoord::new(x, y);
                    assert_eq!(vg.get(x, y, l), grad_cost(&left, &right, i, l, &gp).unwrap());
                    assert_eq!(vc.get(x, y, l), census_cost(&gl, &gr, i, l, &cp).unwrap());
                }
            }
        }
    }

    #[test]
    fn mismatched_pair_is_rejected() {
        let a = random_color(4, 4, 1);
        let b = random_color(5, 4, 1);
        assert!(matches!(
            build_cost_volume(&a, &b, 2, &CostMethod::Grad(GradCostParams::default())),
            Err(Error::Dimension(_))
        ));
    }

    proptest! {
        #[test]
        fn costs_are_bounded(seed in 0u64..1000, alpha in 0.0f32..=1.0, tau1 in 0.001f32..0.5, tau2 in 0.001f32..0.5) {
            let left = random_color(6, 3, seed);
            let right = random_color(6, 3, seed + 1);
            let p = GradCostParams { alpha, tau1, tau2 };
            let bound = p.border_cost() + 1e-6;
            let v = build_cost_volume(&left, &right, 4, &CostMethod::Grad(p)).unwrap();
            prop_assert!(v.data().iter().all(|&c| (0.0..=bound).contains(&c)));
            let c = build_cost_volume(&left, &right, 4, &CostMethod::Census(CensusParams::default())).unwrap();
            prop_assert!(c.data().iter().all(|&c| (0.0..=1.0).contains(&c)));
        }
    }
}
