//! Color-guided filter applied to each disparity slice.

use super::boxfilter::box_mean;
use crate::image::ColorImage;

/// Per-pixel statistics of the guide that do not depend on the filtered slice.
pub(crate) struct GuideStats {
    w: usize,
    h: usize,
    r: usize,
    guide: [Vec<f64>; 3],
    mean: [Vec<f64>; 3],
    /// Symmetric inverse of `cov + eps I`, stored as (rr, rg, rb, gg, gb, bb).
    inv: Vec<[f64; 6]>,
}

impl GuideStats {
    pub(crate) fn new(guide: &ColorImage, r: usize, eps: f64) -> Self {
        let (w, h) = (guide.width(), guide.height());
        let chan = |c: usize| -> Vec<f64> {
            guide.data().iter().skip(c).step_by(3).map(|&v| v as f64).collect()
        };
        let g = [chan(0), chan(1), chan(2)];
        let mean = [box_mean(&g[0], w, h, r), box_mean(&g[1], w, h, r), box_mean(&g[2], w, h, r)];
        let prod = |a: usize, b: usize| -> Vec<f64> {
            let p: Vec<f64> = g[a].iter().zip(&g[b]).map(|(x, y)| x * y).collect();
            box_mean(&p, w, h, r)
        };
        let (rr, rg, rb, gg, gb, bb) = (prod(0, 0), prod(0, 1), prod(0, 2), prod(1, 1), prod(1, 2), prod(2, 2));
        let inv = (0..w * h)
            .map(|i| {
                let (mr, mg, mb) = (mean[0][i], mean[1][i], mean[2][i]);
                let a = rr[i] - mr * mr + eps;
                let b = rg[i] - mr * mg;
                let c = rb[i] - mr * mb;
                let d = gg[i] - mg * mg + eps;
                let e = gb[i] - mg * mb;
                let f = bb[i] - mb * mb + eps;
                invert_sym3(a, b, c, d, e, f)
            })
            .collect();
        Self { w, h, r, guide: g, mean, inv }
    }

    /// Filters one `w x h` plane.
    pub(crate) fn filter(&self, p: &[f64]) -> Vec<f64> {
        let (w, h, r) = (self.w, self.h, self.r);
        let n = w * h;
        let mean_p = box_mean(p, w, h, r);
        let mean_ip: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                let prod: Vec<f64> = self.guide[c].iter().zip(p).map(|(g, v)| g * v).collect();
                box_mean(&prod, w, h, r)
            })
            .collect();
        let mut a = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut b = vec![0.0; n];
        for i in 0..n {
            let cov = [
                mean_ip[0][i] - self.mean[0][i] * mean_p[i],
                mean_ip[1][i] - self.mean[1][i] * mean_p[i],
                mean_ip[2][i] - self.mean[2][i] * mean_p[i],
            ];
            let [m00, m01, m02, m11, m12, m22] = self.inv[i];
            let ak = [
                m00 * cov[0] + m01 * cov[1] + m02 * cov[2],
                m01 * cov[0] + m11 * cov[1] + m12 * cov[2],
                m02 * cov[0] + m12 * cov[1] + m22 * cov[2],
            ];
            for c in 0..3 {
                a[c][i] = ak[c];
            }
            b[i] = mean_p[i] - ak[0] * self.mean[0][i] - ak[1] * self.mean[1][i] - ak[2] * self.mean[2][i];
        }
        let ma: Vec<Vec<f64>> = a.iter().map(|ac| box_mean(ac, w, h, r)).collect();
        let mb = box_mean(&b, w, h, r);
        (0..n)
            .map(|i| ma[0][i] * self.guide[0][i] + ma[1][i] * self.guide[1][i] + ma[2][i] * self.guide[2][i] + mb[i])
            .collect()
    }
}

/// Inverse of the symmetric matrix `[[a b c] [b d e] [c e f]]`.
pub(crate) fn invert_sym3(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> [f64; 6] {
    let c00 = d * f - e * e;
    let c01 = c * e - b * f;
    let c02 = b * e - c * d;
    let c11 = a * f - c * c;
    let c12 = b * c - a * e;
    let c22 = a * d - b * b;
    let det = a * c00 + b * c01 + c * c02;
    [c00 / det, c01 / det, c02 / det, c11 / det, c12 / det, c22 / det]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym3_inverse() {
        let (a, b, c, d, e, f) = (4.0, 1.0, 0.5, 3.0, 0.2, 2.0);
        let m = [[a, b, c], [b, d, e], [c, e, f]];
        let [i00, i01, i02, i11, i12, i22] = invert_sym3(a, b, c, d, e, f);
        let inv = [[i00, i01, i02], [i01, i11, i12], [i02, i12, i22]];
        for r in 0..3 {
            for col in 0..3 {
                let v: f64 = (0..3).map(|k| m[r][k] * inv[k][col]).sum();
                assert!((v - if r == col { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
