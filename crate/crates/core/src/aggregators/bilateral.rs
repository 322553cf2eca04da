//! Joint bilateral weights from the left (guide) image only.

use rayon::prelude::*;

use crate::image::ColorImage;

/// Unnormalized sums `sum_j K(i,j) x_j` over the clamped `(2r+1)^2` window.
pub(crate) fn bilateral_sums(
    input: &[f32],
    channels: usize,
    guide: &ColorImage,
    sigma_s: f64,
    sigma_c: f64,
    r: usize,
) -> Vec<f64> {
    let (w, h) = (guide.width(), guide.height());
    let side = 2 * r + 1;
    let spatial: Vec<f64> = (0..side * side)
        .map(|k| {
            let dx = (k % side) as f64 - r as f64;
            let dy = (k / side) as f64 - r as f64;
            (-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s)).exp()
        })
        .collect();
    let color_scale = -1.0 / (2.0 * sigma_c * sigma_c);
    let g = guide.data();

    let mut out = vec![0.0f64; w * h * channels];
    out.par_chunks_mut(w * channels).enumerate().for_each(|(y, row)| {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let ci = &g[(y * w + x) * 3..][..3];
            let acc = &mut row[x * channels..(x + 1) * channels];
            for yy in y0..y1 {
                let krow = (yy + r - y) * side;
                for xx in x0..x1 {
                    let j = yy * w + xx;
                    let cj = &g[j * 3..][..3];
                    let d2: f64 = (0..3)
                        .map(|c| {
                            let d = ci[c] as f64 - cj[c] as f64;
                            d * d
                        })
                        .sum();
                    let k = spatial[krow + xx + r - x] * (color_scale * d2).exp();
                    for (a, &v) in acc.iter_mut().zip(&input[j * channels..(j + 1) * channels]) {
                        *a += k * v as f64;
                    }
                }
            }
        }
    });
    out
}
