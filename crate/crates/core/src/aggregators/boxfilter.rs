//! Box-window sums over clamped windows via summed-area tables.

/// Summed-area table with one extra zero row and column.
pub(crate) struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    pub(crate) fn new(plane: &[f64], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += plane[y * w + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    /// Sum over the half-open rectangle `[x0, x1) x [y0, y1)`.
    #[inline]
    pub(crate) fn rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.w + 1;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0] + self.sums[y0 * s + x0]
    }
}

#[inline]
fn window(c: usize, r: usize, n: usize) -> (usize, usize) {
    (c.saturating_sub(r), (c + r + 1).min(n))
}

/// Sum over the `(2r+1)^2` window clamped to the image.
pub(crate) fn box_sum(plane: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let ii = Integral::new(plane, w, h);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = window(y, r, h);
        for x in 0..w {
            let (x0, x1) = window(x, r, w);
            out.push(ii.rect(x0, y0, x1, y1));
        }
    }
    out
}

/// Mean over the clamped `(2r+1)^2` window.
pub(crate) fn box_mean(plane: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut out = box_sum(plane, w, h, r);
    for y in 0..h {
        let (y0, y1) = window(y, r, h);
        for x in 0..w {
            let (x0, x1) = window(x, r, w);
            out[y * w + x] /= ((x1 - x0) * (y1 - y0)) as f64;
        }
    }
    out
}
