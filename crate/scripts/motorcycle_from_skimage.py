#!/usr/bin/env python3
"""Convert the Middlebury 2014 Motorcycle pair bundled with scikit-image into
the PPM/PGM layout read by `csca`.

Ground truth is stored as an 8-bit PGM with gt_scale = 4 (quarter-pixel
quantization); invalid ground-truth pixels (inf) become 0, i.e. unknown.
"""
import os
import sys

import numpy as np
from PIL import Image
import skimage

GT_SCALE = 4
MAX_DISP = 64


def main(out_dir):
    src = os.path.join(os.path.dirname(skimage.__file__), "data")
    os.makedirs(out_dir, exist_ok=True)
    for side in ("left", "right"):
        img = Image.open(os.path.join(src, f"motorcycle_{side}.png")).convert("RGB")
        img.save(os.path.join(out_dir, f"{side}.ppm"))
    disp = np.load(os.path.join(src, "motorcycle_disp.npz"))["arr_0"]
    valid = np.isfinite(disp)
    stored = np.zeros(disp.shape, dtype=np.uint8)
    q = np.rint(disp[valid] * GT_SCALE)
    assert q.max() <= 255
    # a stored 0 means unknown, so valid disparities must quantize above it
    stored[valid] = np.clip(q, 1, 255).astype(np.uint8)
    Image.fromarray(stored, mode="L").save(os.path.join(out_dir, "gt.pgm"))
    with open(os.path.join(out_dir, "manifest.txt"), "w") as f:
        f.write("# name left right gt nonocc_mask max_disparity gt_scale\n")
        f.write(f"motorcycle left.ppm right.ppm gt.pgm - {MAX_DISP} {GT_SCALE}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/motorcycle")
