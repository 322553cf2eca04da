#!/usr/bin/env python3
"""Convert Middlebury v2 evaluation scenes (imL/imR/groundtruth/nonocc PNGs)
into left.ppm, right.ppm, gt.pgm and nonocc.pgm per scene."""
import os
import sys

from PIL import Image

SCENES = ("tsukuba", "venus", "teddy", "cones")
FILES = {
    "imL.png": ("left.ppm", "RGB"),
    "imR.png": ("right.ppm", "RGB"),
    "groundtruth.png": ("gt.pgm", "L"),
    "nonocc.png": ("nonocc.pgm", "L"),
}


def main(src_root, dst_root):
    for scene in SCENES:
        src = os.path.join(src_root, scene)
        if not os.path.isdir(src):
            print(f"skipping {scene}: {src} not found", file=sys.stderr)
            continue
        dst = os.path.join(dst_root, scene)
        os.makedirs(dst, exist_ok=True)
        for name, (out, mode) in FILES.items():
            Image.open(os.path.join(src, name)).convert(mode).save(os.path.join(dst, out))
        print(f"{scene}: done")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: middlebury_to_pnm.py SRC_ROOT DST_ROOT")
    main(sys.argv[1], sys.argv[2])
