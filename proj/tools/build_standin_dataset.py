#!/usr/bin/env python3
"""Assemble the 12-image grayscale evaluation set under data/set12/.

Sources (all redistributable test images):
  cameraman256.png, image_Lena512rgb.png  -- examples/ of the `bm3d` sdist (PyPI)
  astronaut, coffee, chelsea, coins, rocket, motorcycle_left -- scikit-image data
  I03, I04, I06, I08 -- TID2013 references shipped in the `pyiqa` sdist (PyPI)

Every image is converted to 8-bit luma, center-cropped to a square and
resampled to 256x256 with Lanczos.

usage: build_standin_dataset.py <bm3d-sdist-dir> <pyiqa-sdist-dir> <out-dir>
"""
import os
import sys

import numpy as np
import skimage.data
import skimage.io
from PIL import Image

SIDE = 256


def square(img: Image.Image) -> Image.Image:
    img = img.convert("L")
    w, h = img.size
    s = min(w, h)
    left, top = (w - s) // 2, (h - s) // 2
    img = img.crop((left, top, left + s, top + s))
    if s != SIDE:
        img = img.resize((SIDE, SIDE), Image.LANCZOS)
    return img


def main() -> int:
    if len(sys.argv) != 4:
        print(__doc__)
        return 2
    bm3d_dir, pyiqa_dir, out = sys.argv[1:]
    os.makedirs(out, exist_ok=True)
    sources = [
        ("01_cameraman", Image.open(os.path.join(bm3d_dir, "examples", "cameraman256.png"))),
        ("02_lena", Image.open(os.path.join(bm3d_dir, "examples", "image_Lena512rgb.png"))),
        ("03_astronaut", Image.fromarray(skimage.data.astronaut())),
        ("04_coffee", Image.fromarray(skimage.data.coffee())),
        ("05_chelsea", Image.fromarray(skimage.data.chelsea())),
        ("06_coins", Image.fromarray(skimage.data.coins())),
        ("07_rocket", Image.fromarray(skimage.data.rocket())),
        ("08_motorcycle", Image.fromarray(skimage.data.stereo_motorcycle()[0])),
    ]
    for tag in ("I03", "I04", "I06", "I08"):
        path = os.path.join(pyiqa_dir, "ResultsCalibra", "ref_dir", tag + ".bmp")
        sources.append((f"{9 + len(sources) - 8:02d}_tid{tag[1:]}", Image.open(path)))
    for name, img in sources:
        sq = square(img)
        assert np.asarray(sq).dtype == np.uint8
        sq.save(os.path.join(out, name + ".png"), optimize=True)
        print(name, sq.size)
    return 0


if __name__ == "__main__":
    sys.exit(main())
