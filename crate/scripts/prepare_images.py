#!/usr/bin/env python3
"""Prepare 8-bit grayscale PGM test images for the benchmark harness.

Canonical test images (the 256x256 Cameraman, 512x512 Lena and Boats, the
fluorescent-cells image) are not redistributable here. Pass them explicitly
when you have them:

    scripts/prepare_images.py --cameraman cameraman.tif --lena lena.png

Without --cameraman the script falls back to the Cameraman shipped with
scikit-image (512x512), reduced to 256x256 by 2x2 box averaging. That variant
is a different digitization of the same photograph; its PSNR figures differ
from published tables by roughly 1.5-2 dB.

Outputs go to data/<id>.pgm and data/SHA256SUMS is rewritten.
"""

import argparse
import hashlib
import pathlib

import numpy as np
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def load_gray(path):
    img = Image.open(path).convert("L")
    return np.asarray(img, dtype=np.uint8)


def skimage_cameraman():
    from skimage import data

    full = data.camera().astype(np.float64)
    half = full.reshape(256, 2, 256, 2).mean(axis=(1, 3))
    return np.clip(np.round(half), 0, 255).astype(np.uint8)


def write_pgm(path, pixels):
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for name in ("cameraman", "lena", "boats", "cells"):
        ap.add_argument(f"--{name}", type=pathlib.Path, help=f"source file for {name}")
    args = ap.parse_args()

    DATA.mkdir(exist_ok=True)
    images = {}
    images["cameraman"] = load_gray(args.cameraman) if args.cameraman else skimage_cameraman()
    for name in ("lena", "boats", "cells"):
        src = getattr(args, name)
        if src:
            images[name] = load_gray(src)

    for name, px in images.items():
        write_pgm(DATA / f"{name}.pgm", px)
        print(f"wrote data/{name}.pgm ({px.shape[1]}x{px.shape[0]})")

    lines = []
    for pgm in sorted(DATA.glob("*.pgm")):
        digest = hashlib.sha256(pgm.read_bytes()).hexdigest()
        lines.append(f"{digest}  {pgm.name}\n")
    (DATA / "SHA256SUMS").write_text("".join(lines))


if __name__ == "__main__":
    main()
