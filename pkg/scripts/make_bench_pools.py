#!/usr/bin/env python3
"""Generate fixture image pools for the human benchmark service.

Writes two directories of class subdirectories filled with small synthetic
PNGs — colored shapes for the in-distribution pool, noise for the outlier
pool — so the benchmark can be exercised end to end without real datasets:

    python3 scripts/make_bench_pools.py --out-dir bench_pools
    oodkit serve-bench --in-pool bench_pools/in_pool \\
        --out-pool bench_pools/out_pool --static-dir frontend/dist
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

SHAPES = {
    "circle": lambda d, box, fill: d.ellipse(box, fill=fill),
    "square": lambda d, box, fill: d.rectangle(box, fill=fill),
    "triangle": lambda d, box, fill: d.polygon(
        [(box[0] + (box[2] - box[0]) // 2, box[1]), (box[0], box[3]),
         (box[2], box[3])],
        fill=fill,
    ),
}


def draw_shape(rng, name, size):
    img = Image.new("RGB", (size, size), tuple(rng.integers(200, 256, 3)))
    margin = size // 4
    jitter = rng.integers(-size // 8, size // 8 + 1, 2)
    box = (margin + jitter[0], margin + jitter[1],
           size - margin + jitter[0], size - margin + jitter[1])
    SHAPES[name](ImageDraw.Draw(img), box, tuple(rng.integers(0, 160, 3)))
    return img


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", required=True, type=Path)
    parser.add_argument("--per-class", type=int, default=60)
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    for cls in SHAPES:
        d = args.out_dir / "in_pool" / cls
        d.mkdir(parents=True, exist_ok=True)
        for i in range(args.per_class):
            draw_shape(rng, cls, args.size).save(d / f"{cls}_{i:04d}.png")

    noise_dir = args.out_dir / "out_pool" / "noise"
    noise_dir.mkdir(parents=True, exist_ok=True)
    for i in range(args.per_class * len(SHAPES)):
        pixels = rng.integers(0, 256, size=(args.size, args.size, 3),
                              dtype=np.uint8)
        Image.fromarray(pixels).save(noise_dir / f"noise_{i:04d}.png")

    total = args.per_class * len(SHAPES)
    print(f"wrote {total} in-pool and {total} out-pool images to {args.out_dir}")


if __name__ == "__main__":
    main()
