"""Mask -> coefficients -> mask round trips at several truncation orders.

Traces a disc, a rotated ellipse and a 5-point star, encodes each boundary
as 2k+1 complex Fourier coefficients, rasterizes the synthesis back to a
mask, and prints Dice/Hausdorff against the original.  Shows how low orders
smooth concave detail (the star tips) while k = 10 is already near-lossless
for smooth shapes.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from fcsn import (
    EllipseSpec,
    StarSpec,
    dice,
    forward,
    generate,
    hausdorff,
    rasterize,
    resample_closed,
    trace_boundary,
    write_mask,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

shapes = {
    "disc": generate(EllipseSpec(a=0.55, b=0.55)),
    "ellipse": generate(EllipseSpec(a=0.6, b=0.35, rotation=0.9, center=0.1 - 0.05j)),
    "star": generate(StarSpec(n_points=5, inner=0.28, outer=0.62, rotation=0.4)),
}

print(f"{'shape':8s} {'k':>3s} {'dice':>8s} {'hausdorff_px':>12s}")
for name, sample in shapes.items():
    contour = resample_closed(trace_boundary(sample.mask), 71)
    for k in (2, 5, 10, 20):
        cv = forward(contour, k)
        recon = rasterize(cv, 256, 256)
        d = dice(sample.mask, recon)
        h = hausdorff(sample.mask, recon)
        print(f"{name:8s} {k:3d} {d:8.4f} {h:12.2f}")
        if k == 10:
            write_mask(recon, OUT / f"roundtrip_{name}_k10.pgm")
    write_mask(sample.mask, OUT / f"original_{name}.pgm")
print(f"\nwrote originals and k=10 reconstructions to {OUT}")
