"""Apply the four perturbation families to one rendered shape image.

Writes the perturbed images at every sweep level and prints how far each
level drifts from the clean image (mean absolute difference), confirming
the identity levels (gauss 0, sp 0, contrast 1, mblur 1) are exact no-ops.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from fcsn import EllipseSpec, apply_perturbation, default_sweep, generate, write_image

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

sample = generate(EllipseSpec(a=0.55, b=0.3, rotation=0.7), image_size=64, texture_seed=9)
write_image(sample.image, OUT / "perturb_clean.png")

print(f"{'spec':16s} {'mean_abs_diff':>13s}")
for p in default_sweep():
    out = apply_perturbation(sample.image, p.with_seed(42))
    drift = float(np.abs(out - sample.image).mean())
    print(f"{p.spec():16s} {drift:13.5f}")
    name = p.spec().replace(":", "_").replace(".", "p")
    write_image(out, OUT / f"perturb_{name}.png")
print(f"\nwrote clean and perturbed images to {OUT}")
