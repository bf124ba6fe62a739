"""The heatmap expectation readout and its Gaussian targets, numerically.

Builds Gaussian heatmaps on the 16x16 grid, reads coefficients back through
the scaled expectation (the differentiable soft-argmax), and shows how the
Jensen-Shannon divergence between a heatmap and the Gaussian centered at its
own expectation behaves as the heatmap sharpens or drifts.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from fcsn import Heatmap, dsnt, expectation, gaussian_target, js_divergence, softmax2d
from fcsn.heatmap import grid_coords

H = W = 16
SIGMA = 0.01  # Gaussian variance in grid units

print("target value z, readout dsnt(gaussian_target(z)), abs error")
for z, scale in ((0.2 + 0.1j, 1.0), (-0.4 + 0.55j, 1.0), (0.09 - 0.03j, 0.15)):
    hm = gaussian_target(z, SIGMA, H, W, scale=scale)
    back = dsnt(hm, scale)
    print(f"  z={z:+.3f}  back={back:+.3f}  err={abs(back - z):.2e}")

print("\nJS(p, N(dsnt(p))) for sharpening softmax heatmaps (logits = gain*bump):")
xx, yy = grid_coords(H, W)
bump = -((xx - 0.25) ** 2 + (yy + 0.125) ** 2)
for gain in (1.0, 4.0, 16.0, 64.0, 256.0):
    p = softmax2d(gain * bump)
    mu = expectation(p)
    q = gaussian_target(mu, SIGMA, H, W, scale=1.0)
    print(f"  gain={gain:6.1f}  mu={mu:+.4f}  js={js_divergence(Heatmap(p), q):.4f}")

print("\nthe JS term is 0 exactly when the heatmap IS its own Gaussian target:")
hm = gaussian_target(0.25 - 0.125j, SIGMA, H, W, scale=1.0)
print(f"  js = {js_divergence(hm, hm):.3e}")
