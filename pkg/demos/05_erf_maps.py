"""Effective receptive fields of the coefficient readouts, before vs after training.

For one held-out ellipse image, computes |d(Re zhat_n)/d(input)| for the
three live coefficients of a fresh model and of the same model after a
short training run, writes the max-normalized maps, and prints how much of
each map's mass falls inside the object's bounding box.  Training is
expected to concentrate the center coefficient's gradient on the object.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from fcsn import (
    LossConfig,
    TrainConfig,
    coefficient_weights,
    create_model,
    fit,
    make_ellipse_dataset,
    write_heatmap,
    write_image,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

K = 1
train = make_ellipse_dataset(60, seed=5, k=K)
probe = make_ellipse_dataset(1, seed=6, k=K)[0]
images = np.stack([s.image for s in train])
coeffs = np.stack([s.coeffs.coeffs for s in train])

# object bounding box on the 32x32 input grid (mask is 256x256, factor 8)
rows, cols = np.nonzero(probe.mask.data)
box = (rows.min() // 8, rows.max() // 8 + 1, cols.min() // 8, cols.max() // 8 + 1)


def bbox_fraction(m: np.ndarray) -> float:
    total = m.sum()
    return float(m[box[0] : box[1], box[2] : box[3]].sum() / total) if total > 0 else 0.0


model = create_model(k=K, head="dsnt", seed=0)
before = {n: model.erf_map(probe.image, n) for n in range(-K, K + 1)}
fit(
    model,
    (images, coeffs),
    TrainConfig(epochs=60, batch_size=8, learning_rate=3e-4, seed=0),
    LossConfig(),
    weights=coefficient_weights(coeffs),
)
after = {n: model.erf_map(probe.image, n) for n in range(-K, K + 1)}

write_image(probe.image, OUT / "erf_input.png")
print(f"{'n':>3s} {'bbox_mass_untrained':>20s} {'bbox_mass_trained':>18s}")
for n in range(-K, K + 1):
    print(f"{n:+3d} {bbox_fraction(before[n]):20.3f} {bbox_fraction(after[n]):18.3f}")
    write_heatmap(before[n], OUT / f"erf_untrained_n{n:+d}.png")
    write_heatmap(after[n], OUT / f"erf_trained_n{n:+d}.png")
print(f"\nwrote input and ERF maps to {OUT}")
