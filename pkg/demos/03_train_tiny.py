"""Train the toy DSNT model on a handful of ellipses and watch it learn.

Fits 60 samples for 60 epochs, prints the loss trajectory and held-out
Dice before/after, and writes one predicted-vs-true mask pair plus the
model's post-softmax heatmaps for the three live coefficients.  A real run
(500 samples, 200 epochs) is `fcsn train-demo`; this is the two-minute cut.
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
    dice,
    fit,
    make_ellipse_dataset,
    rasterize,
    write_heatmap,
    write_mask,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

K = 1
train = make_ellipse_dataset(60, seed=5, k=K)
hold = make_ellipse_dataset(20, seed=6, k=K)
images = np.stack([s.image for s in train])
coeffs = np.stack([s.coeffs.coeffs for s in train])


def held_out_dice(model):
    scores = []
    for s in hold:
        pred, _ = model.forward(s.image)
        scores.append(dice(rasterize(pred, 256, 256), s.mask))
    return float(np.mean(scores))


model = create_model(k=K, head="dsnt", seed=0)
print(f"untrained held-out dice: {held_out_dice(model):.4f}")

history = fit(
    model,
    (images, coeffs),
    TrainConfig(epochs=60, batch_size=8, learning_rate=3e-4, seed=0),
    LossConfig(js_enabled=True),
    weights=coefficient_weights(coeffs),
)
for epoch in (0, 9, 19, 39, 59):
    h = history[epoch]
    print(f"epoch {epoch + 1:3d}  total={h.total:.4f}  l1={h.l1:.4f}  l2={h.l2:.4f}  js={h.js:.4f}")
print(f"trained held-out dice:   {held_out_dice(model):.4f}")

sample = hold[0]
pred, heatmaps = model.forward(sample.image)
write_mask(sample.mask, OUT / "train_true_mask.pgm")
write_mask(rasterize(pred, 256, 256), OUT / "train_pred_mask.pgm")
for n in range(-K, K + 1):
    write_heatmap(heatmaps[n + K], OUT / f"train_heatmap_n{n:+d}.pgm")
print(f"\nwrote predicted mask and heatmaps for one held-out sample to {OUT}")
