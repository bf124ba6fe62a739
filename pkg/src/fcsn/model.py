"""A small trainable coefficient-regression network with hand-written gradients.

Architecture (input: 32x32 grayscale in [0, 1]):

    conv 3x3 stride 2 pad 1, 8 ch, tanh   -> (8, 16, 16)
    conv 3x3 stride 2 pad 1, 16 ch, tanh  -> (16, 8, 8)

    dsnt head:  transposed conv 2x2 stride 2 to 2k+1 channels -> (2k+1, 16, 16)
                spatial softmax per channel -> heatmaps
                zhat_n = s_n * sum h_n * (x + 1j*y)
    fc head:    flatten -> dense 128, tanh -> dense 2*(2k+1) -> (re, im) pairs

Everything is float64 numpy; backward passes are written out by hand (no
autodiff) and verified against central finite differences in the tests.  The
DSNT head's outputs are bounded per coefficient by the scaling constants
s_n; the fc head has no such bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InvalidParameterError,
    NonFiniteLossError,
    ShapeMismatchError,
)
from .fourier import CoefficientRanges, CoefficientVector
from .heatmap import Heatmap, grid_coords, softmax2d
from .loss import (
    LossBreakdown,
    LossConfig,
    coefficient_weights,
    js_terms_with_grad,
    modulus_terms_with_grad,
)

INPUT_SIZE = 32
CONV_CHANNELS = (8, 16)
FC_HIDDEN = 128
DECONV_KERNEL = 6
DECONV_STRIDE = 2
DECONV_PAD = 2
CHECKPOINT_FORMAT = 1
# fixed softmax temperature: heatmap = softmax(gain * logits).  The DSNT
# expectation needs near-delta heatmaps (logit spreads ~ln(H*W / eps)) to
# reach coefficients near the scale bound; the gain keeps the required
# weight magnitudes small so they are reachable at small learning rates.
DEFAULT_LOGIT_GAIN = 16.0


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    epochs: int = 500
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate < 0:
            raise InvalidParameterError("batch_size >= 1, epochs >= 0, learning_rate >= 0 required")


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def _conv_fwd(x, w, b, stride, pad):
    bsz, _, hin, win = x.shape
    cout, cin, kh, kw = w.shape
    hout = (hin + 2 * pad - kh) // stride + 1
    wout = (win + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.broadcast_to(b[None, :, None, None], (bsz, cout, hout, wout)).copy()
    for di in range(kh):
        for dj in range(kw):
            xs = xp[:, :, di : di + stride * hout : stride, dj : dj + stride * wout : stride]
            out += np.einsum("oc,bchw->bohw", w[:, :, di, dj], xs)
    return out, xp


def _conv_bwd(dout, xp, w, stride, pad):
    cout, cin, kh, kw = w.shape
    hout, wout = dout.shape[2:]
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp)
    for di in range(kh):
        for dj in range(kw):
            sl = np.s_[:, :, di : di + stride * hout : stride, dj : dj + stride * wout : stride]
            dw[:, :, di, dj] = np.einsum("bohw,bchw->oc", dout, xp[sl])
            dxp[sl] += np.einsum("oc,bohw->bchw", w[:, :, di, dj], dout)
    db = dout.sum(axis=(0, 2, 3))
    dx = dxp[:, :, pad:-pad, pad:-pad] if pad else dxp
    return dx, dw, db


def _deconv_fwd(x, w, b, stride, pad):
    """Transposed conv (adjoint of a strided conv). w: (Cin, Cout, KH, KW).

    Kernel 6 / stride 2 / pad 2 doubles the grid with a uniform 3x3 taps per
    output cell: no checkerboard phase classes, and each logit aggregates a
    3x3 feature window, wide enough to read whole-object structure.
    """
    bsz, cin, hin, win = x.shape
    cout, (kh, kw) = w.shape[1], w.shape[2:]
    hout, wout = stride * (hin - 1) + kh - 2 * pad, stride * (win - 1) + kw - 2 * pad
    outp = np.zeros((bsz, cout, hout + 2 * pad, wout + 2 * pad))
    for di in range(kh):
        for dj in range(kw):
            outp[:, :, di : di + stride * hin : stride, dj : dj + stride * win : stride] += np.einsum(
                "co,bchw->bohw", w[:, :, di, dj], x
            )
    out = outp[:, :, pad:-pad, pad:-pad] if pad else outp
    return out + b[None, :, None, None]


def _deconv_bwd(dout, x, w, stride, pad):
    kh, kw = w.shape[2:]
    hin, win = x.shape[2:]
    doutp = np.pad(dout, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dw = np.zeros_like(w)
    dx = np.zeros_like(x)
    for di in range(kh):
        for dj in range(kw):
            d = doutp[:, :, di : di + stride * hin : stride, dj : dj + stride * win : stride]
            dw[:, :, di, dj] = np.einsum("bohw,bchw->co", d, x)
            dx += np.einsum("co,bohw->bchw", w[:, :, di, dj], d)
    db = dout.sum(axis=(0, 2, 3))
    return dx, dw, db


def _softmax_bwd(p, dp):
    """Backward of a per-channel spatial softmax. p, dp: (..., H, W)."""
    inner = (dp * p).sum(axis=(-2, -1), keepdims=True)
    return p * (dp - inner)


class ToyModel:
    """Parameter container plus forward/backward passes for both heads.

    Parameters live in one flat float64 vector (`params`), with named views
    in `views`; the flat layout is what the optimizer and checkpoints use.
    Instances should be treated as immutable outside fit().
    """

    def __init__(self, k: int, head: str, scales: np.ndarray, seed: int = 0,
                 params: np.ndarray | None = None, logit_gain: float = DEFAULT_LOGIT_GAIN):
        if head not in ("dsnt", "fc"):
            raise InvalidParameterError(f"head must be 'dsnt' or 'fc', got {head!r}")
        if k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {k}")
        if logit_gain <= 0:
            raise InvalidParameterError(f"logit_gain must be positive, got {logit_gain}")
        self.k = int(k)
        self.head = head
        self.seed = int(seed)
        self.logit_gain = float(logit_gain)
        scales = np.asarray(scales, dtype=np.float64).copy()
        if scales.shape != (2 * k + 1,) or (scales <= 0).any():
            raise InvalidParameterError(f"scales must be {2 * k + 1} positive values")
        scales.setflags(write=False)
        self.scales = scales
        self.feature_hw = INPUT_SIZE // 4  # two stride-2 convs
        self.heatmap_hw = self.feature_hw * 2

        c = 2 * k + 1
        c1, c2 = CONV_CHANNELS
        spec = [("conv1.w", (c1, 1, 3, 3)), ("conv1.b", (c1,)), ("conv2.w", (c2, c1, 3, 3)), ("conv2.b", (c2,))]
        if head == "dsnt":
            spec += [("deconv.w", (c2, c, DECONV_KERNEL, DECONV_KERNEL)), ("deconv.b", (c,))]
        else:
            flat_in = c2 * self.feature_hw**2
            spec += [("fc1.w", (flat_in, FC_HIDDEN)), ("fc1.b", (FC_HIDDEN,)),
                     ("fc2.w", (FC_HIDDEN, 2 * c)), ("fc2.b", (2 * c,))]
        self._spec = spec
        self.n_params = sum(int(np.prod(shape)) for _, shape in spec)
        if params is None:
            params = self._init_params()
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ShapeMismatchError(f"expected {self.n_params} parameters, got {params.shape}")
        self.params = params
        self.views = {}
        offset = 0
        for name, shape in spec:
            size = int(np.prod(shape))
            self.views[name] = self.params[offset : offset + size].reshape(shape)
            offset += size

    def _init_params(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        chunks = []
        for name, shape in self._spec:
            if name.endswith(".b"):
                chunks.append(np.zeros(int(np.prod(shape))))
            elif name.startswith("conv"):
                cout, cin, kh, kw = shape
                chunks.append(_glorot(rng, shape, cin * kh * kw, cout * kh * kw).ravel())
            elif name == "deconv.w":
                cin, cout, kh, kw = shape
                chunks.append(_glorot(rng, shape, cin * kh * kw, cout * kh * kw).ravel())
            else:  # dense
                fan_in, fan_out = shape
                chunks.append(_glorot(rng, shape, fan_in, fan_out).ravel())
        return np.concatenate(chunks)

    # ---------------------------------------------------------------- forward

    def _forward(self, x: np.ndarray) -> dict:
        """Batch forward. x: (B, 32, 32) in [0, 1]. Returns the tape for backward."""
        v = self.views
        x4 = x[:, None, :, :]
        a1, xp1 = _conv_fwd(x4, v["conv1.w"], v["conv1.b"], stride=2, pad=1)
        h1 = np.tanh(a1)
        a2, xp2 = _conv_fwd(h1, v["conv2.w"], v["conv2.b"], stride=2, pad=1)
        h2 = np.tanh(a2)
        cache = {"xp1": xp1, "h1": h1, "xp2": xp2, "h2": h2}
        if self.head == "dsnt":
            logits = _deconv_fwd(h2, v["deconv.w"], v["deconv.b"], DECONV_STRIDE, DECONV_PAD)
            p = softmax2d(self.logit_gain * logits)
            xx, yy = grid_coords(self.heatmap_hw, self.heatmap_hw)
            mu = np.einsum("bnhw,hw->bn", p, xx) + 1j * np.einsum("bnhw,hw->bn", p, yy)
            cache.update(heatmaps=p, pred=self.scales * mu)
        else:
            flat = h2.reshape(len(x), -1)
            a3 = flat @ v["fc1.w"] + v["fc1.b"]
            h3 = np.tanh(a3)
            out = h3 @ v["fc2.w"] + v["fc2.b"]
            pairs = out.reshape(len(x), 2 * self.k + 1, 2)
            cache.update(flat=flat, h3=h3, heatmaps=None, pred=pairs[..., 0] + 1j * pairs[..., 1])
        return cache

    def forward(self, image: np.ndarray) -> tuple[CoefficientVector, list[Heatmap] | None]:
        """Single-image forward pass with validated input."""
        x = self._check_batch(image)
        cache = self._forward(x)
        coeffs = CoefficientVector(cache["pred"][0])
        if cache["heatmaps"] is None:
            return coeffs, None
        return coeffs, [Heatmap(hm) for hm in cache["heatmaps"][0]]

    def predict(self, images: np.ndarray) -> np.ndarray:
        """Batch of predicted coefficient rows, shape (B, 2k+1) complex."""
        return self._forward(self._check_batch(images))["pred"]

    def _check_batch(self, images: np.ndarray) -> np.ndarray:
        x = np.asarray(images, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[1:] != (INPUT_SIZE, INPUT_SIZE):
            raise ShapeMismatchError(f"expected (B, {INPUT_SIZE}, {INPUT_SIZE}) images, got {x.shape}")
        if x.min() < 0.0 or x.max() > 1.0:
            raise InvalidParameterError("image values must lie in [0, 1]")
        return x

    # --------------------------------------------------------------- backward

    def _backward(self, cache: dict, g_pred: np.ndarray, g_hm: np.ndarray | None):
        """Chain loss-level gradients back to parameters and the input.

        g_pred: (B, 2k+1) complex carrier dL/dRe + 1j*dL/dIm of the predicted
        coefficients; g_hm: extra dL/dheatmap term (or None).  Returns
        (flat parameter gradient, dL/dinput of shape (B, 32, 32)).
        """
        v = self.views
        grads = {}
        if self.head == "dsnt":
            p = cache["heatmaps"]
            xx, yy = grid_coords(self.heatmap_hw, self.heatmap_hw)
            gmu = g_pred * self.scales  # d(loss)/d(mu) carrier
            dp = gmu.real[..., None, None] * xx + gmu.imag[..., None, None] * yy
            if g_hm is not None:
                dp = dp + g_hm
            dlogits = self.logit_gain * _softmax_bwd(p, dp)
            dh2, grads["deconv.w"], grads["deconv.b"] = _deconv_bwd(
                dlogits, cache["h2"], v["deconv.w"], DECONV_STRIDE, DECONV_PAD
            )
        else:
            b = len(g_pred)
            dout = np.empty((b, 2 * self.k + 1, 2))
            dout[..., 0] = g_pred.real
            dout[..., 1] = g_pred.imag
            dout = dout.reshape(b, -1)
            grads["fc2.w"] = cache["h3"].T @ dout
            grads["fc2.b"] = dout.sum(axis=0)
            dh3 = dout @ v["fc2.w"].T
            da3 = dh3 * (1.0 - cache["h3"] ** 2)
            grads["fc1.w"] = cache["flat"].T @ da3
            grads["fc1.b"] = da3.sum(axis=0)
            dflat = da3 @ v["fc1.w"].T
            dh2 = dflat.reshape(cache["h2"].shape)

        da2 = dh2 * (1.0 - cache["h2"] ** 2)
        dh1, grads["conv2.w"], grads["conv2.b"] = _conv_bwd(da2, cache["xp2"], v["conv2.w"], stride=2, pad=1)
        da1 = dh1 * (1.0 - cache["h1"] ** 2)
        dx4, grads["conv1.w"], grads["conv1.b"] = _conv_bwd(da1, cache["xp1"], v["conv1.w"], stride=2, pad=1)

        flat = np.concatenate([grads[name].ravel() for name, _ in self._spec])
        return flat, dx4[:, 0]

    def loss_and_grad(self, images, truth, weights, config: LossConfig = LossConfig()):
        """Batch loss breakdown and the exact flat parameter gradient."""
        x = self._check_batch(images)
        truth = np.asarray(truth, dtype=np.complex128)
        if truth.shape != (len(x), 2 * self.k + 1):
            raise ShapeMismatchError(f"truth must have shape ({len(x)}, {2 * self.k + 1}), got {truth.shape}")
        weights = np.asarray(weights, dtype=np.float64)
        m = len(x)
        cache = self._forward(x)

        l1_terms, l2_terms, g_pred = modulus_terms_with_grad(cache["pred"], truth, weights)
        g_pred = g_pred / m
        js = 0.0
        g_hm = None
        if config.js_enabled and cache["heatmaps"] is not None:
            js_vals, g_hm = js_terms_with_grad(
                cache["heatmaps"],
                config.sigma,
                truth if config.center_js_at_truth else None,
                CoefficientRanges(self.scales) if config.center_js_at_truth else None,
            )
            js = float(js_vals.sum() / m)
            g_hm = g_hm / m
        breakdown = LossBreakdown(float(l1_terms.sum() / m), float(l2_terms.sum() / m), js)
        grad, _ = self._backward(cache, g_pred, g_hm)
        return breakdown, grad

    def input_gradient(self, image: np.ndarray, n: int, axis: str = "re") -> np.ndarray:
        """d(chosen output unit)/d(input pixels) for output Re/Im zhat_n."""
        if abs(n) > self.k:
            raise InvalidParameterError(f"harmonic {n} outside [-{self.k}, {self.k}]")
        if axis not in ("re", "im"):
            raise InvalidParameterError(f"axis must be 're' or 'im', got {axis!r}")
        x = self._check_batch(image)
        if len(x) != 1:
            raise ShapeMismatchError("input_gradient takes a single image")
        cache = self._forward(x)
        seed = np.zeros((1, 2 * self.k + 1), dtype=np.complex128)
        seed[0, n + self.k] = 1.0 if axis == "re" else 1.0j
        _, dx = self._backward(cache, seed, None)
        return dx[0]

    def erf_map(self, image: np.ndarray, n: int = 0, axis: str = "re") -> np.ndarray:
        """|input gradient| max-normalized to [0, 1]; all zeros stays all zeros."""
        g = np.abs(self.input_gradient(image, n, axis))
        peak = g.max()
        return g / peak if peak > 0 else g

    # ------------------------------------------------------------ persistence

    def save(self, prefix: str | Path) -> tuple[Path, Path]:
        prefix = Path(prefix)
        bin_path = prefix.with_suffix(".bin")
        json_path = prefix.with_suffix(".json")
        bin_path.write_bytes(self.params.astype("<f8").tobytes())
        sidecar = {
            "format": CHECKPOINT_FORMAT,
            "head": self.head,
            "k": self.k,
            "seed": self.seed,
            "input_size": INPUT_SIZE,
            "conv_channels": list(CONV_CHANNELS),
            "fc_hidden": FC_HIDDEN,
            "heatmap_size": [self.heatmap_hw, self.heatmap_hw],
            "logit_gain": self.logit_gain,
            "n_params": self.n_params,
            "scales": self.scales.tolist(),  # json floats round-trip exactly
        }
        json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return bin_path, json_path

    @classmethod
    def load(cls, prefix: str | Path) -> "ToyModel":
        prefix = Path(prefix)
        sidecar = json.loads(prefix.with_suffix(".json").read_text())
        params = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8").astype(np.float64)
        model = cls(
            k=int(sidecar["k"]),
            head=sidecar["head"],
            scales=np.array(sidecar["scales"], dtype=np.float64),
            seed=int(sidecar["seed"]),
            params=params,
            logit_gain=float(sidecar["logit_gain"]),
        )
        return model


def create_model(k: int = 10, head: str = "dsnt", scales=None, seed: int = 0,
                 logit_gain: float = DEFAULT_LOGIT_GAIN) -> ToyModel:
    """Fresh Glorot-initialized model; scales default to all ones."""
    if scales is None:
        scales = np.ones(2 * k + 1)
    elif hasattr(scales, "scales"):
        scales = scales.scales
    return ToyModel(k=k, head=head, scales=np.asarray(scales, dtype=np.float64), seed=seed,
                    logit_gain=logit_gain)


def _stack_dataset(dataset):
    if isinstance(dataset, tuple) and len(dataset) == 2:
        images, coeffs = dataset
        return np.asarray(images, dtype=np.float64), np.asarray(coeffs, dtype=np.complex128)
    if len(dataset) == 0:
        raise InvalidParameterError("training dataset is empty")
    images = np.stack([np.asarray(img, dtype=np.float64) for img, _ in dataset])
    coeffs = np.stack(
        [cv.coeffs if isinstance(cv, CoefficientVector) else np.asarray(cv, dtype=np.complex128) for _, cv in dataset]
    )
    return images, coeffs


def fit(
    model: ToyModel,
    dataset,
    train_config: TrainConfig = TrainConfig(),
    loss_config: LossConfig = LossConfig(),
    weights: np.ndarray | None = None,
    step_callback=None,
) -> list[LossBreakdown]:
    """Adam training over (image, coefficients) pairs; returns per-epoch means.

    The per-coefficient weights w_n are computed over the whole dataset and
    frozen unless supplied.  Shuffling is driven by train_config.seed, so a
    fixed (model, dataset, config) triple reproduces training exactly.
    """
    images, coeffs = _stack_dataset(dataset)
    if len(images) == 0:
        raise InvalidParameterError("training dataset is empty")
    if weights is None:
        weights = coefficient_weights(coeffs, epsilon=loss_config.epsilon)

    rng = np.random.default_rng(train_config.seed)
    m_mom = np.zeros_like(model.params)
    v_mom = np.zeros_like(model.params)
    t = 0
    history: list[LossBreakdown] = []
    for epoch in range(train_config.epochs):
        order = rng.permutation(len(images))
        sums = np.zeros(3)
        for step, lo in enumerate(range(0, len(images), train_config.batch_size)):
            idx = order[lo : lo + train_config.batch_size]
            breakdown, grad = model.loss_and_grad(images[idx], coeffs[idx], weights, loss_config)
            if not np.isfinite(breakdown.total) or not np.isfinite(grad).all():
                raise NonFiniteLossError(
                    f"non-finite loss at epoch {epoch}, step {step}: {breakdown}", epoch=epoch, step=step
                )
            t += 1
            m_mom = train_config.beta1 * m_mom + (1 - train_config.beta1) * grad
            v_mom = train_config.beta2 * v_mom + (1 - train_config.beta2) * grad**2
            m_hat = m_mom / (1 - train_config.beta1**t)
            v_hat = v_mom / (1 - train_config.beta2**t)
            model.params -= train_config.learning_rate * m_hat / (np.sqrt(v_hat) + train_config.adam_epsilon)
            sums += np.array([breakdown.l1, breakdown.l2, breakdown.js]) * len(idx)
            if step_callback is not None:
                step_callback(epoch, step, breakdown)
        mean = sums / len(images)
        history.append(LossBreakdown(float(mean[0]), float(mean[1]), float(mean[2])))
    return history
