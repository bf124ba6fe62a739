"""Command-line driver for the mask <-> coefficient pipeline.

Subcommands: encode, decode, roundtrip, synth, train-demo, eval-perturbed,
erf.  Every command writes a JSON run manifest next to its outputs (for
directory outputs, run_manifest.json inside the directory) recording the
resolved configuration, so seeded runs can be reproduced byte for byte.

Exit codes: 0 success, 1 I/O or usage problem, 2 domain error (empty mask,
Nyquist violation, non-finite loss, shape mismatch, ...).

A --config FILE may supply defaults as a JSON object; explicit flags win.
A previously written run manifest is accepted as a config file (its
"config" block is used).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .contour import trace_boundary, resample_closed
from .errors import EmptyMaskError, FcsnError, InvalidParameterError, ShapeMismatchError
from .fourier import estimate_ranges, forward, load_coefficients, save_coefficients
from .imgio import read_image, read_mask, write_heatmap, write_mask
from .loss import LossConfig, coefficient_weights
from .metrics import dice, evaluate_pairs, hausdorff, summarize, write_summary_csv
from .model import ToyModel, TrainConfig, create_model, fit
from .perturb import apply as apply_perturbation
from .perturb import default_sweep, parse_sweep
from .raster import rasterize
from .synth import (
    load_dataset,
    make_band_limited_dataset,
    make_ellipse_dataset,
    make_star_dataset,
    write_dataset,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------------ manifest


def _manifest(args, inputs, outputs) -> str:
    cfg = {}
    for key, value in vars(args).items():
        if key in ("func", "command", "config"):
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    doc = {
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": cfg,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_file_manifest(args, inputs, outputs):
    target = Path(str(outputs[0]) + ".manifest.json")
    target.write_text(_manifest(args, inputs, outputs))


def _write_dir_manifest(args, out_dir, inputs, outputs):
    (Path(out_dir) / "run_manifest.json").write_text(_manifest(args, inputs, outputs))


def _float_cell(x) -> str:
    return "" if x is None else repr(float(x))


# ------------------------------------------------------------------ commands


def cmd_encode(args) -> int:
    mask = read_mask(args.mask)
    contour = resample_closed(trace_boundary(mask), args.points)
    cv = forward(contour, args.k)
    out = Path(args.output) if args.output else Path(args.mask).with_suffix(".coeffs.json")
    save_coefficients(cv, out)
    _write_file_manifest(args, [args.mask], [out])
    print(f"wrote {out}")
    return 0


def cmd_decode(args) -> int:
    cv = load_coefficients(args.coefficients)
    mask = rasterize(cv, args.height, args.width, n_samples=args.samples)
    out = Path(args.output) if args.output else Path(args.coefficients).with_suffix(".mask.pgm")
    write_mask(mask, out)
    _write_file_manifest(args, [args.coefficients], [out])
    print(f"wrote {out}")
    return 0


def cmd_roundtrip(args) -> int:
    mask = read_mask(args.mask)
    contour = resample_closed(trace_boundary(mask), args.points)
    cv = forward(contour, args.k)
    h, w = mask.data.shape
    recon = rasterize(cv, h, w, n_samples=args.samples)
    if recon.is_empty:
        raise EmptyMaskError("reconstruction is empty; cannot score it against the input")
    d = dice(mask, recon)
    hd = hausdorff(mask, recon)
    out = Path(args.output) if args.output else Path(args.mask).with_suffix(".roundtrip.pgm")
    write_mask(recon, out)
    _write_file_manifest(args, [args.mask], [out])
    print(f"dice={d!r} hausdorff={hd!r}")
    print(f"wrote {out}")
    return 0


def cmd_synth(args) -> int:
    texture = args.texture_std
    if texture is None:
        texture = 0.02 if args.kind == "ellipse" else 0.0
    makers = {
        "ellipse": make_ellipse_dataset,
        "band": make_band_limited_dataset,
        "star": make_star_dataset,
    }
    samples = makers[args.kind](
        args.count,
        seed=args.seed,
        k=args.k,
        texture_std=texture,
        mask_size=args.mask_size,
        image_size=args.image_size,
    )
    out = write_dataset(samples, args.out_dir, seed=args.seed)
    _write_dir_manifest(args, out, [], [out])
    print(f"wrote {len(samples)} samples to {out}")
    return 0


def _split_indices(n: int, seed: int, holdout: float = 0.2):
    """Deterministic 80/20 split; both halves in ascending dataset order."""
    perm = np.random.default_rng(seed).permutation(n)
    n_train = n - max(1, int(round(holdout * n))) if n > 1 else n
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _held_out_pairs(model, entries, idx):
    pairs, ids = [], []
    for i in idx:
        e = entries[i]
        cv, _ = model.forward(e.image)
        h, w = e.mask.data.shape
        pairs.append((e.mask, rasterize(cv, h, w)))
        ids.append(e.sample_id)
    return evaluate_pairs(pairs, ids)


def cmd_train_demo(args) -> int:
    entries = load_dataset(args.dataset)
    ks = {e.coeffs.k for e in entries}
    if len(ks) != 1:
        raise InvalidParameterError(f"dataset mixes coefficient orders: {sorted(ks)}")
    k = ks.pop()
    train_idx, held_idx = _split_indices(len(entries), args.seed)

    train_coeffs = np.stack([entries[i].coeffs.coeffs for i in train_idx])
    train_images = np.stack([entries[i].image for i in train_idx])
    ranges = estimate_ranges(train_coeffs)
    weights = coefficient_weights(train_coeffs)

    model = create_model(k=k, head=args.head, scales=ranges, seed=args.seed)
    train_cfg = TrainConfig(
        batch_size=args.batch, epochs=args.epochs, learning_rate=args.lr, seed=args.seed
    )
    loss_cfg = LossConfig(sigma=args.sigma, js_enabled=not args.no_js)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps_path = out / "steps.jsonl"
    with open(steps_path, "w") as steps_fh:

        def on_step(epoch, step, b):
            steps_fh.write(
                json.dumps(
                    {"epoch": epoch, "step": step, "l1": b.l1, "l2": b.l2, "js": b.js, "total": b.total}
                )
                + "\n"
            )

        history = fit(model, (train_images, train_coeffs), train_cfg, loss_cfg,
                      weights=weights, step_callback=on_step)

    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "l1", "l2", "js", "total"])
        for epoch, b in enumerate(history):
            writer.writerow([epoch, repr(b.l1), repr(b.l2), repr(b.js), repr(b.total)])

    bin_path, json_path = model.save(out / "checkpoint")
    rows = _held_out_pairs(model, entries, held_idx)
    write_summary_csv(rows, out / "eval.csv")
    stats = summarize(rows)
    (out / "summary.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")

    outputs = [steps_path, out / "history.csv", bin_path, json_path, out / "eval.csv", out / "summary.json"]
    if args.dump_heatmaps > 0:
        for i in held_idx[: args.dump_heatmaps]:
            e = entries[i]
            _, heatmaps = model.forward(e.image)
            if heatmaps is None:
                break
            for n, hm in zip(range(-k, k + 1), heatmaps):
                path = out / f"heatmap_{e.sample_id}_n{n:+d}.pgm"
                write_heatmap(hm.values, path)
                outputs.append(path)
    _write_dir_manifest(args, out, [args.dataset], outputs)
    print(
        f"held-out n={stats['n']} dice_mean={_float_cell(stats['dice_mean'])}"
        f" hausdorff_mean={_float_cell(stats['hausdorff_mean'])}"
    )
    return 0


_RESULT_FIELDS = ["kind", "level", "spec", "n", "n_empty",
                  "dice_mean", "dice_std", "hausdorff_mean", "hausdorff_std"]


def _stat_row(kind, level, spec, stats) -> list[str]:
    return [kind, repr(float(level)) if kind else "", spec, str(stats["n"]), str(stats["n_empty"]),
            _float_cell(stats["dice_mean"]), _float_cell(stats["dice_std"]),
            _float_cell(stats["hausdorff_mean"]), _float_cell(stats["hausdorff_std"])]


def cmd_eval_perturbed(args) -> int:
    model = ToyModel.load(args.checkpoint)
    entries = load_dataset(args.dataset)
    ks = {e.coeffs.k for e in entries}
    if ks != {model.k}:
        raise ShapeMismatchError(
            f"checkpoint has k={model.k} but dataset carries k={sorted(ks)}"
        )
    sweep = parse_sweep(args.perturb) if args.perturb else default_sweep()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def eval_images(images):
        pairs = []
        for e, img in zip(entries, images):
            cv, _ = model.forward(img)
            h, w = e.mask.data.shape
            pairs.append((e.mask, rasterize(cv, h, w)))
        return summarize(evaluate_pairs(pairs, [e.sample_id for e in entries]))

    baseline = eval_images([e.image for e in entries])
    with open(out / "baseline.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RESULT_FIELDS)
        writer.writerow(_stat_row("", 0.0, "none", baseline))

    results = []
    for p in sweep:
        images = [apply_perturbation(e.image, p.with_seed(args.seed + i)) for i, e in enumerate(entries)]
        results.append((p, eval_images(images)))

    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RESULT_FIELDS)
        for p, stats in results:
            writer.writerow(_stat_row(p.kind, p.level, p.spec(), stats))

    by_kind: dict[str, list] = {}
    for p, stats in results:
        by_kind.setdefault(p.kind, []).append(stats)
    with open(out / "monotonicity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "n_levels", "dice_corr", "hausdorff_corr"])
        for kind, stats_list in by_kind.items():
            row = [kind, str(len(stats_list))]
            for field in ("dice_mean", "hausdorff_mean"):
                vals = [s[field] for s in stats_list if s[field] is not None and np.isfinite(s[field])]
                if len(vals) >= 2 and np.std(vals) > 0:
                    corr = float(np.corrcoef(np.arange(len(vals)), vals)[0, 1])
                    row.append(repr(corr))
                else:
                    row.append("")
            writer.writerow(row)
            print(f"monotonicity {kind}: n_levels={row[1]} dice_corr={row[2] or 'n/a'}"
                  f" hausdorff_corr={row[3] or 'n/a'}")

    _write_dir_manifest(args, out, [args.checkpoint, args.dataset],
                        [out / "baseline.csv", out / "results.csv", out / "monotonicity.csv"])
    return 0


def cmd_erf(args) -> int:
    model = ToyModel.load(args.checkpoint)
    image = read_image(args.image)
    g = model.erf_map(image, n=args.coeff, axis=args.axis)
    out = Path(args.output) if args.output else Path(args.image).with_suffix(".erf.pgm")
    write_heatmap(g, out)
    if args.mask:
        mask = read_mask(args.mask)
        rows, cols = np.nonzero(mask.data)
        if len(rows) == 0:
            raise EmptyMaskError(f"{args.mask}: mask has no foreground")
        mh, mw = mask.data.shape
        gh, gw = g.shape
        r0 = int(rows.min() * gh / mh)
        r1 = int(np.ceil((rows.max() + 1) * gh / mh))
        c0 = int(cols.min() * gw / mw)
        c1 = int(np.ceil((cols.max() + 1) * gw / mw))
        total = float(g.sum())
        inside = float(g[r0:r1, c0:c1].sum())
        frac = inside / total if total > 0 else float("nan")
        print(f"erf_bbox_mass_fraction={frac!r}")
    _write_file_manifest(args, [args.checkpoint, args.image], [out])
    print(f"wrote {out}")
    return 0


# -------------------------------------------------------------------- parser


def build_parser():
    parser = _Parser(prog="fcsn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fcsn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub_map = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="JSON file of flag defaults; explicit flags win")
        p.set_defaults(func=func, command=name)
        sub_map[name] = p
        return p

    p = add("encode", cmd_encode, "mask image -> coefficients JSON")
    p.add_argument("mask", help="PGM/PNG binary mask")
    p.add_argument("-o", "--output", default=None, help="coefficients JSON path")
    p.add_argument("--k", type=int, default=10, help="truncation order (default 10)")
    p.add_argument("--points", type=int, default=71, help="contour resampling count (default 71)")

    p = add("decode", cmd_decode, "coefficients JSON -> mask image")
    p.add_argument("coefficients", help="coefficients JSON")
    p.add_argument("-o", "--output", default=None, help="output mask path")
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--samples", type=int, default=256, help="curve samples for rasterization")

    p = add("roundtrip", cmd_roundtrip, "encode then decode a mask; report Dice/Hausdorff")
    p.add_argument("mask")
    p.add_argument("-o", "--output", default=None, help="reconstructed mask path")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--points", type=int, default=71)
    p.add_argument("--samples", type=int, default=256)

    p = add("synth", cmd_synth, "write a synthetic dataset directory")
    p.add_argument("out_dir")
    p.add_argument("--kind", choices=["ellipse", "band", "star"], default="ellipse")
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--texture-std", type=float, default=None,
                   help="image noise std (default 0.02 for ellipse, else 0)")
    p.add_argument("--mask-size", type=int, default=256)
    p.add_argument("--image-size", type=int, default=32)

    p = add("train-demo", cmd_train_demo, "train the demonstrator on a dataset directory")
    p.add_argument("dataset", help="directory from `fcsn synth`")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--sigma", type=float, default=0.01, help="JS target variance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head", choices=["dsnt", "fc"], default="dsnt")
    p.add_argument("--no-js", action="store_true", help="disable the JS regularizer")
    p.add_argument("--dump-heatmaps", type=int, default=0, metavar="N",
                   help="write heatmap PGMs for the first N held-out samples")

    p = add("eval-perturbed", cmd_eval_perturbed, "metric sweep over input perturbations")
    p.add_argument("checkpoint", help="checkpoint path (the .bin/.json pair's stem)")
    p.add_argument("dataset")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--perturb", default=None,
                   help='sweep spec like "gauss:0,gauss:0.1,mblur:5:30" (default: built-in sweeps)')
    p.add_argument("--seed", type=int, default=0)

    p = add("erf", cmd_erf, "effective receptive field of one output unit")
    p.add_argument("checkpoint")
    p.add_argument("image", help="input image (PGM/PNG)")
    p.add_argument("-o", "--output", default=None, help="output PGM (max-normalized |d out/d in|)")
    p.add_argument("--coeff", type=int, default=0, help="harmonic index n")
    p.add_argument("--axis", choices=["re", "im"], default="re")
    p.add_argument("--mask", default=None, help="optional mask; report ERF mass inside its bbox")

    return parser, sub_map


def _apply_config(parser, sub_map, argv):
    """Merge --config JSON into the chosen subcommand's defaults."""
    if not argv or argv[0].startswith("-") or argv[0] not in sub_map:
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv[1:])
    if known.config is None:
        return
    with open(known.config) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise _UsageError(f"{known.config}: config must be a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # run manifest
    overrides = {str(key).replace("-", "_"): value for key, value in data.items()}
    overrides.pop("config", None)
    sub = sub_map[argv[0]]
    dests = {a.dest for a in sub._actions}  # noqa: SLF001  argparse has no public dest listing
    unknown = sorted(set(overrides) - dests)
    if unknown:
        raise _UsageError(f"{known.config}: unknown config keys {unknown}")
    sub.set_defaults(**overrides)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, sub_map = build_parser()
    try:
        _apply_config(parser, sub_map, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FcsnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
