"""Fourier-coefficient shape codec with a small trainable coefficient regressor.

Binary masks are traced to closed complex contours, encoded as truncated
Fourier coefficient vectors, and decoded back by synthesis + rasterization.
On top of the codec sit heatmap/DSNT readout, the weighted modulus + JS loss
with exact gradients, a hand-differentiated demonstrator network, Dice and
Hausdorff metrics, image perturbations, and synthetic shape generators.
"""

__version__ = "0.1.0"

from .contour import (
    BinaryMask,
    Contour,
    complex_to_pixel,
    pixel_to_complex,
    resample_closed,
    signed_area,
    trace_boundary,
)
from .errors import (
    DegenerateContourError,
    DegenerateCurveWarning,
    EmptyDatasetError,
    EmptyMaskError,
    FcsnError,
    InvalidParameterError,
    NonFiniteLossError,
    NyquistViolationError,
    RejectionLimitError,
    ShapeMismatchError,
)
from .fourier import (
    CoefficientRanges,
    CoefficientVector,
    estimate_ranges,
    evaluate,
    forward,
    load_coefficients,
    save_coefficients,
    truncate,
)
from .heatmap import (
    Heatmap,
    dsnt,
    expectation,
    gaussian_target,
    grid_coords,
    js_divergence,
    normalize,
    softmax2d,
)
from .imgio import read_image, read_mask, write_heatmap, write_image, write_mask
from .loss import (
    LossBreakdown,
    LossConfig,
    coefficient_weights,
    loss_breakdown,
)
from .metrics import PairResult, dice, evaluate_pairs, hausdorff, summarize, write_summary_csv
from .model import ToyModel, TrainConfig, create_model, fit
from .perturb import Perturbation, default_sweep, line_kernel, parse_perturbation, parse_sweep
from .perturb import apply as apply_perturbation
from .raster import fill_polygon, rasterize
from .synth import (
    BandLimitedSpec,
    EllipseSpec,
    Sample,
    StarSpec,
    ellipse_coefficients,
    generate,
    load_dataset,
    make_band_limited_dataset,
    make_ellipse_dataset,
    make_star_dataset,
    render_image,
    star_polygon,
    write_dataset,
)

__all__ = [
    "__version__",
    "BinaryMask",
    "Contour",
    "complex_to_pixel",
    "pixel_to_complex",
    "resample_closed",
    "signed_area",
    "trace_boundary",
    "DegenerateContourError",
    "DegenerateCurveWarning",
    "EmptyDatasetError",
    "EmptyMaskError",
    "FcsnError",
    "InvalidParameterError",
    "NonFiniteLossError",
    "NyquistViolationError",
    "RejectionLimitError",
    "ShapeMismatchError",
    "CoefficientRanges",
    "CoefficientVector",
    "estimate_ranges",
    "evaluate",
    "forward",
    "load_coefficients",
    "save_coefficients",
    "truncate",
    "Heatmap",
    "dsnt",
    "expectation",
    "gaussian_target",
    "grid_coords",
    "js_divergence",
    "normalize",
    "softmax2d",
    "read_image",
    "read_mask",
    "write_heatmap",
    "write_image",
    "write_mask",
    "LossBreakdown",
    "LossConfig",
    "coefficient_weights",
    "loss_breakdown",
    "PairResult",
    "dice",
    "evaluate_pairs",
    "hausdorff",
    "summarize",
    "write_summary_csv",
    "ToyModel",
    "TrainConfig",
    "create_model",
    "fit",
    "Perturbation",
    "apply_perturbation",
    "default_sweep",
    "line_kernel",
    "parse_perturbation",
    "parse_sweep",
    "fill_polygon",
    "rasterize",
    "BandLimitedSpec",
    "EllipseSpec",
    "Sample",
    "StarSpec",
    "ellipse_coefficients",
    "generate",
    "load_dataset",
    "make_band_limited_dataset",
    "make_ellipse_dataset",
    "make_star_dataset",
    "render_image",
    "star_polygon",
    "write_dataset",
]
