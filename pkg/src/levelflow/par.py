"""Pixel-adaptive refinement: affinity-weighted neighbor averaging of masks.

Each pixel gets a softmax-normalized affinity to its 8-neighborhood,

    logit(q) = -((p(i,j) - p(q)) / sigma(i,j))^2,

with the feature p taken from the image (intensity by default, optionally
intensity plus coordinates) and sigma the local neighborhood standard
deviation, floored to stay finite on flat patches.  Border pixels
normalize over their existing neighbors, so the kernel is row-stochastic
everywhere.  Refinement applies the kernel tau times to the mask
(double-buffered, self excluded), which is a convex combination of
neighbor values and therefore range-preserving; the consistency loss is
the L1 distance between the mask and its refined version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .field import as_field, check_same_shape

PAR_FEATURES = ("intensity", "intensity-xy")

# Fixed neighbor order: row-major over the 3x3 window minus the center.
NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class ParParams:
    tau: int = 10
    sigma_floor: float = 1e-4
    features: str = "intensity"

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidInputError("tau must be non-negative")
        if self.sigma_floor <= 0:
            raise InvalidInputError("sigma_floor must be positive")
        if self.features not in PAR_FEATURES:
            raise InvalidInputError(
                f"unknown feature set {self.features!r}, expected one of {PAR_FEATURES}"
            )


@dataclass(frozen=True)
class AffinityKernel:
    """(H, W, 8) non-negative weights, zero at missing neighbors, rows sum to 1."""

    weights: np.ndarray
    valid: np.ndarray


def _neighbor_stack(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack of the 8 shifted copies of f plus a validity mask, NaN outside."""
    h, w = f.shape
    stack = np.full((h, w, 8), np.nan)
    valid = np.zeros((h, w, 8), dtype=bool)
    for k, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        src_r = slice(max(0, dr), h + min(0, dr))
        src_c = slice(max(0, dc), w + min(0, dc))
        dst_r = slice(max(0, -dr), h + min(0, -dr))
        dst_c = slice(max(0, -dc), w + min(0, -dc))
        stack[dst_r, dst_c, k] = f[src_r, src_c]
        valid[dst_r, dst_c, k] = True
    return stack, valid


def _channel_logits(values: np.ndarray, sigma_floor: float) -> np.ndarray:
    stack, valid = _neighbor_stack(values)
    with np.errstate(invalid="ignore"):
        sigma = np.nanstd(stack, axis=2)
    sigma = np.maximum(sigma, sigma_floor)
    diff = (stack - values[:, :, None]) / sigma[:, :, None]
    logits = np.where(valid, -(diff * diff), -np.inf)
    return logits


def affinity_kernel(image: np.ndarray, pp: ParParams = ParParams()) -> AffinityKernel:
    """Softmax affinity over the 8-neighborhood from image-derived features."""
    image = as_field(image, "image")
    if image.size < 2:
        raise InvalidInputError("affinity kernel needs at least two pixels")
    logits = _channel_logits(image, pp.sigma_floor)
    if pp.features == "intensity-xy":
        h, w = image.shape
        rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
        logits = logits + _channel_logits(rows, pp.sigma_floor)
        logits = logits + _channel_logits(cols, pp.sigma_floor)
    valid = np.isfinite(logits)
    # Softmax over valid neighbors; max-shift keeps exp() in range and maps
    # equal logits to exactly equal weights.
    shift = logits.max(axis=2, keepdims=True)
    expd = np.where(valid, np.exp(logits - shift), 0.0)
    weights = expd / expd.sum(axis=2, keepdims=True)
    return AffinityKernel(weights=weights, valid=valid)


def refine(mask: np.ndarray, kernel: AffinityKernel, tau: int) -> np.ndarray:
    """Apply the kernel tau times; tau = 0 returns a copy of the mask."""
    if tau < 0:
        raise InvalidInputError("tau must be non-negative")
    mask = as_field(mask, "mask")
    if kernel.weights.shape[:2] != mask.shape:
        raise InvalidInputError(
            f"kernel shape {kernel.weights.shape[:2]} does not match mask {mask.shape}"
        )
    out = mask.copy()
    for _ in range(tau):
        stack, _ = _neighbor_stack(out)
        out = np.sum(kernel.weights * np.where(kernel.valid, stack, 0.0), axis=2)
    return out


def par_loss(mask: np.ndarray, refined: np.ndarray) -> float:
    """L1 consistency loss: sum of |mask - refined| (per-pixel mean is sum/N)."""
    mask = as_field(mask, "mask")
    refined = as_field(refined, "refined")
    check_same_shape(mask, refined)
    return float(np.abs(mask - refined).sum())
