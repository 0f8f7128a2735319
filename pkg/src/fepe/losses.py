"""The four supervision losses as pure numeric functions.

Each loss returns its scalar value together with the analytic gradient
with respect to the prediction, so the whole suite can be verified against
finite differences. Reductions are plain numpy sums in row-major order,
bit-reproducible regardless of caller threading.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

CLAMP_EPS = 1e-6
RATIO_EPS = 1e-6
DICE_EPS = 1e-6


@dataclass(frozen=True)
class LossOutput:
    value: float
    gradient: np.ndarray  # same shape as the prediction, zero off the supervised set


@dataclass(frozen=True)
class LossWeights:
    kernel: float = 6.0
    text: float = 3.0
    surrounding: float = 1.0
    scale: float = 0.5

    def __post_init__(self):
        for name in ("kernel", "text", "surrounding", "scale"):
            if getattr(self, name) < 0:
                raise DomainError(f"loss weight {name} must be non-negative")


def _check_shapes(pred, gt, mask):
    pred = np.asarray(pred, np.float64)
    gt = np.asarray(gt, np.float64)
    if pred.shape != gt.shape:
        raise InputError(f"pred shape {pred.shape} != gt shape {gt.shape}")
    if mask is None:
        mask = np.ones(pred.shape, bool)
    else:
        mask = np.asarray(mask).astype(bool)
        if mask.shape != pred.shape:
            raise InputError(f"mask shape {mask.shape} != pred shape {pred.shape}")
    if not np.isfinite(pred).all() or not np.isfinite(gt).all():
        raise DomainError("non-finite values in loss input")
    return pred, gt, mask


def bce_ohem(pred, gt, valid_mask=None, neg_ratio: int = 3) -> LossOutput:
    """Binary cross-entropy with hard negative mining.

    The supervised set is every valid positive plus the
    min(neg_ratio * #pos, #neg) valid negatives with the largest per-pixel
    loss (ties broken by row-major index). With no valid positives the loss
    falls back to the mean over all valid pixels so it stays finite.
    """
    pred, gt, valid = _check_shapes(pred, gt, valid_mask)
    x = np.clip(pred, CLAMP_EPS, 1.0 - CLAMP_EPS)
    pos = valid & (gt > 0.5)
    neg = valid & ~(gt > 0.5)
    n_pos = int(pos.sum())
    per_pixel = -(gt * np.log(x) + (1.0 - gt) * np.log1p(-x))

    supervised = pos.copy()
    if n_pos == 0:
        supervised = valid.copy()
    else:
        n_keep = min(neg_ratio * n_pos, int(neg.sum()))
        if n_keep > 0:
            neg_flat = np.nonzero(neg.ravel())[0]
            neg_losses = per_pixel.ravel()[neg_flat]
            order = np.argsort(-neg_losses, kind="stable")  # stable: ties by index
            supervised.ravel()[neg_flat[order[:n_keep]]] = True

    n_sup = int(supervised.sum())
    if n_sup == 0:
        return LossOutput(0.0, np.zeros(pred.shape))
    value = float(per_pixel[supervised].sum() / n_sup)
    grad = np.zeros(pred.shape)
    gs = (-gt[supervised] / x[supervised] + (1.0 - gt[supervised]) / (1.0 - x[supervised])) / n_sup
    grad[supervised] = gs
    return LossOutput(value, grad)


def dice_loss(pred, gt, valid_mask=None, eps: float = DICE_EPS) -> LossOutput:
    """1 - 2*sum(y*x) / (sum(y) + sum(x) + eps), sums over valid pixels."""
    pred, gt, valid = _check_shapes(pred, gt, valid_mask)
    x = np.where(valid, pred, 0.0)
    y = np.where(valid, gt, 0.0)
    inter = float((y * x).sum())
    denom = float(y.sum() + x.sum() + eps)
    value = 1.0 - 2.0 * inter / denom
    grad = np.zeros(pred.shape)
    grad[valid] = -(2.0 * y[valid] * denom - 2.0 * inter) / (denom * denom)
    return LossOutput(value, grad)


def ratio_loss(pred, gt, supervise_mask=None, eps: float = RATIO_EPS) -> LossOutput:
    """Symmetric log-ratio regression loss.

    Per supervised pixel |ln(max(x, eps)) - ln(max(y, eps))|, which equals
    ln(max(x, y) / min(x, y)) on positive inputs, averaged over the
    supervised set. Empty set gives 0.
    """
    pred, gt, mask = _check_shapes(pred, gt, supervise_mask)
    if (pred < 0).any():
        raise DomainError("ratio loss requires non-negative predictions")
    n = int(mask.sum())
    if n == 0:
        return LossOutput(0.0, np.zeros(pred.shape))
    xf = np.maximum(pred[mask], eps)
    yf = np.maximum(gt[mask], eps)
    diff = np.log(xf) - np.log(yf)
    value = float(np.abs(diff).sum() / n)
    grad = np.zeros(pred.shape)
    # d|ln(max(x,eps))|/dx vanishes on the floor and at x == y
    grad[mask] = np.where(pred[mask] > eps, np.sign(diff) / xf / n, 0.0)
    return LossOutput(value, grad)


def total_loss(kernel, text, surrounding, scale, weights: LossWeights = LossWeights()):
    """Weighted sum of the four losses plus the per-term breakdown."""
    terms = {}
    total = 0.0
    for name, loss, w in (
        ("kernel", kernel, weights.kernel),
        ("text", text, weights.text),
        ("surrounding", surrounding, weights.surrounding),
        ("scale", scale, weights.scale),
    ):
        v = float(loss.value if isinstance(loss, LossOutput) else loss)
        if not np.isfinite(v):
            raise DomainError(f"{name} loss is not finite: {v}")
        terms[name] = w * v
        total += w * v
    return total, terms
