"""Central finite-difference verification of the analytic loss gradients."""

import numpy as np

from .errors import DomainError
from .losses import bce_ohem, dice_loss, ratio_loss

FD_STEP = 1e-4
LOSS_NAMES = ("bce", "dice", "ratio-scale", "ratio-surrounding")


def _bce_inputs(rng):
    # keep #neg <= 3 * #pos so hard-negative mining selects every negative
    # and the loss stays smooth at any probe point
    shape = (16, 16)
    while True:
        gt = (rng.random(shape) < 0.5).astype(np.float64)
        valid = rng.random(shape) < 0.9
        n_pos = int((valid & (gt > 0.5)).sum())
        n_neg = int((valid & (gt <= 0.5)).sum())
        if n_pos > 0 and n_neg <= 3 * n_pos:
            break
    pred = rng.uniform(0.05, 0.95, shape)
    probe = rng.choice(np.nonzero(valid.ravel())[0])
    return pred, gt, valid, int(probe)


def _dice_inputs(rng):
    shape = (16, 16)
    while True:
        gt = (rng.random(shape) < 0.3).astype(np.float64)
        valid = rng.random(shape) < 0.9
        if (valid & (gt > 0.5)).any():
            break
    pred = rng.uniform(0.05, 0.95, shape)
    probe = rng.choice(np.nonzero(valid.ravel())[0])
    return pred, gt, valid, int(probe)


def _ratio_inputs(rng, shape):
    gt = np.zeros(shape)
    mask = rng.random(shape) < 0.5
    if not mask.any():
        mask.ravel()[0] = True
    gt[mask] = rng.uniform(0.5, 100.0, int(mask.sum()))
    pred = rng.uniform(0.05, 4.0, shape)
    # keep the probe away from the |.| kink at pred == gt
    candidates = np.nonzero(
        (mask & (np.abs(np.log(np.maximum(pred, 1e-6)) - np.log(np.maximum(gt, 1e-6))) > 0.01)).ravel()
    )[0]
    probe = rng.choice(candidates)
    return pred, gt, mask, int(probe)


def _case(name, rng):
    if name == "bce":
        pred, gt, mask, probe = _bce_inputs(rng)
        return pred, probe, lambda p: bce_ohem(p, gt, mask)
    if name == "dice":
        pred, gt, mask, probe = _dice_inputs(rng)
        return pred, probe, lambda p: dice_loss(p, gt, mask)
    if name == "ratio-scale":
        pred, gt, mask, probe = _ratio_inputs(rng, (16, 16))
        return pred, probe, lambda p: ratio_loss(p, gt, mask)
    if name == "ratio-surrounding":
        pred, gt, mask, probe = _ratio_inputs(rng, (8, 8, 4))
        return pred, probe, lambda p: ratio_loss(p, gt, mask)
    raise DomainError(f"unknown loss {name!r}")


def check_loss(name: str, trials: int, seed: int = 0, step: float = FD_STEP) -> float:
    """Max relative error between analytic and central-difference gradients
    over `trials` random probe points."""
    if trials <= 0:
        raise DomainError(f"trials must be > 0, got {trials}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        pred, probe, fn = _case(name, rng)
        analytic = fn(pred).gradient.ravel()[probe]
        hi = pred.copy()
        hi.ravel()[probe] += step
        lo = pred.copy()
        lo.ravel()[probe] -= step
        fd = (fn(hi).value - fn(lo).value) / (2.0 * step)
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8)
        worst = max(worst, rel)
    return worst


def check_losses(names, trials: int, seed: int = 0) -> dict:
    return {name: check_loss(name, trials, seed) for name in names}
