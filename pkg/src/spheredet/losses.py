"""Two-term detection loss: log loss over classes plus smooth-L1 box
regression gated off for background, with analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anchors import RegressionTarget

__all__ = ["smooth_l1", "smooth_l1_derivative", "detection_loss", "LossResult"]


def smooth_l1(x):
    """0.5 x^2 inside |x| < 1, |x| - 0.5 outside; works on scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) < 1.0, 0.5 * x * x, np.abs(x) - 0.5)
    return float(out) if out.ndim == 0 else out


def smooth_l1_derivative(x):
    """d/dx of :func:`smooth_l1`: x inside the quadratic zone, sign(x) outside."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) < 1.0, x, np.sign(x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LossResult:
    total: float
    cls: float
    reg: float
    grad_logits: np.ndarray  # d total / d logits, shape (K+1,)
    grad_t: np.ndarray       # d total / d t, shape (4,)


def _as_target_array(t) -> np.ndarray:
    if isinstance(t, RegressionTarget):
        return t.as_array()
    arr = np.asarray(t, dtype=np.float64)
    if arr.shape != (4,):
        raise ValueError("regression target must have 4 components")
    return arr


def detection_loss(logits, p_star: int, t, t_star, lambda_: float) -> LossResult:
    """Classification + gated regression loss of a single example.

    `logits` are unnormalized scores over K+1 classes (class 0 is
    background); `p_star` is the ground-truth label. The regression term
    sums smooth-L1 over the four offset components of ``t - t_star`` and
    is disabled for background. Gradients are exact: softmax minus the
    one-hot label for the logits, and the gated smooth-L1 slope scaled by
    `lambda_` for the offsets.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.shape[0] < 2:
        raise ValueError("logits must be a 1-D array over at least 2 classes")
    if not 0 <= p_star < logits.shape[0]:
        raise ValueError(f"label {p_star} outside [0, {logits.shape[0] - 1}]")
    t = _as_target_array(t)
    t_star = _as_target_array(t_star)

    shifted = logits - logits.max()
    log_norm = np.log(np.exp(shifted).sum())
    cls = float(log_norm - shifted[p_star])
    softmax = np.exp(shifted - log_norm)
    grad_logits = softmax.copy()
    grad_logits[p_star] -= 1.0

    gate = 1.0 if p_star >= 1 else 0.0
    diff = t - t_star
    reg = gate * float(smooth_l1(diff).sum())
    grad_t = lambda_ * gate * smooth_l1_derivative(diff)

    return LossResult(
        total=cls + lambda_ * reg,
        cls=cls,
        reg=reg,
        grad_logits=grad_logits,
        grad_t=grad_t,
    )
