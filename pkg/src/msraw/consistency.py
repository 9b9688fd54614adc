"""Multi-sensor consistency losses and a gradient reversal operator.

Features come in per scale as two arrays ``U[l]`` and ``V[l]`` of shape
``(B, N, *feature_shape)``: B images, N sensors. ``U`` holds stage inputs and
is treated as a constant; ``V`` holds stage outputs and receives gradients.

A residual for sensors ``(i, j)`` of images ``(m, n)`` is

    r = (V_i(m) - V_j(n)) - (U_i(m) - U_j(n)),

scored by its mean absolute value. Losses are means over all enumerated
residuals, so every scale carries equal weight and the magnitude does not
grow with the number of pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import RangeError, ShapeError

DEFAULT_LAMBDAS = (0.1, 0.1, 1.0)


@dataclass
class MultiScaleFeatures:
    U: list[np.ndarray]
    V: list[np.ndarray]

    def __post_init__(self):
        self.U = [np.asarray(u, dtype=np.float64) for u in self.U]
        self.V = [np.asarray(v, dtype=np.float64) for v in self.V]
        if len(self.U) != len(self.V) or not self.U:
            raise ShapeError("need the same, non-zero number of scales for U and V")
        if self.U[0].ndim < 2 or 0 in self.U[0].shape[:2]:
            raise ShapeError(f"features need shape (B>=1, N>=1, ...), got {self.U[0].shape}")
        b, n = self.U[0].shape[:2]
        for lvl, (u, v) in enumerate(zip(self.U, self.V)):
            if u.shape != v.shape:
                raise ShapeError(f"scale {lvl}: U shape {u.shape} != V shape {v.shape}")
            if u.ndim < 2 or u.shape[:2] != (b, n):
                raise ShapeError(f"scale {lvl}: leading dims {u.shape[:2]} != {(b, n)}")
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise ShapeError(f"scale {lvl}: non-finite feature values")

    @property
    def batch(self) -> int:
        return self.U[0].shape[0]

    @property
    def sensors(self) -> int:
        return self.U[0].shape[1]

    @property
    def scales(self) -> int:
        return len(self.U)


def _pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, k=1)
    return i, j


def _relation_loss(D: np.ndarray, left: tuple, right: tuple):
    """Mean-abs loss over residuals ``D[left] - D[right]`` and its gradient wrt D.

    ``left``/``right`` are index tuples selecting (image, sensor) per term.
    """
    r = D[left] - D[right]
    n_terms = r.shape[0]
    per_elem = r[0].size
    loss = float(np.abs(r).sum()) / (n_terms * per_elem)
    s = np.sign(r) / (n_terms * per_elem)
    grad = np.zeros_like(D)
    np.add.at(grad, left, s)
    np.add.at(grad, right, -s)
    return loss, grad


def _reduce(feats: MultiScaleFeatures, index_fn):
    total = 0.0
    grads = []
    for u, v in zip(feats.U, feats.V):
        D = v - u
        loss, g = _relation_loss(D, *index_fn())
        total += loss
        grads.append(g / feats.scales)
    return total / feats.scales, grads


def intra_loss(feats: MultiScaleFeatures):
    """Same-image consistency over unordered sensor pairs ``i < j``.

    Returns ``(loss, grads)`` where ``grads[l]`` matches ``V[l]``. With fewer
    than two sensors the loss is 0 and ``grads`` is empty.
    """
    B, N = feats.batch, feats.sensors
    if N < 2:
        return 0.0, []
    i, j = _pairs(N)
    img = np.repeat(np.arange(B), len(i))
    si, sj = np.tile(i, B), np.tile(j, B)
    return _reduce(feats, lambda: ((img, si), (img, sj)))


def inter_loss(feats: MultiScaleFeatures):
    """Cross-image consistency over unordered image pairs ``m < n``.

    Every ordered sensor pair ``(i, j)``, including ``i == j``, is scored for
    each image pair, which makes the loss symmetric under swapping images.
    """
    B, N = feats.batch, feats.sensors
    if B < 2 or N < 2:
        return 0.0, []
    m, n = _pairs(B)
    si, sj = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    si, sj = si.ravel(), sj.ravel()
    im, jn = np.repeat(m, si.size), np.repeat(n, si.size)
    si, sj = np.tile(si, len(m)), np.tile(sj, len(m))
    return _reduce(feats, lambda: ((im, si), (jn, sj)))


def grad_reverse(x, alpha: float) -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
    """Identity forward; the returned backward maps an upstream gradient to ``-alpha * g``."""
    if alpha < 0:
        raise RangeError(f"alpha must be >= 0, got {alpha}")
    y = np.array(x, copy=True)

    def backward(upstream):
        return -alpha * np.asarray(upstream, dtype=np.float64)

    return y, backward


def adv_loss(recon_loss: float, class_loss: float, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise RangeError(f"alpha {alpha!r} outside [0, 1]")
    return recon_loss - alpha * class_loss


def alpha_schedule(t: int, total: int) -> float:
    """Linear ramp from 0 at ``t = 0`` to 1 at ``t = total``; clamps past the end."""
    if total <= 0:
        raise RangeError("total iterations must be positive")
    if t < 0:
        raise RangeError(f"iteration {t} is negative")
    return min(t / total, 1.0)


def ms_loss(intra: float, inter: float, adv: float, lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> float:
    l1, l2, l3 = lambdas
    if min(lambdas) < 0:
        raise RangeError(f"lambdas must be non-negative, got {tuple(lambdas)}")
    return l1 * inter + l2 * intra + l3 * adv
