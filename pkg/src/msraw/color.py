"""Per-pixel colour transforms of the ISP and their inverses.

All functions work on plain numpy arrays. Colour images are channel-first,
shape ``(3, ...)`` in R, G, B order, so a single pixel ``(3,)`` works as well
as a full ``(3, H, W)`` image. Nothing in here clips; clipping points belong
to the composed pipelines in :mod:`msraw.synthesis`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvertibilityError, RangeError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 1.0 / 2.2
GAMMA_FLOOR = 1e-8
DEFAULT_HIGHLIGHT_THRESHOLD = 0.9


def _check_unit_range(x: np.ndarray, what: str) -> None:
    if x.size == 0:
        return
    bad = (x < 0.0) | (x > 1.0) | ~np.isfinite(x)
    if bad.any():
        value = x[bad].flat[0]
        raise RangeError(f"{what}: value {value!r} outside [0, 1]")


@dataclass(frozen=True)
class ColorCorrectionMatrix:
    """3x3 colour correction matrix, row-major; rows act on (R, G, B)."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"CCM must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("CCM has non-finite entries")
        det = np.linalg.det(m)
        if abs(det) <= 1e-8:
            raise InvertibilityError(f"CCM is singular (det={det:.3g})")
        rows = m.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=0.05):
            logger.debug("CCM rows do not sum to 1: %s", rows)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "ColorCorrectionMatrix":
        return cls(np.eye(3))

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.m)

    def tolist(self) -> list[list[float]]:
        return self.m.tolist()


@dataclass(frozen=True)
class WhiteBalanceGains:
    """AWB gains ``[r_gain, 1, b_gain]``."""

    r_gain: float
    b_gain: float
    g_gain: float = 1.0

    def __post_init__(self):
        if not (self.r_gain > 0 and self.b_gain > 0):
            raise RangeError(f"white-balance gains must be positive, got r={self.r_gain}, b={self.b_gain}")
        if self.g_gain != 1.0:
            raise RangeError(f"g_gain is fixed at 1.0, got {self.g_gain}")

    def as_array(self) -> np.ndarray:
        return np.array([self.r_gain, self.g_gain, self.b_gain], dtype=np.float64)

    def blend(self, other: "WhiteBalanceGains", weight: float) -> "WhiteBalanceGains":
        """Convex combination ``weight * self + (1 - weight) * other``."""
        return WhiteBalanceGains(
            r_gain=weight * self.r_gain + (1.0 - weight) * other.r_gain,
            b_gain=weight * self.b_gain + (1.0 - weight) * other.b_gain,
        )


# -- tone mapping ------------------------------------------------------------

def tone_map_inverse(y):
    """Invert the smoothstep tone curve: ``1/2 - sin(asin(1 - 2y) / 3)``."""
    y = np.asarray(y, dtype=np.float64)
    _check_unit_range(y, "tone_map_inverse")
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * y) / 3.0)


def tone_map_forward(x):
    """Smoothstep tone curve ``3x^2 - 2x^3``."""
    x = np.asarray(x, dtype=np.float64)
    _check_unit_range(x, "tone_map_forward")
    return 3.0 * x**2 - 2.0 * x**3


# -- gamma -------------------------------------------------------------------

def gamma_apply(x, gamma: float = DEFAULT_GAMMA):
    """``x ** gamma`` with inputs floored at ``GAMMA_FLOOR``."""
    if gamma <= 0:
        raise RangeError(f"gamma must be positive, got {gamma}")
    x = np.asarray(x, dtype=np.float64)
    if (x < 0).any():
        raise RangeError(f"gamma_apply: negative input {x[x < 0].flat[0]!r}")
    return np.maximum(x, GAMMA_FLOOR) ** gamma


def gamma_invert(y, gamma: float = DEFAULT_GAMMA):
    """``y ** (1 / gamma)`` with inputs floored at ``GAMMA_FLOOR``."""
    if gamma <= 0:
        raise RangeError(f"gamma must be positive, got {gamma}")
    return gamma_apply(y, 1.0 / gamma)


# -- colour correction -------------------------------------------------------

def ccm_mix(ccm_d: ColorCorrectionMatrix, ccm_n: ColorCorrectionMatrix, alpha: float) -> ColorCorrectionMatrix:
    """Blend the day and night matrices: ``alpha * ccm_d + (1 - alpha) * ccm_n``."""
    if not 0.0 <= alpha <= 1.0:
        raise RangeError(f"ccm_mix alpha {alpha!r} outside [0, 1]")
    if alpha == 1.0:
        return ccm_d
    if alpha == 0.0:
        return ccm_n
    return ColorCorrectionMatrix(alpha * ccm_d.m + (1.0 - alpha) * ccm_n.m)


def _matmul_channels(m: np.ndarray, img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.shape[0] != 3:
        raise ValueError(f"expected channel-first colour data, got shape {img.shape}")
    return np.einsum("ij,j...->i...", m, img)


def ccm_apply(img, ccm: ColorCorrectionMatrix) -> np.ndarray:
    if np.array_equal(ccm.m, np.eye(3)):
        return np.array(img, dtype=np.float64, copy=True)
    return _matmul_channels(ccm.m, img)


def ccm_invert(img, ccm: ColorCorrectionMatrix) -> np.ndarray:
    if np.array_equal(ccm.m, np.eye(3)):
        return np.array(img, dtype=np.float64, copy=True)
    return _matmul_channels(ccm.inverse(), img)


# -- white balance and digital gain ------------------------------------------

def _channel_view(gains: np.ndarray, img: np.ndarray) -> np.ndarray:
    return gains.reshape((3,) + (1,) * (img.ndim - 1))


def wb_apply(img, gains: WhiteBalanceGains) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return img * _channel_view(gains.as_array(), img)


def wb_invert(img, gains: WhiteBalanceGains) -> np.ndarray:
    """Plain inverse white balance, no highlight handling."""
    img = np.asarray(img, dtype=np.float64)
    return img / _channel_view(gains.as_array(), img)


def safe_inverse_scale(img, inverse_gains, threshold: float = DEFAULT_HIGHLIGHT_THRESHOLD) -> np.ndarray:
    """Scale each channel by its inverse gain while keeping highlights near white.

    For a channel with inverse gain ``g < 1`` a value ``x > threshold`` is scaled
    by ``(1 - w) * g + w`` with ``w = ((x - threshold) / (1 - threshold))**2``,
    so that ``x = 1`` stays at 1. Channels with ``g >= 1`` and all values at or
    below the threshold are scaled plainly.
    """
    if not 0.0 < threshold < 1.0:
        raise RangeError(f"highlight threshold {threshold!r} outside (0, 1)")
    img = np.asarray(img, dtype=np.float64)
    g = _channel_view(np.asarray(inverse_gains, dtype=np.float64), img)
    w = (np.maximum(img - threshold, 0.0) / (1.0 - threshold)) ** 2
    blended = (1.0 - w) * g + w * np.maximum(g, 1.0)
    scale = np.where((img > threshold) & (g < 1.0), blended, g)
    return img * scale


def wb_invert_safe(img, gains: WhiteBalanceGains, threshold: float = DEFAULT_HIGHLIGHT_THRESHOLD) -> np.ndarray:
    return safe_inverse_scale(img, 1.0 / gains.as_array(), threshold)


def gain_apply(img, g: float):
    """Multiply by a positive digital gain. No clipping."""
    if not g > 0:
        raise RangeError(f"gain must be positive, got {g!r}")
    return np.asarray(img, dtype=np.float64) * g
