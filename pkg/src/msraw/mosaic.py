"""BGGR Bayer mosaicing and bilinear demosaicing.

Raw images are stored packed as four half-resolution planes in the order
(B, G1, G2, R)::

    row 0:  B  G1 B  G1 ...
    row 1:  G2 R  G2 R  ...
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

PLANE_ORDER = ("B", "G1", "G2", "R")
DOMAINS = ("linear", "srgb")


@dataclass
class RawImage:
    planes: np.ndarray  # (4, H/2, W/2), float64, normalized
    storage_scale: int = 1023
    black_level: int = 0

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] != 4:
            raise ShapeError(f"raw planes must have shape (4, h, w), got {self.planes.shape}")
        if self.planes.shape[1] == 0 or self.planes.shape[2] == 0:
            raise ShapeError("raw image is empty")

    @property
    def height(self) -> int:
        return 2 * self.planes.shape[1]

    @property
    def width(self) -> int:
        return 2 * self.planes.shape[2]

    def like(self, planes: np.ndarray) -> "RawImage":
        return RawImage(planes, storage_scale=self.storage_scale, black_level=self.black_level)


@dataclass
class RgbImage:
    planes: np.ndarray  # (3, H, W) in R, G, B order
    domain: str = "srgb"

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] != 3:
            raise ShapeError(f"RGB planes must have shape (3, H, W), got {self.planes.shape}")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain tag {self.domain!r}")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


def mosaic(img: RgbImage, storage_scale: int = 1023, black_level: int = 0) -> RawImage:
    """Sample an RGB image on the BGGR lattice. Pure selection, no filtering."""
    p = img.planes
    _, h, w = p.shape
    if h % 2 or w % 2:
        raise ShapeError(f"mosaic needs even dimensions, got {h}x{w}")
    planes = np.stack([
        p[2, 0::2, 0::2],  # B
        p[1, 0::2, 1::2],  # G1
        p[1, 1::2, 0::2],  # G2
        p[0, 1::2, 1::2],  # R
    ])
    return RawImage(planes, storage_scale=storage_scale, black_level=black_level)


def _shift(plane: np.ndarray, axis: int, d: float) -> np.ndarray:
    # neighbour at +-1 along axis, clamp-to-edge
    if d > 0:
        idx = np.minimum(np.arange(plane.shape[axis]) + 1, plane.shape[axis] - 1)
    else:
        idx = np.maximum(np.arange(plane.shape[axis]) - 1, 0)
    return np.take(plane, idx, axis=axis)


def _sample(plane: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Value of ``plane`` at ``(i + dy, j + dx)`` for every ``(i, j)``.

    Offsets are 0 or +-0.5 in plane units. Off-grid points are pairwise means
    of their neighbours (clamp-to-edge), which keeps results inside the
    neighbours' range even in floating point.
    """
    out = plane
    if dy:
        out = 0.5 * (out + _shift(out, 0, dy))
    if dx:
        out = 0.5 * (out + _shift(out, 1, dx))
    return out


def demosaic_bilinear(raw: RawImage) -> RgbImage:
    """Bilinear demosaic; sampled sites are copied, missing ones averaged."""
    b, g1, g2, r = raw.planes
    h, w = b.shape
    out = np.empty((3, 2 * h, 2 * w), dtype=np.float64)
    R, G, B = out

    # site (even, even): B
    B[0::2, 0::2] = b
    R[0::2, 0::2] = _sample(r, -0.5, -0.5)
    G[0::2, 0::2] = 0.5 * (_sample(g1, 0, -0.5) + _sample(g2, -0.5, 0))
    # site (even, odd): G1
    G[0::2, 1::2] = g1
    R[0::2, 1::2] = _sample(r, -0.5, 0)
    B[0::2, 1::2] = _sample(b, 0, 0.5)
    # site (odd, even): G2
    G[1::2, 0::2] = g2
    R[1::2, 0::2] = _sample(r, 0, -0.5)
    B[1::2, 0::2] = _sample(b, 0.5, 0)
    # site (odd, odd): R
    R[1::2, 1::2] = r
    G[1::2, 1::2] = 0.5 * (_sample(g1, 0.5, 0) + _sample(g2, 0, 0.5))
    B[1::2, 1::2] = _sample(b, 0.5, 0.5)

    return RgbImage(out, domain="linear")
