"""PSNR / SSIM under the Raw2Raw and Raw2RGB protocols, and per-sensor reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, ShapeError
from .mosaic import RawImage
from .synthesis import process

PROTOCOLS = ("raw2raw", "raw2rgb")
POST_GAIN = 2.0
POST_GAMMA = 1.0 / 2.2


def raw2raw_postprocess(raw: RawImage) -> RawImage:
    """Brighten a raw for scoring: gain 2.0, clip, then gamma 1/2.2."""
    return raw.like(np.clip(raw.planes * POST_GAIN, 0.0, 1.0) ** POST_GAMMA)


def psnr(a, b, peak: float = 1.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"psnr: shape mismatch {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable correlation, 'valid' region only
    k = g.size
    h, w = x.shape
    rows = sum(g[i] * x[i:h - k + 1 + i, :] for i in range(k))
    return sum(g[j] * rows[:, j:w - k + 1 + j] for j in range(k))


def _ssim_plane(a: np.ndarray, b: np.ndarray, g: np.ndarray, c1: float, c2: float) -> float:
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak: float = 1.0, window: int = 11, sigma: float = 1.5) -> float:
    """Gaussian-window SSIM, averaged over channels for (C, H, W) input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"ssim: shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[None], b[None]
    if a.ndim != 3:
        raise ShapeError(f"ssim expects (H, W) or (C, H, W), got {a.shape}")
    if a.shape[1] < window or a.shape[2] < window:
        raise ShapeError(f"ssim: image {a.shape[1]}x{a.shape[2]} smaller than {window}x{window} window")
    g = _gaussian_window(window, sigma)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    return float(np.mean([_ssim_plane(x, y, g, c1, c2) for x, y in zip(a, b)]))


@dataclass
class SensorScore:
    psnr_db: float
    ssim: float
    count: int


@dataclass
class EvalReport:
    per_sensor: dict[str, SensorScore]
    worst_sensor: tuple[str, float]
    protocol: str = "raw2raw"

    def to_dict(self) -> dict:
        def num(v):
            return "inf" if math.isinf(v) else v

        return {
            "protocol": self.protocol,
            "per_sensor": {k: {"psnr_db": num(s.psnr_db), "ssim": s.ssim, "count": s.count}
                           for k, s in sorted(self.per_sensor.items())},
            "worst_sensor": {"name": self.worst_sensor[0], "psnr_db": num(self.worst_sensor[1])},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        """One column per sensor, ``PSNR / SSIM`` cells."""
        names = sorted(self.per_sensor)
        cells = []
        for n in names:
            s = self.per_sensor[n]
            p = "inf" if math.isinf(s.psnr_db) else f"{s.psnr_db:.2f}"
            cells.append(f"{p} / {s.ssim:.4f}")
        widths = [max(len(n), len(c)) for n, c in zip(names, cells)]
        label = f"{self.protocol}"
        head = " | ".join([label.ljust(8)] + [n.center(w) for n, w in zip(names, widths)])
        rule = "-+-".join(["-" * 8] + ["-" * w for w in widths])
        row = " | ".join(["PSNR/SSIM".ljust(8)] + [c.center(w) for c, w in zip(cells, widths)])
        worst = f"worst: {self.worst_sensor[0]} ({'inf' if math.isinf(self.worst_sensor[1]) else f'{self.worst_sensor[1]:.2f}'} dB)"
        return "\n".join([head, rule, row, worst])


def worst_sensor(psnr_by_sensor: Mapping[str, float]) -> tuple[str, float]:
    """Lowest PSNR; ties go to the lexicographically smallest name."""
    if not psnr_by_sensor:
        raise ValueError("no sensors to rank")
    name = min(sorted(psnr_by_sensor), key=lambda k: psnr_by_sensor[k])
    return name, psnr_by_sensor[name]


def evaluate(items: Iterable, protocol: str = "raw2raw") -> EvalReport:
    """Score ``(predicted, target, sensor[, meta])`` items and aggregate per sensor."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    sums: dict[str, list] = {}
    for item in items:
        pred, target, sensor = item[:3]
        meta = item[3] if len(item) > 3 else None
        if protocol == "raw2raw":
            a = raw2raw_postprocess(pred).planes
            b = raw2raw_postprocess(target).planes
        else:
            if meta is None:
                raise ConfigError(f"raw2rgb protocol needs metadata (sensor {sensor})")
            a = process(pred, meta).planes
            b = process(target, meta).planes
        acc = sums.setdefault(sensor, [0.0, 0.0, 0])
        acc[0] += psnr(a, b)
        acc[1] += ssim(a, b)
        acc[2] += 1
    if not sums:
        raise ValueError("nothing to evaluate")
    per_sensor = {k: SensorScore(v[0] / v[2], v[1] / v[2], v[2]) for k, v in sums.items()}
    worst = worst_sensor({k: s.psnr_db for k, s in per_sensor.items()})
    return EvalReport(per_sensor, worst, protocol)
