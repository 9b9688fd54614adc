"""Heteroscedastic Gaussian sensor noise and its ISO dependence.

Variances are in normalized units: a value of 1.0 is the full range
``white_level - black_level`` ADU. Profiles whose coefficients were calibrated
in raw ADU carry ``units: adu`` and are converted on load.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import yaml

from .color import ColorCorrectionMatrix, WhiteBalanceGains
from .errors import CalibrationError, ConfigError, RangeError

logger = logging.getLogger(__name__)

ISO_RANGE = (2400, 12800)
ILLUMINANTS = ("D65", "D75", "D50", "TL84", "CWF", "U35")
UNITS = ("normalized", "adu")


@dataclass(frozen=True)
class NoiseParams:
    sigma2_shot: float
    sigma2_read: float
    iso: int

    def __post_init__(self):
        if self.sigma2_shot < 0 or self.sigma2_read < 0:
            raise CalibrationError(f"negative noise variance: shot={self.sigma2_shot}, read={self.sigma2_read}")


@dataclass(frozen=True)
class SensorProfile:
    """Calibration bundle for one sensor.

    ``k0, k1`` give the shot-noise coefficient ``k0 * iso + k1``; ``b0, b1, b2``
    give the read-noise variance ``b0 * iso**2 + b1 * iso + b2``. Both are in
    normalized units regardless of the units the profile file was written in.
    """

    name: str
    k0: float
    k1: float
    b0: float
    b1: float
    b2: float
    black_level: int
    white_level: int
    awb_table: Mapping[str, WhiteBalanceGains]
    ccm_day: ColorCorrectionMatrix = field(default_factory=ColorCorrectionMatrix.identity)
    ccm_night: ColorCorrectionMatrix = field(default_factory=ColorCorrectionMatrix.identity)

    def __post_init__(self):
        if not self.white_level > self.black_level >= 0:
            raise ConfigError(f"profile {self.name!r}: need white_level > black_level >= 0")
        if not self.awb_table:
            raise ConfigError(f"profile {self.name!r}: empty awb table")
        lo, hi = ISO_RANGE
        for iso in (lo, hi, -self.b1 / (2 * self.b0) if self.b0 else lo):
            if lo <= iso <= hi:
                self._check_variances(iso)

    def _check_variances(self, iso: float) -> None:
        shot = self.k0 * iso + self.k1
        read = self.b0 * iso**2 + self.b1 * iso + self.b2
        if shot < 0 or read < 0:
            raise CalibrationError(
                f"profile {self.name!r} gives negative variance at ISO {iso:g} (shot={shot:.3g}, read={read:.3g})"
            )

    @property
    def black_level_normalized(self) -> float:
        return self.black_level / self.white_level

    @property
    def illuminants(self) -> list[str]:
        return sorted(self.awb_table)


def noise_params(profile: SensorProfile, iso: int) -> NoiseParams:
    lo, hi = ISO_RANGE
    if not lo <= iso <= hi:
        warnings.warn(f"ISO {iso} outside supported range [{lo}, {hi}]", stacklevel=2)
    shot = profile.k0 * iso + profile.k1
    read = profile.b0 * iso**2 + profile.b1 * iso + profile.b2
    if shot < 0 or read < 0:
        raise CalibrationError(f"profile {profile.name!r} gives negative variance at ISO {iso}")
    return NoiseParams(sigma2_shot=shot, sigma2_read=read, iso=int(iso))


def total_variance(params: NoiseParams, x):
    """``sigma2_shot * x + sigma2_read`` for signal ``x >= 0``."""
    x = np.asarray(x, dtype=np.float64)
    if (x < 0).any():
        raise RangeError(f"total_variance: negative signal {x[x < 0].flat[0]!r}")
    out = params.sigma2_shot * x + params.sigma2_read
    return float(out) if out.ndim == 0 else out


def sample_noise(params: NoiseParams, x_plane, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian noise with per-element variance ``total_variance(x)``."""
    x = np.maximum(np.asarray(x_plane, dtype=np.float64), 0.0)
    std = np.sqrt(params.sigma2_shot * x + params.sigma2_read)
    return rng.standard_normal(x.shape) * std


def snr_db(params: NoiseParams, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if (x <= 0).any():
        raise RangeError("snr_db needs a strictly positive signal")
    out = 10.0 * np.log10(x**2 / total_variance(params, x))
    return float(out) if out.ndim == 0 else out


def stats_curves(profile: SensorProfile, iso_grid: Iterable[int], adu_grid: Iterable[float], iso: int = 6400):
    """Tabulate the noise statistics for plotting.

    Returns ``(iso_rows, adu_rows)``. ``iso_rows`` hold the shot coefficient and
    read variance per ISO. ``adu_rows`` hold the total variance and SNR at the
    given ISO, with the signal given in ADU above black level; variances are
    normalized.
    """
    iso_grid = [int(v) for v in iso_grid]
    adu_grid = [float(v) for v in adu_grid]
    if not iso_grid or not adu_grid:
        raise ValueError("stats_curves needs non-empty grids")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        iso_rows = []
        for v in iso_grid:
            p = noise_params(profile, v)
            iso_rows.append({"iso": v, "sigma2_shot": p.sigma2_shot, "sigma2_read": p.sigma2_read})
        p = noise_params(profile, iso)
    scale = profile.white_level - profile.black_level
    adu_rows = []
    for adu in adu_grid:
        x = adu / scale
        adu_rows.append({"adu": adu, "sigma2": total_variance(p, x), "snr_db": snr_db(p, x)})
    return iso_rows, adu_rows


def rows_to_csv(rows: list[dict], columns: tuple[str, ...]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in columns})
    return buf.getvalue()


ISO_COLUMNS = ("iso", "sigma2_shot", "sigma2_read")
ADU_COLUMNS = ("adu", "sigma2", "snr_db")


# -- profile files -----------------------------------------------------------

def _gains(name: str, value) -> WhiteBalanceGains:
    if isinstance(value, Mapping):
        return WhiteBalanceGains(r_gain=float(value["r"]), b_gain=float(value["b"]))
    seq = list(value)
    if len(seq) == 2:
        return WhiteBalanceGains(r_gain=float(seq[0]), b_gain=float(seq[1]))
    if len(seq) == 3:
        if float(seq[1]) != 1.0:
            raise ConfigError(f"illuminant {name}: green gain must be 1, got {seq[1]}")
        return WhiteBalanceGains(r_gain=float(seq[0]), b_gain=float(seq[2]))
    raise ConfigError(f"illuminant {name}: expected [r, b] or [r, 1, b]")


def profile_from_dict(d: Mapping, source: str = "<dict>") -> SensorProfile:
    try:
        units = d["units"]
    except KeyError:
        raise ConfigError(f"{source}: missing mandatory 'units' field") from None
    if units not in UNITS:
        raise ConfigError(f"{source}: units must be one of {UNITS}, got {units!r}")
    try:
        black, white = int(d["black_level"]), int(d["white_level"])
        coeffs = {k: float(d[k]) for k in ("k0", "k1", "b0", "b1", "b2")}
        awb = {str(k): _gains(k, v) for k, v in d["awb"].items()}
        ccm_day = ColorCorrectionMatrix(np.array(d.get("ccm_day", np.eye(3)), dtype=float))
        ccm_night = ColorCorrectionMatrix(np.array(d.get("ccm_night", np.eye(3)), dtype=float))
        name = str(d["name"])
    except KeyError as e:
        raise ConfigError(f"{source}: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, (ConfigError, CalibrationError)):
            raise
        raise ConfigError(f"{source}: {e}") from None
    if units == "adu":
        # x_adu = s * x, var_adu = s^2 * var: shot coefficient scales by 1/s, read by 1/s^2
        s = float(white - black)
        coeffs["k0"] /= s
        coeffs["k1"] /= s
        for k in ("b0", "b1", "b2"):
            coeffs[k] /= s * s
    unknown = set(awb) - set(ILLUMINANTS)
    if unknown:
        logger.info("%s: non-standard illuminants %s", source, sorted(unknown))
    return SensorProfile(name=name, black_level=black, white_level=white, awb_table=awb,
                         ccm_day=ccm_day, ccm_night=ccm_night, **coeffs)


def load_profile(path) -> SensorProfile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read profile {path}: {e.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return profile_from_dict(data, source=str(path))


def profile_to_dict(profile: SensorProfile) -> dict:
    """Serializable form (always normalized units)."""
    return {
        "name": profile.name,
        "units": "normalized",
        "k0": profile.k0, "k1": profile.k1,
        "b0": profile.b0, "b1": profile.b1, "b2": profile.b2,
        "black_level": profile.black_level,
        "white_level": profile.white_level,
        "awb": {k: [g.r_gain, g.b_gain] for k, g in sorted(profile.awb_table.items())},
        "ccm_day": profile.ccm_day.tolist(),
        "ccm_night": profile.ccm_night.tolist(),
    }


def default_iso_grid() -> list[int]:
    return list(range(ISO_RANGE[0], ISO_RANGE[1] + 1, 400))


def default_adu_grid(profile: SensorProfile, points: int = 64) -> list[float]:
    scale = profile.white_level - profile.black_level
    return [float(v) for v in np.geomspace(1.0, scale, points)]

