"""Composed pipelines: sRGB -> clean raw, clean raw -> noisy raw, raw -> sRGB."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import color
from .color import ColorCorrectionMatrix, WhiteBalanceGains
from .errors import RangeError
from .mosaic import RawImage, RgbImage, demosaic_bilinear, mosaic
from .noise import ISO_RANGE, SensorProfile, noise_params, sample_noise

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampledParams:
    inv_dgain: float
    awb: WhiteBalanceGains
    ccm: ColorCorrectionMatrix
    iso: int = 6400
    # provenance of the sampled values, recorded in MetaRecord
    awb_illuminants: tuple = ("", "", 1.0)
    ccm_alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.inv_dgain <= 1.5:
            raise RangeError(f"inv_dgain {self.inv_dgain!r} outside (0, 1.5]")
        if not 0.0 <= self.ccm_alpha <= 1.0:
            raise RangeError(f"ccm_alpha {self.ccm_alpha!r} outside [0, 1]")

    @classmethod
    def identity(cls, iso: int = 6400) -> "SampledParams":
        return cls(1.0, WhiteBalanceGains(1.0, 1.0), ColorCorrectionMatrix.identity(), iso)


@dataclass(frozen=True)
class MetaRecord:
    image_id: str
    sensor_name: str
    inv_dgain: float
    awb: WhiteBalanceGains
    awb_illuminants: tuple  # (name_a, name_b, weight of name_a)
    ccm: ColorCorrectionMatrix
    ccm_alpha: float
    iso: int
    seed: int

    @classmethod
    def from_params(cls, params: SampledParams, image_id: str, sensor_name: str, seed: int) -> "MetaRecord":
        return cls(image_id, sensor_name, params.inv_dgain, params.awb, tuple(params.awb_illuminants),
                   params.ccm, params.ccm_alpha, params.iso, int(seed))

    def params(self) -> SampledParams:
        return SampledParams(self.inv_dgain, self.awb, self.ccm, self.iso, self.awb_illuminants, self.ccm_alpha)

    def to_dict(self) -> dict:
        a, b, w = self.awb_illuminants
        return {
            "image_id": self.image_id,
            "sensor_name": self.sensor_name,
            "inv_dgain": self.inv_dgain,
            "awb": [self.awb.r_gain, 1.0, self.awb.b_gain],
            "awb_illuminants": [a, b, w],
            "ccm": self.ccm.tolist(),
            "ccm_alpha": self.ccm_alpha,
            "iso": self.iso,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetaRecord":
        r, _, b = d["awb"]
        a, bname, w = d.get("awb_illuminants", ("", "", 1.0))
        return cls(
            image_id=str(d.get("image_id", "")),
            sensor_name=str(d.get("sensor_name", "")),
            inv_dgain=float(d["inv_dgain"]),
            awb=WhiteBalanceGains(float(r), float(b)),
            awb_illuminants=(a, bname, float(w)),
            ccm=ColorCorrectionMatrix(np.array(d["ccm"], dtype=float)),
            ccm_alpha=float(d.get("ccm_alpha", 1.0)),
            iso=int(d.get("iso", 6400)),
            seed=int(d.get("seed", 0)),
        )


def unprocess(srgb: RgbImage, params: SampledParams, storage_scale: int = 1023, black_level: int = 0,
              highlight_threshold: float = color.DEFAULT_HIGHLIGHT_THRESHOLD) -> RawImage:
    """Invert the ISP: tone map, gamma, CCM, WB fused with digital gain, mosaic."""
    x = color.tone_map_inverse(srgb.planes)
    x = color.gamma_invert(x, color.DEFAULT_GAMMA)
    x = color.ccm_invert(x, params.ccm)
    # WB and dgain as one stage: per-channel inverse gain inv_dgain / wb_gain
    inverse_gains = params.inv_dgain / params.awb.as_array()
    x = color.safe_inverse_scale(x, inverse_gains, highlight_threshold)
    raw = mosaic(RgbImage(x, domain="linear"), storage_scale=storage_scale, black_level=black_level)
    raw.planes = np.clip(raw.planes, 0.0, 1.0)
    return raw


def process(raw: RawImage, meta) -> RgbImage:
    """Forward ISP used for Raw2RGB evaluation. ``meta`` is a MetaRecord or SampledParams."""
    planes = raw.planes
    if planes.size and ((planes < 0).any() or (planes > 1).any()):
        raise RangeError("process: raw values outside [0, 1]")
    x = demosaic_bilinear(raw).planes
    x = color.gain_apply(x, 1.0 / meta.inv_dgain)
    x = color.wb_apply(x, meta.awb)
    x = color.ccm_apply(x, meta.ccm)
    x = np.clip(x, 0.0, 1.0)
    x = color.gamma_apply(x, color.DEFAULT_GAMMA)
    x = color.tone_map_forward(np.minimum(x, 1.0))
    return RgbImage(x, domain="srgb")


def degrade(clean_raw: RawImage, profile: SensorProfile, iso: int, seed=None,
            rng: np.random.Generator | None = None) -> RawImage:
    """Add ISO-dependent sensor noise to a clean raw.

    Values are treated as normalized ADU with pedestal ``black_level / white_level``.
    The noise variance is evaluated on the black-level-subtracted signal
    (clamped at 0); the noise is added to the input value, so a zero-noise
    profile reproduces the input exactly. Output is clipped to [0, 1].
    """
    lo, hi = ISO_RANGE
    if not lo <= iso <= hi:
        logger.warning("ISO %d outside supported range [%d, %d]", iso, lo, hi)
    if rng is None:
        rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = noise_params(profile, iso)
    planes = clean_raw.planes
    signal = np.maximum(planes - profile.black_level_normalized, 0.0)
    if params.sigma2_shot == 0.0 and params.sigma2_read == 0.0:
        noisy = planes.copy()
    else:
        noisy = planes + sample_noise(params, signal, rng)
    return replace(clean_raw, planes=np.clip(noisy, 0.0, 1.0))
