"""Multi-sensor dataset generation.

Output layout under ``out_dir``::

    clean/<sensor>/<image_id>.msraw
    noisy/<sensor>/<image_id>.msraw
    meta_data.json        {"<image_id>/<sensor>": MetaRecord, ...}
    manifest.json

Every (image, sensor) task draws from its own generator seeded with
``mix64(global_seed, image_id, sensor)``, so results do not depend on task
order or worker count.
"""

from __future__ import annotations

import errno
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .color import ccm_mix
from .errors import ConfigError, FormatError, MsrawError
from .mosaic import RgbImage
from .noise import ISO_RANGE, SensorProfile, load_profile, profile_to_dict
from .rawio import encode_msraw, read_rgb
from .synthesis import MetaRecord, SampledParams, degrade, unprocess

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MASK64 = (1 << 64) - 1
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".npy"}
# crop edge, in packed-plane pixels, for each named split
SPLIT_CROPS = {"train": 256, "val": 128}


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(seed: int, *parts: str) -> int:
    """Hash a 64-bit seed and a sequence of strings into a new 64-bit seed."""
    h = splitmix64(int(seed) & MASK64)
    for part in parts:
        data = part.encode("utf-8")
        h = splitmix64(h ^ len(data))
        for i in range(0, len(data), 8):
            h = splitmix64(h ^ int.from_bytes(data[i:i + 8], "little"))
    return h


def sample_params(profile: SensorProfile, rng: np.random.Generator, iso_range=ISO_RANGE,
                  dgain_mean: float = 0.65, dgain_sd: float = 0.2, dgain_clip=(0.1, 1.0)) -> SampledParams:
    names = profile.illuminants
    if len(names) < 2:
        raise ConfigError(f"profile {profile.name!r} needs at least two illuminants, has {len(names)}")
    i, j = rng.choice(len(names), size=2, replace=False)
    weight = float(rng.uniform())
    awb = profile.awb_table[names[i]].blend(profile.awb_table[names[j]], weight)
    alpha = float(rng.uniform())
    ccm = ccm_mix(profile.ccm_day, profile.ccm_night, alpha)
    inv_dgain = float(np.clip(rng.normal(dgain_mean, dgain_sd), *dgain_clip))
    iso = int(rng.integers(iso_range[0], iso_range[1], endpoint=True))
    return SampledParams(inv_dgain=inv_dgain, awb=awb, ccm=ccm, iso=iso,
                         awb_illuminants=(names[i], names[j], weight), ccm_alpha=alpha)


def leave_one_out_splits(sensors: Sequence[str]) -> list[tuple[list[str], str]]:
    sensors = list(sensors)
    if len(sensors) < 2:
        raise ConfigError("leave-one-sensor-out needs at least two sensors")
    return [([s for s in sensors if s != target], target) for target in sensors]


@dataclass
class GenerationConfig:
    source_dir: Path
    out_dir: Path
    sensors: list[Path]
    global_seed: int = 0
    split: str = "train"
    # packed-plane crop edge; None keeps the whole (even-trimmed) image
    crop_size: int | None = None
    crops_per_image: int = 1
    iso_range: tuple[int, int] = ISO_RANGE
    dgain_mean: float = 0.65
    dgain_sd: float = 0.2
    dgain_clip: tuple[float, float] = (0.1, 1.0)
    jobs: int = 1
    _profiles: list[SensorProfile] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.source_dir = Path(self.source_dir)
        self.out_dir = Path(self.out_dir)
        self.sensors = [Path(p) for p in self.sensors]
        self.global_seed = int(self.global_seed) & MASK64
        self.iso_range = tuple(int(v) for v in self.iso_range)
        self.dgain_clip = tuple(float(v) for v in self.dgain_clip)
        if not self.sensors:
            raise ConfigError("no sensor profiles configured")
        if self.iso_range[0] > self.iso_range[1]:
            raise ConfigError(f"iso_range {self.iso_range} is not ordered")
        if self.split not in SPLIT_CROPS:
            raise ConfigError(f"unknown split {self.split!r}")
        if self.crops_per_image < 1:
            raise ConfigError("crops_per_image must be >= 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "GenerationConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping at top level")
        base = path.parent
        for key in ("source_dir", "out_dir"):
            if key in data:
                data[key] = base / data[key]
        data["sensors"] = [base / p for p in data.get("sensors", [])]
        # overrides come from the command line: paths stay relative to the cwd
        data.update({k: v for k, v in overrides.items() if v is not None})
        if data.get("crop_size", "default") == "default":
            data["crop_size"] = SPLIT_CROPS.get(data.get("split", "train"))
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"{path}: {e}") from None

    def profiles(self) -> list[SensorProfile]:
        if self._profiles is None:
            profiles = [load_profile(p) for p in self.sensors]
            names = [p.name for p in profiles]
            if len(set(names)) != len(names):
                raise ConfigError(f"duplicate sensor names {names}")
            self._profiles = profiles
        return self._profiles

    def echo(self) -> dict:
        """Location-independent summary written into the manifest."""
        return {
            "global_seed": self.global_seed,
            "split": self.split,
            "crop_size": self.crop_size,
            "crops_per_image": self.crops_per_image,
            "iso_range": list(self.iso_range),
            "inv_dgain": {"mean": self.dgain_mean, "sd": self.dgain_sd, "clip": list(self.dgain_clip)},
            "sensors": [
                {"name": p.name,
                 "profile_sha256": hashlib.sha256(json.dumps(profile_to_dict(p), sort_keys=True).encode()).hexdigest()}
                for p in self.profiles()
            ],
        }


def list_sources(source_dir: Path) -> list[Path]:
    if not source_dir.is_dir():
        raise ConfigError(f"source directory {source_dir} does not exist")
    return sorted(p for p in source_dir.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _crops(img: RgbImage, image_stem: str, cfg: GenerationConfig) -> list[tuple[str, RgbImage]]:
    h, w = img.height - img.height % 2, img.width - img.width % 2
    if h == 0 or w == 0:
        raise FormatError(f"image {image_stem} is too small")
    if cfg.crop_size is None:
        return [(image_stem, RgbImage(img.planes[:, :h, :w], domain="srgb"))]
    edge = 2 * int(cfg.crop_size)
    if edge > h or edge > w:
        raise FormatError(f"image {image_stem} ({img.height}x{img.width}) is smaller than crop {edge}x{edge}")
    rng = np.random.default_rng(mix64(cfg.global_seed, image_stem, "crop"))
    out = []
    for k in range(cfg.crops_per_image):
        y = 2 * int(rng.integers(0, (h - edge) // 2 + 1))
        x = 2 * int(rng.integers(0, (w - edge) // 2 + 1))
        image_id = image_stem if cfg.crops_per_image == 1 else f"{image_stem}_c{k:02d}"
        out.append((image_id, RgbImage(img.planes[:, y:y + edge, x:x + edge], domain="srgb")))
    return out


def synthesize_pair(srgb: RgbImage, image_id: str, profile: SensorProfile, cfg: GenerationConfig):
    """Build (clean bytes, noisy bytes, MetaRecord) for one image and sensor."""
    seed = mix64(cfg.global_seed, image_id, profile.name)
    rng = np.random.default_rng(seed)
    params = sample_params(profile, rng, cfg.iso_range, cfg.dgain_mean, cfg.dgain_sd, cfg.dgain_clip)
    clean = unprocess(srgb, params, storage_scale=profile.white_level, black_level=profile.black_level)
    noisy = degrade(clean, profile, params.iso, rng=rng)
    meta = MetaRecord.from_params(params, image_id, profile.name, seed)
    return encode_msraw(clean), encode_msraw(noisy), meta


def _image_task(path: Path, cfg: GenerationConfig):
    """Worker: all sensors for one source file. Returns (entries, error)."""
    try:
        img = read_rgb(path)
        if (img.planes < 0).any() or (img.planes > 1).any():
            raise FormatError(f"{path.name}: pixel values outside [0, 1]")
        crops = _crops(img, path.stem, cfg)
    except (MsrawError, OSError, ValueError) as e:
        return [], {"image_id": path.stem, "path": path.name, "error": str(e)}
    results = []
    for image_id, crop in crops:
        for profile in cfg.profiles():
            clean, noisy, meta = synthesize_pair(crop, image_id, profile, cfg)
            results.append((image_id, profile.name, clean, noisy, meta))
    return results, None


class GenerationAborted(MsrawError):
    """Generation stopped early; a manifest flagged ``valid: false`` was written."""


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def generate(cfg: GenerationConfig) -> dict:
    """Generate the dataset described by ``cfg`` and return the manifest."""
    profiles = cfg.profiles()
    sources = list_sources(cfg.source_dir)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    for kind in ("clean", "noisy"):
        for p in profiles:
            (out / kind / p.name).mkdir(parents=True, exist_ok=True)

    manifest = {"schema_version": SCHEMA_VERSION, "valid": True, "config": cfg.echo(), "entries": [], "errors": []}
    meta_all = {}

    if cfg.jobs > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.jobs)
        results = pool.map(_image_task, sources, [cfg] * len(sources))
    else:
        pool = None
        results = (_image_task(p, cfg) for p in sources)

    try:
        for path, (items, error) in zip(sources, results):
            if error is not None:
                logger.warning("skipping %s: %s", path.name, error["error"])
                manifest["errors"].append(error)
                continue
            for image_id, sensor, clean, noisy, meta in items:
                rel_clean = f"clean/{sensor}/{image_id}.msraw"
                rel_noisy = f"noisy/{sensor}/{image_id}.msraw"
                (out / rel_clean).write_bytes(clean)
                (out / rel_noisy).write_bytes(noisy)
                manifest["entries"].append({
                    "image_id": image_id,
                    "sensor": sensor,
                    "clean_path": rel_clean,
                    "noisy_path": rel_noisy,
                    "sha256s": {"clean": hashlib.sha256(clean).hexdigest(),
                                "noisy": hashlib.sha256(noisy).hexdigest()},
                })
                meta_all[f"{image_id}/{sensor}"] = meta.to_dict()
    except OSError as e:
        manifest["valid"] = False
        manifest["errors"].append({"image_id": None, "path": None, "error": f"aborted: {e}"})
        try:
            _write_json(out / "manifest.json", manifest)
        except OSError:
            pass
        if e.errno == errno.ENOSPC:
            raise GenerationAborted(f"disk full while writing under {out}") from e
        raise GenerationAborted(f"write failed under {out}: {e}") from e
    finally:
        if pool is not None:
            pool.shutdown()

    _write_json(out / "meta_data.json", meta_all)
    _write_json(out / "manifest.json", manifest)
    logger.info("generated %d pairs (%d errors) in %s", len(manifest["entries"]), len(manifest["errors"]), out)
    return manifest


def verify_manifest(out_dir) -> list[str]:
    """Return the entries whose files no longer match their recorded checksums."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    bad = []
    for e in manifest["entries"]:
        for kind in ("clean", "noisy"):
            p = out_dir / e[f"{kind}_path"]
            if not p.exists() or hashlib.sha256(p.read_bytes()).hexdigest() != e["sha256s"][kind]:
                bad.append(e[f"{kind}_path"])
    return bad
