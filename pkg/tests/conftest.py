from pathlib import Path

import numpy as np
import pytest
import yaml

from msraw.color import ColorCorrectionMatrix, WhiteBalanceGains
from msraw.noise import SensorProfile, profile_to_dict

REPO = Path(__file__).resolve().parents[1]
PROFILE_DIR = REPO / "profiles"

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


AWB = {
    "D65": WhiteBalanceGains(2.0, 1.55),
    "D50": WhiteBalanceGains(1.85, 1.75),
    "TL84": WhiteBalanceGains(1.7, 2.05),
    "U35": WhiteBalanceGains(1.35, 2.6),
}
CCM_DAY = ColorCorrectionMatrix(np.array([[1.45, -0.27, -0.18], [-0.16, 1.45, -0.29], [-0.07, -0.38, 1.45]]))
CCM_NIGHT = ColorCorrectionMatrix(np.array([[1.3, -0.19, -0.11], [-0.11, 1.3, -0.19], [-0.05, -0.25, 1.3]]))


def make_profile(name="synth", k0=2e-7, k1=2e-5, b0=1e-12, b1=2e-9, b2=3e-6, black_level=64, white_level=1023,
                 awb=None, ccm_day=CCM_DAY, ccm_night=CCM_NIGHT) -> SensorProfile:
    return SensorProfile(name=name, k0=k0, k1=k1, b0=b0, b1=b1, b2=b2, black_level=black_level,
                         white_level=white_level, awb_table=dict(AWB if awb is None else awb),
                         ccm_day=ccm_day, ccm_night=ccm_night)


@pytest.fixture
def profile():
    return make_profile()


@pytest.fixture
def zero_noise_profile():
    return make_profile("quiet", k0=0.0, k1=0.0, b0=0.0, b1=0.0, b2=0.0)


def write_profile(path: Path, profile: SensorProfile) -> Path:
    path.write_text(yaml.safe_dump(profile_to_dict(profile)))
    return path


def write_corpus(directory: Path, n: int, size=(24, 32), seed=0) -> list[Path]:
    from PIL import Image

    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for k in range(n):
        img = (rng.uniform(0.05, 0.95, size=size + (3,)) * 255).astype(np.uint8)
        p = directory / f"img{k:02d}.png"
        Image.fromarray(img).save(p)
        paths.append(p)
    return paths


def write_generation_config(tmp_path: Path, n_images=2, n_sensors=2, seed=7, **extra) -> Path:
    src = tmp_path / "src"
    write_corpus(src, n_images)
    sensors = []
    for k in range(n_sensors):
        p = make_profile(f"s{k}", k0=(k + 1) * 1e-7, b2=(k + 1) * 2e-6)
        sensors.append(write_profile(tmp_path / f"s{k}.yaml", p).name)
    cfg = {"source_dir": "src", "out_dir": "out", "sensors": sensors, "global_seed": seed, "crop_size": None}
    cfg.update(extra)
    path = tmp_path / "gen.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path
