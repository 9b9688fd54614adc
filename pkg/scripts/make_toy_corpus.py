"""Write a small synthetic sRGB corpus plus a generation config next to it.

    python3 scripts/make_toy_corpus.py toy --images 4 --size 96
    msraw generate toy/gen.yaml --seed 1
"""

import argparse
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

PROFILES = Path(__file__).resolve().parents[1] / "profiles"


def smooth_scene(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w] / max(h, w)
    img = np.zeros((h, w, 3))
    for c in range(3):
        for _ in range(4):
            fy, fx, ph = rng.uniform(0.5, 6, 2).tolist() + [rng.uniform(0, 2 * np.pi)]
            img[..., c] += np.sin(2 * np.pi * (fy * yy + fx * xx) + ph)
    img = (img - img.min()) / np.ptp(img)
    return 0.05 + 0.9 * img


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--images", type=int, default=4)
    ap.add_argument("--size", type=int, default=96, help="square edge in pixels (even)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sensors", type=int, default=3)
    args = ap.parse_args(argv)

    src = args.out / "src"
    src.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for k in range(args.images):
        img = smooth_scene(rng, args.size, args.size)
        Image.fromarray((img * 255).round().astype(np.uint8)).save(src / f"scene{k:03d}.png")

    sensors = sorted(PROFILES.glob("*.yaml"))[: args.sensors]
    cfg = {"source_dir": "src", "out_dir": "dataset", "global_seed": args.seed,
           "sensors": [str(p) for p in sensors], "crop_size": None}
    (args.out / "gen.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False))
    print(f"wrote {args.images} images and {args.out / 'gen.yaml'}")


if __name__ == "__main__":
    main()
