"""Command-line interface.

Exit codes: 0 success, 1 operational failure, 2 partial success,
64 usage error. Set ``MSRAW_LOG`` to error/warn/info/debug for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import lossck
from .dataset import GenerationAborted, GenerationConfig, generate, sample_params
from .errors import ConfigError, MsrawError
from .metrics import PROTOCOLS, evaluate
from .noise import (ADU_COLUMNS, ISO_COLUMNS, default_adu_grid, default_iso_grid, load_profile, rows_to_csv,
                    stats_curves)
from .rawio import read_raw, read_rgb, write_raw, write_rgb
from .synthesis import MetaRecord, degrade, process, unprocess

EXIT_OK, EXIT_FAIL, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2, 64
RAW_SUFFIXES = (".msraw", ".npy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
             "info": logging.INFO, "debug": logging.DEBUG}.get(os.environ.get("MSRAW_LOG", "warn").lower(),
                                                               logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _grid(text: str, cast=float) -> list:
    """``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        return [cast(v) for v in np.arange(start, stop + step / 2, step)]
    return [cast(v) for v in text.split(",") if v.strip()]


def load_meta(path, key: str | None = None) -> MetaRecord:
    data = json.loads(Path(path).read_text())
    if "inv_dgain" in data:
        return MetaRecord.from_dict(data)
    if key is None:
        if len(data) != 1:
            raise UsageError(f"{path} holds {len(data)} records; pick one with --key")
        key = next(iter(data))
    try:
        return MetaRecord.from_dict(data[key])
    except KeyError:
        raise ConfigError(f"{path}: no record {key!r}") from None


def cmd_generate(args) -> int:
    if args.seed is None and "global_seed" not in _config_keys(args.config):
        raise UsageError("generate needs --seed (or global_seed in the config)")
    cfg = GenerationConfig.from_file(args.config, global_seed=args.seed, jobs=args.jobs, out_dir=args.out)
    manifest = generate(cfg)
    print(json.dumps({"pairs": len(manifest["entries"]), "errors": len(manifest["errors"]),
                      "out_dir": str(cfg.out_dir)}))
    return EXIT_PARTIAL if manifest["errors"] else EXIT_OK


def _config_keys(path) -> set:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError):
        return set()  # from_file reports the real problem
    return set(data) if isinstance(data, dict) else set()


def cmd_unprocess(args) -> int:
    img = read_rgb(args.input)
    profile = load_profile(args.profile) if args.profile else None
    if args.meta:
        meta = load_meta(args.meta, args.key)
    elif profile is not None:
        if args.seed is None:
            raise UsageError("sampling parameters needs --seed")
        params = sample_params(profile, np.random.default_rng(args.seed))
        meta = MetaRecord.from_params(params, Path(args.input).stem, profile.name, args.seed)
    else:
        raise UsageError("unprocess needs --meta or --profile with --seed")
    white = args.white_level or (profile.white_level if profile else 65535)
    black = profile.black_level if profile else 0
    raw = unprocess(img, meta.params(), storage_scale=white, black_level=black)
    write_raw(args.output, raw)
    print(json.dumps(meta.to_dict()))
    return EXIT_OK


def cmd_process(args) -> int:
    raw = read_raw(args.input)
    meta = load_meta(args.meta, args.key)
    write_rgb(args.output, process(raw, meta))
    print(json.dumps(meta.to_dict()))
    return EXIT_OK


def cmd_degrade(args) -> int:
    raw = read_raw(args.input)
    profile = load_profile(args.profile)
    noisy = degrade(raw, profile, args.iso, seed=args.seed)
    write_raw(args.output, noisy)
    print(json.dumps({"sensor_name": profile.name, "iso": args.iso, "seed": args.seed}))
    return EXIT_OK


def cmd_stats(args) -> int:
    profile = load_profile(args.profile)
    iso_grid = _grid(args.iso_grid, int) if args.iso_grid else default_iso_grid()
    adu_grid = _grid(args.adu_grid, float) if args.adu_grid else default_adu_grid(profile)
    iso_rows, adu_rows = stats_curves(profile, iso_grid, adu_grid, iso=args.iso)
    iso_csv, adu_csv = rows_to_csv(iso_rows, ISO_COLUMNS), rows_to_csv(adu_rows, ADU_COLUMNS)
    if args.csv:
        prefix = Path(args.csv)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}_iso.csv").write_text(iso_csv)
        Path(f"{prefix}_adu.csv").write_text(adu_csv)
    else:
        sys.stdout.write(iso_csv + "\n" + adu_csv)
    return EXIT_OK


def _collect(root: Path) -> dict[str, Path]:
    return {p.relative_to(root).as_posix(): p for p in sorted(root.rglob("*"))
            if p.is_file() and p.suffix in RAW_SUFFIXES}


def cmd_eval(args) -> int:
    if args.protocol == "raw2rgb" and not args.meta:
        raise UsageError("raw2rgb evaluation needs --meta")
    pred, target = Path(args.pred), Path(args.target)
    for d in (pred, target):
        if not d.is_dir():
            raise ConfigError(f"{d} is not a directory")
    pf, tf = _collect(pred), _collect(target)
    if set(pf) != set(tf):
        only_p = sorted(set(pf) - set(tf))
        only_t = sorted(set(tf) - set(pf))
        print(f"file sets differ: {len(pf)} predicted vs {len(tf)} target", file=sys.stderr)
        for name in only_p:
            print(f"  only in {pred}: {name}", file=sys.stderr)
        for name in only_t:
            print(f"  only in {target}: {name}", file=sys.stderr)
        return EXIT_FAIL
    meta_all = json.loads(Path(args.meta).read_text()) if args.meta else {}

    def items():
        for rel in sorted(pf):
            parts = Path(rel).parts
            sensor = parts[0] if len(parts) > 1 else "default"
            image_id = Path(rel).stem
            meta = None
            if args.protocol == "raw2rgb":
                key = f"{image_id}/{sensor}"
                if key not in meta_all:
                    raise ConfigError(f"no metadata for {key}")
                meta = MetaRecord.from_dict(meta_all[key])
            yield read_raw(pf[rel]), read_raw(tf[rel]), sensor, meta

    report = evaluate(items(), args.protocol)
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    print(report.to_json())
    print(report.table())
    return EXIT_OK


def cmd_loss_check(args) -> int:
    return EXIT_OK if lossck.main(args.seed) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msraw", description="Multi-sensor raw synthesis and evaluation toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a multi-sensor dataset from a config file")
    g.add_argument("config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    u = sub.add_parser("unprocess", help="sRGB image -> clean raw")
    u.add_argument("input")
    u.add_argument("output")
    u.add_argument("--meta")
    u.add_argument("--key")
    u.add_argument("--profile")
    u.add_argument("--seed", type=int)
    u.add_argument("--white-level", type=int)
    u.set_defaults(func=cmd_unprocess)

    pr = sub.add_parser("process", help="raw -> sRGB with recorded parameters")
    pr.add_argument("input")
    pr.add_argument("output")
    pr.add_argument("--meta", required=True)
    pr.add_argument("--key")
    pr.set_defaults(func=cmd_process)

    d = sub.add_parser("degrade", help="add sensor noise to a clean raw")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--profile", required=True)
    d.add_argument("--iso", type=int, required=True)
    d.add_argument("--seed", type=int, required=True)
    d.set_defaults(func=cmd_degrade)

    s = sub.add_parser("stats", help="noise statistics tables (CSV)")
    s.add_argument("--profile", required=True)
    s.add_argument("--iso-grid", help="a,b,c or start:stop:step")
    s.add_argument("--adu-grid", help="a,b,c or start:stop:step (ADU above black level)")
    s.add_argument("--iso", type=int, default=6400, help="ISO for the ADU table")
    s.add_argument("--csv", help="write PREFIX_iso.csv and PREFIX_adu.csv")
    s.set_defaults(func=cmd_stats)

    e = sub.add_parser("eval", help="score predictions against targets")
    e.add_argument("pred")
    e.add_argument("target")
    e.add_argument("--meta")
    e.add_argument("--protocol", choices=PROTOCOLS, default="raw2raw")
    e.add_argument("--json")
    e.set_defaults(func=cmd_eval)

    lc = sub.add_parser("loss-check", help="verify the consistency-loss kernels")
    lc.add_argument("--seed", type=int, default=0)
    lc.set_defaults(func=cmd_loss_check)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"msraw {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GenerationAborted as e:
        print(f"msraw {args.command}: aborted: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (MsrawError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"msraw {args.command}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
