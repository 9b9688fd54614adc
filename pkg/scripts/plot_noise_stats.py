"""Plot shot/read noise against ISO and SNR/variance against ADU for sensor profiles.

    python3 scripts/plot_noise_stats.py profiles/*.yaml -o noise_stats.png

Needs matplotlib (``pip install -e .[plot]``).
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from msraw.noise import default_adu_grid, default_iso_grid, load_profile, stats_curves  # noqa: E402


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("profiles", nargs="+")
    ap.add_argument("-o", "--output", default="noise_stats.png")
    ap.add_argument("--iso", type=int, default=6400, help="ISO for the ADU panels")
    args = ap.parse_args(argv)

    fig, axes = plt.subplots(1, 4, figsize=(17, 3.8))
    for path in args.profiles:
        prof = load_profile(path)
        iso_rows, adu_rows = stats_curves(prof, default_iso_grid(), default_adu_grid(prof), iso=args.iso)
        iso = [r["iso"] for r in iso_rows]
        adu = [r["adu"] for r in adu_rows]
        axes[0].plot(iso, [r["sigma2_shot"] for r in iso_rows], label=prof.name)
        axes[1].plot(iso, [r["sigma2_read"] for r in iso_rows], label=prof.name)
        axes[2].semilogx(adu, [r["snr_db"] for r in adu_rows], label=prof.name)
        axes[3].loglog(adu, [r["sigma2"] for r in adu_rows], label=prof.name)
    for ax, title, xl in zip(axes, ["shot coefficient", "read variance", f"SNR (ISO {args.iso})",
                                    f"total variance (ISO {args.iso})"], ["ISO", "ISO", "ADU", "ADU"]):
        ax.set_title(title)
        ax.set_xlabel(xl)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"saved {args.output}")


if __name__ == "__main__":
    main()
