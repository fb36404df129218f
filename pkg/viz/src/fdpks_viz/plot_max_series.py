"""Overlaid maximum-density curves from one or more time-series files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import FormatError, read_series


def plot_max_series(
    inputs: list[str | Path],
    out_path: str | Path | None = None,
    labels: list[str] | None = None,
    species: int = 1,
    log_scale: bool = True,
    zoom: tuple[float, float] | None = None,
) -> tuple[Path, int]:
    """Plot max density vs time for each series file.

    Returns (image path, number of curves drawn).
    """
    if labels is not None and len(labels) != len(inputs):
        raise ValueError(f"got {len(labels)} labels for {len(inputs)} series files")
    if not inputs:
        raise ValueError("need at least one series file")
    out = Path(out_path) if out_path else Path(inputs[0]).with_suffix(".png")
    fig, ax = plt.subplots(figsize=(6.8, 5.0))
    count = 0
    for i, path in enumerate(inputs):
        sd = read_series(path)
        label = labels[i] if labels else Path(path).stem
        ax.plot(sd.t, sd.max_rho[species - 1], label=label)
        count += 1
    if log_scale:
        ax.set_yscale("log")
    if zoom is not None:
        ax.set_xlim(*zoom)
    ax.set_xlabel("t")
    ax.set_ylabel(f"max rho{species}")
    ax.legend()
    ax.set_title(f"maximum of rho{species} over time")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out, count


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot max-density curves from series files.")
    parser.add_argument("--input", required=True, nargs="+", help="series file(s)")
    parser.add_argument("--out", default=None)
    parser.add_argument("--labels", nargs="+", default=None)
    parser.add_argument("--species", type=int, choices=(1, 2), default=1)
    parser.add_argument("--log", dest="log", action="store_true", default=True)
    parser.add_argument("--no-log", dest="log", action="store_false")
    parser.add_argument("--zoom", nargs=2, type=float, default=None, metavar=("T0", "T1"))
    args = parser.parse_args(argv)
    try:
        out, count = plot_max_series(
            args.input, args.out, labels=args.labels, species=args.species,
            log_scale=args.log, zoom=tuple(args.zoom) if args.zoom else None,
        )
    except (FileNotFoundError, FormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"{out} ({count} curves)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
