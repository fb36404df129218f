"""Render a snapshot field file as a heatmap or surface image."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .io import FormatError, read_field


def plot_field(
    input_path: str | Path,
    out_path: str | Path | None = None,
    log_scale: bool = False,
    style: str = "heatmap",
) -> Path:
    """Render one field file; returns the written image path."""
    fd = read_field(input_path)
    out = Path(out_path) if out_path else Path(input_path).with_suffix(".png")
    fig = plt.figure(figsize=(6.4, 5.2))
    vals = fd.values
    if log_scale:
        floor = max(vals.max() * 1e-12, 1e-300)
        vals = np.maximum(vals, floor)
    if style == "surface":
        ax = fig.add_subplot(111, projection="3d")
        ax.plot_surface(fd.x, fd.y, np.log10(vals) if log_scale else vals,
                        cmap="viridis", linewidth=0, antialiased=False)
        ax.set_zlabel(f"log10({fd.name})" if log_scale else fd.name)
    else:
        ax = fig.add_subplot(111)
        x_lo, x_hi, y_lo, y_hi = fd.box
        span = vals.max() - vals.min()
        norm = None
        if log_scale and vals.min() > 0 and vals.max() / vals.min() > 1.0:
            norm = LogNorm(vmin=vals.min(), vmax=vals.max())
        im = ax.imshow(
            vals.T, origin="lower", extent=(x_lo, x_hi, y_lo, y_hi),
            cmap="viridis", norm=norm,
            vmin=None if norm else vals.min(),
            vmax=None if norm else (vals.max() if span > 0 else vals.min() + 1.0),
        )
        fig.colorbar(im, ax=ax, label=fd.name)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{fd.name} at t = {fd.t:g}")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot a snapshot field file.")
    parser.add_argument("--input", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--log", action="store_true", help="log color scale")
    parser.add_argument("--style", choices=("heatmap", "surface"), default="heatmap")
    args = parser.parse_args(argv)
    try:
        out = plot_field(args.input, args.out, log_scale=args.log, style=args.style)
    except (FileNotFoundError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
