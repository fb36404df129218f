"""Scatter plot of particle positions colored by point density w/area."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .io import FormatError, read_particles


def plot_particles(
    input_path: str | Path,
    out_path: str | Path | None = None,
    log_scale: bool = False,
) -> Path:
    """Render one particle file (one panel per species); returns the image path."""
    pd = read_particles(input_path)
    out = Path(out_path) if out_path else Path(input_path).with_suffix(".png")
    species = sorted(set(pd.species.tolist())) or [1]
    if pd.x.size == 0:
        warnings.warn(f"{input_path}: empty particle table, drawing the domain only")
    fig, axes = plt.subplots(1, max(len(species), 1), figsize=(5.6 * max(len(species), 1), 5.0), squeeze=False)
    for ax, k in zip(axes[0], species if pd.x.size else [1]):
        sel = pd.species == k
        if np.any(sel):
            dens = pd.w[sel] / pd.area[sel]
            norm = None
            if log_scale:
                pos = dens[dens > 0]
                if pos.size and pos.max() / max(pos.min(), 1e-300) > 10:
                    norm = LogNorm(vmin=pos.min(), vmax=pos.max())
                    dens = np.maximum(dens, pos.min())
            sc = ax.scatter(pd.x[sel], pd.y[sel], c=dens, s=4, cmap="viridis", norm=norm)
            fig.colorbar(sc, ax=ax, label="w / area")
            # draw the domain box from the particle extent when all inside
            x_lo, x_hi = pd.x[sel].min(), pd.x[sel].max()
            y_lo, y_hi = pd.y[sel].min(), pd.y[sel].max()
            ax.set_xlim(x_lo - 0.05 * (x_hi - x_lo + 1e-12), x_hi + 0.05 * (x_hi - x_lo + 1e-12))
            ax.set_ylim(y_lo - 0.05 * (y_hi - y_lo + 1e-12), y_hi + 0.05 * (y_hi - y_lo + 1e-12))
        ax.set_aspect("equal", adjustable="box")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(f"species {k} at t = {pd.t:g}")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot a snapshot particle file.")
    parser.add_argument("--input", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--log", action="store_true", help="log color scale")
    args = parser.parse_args(argv)
    try:
        out = plot_particles(args.input, args.out, log_scale=args.log)
    except (FileNotFoundError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
