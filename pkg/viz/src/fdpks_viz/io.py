"""Readers for the simulator's delimited-text outputs.

Three formats, all plain text with one `#` header line:

* field file:    ``# nx ny x_lo x_hi y_lo y_hi t name`` then ``x y value`` rows
* particle file: ``# species x y w area t`` then one row per particle
* series file:   ``# t dt n1 n2 mass1 mass2 maxrho1 maxrho2 maxpart1 maxpart2 maxc``

These scripts never recompute simulation quantities beyond w/area.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class FormatError(ValueError):
    """A file does not match the documented format; names the bad line."""


@dataclass
class FieldData:
    name: str
    t: float
    nx: int
    ny: int
    box: tuple[float, float, float, float]  # x_lo, x_hi, y_lo, y_hi
    x: np.ndarray       # (nx, ny)
    y: np.ndarray
    values: np.ndarray  # (nx, ny)


@dataclass
class ParticleData:
    t: float
    species: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    area: np.ndarray


@dataclass
class SeriesData:
    t: np.ndarray
    dt: np.ndarray
    n: tuple[np.ndarray, np.ndarray]
    mass: tuple[np.ndarray, np.ndarray]
    max_rho: tuple[np.ndarray, np.ndarray]
    max_part: tuple[np.ndarray, np.ndarray]
    max_c: np.ndarray


def _read_lines(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return path.read_text().splitlines()


def read_field(path: str | Path) -> FieldData:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}, line 1: expected a '#' header line")
    head = lines[0][1:].split()
    if len(head) != 8:
        raise FormatError(f"{path}, line 1: expected 8 header fields, got {len(head)}")
    try:
        nx, ny = int(head[0]), int(head[1])
        box = tuple(float(v) for v in head[2:6])
        t = float(head[6])
    except ValueError as e:
        raise FormatError(f"{path}, line 1: {e}") from e
    name = head[7]
    rows = lines[1:]
    if len(rows) != nx * ny:
        raise FormatError(f"{path}: expected {nx * ny} data rows, got {len(rows)}")
    data = np.empty((nx * ny, 3))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 3:
            raise FormatError(f"{path}, line {i + 2}: expected 3 columns, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as e:
            raise FormatError(f"{path}, line {i + 2}: {e}") from e
    return FieldData(
        name=name, t=t, nx=nx, ny=ny, box=box,
        x=data[:, 0].reshape(nx, ny),
        y=data[:, 1].reshape(nx, ny),
        values=data[:, 2].reshape(nx, ny),
    )


def read_particles(path: str | Path) -> ParticleData:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}, line 1: expected a '#' header line")
    cols = lines[0][1:].split()
    if cols != ["species", "x", "y", "w", "area", "t"]:
        raise FormatError(f"{path}, line 1: unexpected particle header {cols}")
    rows = [r for r in lines[1:] if r.strip()]
    data = np.empty((len(rows), 6))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 6:
            raise FormatError(f"{path}, line {i + 2}: expected 6 columns, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as e:
            raise FormatError(f"{path}, line {i + 2}: {e}") from e
    t = float(data[0, 5]) if len(rows) else 0.0
    return ParticleData(
        t=t,
        species=data[:, 0].astype(int),
        x=data[:, 1], y=data[:, 2], w=data[:, 3], area=data[:, 4],
    )


def read_series(path: str | Path) -> SeriesData:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}, line 1: expected a '#' header line")
    expected = "t dt n1 n2 mass1 mass2 maxrho1 maxrho2 maxpart1 maxpart2 maxc"
    if lines[0][1:].split() != expected.split():
        raise FormatError(f"{path}, line 1: unexpected series header")
    rows = [r for r in lines[1:] if r.strip()]
    data = np.empty((len(rows), 11))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 11:
            raise FormatError(f"{path}, line {i + 2}: expected 11 columns, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as e:
            raise FormatError(f"{path}, line {i + 2}: {e}") from e
    return SeriesData(
        t=data[:, 0], dt=data[:, 1],
        n=(data[:, 2], data[:, 3]),
        mass=(data[:, 4], data[:, 5]),
        max_rho=(data[:, 6], data[:, 7]),
        max_part=(data[:, 8], data[:, 9]),
        max_c=data[:, 10],
    )
