import math

import pytest


@pytest.fixture
def field_file(tmp_path):
    """Tiny synthetic 3x3 field snapshot."""
    path = tmp_path / "snap000_rho1.dat"
    lines = ["# 3 3 -1.0 1.0 -1.0 1.0 0.5 rho1"]
    for i in range(3):
        x = -1.0 + (i + 0.5) * (2.0 / 3.0)
        for j in range(3):
            y = -1.0 + (j + 0.5) * (2.0 / 3.0)
            lines.append(f"{x!r} {y!r} {math.exp(-(x * x + y * y))!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def constant_field_file(tmp_path):
    path = tmp_path / "snap000_c.dat"
    lines = ["# 2 2 0.0 1.0 0.0 1.0 0.0 c"]
    for x in (0.25, 0.75):
        for y in (0.25, 0.75):
            lines.append(f"{x!r} {y!r} 3.0")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def particle_file(tmp_path):
    path = tmp_path / "snap000_particles.dat"
    rows = ["# species x y w area t"]
    pts = [(1, -0.4, -0.2, 1.0, 0.1), (1, 0.3, 0.1, 2.0, 0.1), (2, 0.45, 0.45, 5.0, 0.05)]
    for k, x, y, w, a in pts:
        rows.append(f"{k} {x!r} {y!r} {w!r} {a!r} 0.1")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def single_particle_file(tmp_path):
    path = tmp_path / "one_particle.dat"
    path.write_text("# species x y w area t\n1 0.1 -0.2 1.5 0.01 0.0\n")
    return path


@pytest.fixture
def empty_particle_file(tmp_path):
    path = tmp_path / "empty_particles.dat"
    path.write_text("# species x y w area t\n")
    return path


def make_series(path, peak, n=40, t_end=0.0033):
    """Synthetic monotone series shaped like a blowup run's output."""
    rows = ["# t dt n1 n2 mass1 mass2 maxrho1 maxrho2 maxpart1 maxpart2 maxc"]
    for i in range(1, n + 1):
        t = t_end * i / n
        rho1 = 50.0 + (peak - 50.0) * (i / n) ** 3
        rho2 = 50.0 + (20 * peak - 50.0) * (i / n) ** 3
        rows.append(
            f"{t!r} {t_end / n!r} 100 100 1.5 1.5 {rho1!r} {rho2!r} {rho1 * 2!r} {rho2 * 2!r} 1.7"
        )
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def series_files(tmp_path):
    """Four series with terminal maxima increasing with resolution."""
    paths = []
    for label, peak in (("d15", 1e3), ("d20", 2e3), ("d25", 4e3), ("d30", 6e3)):
        paths.append(make_series(tmp_path / f"series_{label}.dat", peak))
    return paths
